#ifndef FLEXIFILM_SYNTHDATA_HPP
#define FLEXIFILM_SYNTHDATA_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "flexifilm/condition.hpp"
#include "flexifilm/rng.hpp"
#include "flexifilm/tensor.hpp"

// Procedural bouncing-shape clips with fixed-grammar captions.
// Pixels live in [-1, 1]; frames are [3, size, size].

namespace flexifilm {

enum class ShapeKind : std::uint8_t { kSquare = 0, kCircle = 1 };

struct Rgb {
    float r, g, b;
};

inline constexpr std::array<Rgb, 6> kPalette{{
    {0.9f, -0.8f, -0.8f},   // red
    {-0.8f, 0.9f, -0.8f},   // green
    {-0.8f, -0.8f, 0.9f},   // blue
    {0.9f, 0.9f, -0.8f},    // yellow
    {-0.8f, 0.9f, 0.9f},    // cyan
    {0.9f, -0.8f, 0.9f},    // magenta
}};

inline constexpr std::array<float, 3> kBackgrounds{-0.6f, -0.2f, 0.2f};

struct SceneSpec {
    ShapeKind shape = ShapeKind::kSquare;
    std::size_t color = 0;       // palette index
    int vx = 0, vy = 0;          // pixels per frame
    int x0 = 16, y0 = 16;        // starting centre
    int radius = 4;              // half side for squares
    std::size_t background = 0;  // index into kBackgrounds
    std::size_t frames = 24;
    std::size_t size = 32;

    void validate() const {
        if (radius <= 0 || 2 * std::size_t(radius) >= size) throw ConfigError("SceneSpec: object larger than frame");
        if (color >= kPalette.size() || background >= kBackgrounds.size()) throw ConfigError("SceneSpec: bad palette index");
        if (frames == 0) throw ConfigError("SceneSpec: empty clip");
        const int lo = radius, hi = int(size) - radius;
        if (x0 < lo || x0 > hi || y0 < lo || y0 > hi) throw ConfigError("SceneSpec: start position outside bounds");
    }
};

// Closed 64-token caption vocabulary, one slot per position:
// [a] [shape] [color] [horizontal] [vertical] [speed] [background]
namespace vocab {
inline constexpr TokenId kA = 1;
inline constexpr TokenId kShapeBase = 2;       // square, circle
inline constexpr TokenId kColorBase = 4;       // 6 palette colors
inline constexpr TokenId kHorizontalBase = 10; // left, still, right
inline constexpr TokenId kVerticalBase = 13;   // up, still, down
inline constexpr TokenId kSpeedBase = 16;      // 0, 1, 2 pixels/frame
inline constexpr TokenId kBackgroundBase = 19; // dark, mid, light
inline constexpr std::size_t kSize = 64;
inline constexpr std::size_t kCaptionLength = 7;
}  // namespace vocab

inline int sign_of(int v) { return (v > 0) - (v < 0); }

inline std::vector<TokenId> make_caption(const SceneSpec& s) {
    const int speed = std::max(std::abs(s.vx), std::abs(s.vy));
    return {vocab::kA,
            vocab::kShapeBase + TokenId(s.shape),
            vocab::kColorBase + TokenId(s.color),
            TokenId(int(vocab::kHorizontalBase) + 1 + sign_of(s.vx)),
            TokenId(int(vocab::kVerticalBase) + 1 + sign_of(s.vy)),
            vocab::kSpeedBase + TokenId(std::min(speed, 2)),
            vocab::kBackgroundBase + TokenId(s.background)};
}

/// Fields recoverable from a caption.
struct CaptionFields {
    ShapeKind shape;
    std::size_t color;
    int horizontal;  // -1, 0, +1
    int vertical;
    int speed;
    std::size_t background;
};

inline CaptionFields decode_caption(const std::vector<TokenId>& c) {
    if (c.size() != vocab::kCaptionLength || c[0] != vocab::kA) throw ContractError("decode_caption: not a caption");
    auto field = [&](std::size_t pos, TokenId base, TokenId count) {
        if (c[pos] < base || c[pos] >= base + count) throw ContractError("decode_caption: token out of slot range");
        return int(c[pos] - base);
    };
    return {ShapeKind(field(1, vocab::kShapeBase, 2)),
            std::size_t(field(2, vocab::kColorBase, TokenId(kPalette.size()))),
            field(3, vocab::kHorizontalBase, 3) - 1,
            field(4, vocab::kVerticalBase, 3) - 1,
            field(5, vocab::kSpeedBase, 3),
            std::size_t(field(6, vocab::kBackgroundBase, TokenId(kBackgrounds.size())))};
}

/// Position after `t` frames of constant velocity with elastic reflection
/// inside [lo, hi].
inline int bounce(int start, int velocity, std::size_t t, int lo, int hi) {
    const int span = hi - lo;
    if (span == 0) return lo;
    long u = long(start - lo) + long(velocity) * long(t);
    const long period = 2L * span;
    u %= period;
    if (u < 0) u += period;
    return lo + int(u <= span ? u : period - u);
}

struct Clip {
    Tensor pixels;  // [frames, 3, size, size]
    std::vector<TokenId> caption;
    SceneSpec spec;
};

/// Renders the clip. The rng only picks the static background gradient, so
/// spec + seed fix the output bit for bit.
inline Clip make_clip(const SceneSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t n = spec.size;
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const double gx = 0.15 * std::cos(angle), gy = 0.15 * std::sin(angle);
    const float base = kBackgrounds[spec.background];
    const Rgb col = kPalette[spec.color];
    const int lo = spec.radius, hi = int(n) - spec.radius;

    Tensor pixels({spec.frames, 3, n, n});
    auto d = pixels.mutable_data();
    for (std::size_t f = 0; f < spec.frames; ++f) {
        const int cx = bounce(spec.x0, spec.vx, f, lo, hi);
        const int cy = bounce(spec.y0, spec.vy, f, lo, hi);
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x) {
                bool inside;
                if (spec.shape == ShapeKind::kSquare) {
                    inside = int(x) >= cx - spec.radius && int(x) < cx + spec.radius && int(y) >= cy - spec.radius &&
                             int(y) < cy + spec.radius;
                } else {
                    const double dx = double(x) + 0.5 - cx, dy = double(y) + 0.5 - cy;
                    inside = dx * dx + dy * dy <= double(spec.radius) * spec.radius;
                }
                const float bg = float(base + gx * (double(x) - n / 2.0) / (n / 2.0) + gy * (double(y) - n / 2.0) / (n / 2.0));
                const float rgb[3] = {col.r, col.g, col.b};
                for (std::size_t c = 0; c < 3; ++c) d[((f * 3 + c) * n + y) * n + x] = inside ? rgb[c] : bg;
            }
    }
    return {pixels, make_caption(spec), spec};
}

/// Clip specs drawn from a pinned grid; clips are rendered on demand.
struct Dataset {
    std::vector<SceneSpec> specs;
    std::vector<std::uint64_t> seeds;  // per-clip render seeds
    std::vector<std::size_t> train;
    std::vector<std::size_t> eval;

    std::size_t size() const { return specs.size(); }
    Clip clip(std::size_t i) const {
        Rng rng(seeds.at(i));
        return make_clip(specs.at(i), rng);
    }
};

inline SceneSpec draw_spec(Rng& rng, std::size_t frames = 24, std::size_t size = 32) {
    SceneSpec s;
    s.shape = rng.bernoulli(0.5) ? ShapeKind::kCircle : ShapeKind::kSquare;
    s.color = rng.index(kPalette.size());
    s.vx = int(rng.index(5)) - 2;
    s.vy = int(rng.index(5)) - 2;
    s.radius = 3 + int(rng.index(3));
    s.background = rng.index(kBackgrounds.size());
    s.frames = frames;
    s.size = size;
    const int lo = s.radius, hi = int(size) - s.radius;
    s.x0 = lo + int(rng.index(std::size_t(hi - lo + 1)));
    s.y0 = lo + int(rng.index(std::size_t(hi - lo + 1)));
    return s;
}

/// n clips; the last n/10 (integer division) form the eval split.
inline Dataset make_dataset(std::size_t n, Rng& rng, std::size_t frames = 24) {
    if (n == 0) throw ConfigError("make_dataset: need at least one clip");
    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        ds.specs.push_back(draw_spec(rng, frames));
        ds.seeds.push_back(rng.next_u64());
    }
    const std::size_t n_eval = n / 10;
    for (std::size_t i = 0; i < n; ++i) (i < n - n_eval ? ds.train : ds.eval).push_back(i);
    return ds;
}

}  // namespace flexifilm

#endif
