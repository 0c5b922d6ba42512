#ifndef FLEXIFILM_NN_HPP
#define FLEXIFILM_NN_HPP

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "flexifilm/ops.hpp"
#include "flexifilm/rng.hpp"

namespace flexifilm {

/// Which co-training group a parameter belongs to.
enum class ParamGroup {
    kProjectorTemporal,  // theta
    kDenoiserTemporal,   // phi
    kFrozen,
};

inline const char* group_label(ParamGroup g) {
    switch (g) {
        case ParamGroup::kProjectorTemporal: return "theta";
        case ParamGroup::kDenoiserTemporal: return "phi";
        case ParamGroup::kFrozen: return "frozen";
    }
    return "?";
}

inline ParamGroup parse_group_label(std::string_view s) {
    if (s == "theta") return ParamGroup::kProjectorTemporal;
    if (s == "phi") return ParamGroup::kDenoiserTemporal;
    if (s == "frozen") return ParamGroup::kFrozen;
    throw ConfigError("unknown parameter group '" + std::string(s) + "'");
}

struct Param {
    std::string name;
    Tensor value;
    ParamGroup group;
};

/// Owns the flat parameter list; layers keep handles into it.
class ParamRegistry {
public:
    Tensor add(std::string name, Shape shape, ParamGroup group, Rng& rng, double init_std) {
        Tensor t(std::move(shape));
        if (init_std > 0.0) {
            for (auto& v : t.mutable_data()) v = float(rng.normal() * init_std);
        }
        params_.push_back({std::move(name), t, group});
        return t;
    }

    Tensor add_filled(std::string name, Shape shape, ParamGroup group, float value) {
        Tensor t(std::move(shape), value);
        params_.push_back({std::move(name), t, group});
        return t;
    }

    const std::vector<Param>& params() const { return params_; }
    std::vector<Param>& params() { return params_; }

private:
    std::vector<Param> params_;
};

struct Linear {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]

    Linear() = default;
    Linear(ParamRegistry& reg, const std::string& name, std::size_t in, std::size_t out, ParamGroup group, Rng& rng,
           bool zero_init = false)
        : weight(reg.add(name + ".weight", {in, out}, group, rng, zero_init ? 0.0 : 1.0 / std::sqrt(double(in)))),
          bias(reg.add(name + ".bias", {out}, group, rng, 0.0)) {}

    Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};

struct LayerNorm {
    Tensor gain;
    Tensor bias;

    LayerNorm() = default;
    LayerNorm(ParamRegistry& reg, const std::string& name, std::size_t dim, ParamGroup group)
        : gain(reg.add_filled(name + ".gain", {dim}, group, 1.0f)),
          bias(reg.add_filled(name + ".bias", {dim}, group, 0.0f)) {}

    Tensor operator()(const Tensor& x) const { return layer_norm(x, gain, bias); }
};

// linear -> GELU -> linear
struct Mlp {
    Linear fc1;
    Linear fc2;

    Mlp() = default;
    Mlp(ParamRegistry& reg, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
        ParamGroup group, Rng& rng, bool zero_out = false)
        : fc1(reg, name + ".fc1", in, hidden, group, rng), fc2(reg, name + ".fc2", hidden, out, group, rng, zero_out) {}

    Tensor operator()(const Tensor& x) const { return fc2(gelu(fc1(x))); }
};

// Single-head attention with separate query and key/value inputs:
// queries [B, N, D], context [B, M, Dc] -> [B, N, D].
struct Attention {
    Linear to_q;
    Linear to_k;
    Linear to_v;
    Linear to_out;

    Attention() = default;
    Attention(ParamRegistry& reg, const std::string& name, std::size_t dim, std::size_t context_dim, ParamGroup group,
              Rng& rng, bool zero_out = false)
        : to_q(reg, name + ".q", dim, dim, group, rng),
          to_k(reg, name + ".k", context_dim, dim, group, rng),
          to_v(reg, name + ".v", context_dim, dim, group, rng),
          to_out(reg, name + ".out", dim, dim, group, rng, zero_out) {}

    Tensor operator()(const Tensor& x, const Tensor& context) const {
        return to_out(scaled_dot_attention(to_q(x), to_k(context), to_v(context)));
    }
};

/// Fixed sinusoidal table [positions.size(), dim].
inline Tensor sinusoidal_embedding(const std::vector<double>& positions, std::size_t dim) {
    Tensor out({positions.size(), dim});
    auto d = out.mutable_data();
    const std::size_t half = dim / 2;
    for (std::size_t p = 0; p < positions.size(); ++p) {
        for (std::size_t i = 0; i < half; ++i) {
            const double freq = std::exp(-std::log(10000.0) * double(i) / double(half));
            d[p * dim + i] = float(std::sin(positions[p] * freq));
            d[p * dim + half + i] = float(std::cos(positions[p] * freq));
        }
    }
    return out;
}

inline Tensor frame_position_table(std::size_t frames, std::size_t dim) {
    std::vector<double> pos(frames);
    for (std::size_t i = 0; i < frames; ++i) pos[i] = double(i);
    return sinusoidal_embedding(pos, dim);
}

/// Attention across the frame axis at each token position, followed by an
/// MLP; residual throughout. Input and output are [F, L, D]. Output
/// projections start at zero, so a fresh block is the identity.
struct TemporalBlock {
    LayerNorm norm1;
    Attention attn;
    LayerNorm norm2;
    Mlp mlp;

    TemporalBlock() = default;
    TemporalBlock(ParamRegistry& reg, const std::string& name, std::size_t dim, ParamGroup group, Rng& rng)
        : norm1(reg, name + ".norm1", dim, group),
          attn(reg, name + ".attn", dim, dim, group, rng, /*zero_out=*/true),
          norm2(reg, name + ".norm2", dim, group),
          mlp(reg, name + ".mlp", dim, 2 * dim, dim, group, rng, /*zero_out=*/true) {}

    Tensor operator()(const Tensor& h) const {
        const std::size_t frames = h.extent(0), tokens = h.extent(1), dim = h.extent(2);
        Tensor x = swap_leading_axes(h);  // [L, F, D]
        const Tensor pos = repeat_leading(frame_position_table(frames, dim), tokens);
        Tensor a = add(norm1(x), pos);
        x = add(x, attn(a, a));
        x = add(x, mlp(norm2(x)));
        return swap_leading_axes(x);
    }
};

}  // namespace flexifilm

#endif
