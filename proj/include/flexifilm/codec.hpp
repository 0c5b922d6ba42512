#ifndef FLEXIFILM_CODEC_HPP
#define FLEXIFILM_CODEC_HPP

#include <Eigen/Dense>

#include <cstdint>

#include "flexifilm/rng.hpp"
#include "flexifilm/tensor.hpp"

namespace flexifilm {

/// Exactly invertible stand-in for a VAE: each frame is cut into
/// patch x patch pixel blocks and every block vector is rotated by a fixed
/// orthogonal matrix. Pixels [F, C, H, W] <-> latent [F, C·p², H/p, W/p].
class LatentCodec {
public:
    static constexpr std::uint64_t kDefaultSeed = 0x5eedc0dec;

    explicit LatentCodec(std::size_t channels = 3, std::size_t patch = 2, std::uint64_t seed = kDefaultSeed)
        : channels_(channels), patch_(patch) {
        if (channels == 0 || patch == 0) throw ConfigError("LatentCodec: zero channels or patch");
        const int n = int(latent_channels());
        Rng rng(seed);
        Eigen::MatrixXd g(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        rotation_ = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    }

    std::size_t channels() const { return channels_; }
    std::size_t patch() const { return patch_; }
    std::size_t latent_channels() const { return channels_ * patch_ * patch_; }
    const Eigen::MatrixXd& rotation() const { return rotation_; }

    Tensor encode(const Tensor& pixels) const {
        check_rank4(pixels, "encode");
        if (pixels.extent(1) != channels_) throw ShapeError("encode: channel count mismatch");
        const std::size_t frames = pixels.extent(0), h = pixels.extent(2), w = pixels.extent(3);
        if (h % patch_ != 0 || w % patch_ != 0) {
            throw ShapeError("encode: spatial extents not divisible by patch " + std::to_string(patch_));
        }
        const std::size_t lh = h / patch_, lw = w / patch_, lc = latent_channels();
        Tensor out({frames, lc, lh, lw});
        auto o = out.mutable_data();
        const float* in = pixels.raw();
        Eigen::VectorXd block(static_cast<Eigen::Index>(lc)), rotated(static_cast<Eigen::Index>(lc));
        for (std::size_t f = 0; f < frames; ++f)
            for (std::size_t y = 0; y < lh; ++y)
                for (std::size_t x = 0; x < lw; ++x) {
                    for (std::size_t c = 0; c < channels_; ++c)
                        for (std::size_t dy = 0; dy < patch_; ++dy)
                            for (std::size_t dx = 0; dx < patch_; ++dx) {
                                block(int((c * patch_ + dy) * patch_ + dx)) =
                                    in[((f * channels_ + c) * h + y * patch_ + dy) * w + x * patch_ + dx];
                            }
                    rotated.noalias() = rotation_ * block;
                    for (std::size_t k = 0; k < lc; ++k) o[((f * lc + k) * lh + y) * lw + x] = float(rotated(int(k)));
                }
        return out;
    }

    Tensor decode(const Tensor& latent) const {
        check_rank4(latent, "decode");
        const std::size_t lc = latent_channels();
        if (latent.extent(1) != lc) throw ShapeError("decode: latent channel count mismatch");
        const std::size_t frames = latent.extent(0), lh = latent.extent(2), lw = latent.extent(3);
        const std::size_t h = lh * patch_, w = lw * patch_;
        Tensor out({frames, channels_, h, w});
        auto o = out.mutable_data();
        const float* in = latent.raw();
        Eigen::VectorXd block(static_cast<Eigen::Index>(lc)), restored(static_cast<Eigen::Index>(lc));
        for (std::size_t f = 0; f < frames; ++f)
            for (std::size_t y = 0; y < lh; ++y)
                for (std::size_t x = 0; x < lw; ++x) {
                    for (std::size_t k = 0; k < lc; ++k) block(int(k)) = in[((f * lc + k) * lh + y) * lw + x];
                    restored.noalias() = rotation_.transpose() * block;
                    for (std::size_t c = 0; c < channels_; ++c)
                        for (std::size_t dy = 0; dy < patch_; ++dy)
                            for (std::size_t dx = 0; dx < patch_; ++dx) {
                                o[((f * channels_ + c) * h + y * patch_ + dy) * w + x * patch_ + dx] =
                                    float(restored(int((c * patch_ + dy) * patch_ + dx)));
                            }
                }
        return out;
    }

private:
    static void check_rank4(const Tensor& t, const char* op) {
        if (t.rank() != 4) throw ShapeError(std::string(op) + ": expected [frames, channels, height, width]");
    }

    std::size_t channels_;
    std::size_t patch_;
    Eigen::MatrixXd rotation_;
};

/// [F, C, h, w] -> [F, (h/p)·(w/p), C·p²] token layout used inside the networks.
inline Tensor latent_to_tokens(const Tensor& z, std::size_t p) {
    if (z.rank() != 4 || z.extent(2) % p != 0 || z.extent(3) % p != 0) {
        throw ShapeError("latent_to_tokens: bad latent shape " + to_string(z.shape()));
    }
    const std::size_t f = z.extent(0), c = z.extent(1), h = z.extent(2), w = z.extent(3);
    const std::size_t th = h / p, tw = w / p, feat = c * p * p;
    Tensor out({f, th * tw, feat});
    auto o = out.mutable_data();
    for (std::size_t fi = 0; fi < f; ++fi)
        for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    const std::size_t token = (y / p) * tw + x / p;
                    const std::size_t k = (ci * p + y % p) * p + x % p;
                    o[(fi * th * tw + token) * feat + k] = z.raw()[((fi * c + ci) * h + y) * w + x];
                }
    return out;
}

inline Tensor tokens_to_latent(const Tensor& tokens, std::size_t channels, std::size_t h, std::size_t w,
                               std::size_t p) {
    const std::size_t f = tokens.extent(0), th = h / p, tw = w / p, feat = channels * p * p;
    if (tokens.rank() != 3 || tokens.extent(1) != th * tw || tokens.extent(2) != feat) {
        throw ShapeError("tokens_to_latent: bad token shape " + to_string(tokens.shape()));
    }
    Tensor out({f, channels, h, w});
    auto o = out.mutable_data();
    for (std::size_t fi = 0; fi < f; ++fi)
        for (std::size_t ci = 0; ci < channels; ++ci)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    const std::size_t token = (y / p) * tw + x / p;
                    const std::size_t k = (ci * p + y % p) * p + x % p;
                    o[((fi * channels + ci) * h + y) * w + x] = tokens.raw()[(fi * th * tw + token) * feat + k];
                }
    return out;
}

}  // namespace flexifilm

#endif
