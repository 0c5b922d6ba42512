#ifndef FLEXIFILM_GUIDANCE_HPP
#define FLEXIFILM_GUIDANCE_HPP

#include <cmath>
#include <span>

#include "flexifilm/condition.hpp"
#include "flexifilm/tensor.hpp"

namespace flexifilm {

struct GuidanceConfig {
    double cfg_scale = 7.5;       // s
    double resample_scale = 0.7;  // r
    // true: resample the guided epsilon at every DDIM step.
    // false: resample once, on the final latent of the round.
    bool resample_per_step = true;

    void validate() const {
        if (!(cfg_scale >= 0.0)) throw ConfigError("guidance: cfg scale must be >= 0");
        if (!(resample_scale >= 0.0 && resample_scale <= 1.0)) throw ConfigError("guidance: resample scale outside [0,1]");
    }
};

// Population std over every element, accumulated in double.
inline double population_std(std::span<const float> x) {
    if (x.empty()) throw ShapeError("population_std: empty input");
    double mean = 0.0;
    for (float v : x) mean += v;
    mean /= double(x.size());
    double var = 0.0;
    for (float v : x) var += (v - mean) * (v - mean);
    return std::sqrt(var / double(x.size()));
}

inline double population_std(const Tensor& t) { return population_std(t.data()); }

/// z_neg + s·(z_pos − z_neg)
inline Tensor cfg_combine(const Tensor& z_pos, const Tensor& z_neg, double s) {
    require_same_shape(z_pos, z_neg, "cfg_combine");
    Tensor out(z_pos.shape());
    auto o = out.mutable_data();
    if (s == 1.0) {
        std::copy(z_pos.data().begin(), z_pos.data().end(), o.begin());
        return out;
    }
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double neg = z_neg.raw()[i];
        o[i] = float(neg + s * (double(z_pos.raw()[i]) - neg));
    }
    return out;
}

/// r·(σ_pos/σ_z)·z + (1 − r)·z, a positive scalar multiple of z, so
/// std(out) = r·σ_pos + (1 − r)·σ_z.
inline Tensor resample(const Tensor& z, double sigma_pos, double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("resample: r outside [0,1]");
    if (!(sigma_pos > 0.0)) throw NumericError("resample: sigma_pos must be > 0");
    if (r == 0.0) return z.clone();
    const double sigma_z = population_std(z);
    if (!(sigma_z > 0.0)) throw NumericError("resample: input has zero std");
    const double k = r * sigma_pos / sigma_z + (1.0 - r);
    Tensor out(z.shape());
    auto o = out.mutable_data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = float(k * z.raw()[i]);
    return out;
}

/// Classifier-free guided prediction with the resampling correction.
/// `denoiser(z_t, t, bundle)` is evaluated once with `cond` (positive branch)
/// and once with `null_cond` (negative branch).
template <class Denoiser>
Tensor guided_eps(Denoiser&& denoiser, const Tensor& z_t, int t, const ConditionBundle& cond,
                  const ConditionBundle& null_cond, const GuidanceConfig& g) {
    g.validate();
    Tensor pos = denoiser(z_t, t, cond);
    Tensor neg = denoiser(z_t, t, null_cond);
    Tensor combined = cfg_combine(pos, neg, g.cfg_scale);
    if (g.resample_scale == 0.0) return combined;
    return resample(combined, population_std(pos), g.resample_scale);
}

}  // namespace flexifilm

#endif
