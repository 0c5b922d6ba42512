#ifndef FLEXIFILM_ORACLE_HPP
#define FLEXIFILM_ORACLE_HPP

#include <cmath>
#include <cstdint>

#include "flexifilm/rng.hpp"
#include "flexifilm/schedule.hpp"
#include "flexifilm/tensor.hpp"

// Gaussian data with diagonal covariance admits a closed-form noise
// predictor, which gives exact ground truth for the sampler and guidance
// arithmetic without a trained network.

namespace flexifilm {

struct GaussianWorld {
    Tensor mu;
    Tensor sigma2;

    GaussianWorld(Tensor mean, Tensor variance) : mu(std::move(mean)), sigma2(std::move(variance)) {
        require_same_shape(mu, sigma2, "GaussianWorld");
        for (float v : sigma2.data()) {
            if (!(v > 0.0f)) throw ConfigError("GaussianWorld: variance must be positive");
        }
    }

    static GaussianWorld isotropic(const Shape& shape, float mean, float variance) {
        return GaussianWorld(Tensor(shape, mean), Tensor(shape, variance));
    }
};

/// E[eps | z_t] = sqrt(1−ᾱ)·(z_t − sqrt(ᾱ)·mu) / (ᾱ·sigma2 + 1 − ᾱ), elementwise.
inline Tensor oracle_eps(const GaussianWorld& world, const Tensor& z_t, int t, const NoiseSchedule& s) {
    check_step(s, t, "oracle_eps");
    require_same_shape(world.mu, z_t, "oracle_eps");
    const double ab = s.alpha_bar[std::size_t(t)];
    const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    Tensor out(z_t.shape());
    auto o = out.mutable_data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double denom = ab * world.sigma2.raw()[i] + (1.0 - ab);
        o[i] = float(sb * (z_t.raw()[i] - sa * world.mu.raw()[i]) / denom);
    }
    return out;
}

struct OracleReport {
    std::size_t samples = 0;
    std::size_t steps = 0;
    double target_mean = 0.0;
    double target_variance = 0.0;
    double sample_mean = 0.0;
    double sample_variance = 0.0;

    double mean_error() const { return std::abs(sample_mean - target_mean); }
    double variance_rel_error() const { return std::abs(sample_variance - target_variance) / target_variance; }
};

/// Runs `steps`-step deterministic DDIM from pure noise with the oracle
/// predictor on `n` independent scalar draws of an isotropic world.
inline OracleReport oracle_sample_check(float mean, float variance, const NoiseSchedule& s, std::size_t steps,
                                        std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ConfigError("oracle_sample_check: need at least one sample");
    const Shape shape{n};
    const auto world = GaussianWorld::isotropic(shape, mean, variance);
    Rng rng(seed);
    Tensor z = randn(rng, shape);
    const auto ladder = ddim_ladder(s, steps);
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const int t = ladder[i];
        const int t_prev = i + 1 < ladder.size() ? ladder[i + 1] : kCleanStep;
        z = ddim_step(z, oracle_eps(world, z, t, s), t, t_prev, s);
    }
    OracleReport r;
    r.samples = n;
    r.steps = steps;
    r.target_mean = mean;
    r.target_variance = variance;
    double m = 0.0;
    for (float v : z.data()) m += v;
    m /= double(n);
    double var = 0.0;
    for (float v : z.data()) var += (v - m) * (v - m);
    r.sample_mean = m;
    r.sample_variance = var / double(n);
    return r;
}

}  // namespace flexifilm

#endif
