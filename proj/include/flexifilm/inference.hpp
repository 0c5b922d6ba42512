#ifndef FLEXIFILM_INFERENCE_HPP
#define FLEXIFILM_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "flexifilm/config.hpp"
#include "flexifilm/guidance.hpp"
#include "flexifilm/ops.hpp"
#include "flexifilm/rng.hpp"
#include "flexifilm/schedule.hpp"

// Sampling is written against a small model interface so a stub can stand in:
//   Tensor predict_eps(const Tensor& z_t, int t, const ConditionBundle&) const
//   Tensor encode(const Tensor& pixels) const, Tensor decode(const Tensor& latent) const
//   Shape latent_frame_shape() const

namespace flexifilm {

struct SamplerConfig {
    std::size_t steps = 50;
    double cfg_scale = 7.5;
    double resample_scale = 0.7;
    bool resample_per_step = true;
    std::size_t rounds = 1;   // m
    std::size_t frames = 16;  // f, frames per round
    std::size_t overlap = 4;  // n_o; 0 keeps every frame and conditions on the last one
    bool init_overlap_noise = true;
    std::uint64_t seed = 1;

    GuidanceConfig guidance() const { return {cfg_scale, resample_scale, resample_per_step}; }

    // Frames taken from the previous round as the next condition.
    std::size_t condition_frames() const { return std::max<std::size_t>(overlap, 1); }

    void validate() const {
        if (steps == 0) throw ConfigError("sampler: steps must be >= 1");
        if (rounds == 0) throw ConfigError("sampler: rounds must be >= 1");
        if (frames == 0) throw ConfigError("sampler: frames per round must be >= 1");
        if (overlap >= frames) throw ConfigError("sampler: overlap must be smaller than frames per round");
        guidance().validate();
    }
};

inline SamplerConfig sampler_config_from(const KeyValues& kv, SamplerConfig c = {}) {
    KeyReader r(kv);
    r.get("steps", c.steps);
    r.get("cfg_scale", c.cfg_scale);
    r.get("resample_scale", c.resample_scale);
    r.get("resample_per_step", c.resample_per_step);
    r.get("rounds", c.rounds);
    r.get("frames_per_round", c.frames);
    r.get("overlap", c.overlap);
    r.get("init_overlap_noise", c.init_overlap_noise);
    r.get("seed", c.seed);
    r.finish();
    c.validate();
    return c;
}

/// f + (m − 1)(f − n_o): overlap frames appear once in the stitched video.
inline std::size_t stitched_frame_count(std::size_t m, std::size_t f, std::size_t n_o) {
    if (m == 0 || n_o >= f) throw ConfigError("frame count: need m >= 1 and n_o < f");
    return f + (m - 1) * (f - n_o);
}

inline std::size_t naive_frame_count(std::size_t m, std::size_t f) { return m * f; }

namespace detail {

inline Tensor leading_frames(const Tensor& x, std::size_t begin, std::size_t count) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = begin + i;
    return gather_rows(x, idx);
}

}  // namespace detail

/// One guided DDIM round of cfg.frames latent frames.
template <class Model>
Tensor single_round(const Model& model, const ConditionBundle& cond, const SamplerConfig& cfg,
                    const NoiseSchedule& sched, Rng& rng) {
    cfg.validate();
    cond.validate();
    NoGradGuard no_grad;
    Shape shape = model.latent_frame_shape();
    shape.insert(shape.begin(), cfg.frames);
    Tensor z = randn(rng, shape);
    const std::vector<int> ladder = ddim_ladder(sched, cfg.steps);

    if (cfg.init_overlap_noise && !cond.is_null) {
        if (cond.n_c > cfg.frames) throw ContractError("single_round: more condition frames than frames per round");
        const Tensor noisy = q_sample(cond.frames, ladder.front(), randn(rng, cond.frames.shape()), sched);
        std::copy(noisy.data().begin(), noisy.data().end(), z.mutable_data().begin());
    }

    const ConditionBundle null_cond = ConditionBundle::null();
    auto predict = [&](const Tensor& x, int t, const ConditionBundle& b) { return model.predict_eps(x, t, b); };
    const GuidanceConfig g = cfg.guidance();
    double final_sigma_pos = 0.0;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const int t = ladder[i];
        const int t_prev = i + 1 < ladder.size() ? ladder[i + 1] : kCleanStep;
        Tensor eps;
        if (g.resample_per_step) {
            eps = guided_eps(predict, z, t, cond, null_cond, g);
        } else {
            const Tensor pos = predict(z, t, cond);
            eps = cfg_combine(pos, predict(z, t, null_cond), g.cfg_scale);
            if (t_prev == kCleanStep) final_sigma_pos = population_std(ddim_step(z, pos, t, t_prev, sched));
        }
        z = ddim_step(z, eps, t, t_prev, sched);
    }
    // Deferred mode: pull the finished latent toward the positive branch's std.
    if (!g.resample_per_step && g.resample_scale > 0.0) z = resample(z, final_sigma_pos, g.resample_scale);
    return z;
}

struct MultiRoundResult {
    Tensor latent;               // stitched [total, C, h, w]
    std::vector<Tensor> rounds;  // each [f, C, h, w]
    std::size_t total_frames = 0;
    std::size_t naive_frames = 0;
};

/// m rounds; round k > 1 conditions on the previous round's last frames,
/// decoded and re-encoded, with the caption carried forward.
template <class Model>
MultiRoundResult multi_round(const Model& model, const ConditionBundle& init_cond, const SamplerConfig& cfg,
                             const NoiseSchedule& sched) {
    cfg.validate();
    NoGradGuard no_grad;
    MultiRoundResult out;
    const Rng root(cfg.seed);
    ConditionBundle cond = init_cond;
    std::vector<Tensor> pieces;
    for (std::size_t k = 0; k < cfg.rounds; ++k) {
        Rng rng = root.derive(std::uint64_t(k));
        Tensor round = single_round(model, cond, cfg, sched, rng);
        pieces.push_back(k == 0 ? round : detail::leading_frames(round, cfg.overlap, cfg.frames - cfg.overlap));
        out.rounds.push_back(round);
        const std::size_t n = cfg.condition_frames();
        const Tensor tail = detail::leading_frames(round, cfg.frames - n, n);
        cond = ConditionBundle::from(model.encode(model.decode(tail)), init_cond.is_null ? std::vector<TokenId>{} : init_cond.text);
    }
    Tensor stitched = pieces.front();
    for (std::size_t i = 1; i < pieces.size(); ++i) stitched = concat(stitched, pieces[i], 0);
    out.latent = stitched;
    out.total_frames = stitched.extent(0);
    out.naive_frames = naive_frame_count(cfg.rounds, cfg.frames);
    return out;
}

struct DriftRow {
    std::size_t round;  // 1-based
    double r;
    double latent_std;
    double mean_intensity;  // decoded pixel mean
};

template <class Model>
std::vector<DriftRow> drift_probe(const Model& model, const ConditionBundle& init_cond, SamplerConfig cfg,
                                  const std::vector<double>& r_values, const NoiseSchedule& sched) {
    std::vector<DriftRow> rows;
    for (double r : r_values) {
        cfg.resample_scale = r;
        const auto result = multi_round(model, init_cond, cfg, sched);
        for (std::size_t k = 0; k < result.rounds.size(); ++k) {
            const Tensor pixels = model.decode(result.rounds[k]);
            double mean = 0.0;
            for (float v : pixels.data()) mean += v;
            rows.push_back({k + 1, r, population_std(result.rounds[k]), mean / double(pixels.numel())});
        }
    }
    return rows;
}

/// max over rounds of |latent_std − round-1 latent_std| for one r value.
inline double drift_metric(const std::vector<DriftRow>& rows, double r) {
    double first = NAN, worst = 0.0;
    for (const auto& row : rows) {
        if (row.r != r) continue;
        if (row.round == 1) first = row.latent_std;
    }
    if (std::isnan(first)) throw ContractError("drift_metric: no rows for that r");
    for (const auto& row : rows)
        if (row.r == r) worst = std::max(worst, std::abs(row.latent_std - first));
    return worst;
}

inline void write_drift_csv(std::ostream& os, const std::vector<DriftRow>& rows) {
    os << "round,r,latent_std,mean_intensity\n";
    char buf[128];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", row.round, row.r, row.latent_std, row.mean_intensity);
        os << buf;
    }
}

}  // namespace flexifilm

#endif
