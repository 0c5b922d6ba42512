#ifndef FLEXIFILM_TRAINING_HPP
#define FLEXIFILM_TRAINING_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "flexifilm/checkpoint.hpp"
#include "flexifilm/config.hpp"
#include "flexifilm/model.hpp"
#include "flexifilm/optim.hpp"
#include "flexifilm/schedule.hpp"
#include "flexifilm/synthdata.hpp"

namespace flexifilm {

inline constexpr double kClipNorm = 1.0;

struct TrainConfig {
    double p = 0.1;  // unconditional probability
    std::size_t n_c_min = 1;
    std::size_t n_c_max = 4;
    std::size_t n_g = 16;
    std::size_t steps = 5000;     // co-training steps (theta and phi only)
    std::size_t base_steps = 0;   // earlier all-parameter steps; stands in for pretrained spatial weights
    double lr = 1e-3;
    std::size_t batch = 1;
    std::uint64_t seed = 1;
    // sampler defaults carried in the same file
    double cfg_scale = 7.5;
    double resample_scale = 0.7;
    // Weight each sample's epsilon MSE by the denoiser's output-space weight;
    // false trains on the unweighted epsilon MSE.
    bool output_space_loss = true;

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("TrainConfig: p outside [0,1]");
        if (n_c_min < 1 || n_c_min > n_c_max || n_c_max > n_g) {
            throw ConfigError("TrainConfig: need 1 <= n_c_min <= n_c_max <= n_g");
        }
        if (batch == 0) throw ConfigError("TrainConfig: batch must be positive");
        if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be positive");
    }
};

inline TrainConfig train_config_from(const KeyValues& kv, TrainConfig c = {}) {
    KeyReader r(kv);
    r.get("p", c.p);
    r.get("n_c_min", c.n_c_min);
    r.get("n_c_max", c.n_c_max);
    r.get("n_g", c.n_g);
    r.get("steps", c.steps);
    r.get("base_steps", c.base_steps);
    r.get("lr", c.lr);
    r.get("batch", c.batch);
    r.get("seed", c.seed);
    r.get("cfg_scale", c.cfg_scale);
    r.get("resample_scale", c.resample_scale);
    r.get("output_space_loss", c.output_space_loss);
    r.finish();
    c.validate();
    return c;
}

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"p", c.p},           {"n_c_min", c.n_c_min}, {"n_c_max", c.n_c_max},
            {"n_g", c.n_g},       {"steps", c.steps},     {"base_steps", c.base_steps},
            {"lr", c.lr},         {"batch", c.batch},     {"seed", c.seed},
            {"cfg_scale", c.cfg_scale}, {"resample_scale", c.resample_scale},
            {"output_space_loss", c.output_space_loss}};
}

enum class Branch { kConditional, kUnconditional, kBase };

inline const char* branch_label(Branch b) {
    switch (b) {
        case Branch::kConditional: return "cond";
        case Branch::kUnconditional: return "uncond";
        case Branch::kBase: return "base";
    }
    return "?";
}

/// One coin per step: text and frames are dropped together.
inline Branch draw_branch(Rng& rng, double p) {
    return rng.bernoulli(p) ? Branch::kUnconditional : Branch::kConditional;
}

inline std::size_t draw_overlap(Rng& rng, const TrainConfig& cfg) {
    return cfg.n_c_min + rng.index(cfg.n_c_max - cfg.n_c_min + 1);
}

struct TrainingSample {
    ConditionBundle cond;
    Tensor target;  // [n_g, C, h, w] latent
};

/// Target is the encoded first n_g frames; the condition is the first n_c
/// of those latent frames, so the two overlap exactly there.
inline TrainingSample build_sample(const LatentCodec& codec, const Tensor& clip, const std::vector<TokenId>& caption,
                                   std::size_t n_c, std::size_t n_g) {
    if (clip.rank() != 4) throw ShapeError("build_sample: expected [frames, C, H, W] clip");
    if (clip.extent(0) < n_g) {
        throw ShapeError("build_sample: clip has " + std::to_string(clip.extent(0)) + " frames, need " + std::to_string(n_g));
    }
    if (n_c < 1 || n_c > n_g) throw ContractError("build_sample: need 1 <= n_c <= n_g");
    std::vector<std::size_t> head(n_g);
    for (std::size_t i = 0; i < n_g; ++i) head[i] = i;
    Tensor target = codec.encode(n_g == clip.extent(0) ? clip : gather_rows(clip, head));
    head.resize(n_c);
    return {ConditionBundle::from(n_c == n_g ? target.clone() : gather_rows(target, head), caption), target};
}

/// Optimizer state and parameter partition for co-training.
struct CoTrainState {
    ParamPartition part;
    std::vector<Tensor> theta, phi, all;
    AdamState adam_theta, adam_phi, adam_all;

    explicit CoTrainState(FlexiModel& model) : part(partition_params(model)) {
        auto& params = model.registry().params();
        for (auto i : part.theta) theta.push_back(params[i].value);
        for (auto i : part.phi) phi.push_back(params[i].value);
        for (auto& p : params) all.push_back(p.value);
        adam_theta.init(theta);
        adam_phi.init(phi);
        adam_all.init(all);
    }

    // Co-training leaves frozen tensors out of the tape entirely.
    void set_phase(bool base) {
        for (auto& t : all) t.set_requires_grad(base);
        if (!base) {
            for (auto& t : theta) t.set_requires_grad(true);
            for (auto& t : phi) t.set_requires_grad(true);
        }
    }

    void zero_grads() {
        for (auto& t : all) t.zero_grad();
    }
};

struct StepResult {
    double loss = 0.0;
    Branch branch = Branch::kConditional;
    double grad_norm_theta = 0.0;  // before clipping
    double grad_norm_phi = 0.0;
    double grad_norm_frozen = 0.0;
};

namespace detail {

inline double group_norm(const FlexiModel& m, const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (auto i : idx)
        for (float g : m.registry().params()[i].value.grad()) s += double(g) * g;
    return std::sqrt(s);
}

inline Tensor batch_loss(const FlexiModel& model, const std::vector<TrainingSample>& batch, bool null_cond,
                         bool output_space, const NoiseSchedule& sched, Rng& rng) {
    Tensor total;
    for (const auto& sample : batch) {
        const int t = int(rng.index(sched.steps()));
        const Tensor eps = randn(rng, sample.target.shape());
        const Tensor z_t = q_sample(sample.target, t, eps, sched);
        const Tensor pred = model.predict_eps_tokens(z_t, t, null_cond ? ConditionBundle::null() : sample.cond);
        Tensor l = mse(pred, latent_to_tokens(eps, model.config().token_patch));
        if (output_space) l = scale(l, float(model.denoiser().output_space_weight(t)));
        total = total.defined() ? add(total, l) : l;
    }
    return batch.size() == 1 ? total : scale(total, 1.0f / float(batch.size()));
}

inline void check_finite(double loss) {
    if (!std::isfinite(loss)) throw NumericError("training loss is not finite");
}

}  // namespace detail

/// One co-training step. Unconditional branch: null condition, phi updated.
/// Conditional branch: full condition, theta and phi updated. Frozen
/// parameters never enter the tape.
inline StepResult co_train_step(FlexiModel& model, CoTrainState& state, const std::vector<TrainingSample>& batch,
                                const TrainConfig& cfg, Rng& rng, const NoiseSchedule& sched,
                                std::optional<Branch> forced = std::nullopt) {
    if (batch.empty()) throw ContractError("co_train_step: empty batch");
    const Branch branch = forced ? *forced : draw_branch(rng, cfg.p);
    if (branch == Branch::kBase) throw ContractError("co_train_step: base branch is not a co-training branch");
    state.set_phase(false);
    state.zero_grads();
    Tensor loss = detail::batch_loss(model, batch, branch == Branch::kUnconditional, cfg.output_space_loss, sched, rng);
    StepResult r;
    r.loss = loss.item();
    r.branch = branch;
    detail::check_finite(r.loss);
    backward(loss);
    r.grad_norm_theta = detail::group_norm(model, state.part.theta);
    r.grad_norm_phi = detail::group_norm(model, state.part.phi);
    r.grad_norm_frozen = detail::group_norm(model, state.part.frozen);
    if (branch == Branch::kConditional) {
        std::vector<Tensor> both = state.theta;
        both.insert(both.end(), state.phi.begin(), state.phi.end());
        clip_grad_norm(both, kClipNorm);
        adam_step(state.theta, state.adam_theta, cfg.lr);
    } else {
        clip_grad_norm(state.phi, kClipNorm);
    }
    adam_step(state.phi, state.adam_phi, cfg.lr);
    return r;
}

/// All-parameter step with the same objective and condition dropping.
inline StepResult base_train_step(FlexiModel& model, CoTrainState& state, const std::vector<TrainingSample>& batch,
                                  const TrainConfig& cfg, Rng& rng, const NoiseSchedule& sched) {
    const bool null_cond = draw_branch(rng, cfg.p) == Branch::kUnconditional;
    state.set_phase(true);
    state.zero_grads();
    Tensor loss = detail::batch_loss(model, batch, null_cond, cfg.output_space_loss, sched, rng);
    StepResult r;
    r.loss = loss.item();
    r.branch = Branch::kBase;
    detail::check_finite(r.loss);
    backward(loss);
    r.grad_norm_theta = detail::group_norm(model, state.part.theta);
    r.grad_norm_phi = detail::group_norm(model, state.part.phi);
    r.grad_norm_frozen = detail::group_norm(model, state.part.frozen);
    clip_grad_norm(state.all, kClipNorm);
    adam_step(state.all, state.adam_all, cfg.lr);
    return r;
}

/// Draws a training batch: random train clip, random window of n_g frames,
/// n_c uniform in the configured range.
inline std::vector<TrainingSample> draw_batch(const FlexiModel& model, const Dataset& data, const TrainConfig& cfg,
                                              Rng& rng) {
    if (data.train.empty()) throw ContractError("train: dataset has no training clips");
    std::vector<TrainingSample> batch;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
        const Clip clip = data.clip(data.train[rng.index(data.train.size())]);
        const std::size_t frames = clip.pixels.extent(0);
        if (frames < cfg.n_g) throw ShapeError("train: clips shorter than n_g");
        const std::size_t start = rng.index(frames - cfg.n_g + 1);
        std::vector<std::size_t> window(cfg.n_g);
        for (std::size_t i = 0; i < cfg.n_g; ++i) window[i] = start + i;
        batch.push_back(build_sample(model.codec(), gather_rows(clip.pixels, window), clip.caption, draw_overlap(rng, cfg),
                                     cfg.n_g));
    }
    return batch;
}

struct LossRow {
    std::size_t step;
    double loss;
    Branch branch;
};

struct TrainResult {
    std::vector<LossRow> curve;
    std::string checkpoint_hash;  // empty unless written

    // Mean loss over the trailing `window` rows of the curve.
    double running_mean(std::size_t end, std::size_t window) const {
        const std::size_t lo = end > window ? end - window : 0;
        double s = 0.0;
        for (std::size_t i = lo; i < end; ++i) s += curve[i].loss;
        return s / double(end - lo);
    }
};

inline void write_loss_csv(std::ostream& os, const TrainResult& r) {
    os << "step,loss,branch\n";
    char buf[64];
    for (const auto& row : r.curve) {
        std::snprintf(buf, sizeof buf, "%.9g", row.loss);
        os << row.step << ',' << buf << ',' << branch_label(row.branch) << '\n';
    }
}

using TrainProgress = std::function<void(const LossRow&)>;

/// base_steps all-parameter steps, then cfg.steps co-training steps. With a
/// non-empty out_dir, writes checkpoint/ and loss.csv there.
inline TrainResult train(FlexiModel& model, const Dataset& data, const TrainConfig& cfg,
                         const std::filesystem::path& out_dir = {}, const TrainProgress& progress = {}) {
    cfg.validate();
    if (data.size() == 0) throw ContractError("train: empty dataset");
    const NoiseSchedule sched = default_schedule();
    if (model.config().train_steps != sched.steps()) throw ConfigError("train: model timeline differs from schedule");
    CoTrainState state(model);
    Rng root(cfg.seed);
    Rng data_rng = root.derive("train-data");
    Rng step_rng = root.derive("train-steps");
    TrainResult result;
    const std::size_t total = cfg.base_steps + cfg.steps;
    for (std::size_t step = 0; step < total; ++step) {
        const auto batch = draw_batch(model, data, cfg, data_rng);
        const StepResult r = step < cfg.base_steps ? base_train_step(model, state, batch, cfg, step_rng, sched)
                                                   : co_train_step(model, state, batch, cfg, step_rng, sched);
        result.curve.push_back({step, r.loss, r.branch});
        if (progress) progress(result.curve.back());
    }
    state.zero_grads();
    for (auto& t : state.all) t.set_requires_grad(false);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        result.checkpoint_hash = save_checkpoint(out_dir / "checkpoint", model);
        std::ofstream os(out_dir / "loss.csv");
        write_loss_csv(os, result);
        if (!os) throw IoError("train: cannot write loss.csv");
    }
    return result;
}

}  // namespace flexifilm

#endif
