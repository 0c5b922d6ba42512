#ifndef FLEXIFILM_MODEL_HPP
#define FLEXIFILM_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "flexifilm/codec.hpp"
#include "flexifilm/condition.hpp"
#include "flexifilm/nn.hpp"
#include "flexifilm/schedule.hpp"

namespace flexifilm {

// Rough per-element std of encoded synthetic clips, used for preconditioning.
inline constexpr double kLatentDataStd = 0.5;

struct ModelConfig {
    std::size_t image_size = 32;
    std::size_t channels = 3;
    std::size_t codec_patch = 2;
    std::size_t token_patch = 2;  // latent pixels per token side inside the networks
    std::size_t dim = 64;
    std::size_t ip_queries = 4;
    std::size_t vocab = 64;
    std::size_t spatial_blocks = 2;
    std::size_t temporal_blocks = 2;
    std::size_t projector_temporal_layers = 1;
    std::size_t train_steps = 1000;  // diffusion timeline length, for the time embedding range
    bool temporal_enabled = true;    // false: denoiser temporal blocks are skipped entirely
    std::uint64_t seed = 1;

    std::size_t latent_channels() const { return channels * codec_patch * codec_patch; }
    std::size_t latent_size() const { return image_size / codec_patch; }
    std::size_t tokens_per_frame() const {
        const std::size_t side = latent_size() / token_patch;
        return side * side;
    }
    std::size_t token_features() const { return latent_channels() * token_patch * token_patch; }

    void validate() const {
        if (image_size % codec_patch != 0 || latent_size() % token_patch != 0) {
            throw ConfigError("ModelConfig: image size not divisible by patch sizes");
        }
        if (dim < 2 || dim % 2 != 0) throw ConfigError("ModelConfig: dim must be even and >= 2");
        if (ip_queries == 0 || vocab == 0 || spatial_blocks == 0) throw ConfigError("ModelConfig: zero-sized component");
    }
};

/// Token table plus a learned row that stands for "no caption".
struct TextEncoder {
    Tensor table;           // [vocab, D]
    Tensor null_embedding;  // [1, D]

    TextEncoder() = default;
    TextEncoder(ParamRegistry& reg, const ModelConfig& cfg, Rng& rng)
        : table(reg.add("text.table", {cfg.vocab, cfg.dim}, ParamGroup::kFrozen, rng, 1.0)),
          null_embedding(reg.add("text.null", {1, cfg.dim}, ParamGroup::kFrozen, rng, 1.0)) {}

    // [n, D] with sinusoidal positions added; the empty caption maps to [1, D].
    Tensor operator()(const std::vector<TokenId>& tokens) const {
        if (tokens.empty()) return null_embedding;
        const std::size_t vocab = table.extent(0), dim = table.extent(1);
        std::vector<std::size_t> idx;
        std::vector<double> pos;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i] >= vocab) throw ContractError("text_encode: token id " + std::to_string(tokens[i]) + " outside vocabulary");
            idx.push_back(tokens[i]);
            pos.push_back(double(i));
        }
        return add(gather_rows(table, idx), sinusoidal_embedding(pos, dim));
    }
};

/// Per-frame spatial block of the denoiser: self-attention over the frame's
/// tokens, cross-attention to that frame's conditioning context, MLP.
struct SpatialBlock {
    LayerNorm norm1;
    Attention self_attn;
    LayerNorm norm2;
    Attention cross_attn;
    LayerNorm norm3;
    Mlp mlp;

    SpatialBlock() = default;
    SpatialBlock(ParamRegistry& reg, const std::string& name, std::size_t dim, Rng& rng)
        : norm1(reg, name + ".norm1", dim, ParamGroup::kFrozen),
          self_attn(reg, name + ".self_attn", dim, dim, ParamGroup::kFrozen, rng),
          norm2(reg, name + ".norm2", dim, ParamGroup::kFrozen),
          cross_attn(reg, name + ".cross_attn", dim, dim, ParamGroup::kFrozen, rng),
          norm3(reg, name + ".norm3", dim, ParamGroup::kFrozen),
          mlp(reg, name + ".mlp", dim, 2 * dim, dim, ParamGroup::kFrozen, rng) {}

    // h [F, L, D], context [F, M, D]
    Tensor operator()(const Tensor& h, const Tensor& context) const {
        Tensor a = norm1(h);
        Tensor x = add(h, self_attn(a, a));
        x = add(x, cross_attn(norm2(x), context));
        return add(x, mlp(norm3(x)));
    }
};

struct ProjectorOutput {
    Tensor pre_temporal;  // [n_g, Q, D] after IP sampling and last-frame padding
    Tensor tokens;        // [n_g, Q, D] final conditioning tokens
};

/// Turns n_c conditioning latent frames into n_g frame-aligned token sets:
/// per-frame IP sampler, last-frame padding, temporal transformer, double MLP.
struct VideoProjector {
    Linear in_proj;
    Tensor position;  // [L, D]
    Tensor queries;   // [Q, D]
    LayerNorm query_norm;
    LayerNorm context_norm;
    Attention sampler;
    LayerNorm sampler_mlp_norm;
    Mlp sampler_mlp;
    std::vector<TemporalBlock> temporal;
    Mlp out_mlp;
    std::size_t token_patch = 2;

    VideoProjector() = default;
    VideoProjector(ParamRegistry& reg, const ModelConfig& cfg, Rng& rng)
        : in_proj(reg, "projector.in", cfg.token_features(), cfg.dim, ParamGroup::kFrozen, rng),
          position(reg.add("projector.position", {cfg.tokens_per_frame(), cfg.dim}, ParamGroup::kFrozen, rng, 0.02)),
          queries(reg.add("projector.ip.queries", {cfg.ip_queries, cfg.dim}, ParamGroup::kFrozen, rng, 1.0)),
          query_norm(reg, "projector.ip.query_norm", cfg.dim, ParamGroup::kFrozen),
          context_norm(reg, "projector.ip.context_norm", cfg.dim, ParamGroup::kFrozen),
          sampler(reg, "projector.ip.attn", cfg.dim, cfg.dim, ParamGroup::kFrozen, rng),
          sampler_mlp_norm(reg, "projector.ip.mlp_norm", cfg.dim, ParamGroup::kFrozen),
          sampler_mlp(reg, "projector.ip.mlp", cfg.dim, 2 * cfg.dim, cfg.dim, ParamGroup::kFrozen, rng),
          out_mlp(reg, "projector.out_mlp", cfg.dim, 2 * cfg.dim, cfg.dim, ParamGroup::kFrozen, rng),
          token_patch(cfg.token_patch) {
        for (std::size_t i = 0; i < cfg.projector_temporal_layers; ++i) {
            temporal.emplace_back(reg, "projector.temporal." + std::to_string(i), cfg.dim,
                                  ParamGroup::kProjectorTemporal, rng);
        }
    }

    // One frame's tokens never see another frame's: the leading axis is batch.
    Tensor ip_sample(const Tensor& cond_latent) const {
        const std::size_t frames = cond_latent.extent(0);
        Tensor x = add(in_proj(latent_to_tokens(cond_latent, token_patch)), repeat_leading(position, frames));
        Tensor q = repeat_leading(queries, frames);
        Tensor feats = add(q, sampler(query_norm(q), context_norm(x)));
        return add(feats, sampler_mlp(sampler_mlp_norm(feats)));
    }

    ProjectorOutput operator()(const Tensor& cond_latent, std::size_t n_g) const {
        if (cond_latent.rank() != 4) throw ShapeError("project_condition: expected [n_c, C, h, w] latent");
        const std::size_t n_c = cond_latent.extent(0);
        if (n_c == 0) throw ContractError("project_condition: no conditioning frames");
        if (n_c > n_g) throw ContractError("project_condition: more conditioning frames than generated frames");
        Tensor feats = ip_sample(cond_latent);
        if (n_c < n_g) {
            std::vector<std::size_t> idx(n_g);
            for (std::size_t i = 0; i < n_g; ++i) idx[i] = std::min(i, n_c - 1);
            feats = gather_rows(feats, idx);
        }
        ProjectorOutput out;
        out.pre_temporal = feats;
        for (const auto& block : temporal) feats = block(feats);
        out.tokens = out_mlp(feats);
        return out;
    }
};

/// Toy 3D denoiser: token embedding + time embedding, then alternating
/// spatial (frozen) and temporal (phi) blocks at a single resolution.
/// Output preconditioning: eps = a_t·z_t − b_t·net, where a_t·z_t is the
/// exact predictor for N(0, σ_d²) latents and b_t scales the network so its
/// target has unit variance at every t. A fresh denoiser (zero output layer)
/// is that Gaussian predictor, and network error cannot swamp the
/// nearly-pure-noise steps.
struct Denoiser {
    Linear in_proj;
    Tensor position;  // [L, D]
    Mlp time_mlp;
    std::vector<SpatialBlock> spatial;
    std::vector<TemporalBlock> temporal;
    LayerNorm out_norm;
    Linear out_proj;
    ModelConfig cfg;
    std::vector<float> skip;      // a_t
    std::vector<float> out_gain;  // −b_t

    Denoiser() = default;
    Denoiser(ParamRegistry& reg, const ModelConfig& config, Rng& rng)
        : in_proj(reg, "denoiser.in", config.token_features(), config.dim, ParamGroup::kFrozen, rng),
          position(reg.add("denoiser.position", {config.tokens_per_frame(), config.dim}, ParamGroup::kFrozen, rng, 0.02)),
          time_mlp(reg, "denoiser.time_mlp", config.dim, 2 * config.dim, config.dim, ParamGroup::kFrozen, rng),
          out_norm(reg, "denoiser.out_norm", config.dim, ParamGroup::kFrozen),
          out_proj(reg, "denoiser.out", config.dim, config.token_features(), ParamGroup::kFrozen, rng, /*zero_init=*/true),
          cfg(config) {
        const NoiseSchedule sched = make_linear_schedule(config.train_steps, kDefaultBetaStart, kDefaultBetaEnd);
        const double sd2 = kLatentDataStd * kLatentDataStd;
        for (double a : sched.alpha_bar) {
            const double d = a * sd2 + 1.0 - a;
            skip.push_back(float(std::sqrt(1.0 - a) / d));
            out_gain.push_back(float(-kLatentDataStd * std::sqrt(a / d)));
        }
        for (std::size_t i = 0; i < config.spatial_blocks; ++i) {
            spatial.emplace_back(reg, "denoiser.spatial." + std::to_string(i), config.dim, rng);
        }
        for (std::size_t i = 0; i < config.temporal_blocks; ++i) {
            temporal.emplace_back(reg, "denoiser.temporal." + std::to_string(i), config.dim,
                                  ParamGroup::kDenoiserTemporal, rng);
        }
    }

    /// z_t [F, C, h, w], context [F, M, D] -> epsilon prediction in token layout [F, L, C·p²].
    Tensor tokens(const Tensor& z_t, int t, const Tensor& context) const {
        if (z_t.rank() != 4) throw ShapeError("denoise: expected [frames, C, h, w] latent");
        const std::size_t frames = z_t.extent(0);
        if (context.rank() != 3 || context.extent(0) != frames) {
            throw ShapeError("denoise: conditioning has " + std::to_string(context.rank() ? context.extent(0) : 0) +
                             " frame slots for " + std::to_string(frames) + " frames");
        }
        if (t < 0 || std::size_t(t) >= cfg.train_steps) throw ContractError("denoise: timestep out of range");
        Tensor h = add(in_proj(latent_to_tokens(z_t, cfg.token_patch)), repeat_leading(position, frames));
        Tensor temb = reshape(time_mlp(sinusoidal_embedding({double(t)}, cfg.dim)), {cfg.dim});
        h = add_rowvec(h, temb);
        for (std::size_t i = 0; i < spatial.size(); ++i) {
            h = spatial[i](h, context);
            if (cfg.temporal_enabled && i < temporal.size()) h = temporal[i](h);
        }
        if (cfg.temporal_enabled) {
            for (std::size_t i = spatial.size(); i < temporal.size(); ++i) h = temporal[i](h);
        }
        const Tensor base = latent_to_tokens(z_t, cfg.token_patch);
        return add(scale(out_proj(out_norm(h)), out_gain[std::size_t(t)]), scale(base, skip[std::size_t(t)]));
    }

    // 1/b_t²: turns the epsilon MSE into a plain MSE on the network output.
    double output_space_weight(int t) const {
        const double b = out_gain[std::size_t(t)];
        return 1.0 / (b * b);
    }

    Tensor operator()(const Tensor& z_t, int t, const Tensor& context) const {
        return tokens_to_latent(tokens(z_t, t, context), z_t.extent(1), z_t.extent(2), z_t.extent(3), cfg.token_patch);
    }
};

/// Complete network: codec, text encoder, video projector, denoiser and the
/// learned null conditioning tokens. Parameters live in one registry.
class FlexiModel {
public:
    explicit FlexiModel(ModelConfig cfg) : cfg_(std::move(cfg)), codec_(cfg_.channels, cfg_.codec_patch) {
        cfg_.validate();
        Rng rng = Rng(cfg_.seed).derive("model-init");
        text_ = TextEncoder(registry_, cfg_, rng);
        null_tokens_ = registry_.add("null_condition.tokens", {cfg_.ip_queries, cfg_.dim}, ParamGroup::kFrozen, rng, 1.0);
        projector_ = VideoProjector(registry_, cfg_, rng);
        denoiser_ = Denoiser(registry_, cfg_, rng);
    }

    FlexiModel(const FlexiModel&) = delete;
    FlexiModel& operator=(const FlexiModel&) = delete;
    FlexiModel(FlexiModel&&) = default;
    FlexiModel& operator=(FlexiModel&&) = default;

    const ModelConfig& config() const { return cfg_; }

    // Temporal blocks have zero-initialised outputs, so switching them on
    // after spatial-only training starts from the same function.
    void set_temporal_enabled(bool on) {
        cfg_.temporal_enabled = on;
        denoiser_.cfg.temporal_enabled = on;
    }

    const LatentCodec& codec() const { return codec_; }
    ParamRegistry& registry() { return registry_; }
    const ParamRegistry& registry() const { return registry_; }
    VideoProjector& projector() { return projector_; }
    const VideoProjector& projector() const { return projector_; }
    Denoiser& denoiser() { return denoiser_; }
    const Denoiser& denoiser() const { return denoiser_; }

    Shape latent_frame_shape() const { return {cfg_.latent_channels(), cfg_.latent_size(), cfg_.latent_size()}; }
    Tensor encode(const Tensor& pixels) const { return codec_.encode(pixels); }
    Tensor decode(const Tensor& latent) const { return codec_.decode(latent); }
    Tensor text_encode(const std::vector<TokenId>& tokens) const { return text_(tokens); }
    ProjectorOutput project_condition(const Tensor& cond_latent, std::size_t n_g) const {
        return projector_(cond_latent, n_g);
    }

    /// Cross-attention context [F, Q + n_text, D]: frame-aligned condition
    /// tokens followed by the caption tokens.
    Tensor context(const ConditionBundle& cond, std::size_t frames) const {
        cond.validate();
        Tensor slots = cond.is_null ? repeat_leading(null_tokens_, frames) : project_condition(cond.frames, frames).tokens;
        Tensor text = text_encode(cond.is_null ? std::vector<TokenId>{} : cond.text);
        return concat(slots, repeat_leading(text, frames), 1);
    }

    Tensor denoise(const Tensor& z_t, int t, const Tensor& cond_tokens, const Tensor& text_embedding) const {
        return denoiser_(z_t, t, concat(cond_tokens, repeat_leading(text_embedding, z_t.extent(0)), 1));
    }

    Tensor predict_eps(const Tensor& z_t, int t, const ConditionBundle& cond) const {
        return denoiser_(z_t, t, context(cond, z_t.extent(0)));
    }

    Tensor predict_eps_tokens(const Tensor& z_t, int t, const ConditionBundle& cond) const {
        return denoiser_.tokens(z_t, t, context(cond, z_t.extent(0)));
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : registry_.params()) n += p.value.numel();
        return n;
    }

private:
    ModelConfig cfg_;
    LatentCodec codec_;
    ParamRegistry registry_;
    TextEncoder text_;
    Tensor null_tokens_;
    VideoProjector projector_;
    Denoiser denoiser_;
};

/// Indices into the model's registry, split by co-training group.
struct ParamPartition {
    std::vector<std::size_t> theta;   // projector temporal
    std::vector<std::size_t> phi;     // denoiser temporal
    std::vector<std::size_t> frozen;  // everything else

    std::size_t element_count(const FlexiModel& m, const std::vector<std::size_t>& group) const {
        std::size_t n = 0;
        for (auto i : group) n += m.registry().params()[i].value.numel();
        return n;
    }
};

inline ParamPartition partition_params(const FlexiModel& model) {
    ParamPartition part;
    const auto& params = model.registry().params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        switch (params[i].group) {
            case ParamGroup::kProjectorTemporal: part.theta.push_back(i); break;
            case ParamGroup::kDenoiserTemporal: part.phi.push_back(i); break;
            case ParamGroup::kFrozen: part.frozen.push_back(i); break;
        }
    }
    return part;
}

}  // namespace flexifilm

#endif
