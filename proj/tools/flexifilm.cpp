// flexifilm command-line entry point. Exit codes: 0 ok, 1 usage, 2 runtime.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flexifilm/checkpoint.hpp"
#include "flexifilm/dataset_io.hpp"
#include "flexifilm/eval.hpp"
#include "flexifilm/inference.hpp"
#include "flexifilm/io.hpp"
#include "flexifilm/oracle.hpp"
#include "flexifilm/schedule.hpp"
#include "flexifilm/synthdata.hpp"
#include "flexifilm/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flexifilm;

namespace {

constexpr const char* kVersion = "0.1.0";

// Config-file keys that can also be given as flags; a flag only overrides
// the file when it was actually passed.
struct Overrides {
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void option(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        options.emplace_back(key, app->add_option(flag, values[key], help));
    }
    // --flag means true; --flag=false is accepted too.
    void toggle(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        options.emplace_back(key, app->add_flag(flag + "{true}", values[key], help));
    }
    KeyValues apply(KeyValues kv) const {
        for (const auto& [key, opt] : options)
            if (opt->count() > 0) kv[key] = values.at(key);
        return kv;
    }
};

KeyValues load_config(const std::string& path) { return path.empty() ? KeyValues{} : read_key_values(path); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os) throw IoError("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// One manifest per output directory; artifact paths are relative to it.
void write_manifest(const fs::path& out, const std::string& subcommand, const json& config, std::uint64_t seed,
                    const std::string& checkpoint, const std::vector<std::string>& artifacts, const json& results) {
    json m;
    m["subcommand"] = subcommand;
    m["config"] = config;
    m["seed"] = seed;
    m["checkpoint_hash"] = checkpoint.empty() ? json(nullptr) : json(checkpoint);
    m["artifacts"] = artifacts;
    m["results"] = results;
    m["version"] = kVersion;
    write_json(out / "manifest.json", m);
}

json to_json(const SamplerConfig& c) {
    return {{"steps", c.steps},
            {"cfg_scale", c.cfg_scale},
            {"resample_scale", c.resample_scale},
            {"resample_per_step", c.resample_per_step},
            {"rounds", c.rounds},
            {"frames_per_round", c.frames},
            {"overlap", c.overlap},
            {"init_overlap_noise", c.init_overlap_noise},
            {"seed", c.seed}};
}

std::string hash_file(const fs::path& path) { return hex64(fnv1a(read_file_bytes(path))); }

std::string tensor_hash(const Tensor& t) {
    return hex64(fnv1a(std::string(reinterpret_cast<const char*>(t.raw()), t.numel() * sizeof(float))));
}

std::string caption_text(const std::vector<TokenId>& caption) {
    std::ostringstream os;
    for (std::size_t i = 0; i < caption.size(); ++i) os << (i ? " " : "") << caption[i];
    return os.str();
}

// Prompt = caption plus the first n_c encoded frames of a synthetic scene
// drawn from prompt_seed.
struct Prompt {
    SceneSpec spec;
    ConditionBundle cond;
};

Prompt make_prompt(const FlexiModel& model, std::uint64_t prompt_seed, std::size_t n_c, bool unconditional) {
    Rng rng = Rng(prompt_seed).derive("prompt");
    Prompt p;
    p.spec = draw_spec(rng, std::max<std::size_t>(n_c, 1), model.config().image_size);
    if (unconditional) {
        p.cond = ConditionBundle::null();
        return p;
    }
    const Clip clip = make_clip(p.spec, rng);
    p.cond = ConditionBundle::from(model.encode(clip.pixels), clip.caption);
    return p;
}

json prompt_json(const Prompt& p) {
    json j = {{"scene", to_json(p.spec)}, {"unconditional", p.cond.is_null}};
    if (!p.cond.is_null) {
        j["caption"] = p.cond.text;
        j["condition_frames"] = p.cond.n_c;
    }
    return j;
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    std::string out_dir;
    std::size_t clips = 500;
    std::size_t frames = 24;
    std::uint64_t seed = 1;
};

int run_gen_data(const GenDataArgs& a) {
    const fs::path out(a.out_dir);
    fs::create_directories(out / "clips");
    Rng rng = Rng(a.seed).derive("data");
    const Dataset ds = make_dataset(a.clips, rng, a.frames);
    std::vector<std::string> artifacts{"dataset.json"};
    write_json(out / "dataset.json", to_json(ds));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Clip clip = ds.clip(i);
        char name[64];
        std::snprintf(name, sizeof name, "clips/clip_%05zu", i);
        write_fft1(out / (std::string(name) + ".fft1"), clip.pixels);
        write_text(out / (std::string(name) + ".txt"), caption_text(clip.caption) + "\n");
        artifacts.push_back(std::string(name) + ".fft1");
        artifacts.push_back(std::string(name) + ".txt");
    }
    const json config = {{"clips", a.clips}, {"frames", a.frames}, {"seed", a.seed}};
    const json results = {{"train", ds.train.size()}, {"eval", ds.eval.size()}};
    write_manifest(out, "gen-data", config, a.seed, "", artifacts, results);
    std::cout << results.dump() << "\n";
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string out_dir, config, data, init;
    std::size_t clips = 500;
    bool no_temporal = false;
    std::size_t log_every = 0;
    Overrides overrides;
};

int run_train(const TrainArgs& a) {
    const TrainConfig cfg = train_config_from(a.overrides.apply(load_config(a.config)));
    const fs::path out(a.out_dir);
    fs::create_directories(out);

    json data_info;
    Dataset ds;
    if (!a.data.empty()) {
        ds = load_dataset(a.data);
        data_info = {{"source", "directory"}, {"dataset_hash", hash_file(fs::path(a.data) / "dataset.json")}};
    } else {
        Rng rng = Rng(cfg.seed).derive("data");
        ds = make_dataset(a.clips, rng);
        data_info = {{"source", "generated"}, {"clips", a.clips}};
    }

    std::string init_hash;
    FlexiModel model = [&] {
        if (!a.init.empty()) {
            init_hash = checkpoint_hash(a.init);
            return load_checkpoint(a.init);
        }
        ModelConfig mc;
        mc.seed = cfg.seed;
        return FlexiModel(mc);
    }();
    model.set_temporal_enabled(!a.no_temporal);

    TrainProgress progress;
    if (a.log_every > 0) {
        progress = [&](const LossRow& row) {
            if ((row.step + 1) % a.log_every == 0) std::cerr << "step " << row.step + 1 << " loss " << row.loss << "\n";
        };
    }
    const TrainResult result = train(model, ds, cfg, out, progress);

    json config = to_json(cfg);
    config["model"] = flexifilm::to_json(model.config());
    config["data"] = data_info;
    if (!init_hash.empty()) config["init_checkpoint_hash"] = init_hash;
    const std::size_t n = result.curve.size();
    const json results = {{"steps_run", n},
                          {"final_loss_mean_100", n ? result.running_mean(n, 100) : 0.0},
                          {"checkpoint_hash", result.checkpoint_hash}};
    write_manifest(out, "train", config, cfg.seed, result.checkpoint_hash, {"checkpoint/manifest.json", "loss.csv"},
                   results);
    std::cout << results.dump() << "\n";
    return 0;
}

// ------------------------------------------------------------------ sample

struct SampleArgs {
    std::string out_dir, config, checkpoint;
    std::uint64_t prompt_seed = 1;
    std::size_t condition_frames = 1;
    bool unconditional = false;
    Overrides overrides;
};

int run_sample(const SampleArgs& a) {
    const SamplerConfig cfg = sampler_config_from(a.overrides.apply(load_config(a.config)));
    const fs::path out(a.out_dir);
    fs::create_directories(out / "frames");
    const std::string ckpt_hash = checkpoint_hash(a.checkpoint);
    const FlexiModel model = load_checkpoint(a.checkpoint);
    const Prompt prompt = make_prompt(model, a.prompt_seed, a.condition_frames, a.unconditional);

    const MultiRoundResult r = multi_round(model, prompt.cond, cfg, default_schedule());
    const Tensor pixels = model.decode(r.latent);
    std::vector<std::string> artifacts{"latent.fft1"};
    write_fft1(out / "latent.fft1", r.latent);
    const std::size_t frame_numel = pixels.numel() / pixels.extent(0);
    const Shape frame_shape{pixels.extent(1), pixels.extent(2), pixels.extent(3)};
    for (std::size_t f = 0; f < pixels.extent(0); ++f) {
        char name[64];
        std::snprintf(name, sizeof name, "frames/frame_%05zu.ppm", f);
        const auto begin = pixels.data().begin() + std::ptrdiff_t(f * frame_numel);
        write_ppm(out / name, Tensor(frame_shape, std::vector<float>(begin, begin + std::ptrdiff_t(frame_numel))));
        artifacts.push_back(name);
    }

    json config = to_json(cfg);
    config["prompt_seed"] = a.prompt_seed;
    config["condition_frames"] = a.condition_frames;
    config["unconditional"] = a.unconditional;
    const json results = {{"total_frames", r.total_frames},
                          {"naive_frames", r.naive_frames},
                          {"frame_count_law", stitched_frame_count(cfg.rounds, cfg.frames, cfg.overlap)},
                          {"prompt", prompt_json(prompt)},
                          {"consistency_lite", pixels.extent(0) > 1 ? json(consistency_score(pixels)) : json(nullptr)}};
    write_manifest(out, "sample", config, cfg.seed, ckpt_hash, artifacts, results);
    std::cout << json({{"total_frames", r.total_frames}, {"naive_frames", r.naive_frames}}).dump() << "\n";
    return 0;
}

// ------------------------------------------------------------- drift-probe

struct DriftArgs {
    std::string out_dir, config, checkpoint;
    std::vector<double> r_values{0.0, 0.7};
    std::uint64_t prompt_seed = 1;
    std::size_t condition_frames = 1;
    Overrides overrides;
};

int run_drift(const DriftArgs& a) {
    KeyValues kv = load_config(a.config);
    if (!kv.count("rounds")) kv["rounds"] = "8";
    const SamplerConfig cfg = sampler_config_from(a.overrides.apply(kv));
    for (double r : a.r_values)
        if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("drift-probe: r values must lie in [0, 1]");
    const fs::path out(a.out_dir);
    fs::create_directories(out);
    const std::string ckpt_hash = checkpoint_hash(a.checkpoint);
    const FlexiModel model = load_checkpoint(a.checkpoint);
    const Prompt prompt = make_prompt(model, a.prompt_seed, a.condition_frames, false);
    const auto rows = drift_probe(model, prompt.cond, cfg, a.r_values, default_schedule());
    std::ostringstream csv;
    write_drift_csv(csv, rows);
    write_text(out / "drift.csv", csv.str());

    json metrics = json::array();
    for (double r : a.r_values) {
        double first = 0.0, last = 0.0;
        for (const auto& row : rows) {
            if (row.r != r) continue;
            if (row.round == 1) first = row.mean_intensity;
            if (row.round == cfg.rounds) last = row.mean_intensity;
        }
        metrics.push_back({{"r", r}, {"max_std_deviation", drift_metric(rows, r)}, {"intensity_shift", std::abs(last - first)}});
    }
    json config = to_json(cfg);
    config["r_values"] = a.r_values;
    config["prompt_seed"] = a.prompt_seed;
    config["condition_frames"] = a.condition_frames;
    write_manifest(out, "drift-probe", config, cfg.seed, ckpt_hash, {"drift.csv"}, {{"drift", metrics}});
    std::cout << metrics.dump() << "\n";
    return 0;
}

// -------------------------------------------------------- analyze-schedule

struct ScheduleArgs {
    std::string out_dir;
    std::size_t steps = 1000;
    double beta_start = kDefaultBetaStart, beta_end = kDefaultBetaEnd;
    bool rescale = false;
};

int run_schedule(const ScheduleArgs& a) {
    NoiseSchedule s = make_linear_schedule(a.steps, a.beta_start, a.beta_end);
    if (a.rescale) s = rescale_zero_terminal_snr(s);
    const SnrReport report = snr_report(s);
    const fs::path out(a.out_dir);
    fs::create_directories(out);
    std::ostringstream csv;
    write_snr_csv(csv, report);
    write_text(out / "snr.csv", csv.str());
    const json summary = {{"terminal_snr", report.terminal_snr},
                          {"terminal_alpha_bar", s.alpha_bar.back()},
                          {"flagged", report.flagged}};
    write_json(out / "summary.json", summary);
    const json config = {{"steps", a.steps}, {"beta_start", a.beta_start}, {"beta_end", a.beta_end}, {"rescale", a.rescale}};
    write_manifest(out, "analyze-schedule", config, 0, "", {"snr.csv", "summary.json"}, summary);
    std::cout << summary.dump() << "\n";
    return 0;
}

// ------------------------------------------------------------ oracle-check

struct OracleArgs {
    std::string out_dir;
    std::uint64_t seed = 1;
    float mean = 0.5f, variance = 2.0f;
    std::size_t samples = 10000, steps = 50;
    bool rescale = false;
};

int run_oracle(const OracleArgs& a) {
    NoiseSchedule s = default_schedule();
    if (a.rescale) s = rescale_zero_terminal_snr(s);
    const OracleReport r = oracle_sample_check(a.mean, a.variance, s, a.steps, a.samples, a.seed);
    const json report = {{"samples", r.samples},
                         {"steps", r.steps},
                         {"target_mean", r.target_mean},
                         {"target_variance", r.target_variance},
                         {"sample_mean", r.sample_mean},
                         {"sample_variance", r.sample_variance},
                         {"mean_error", r.mean_error()},
                         {"variance_rel_error", r.variance_rel_error()},
                         {"terminal_alpha_bar", s.alpha_bar.back()}};
    if (!a.out_dir.empty()) {
        const fs::path out(a.out_dir);
        fs::create_directories(out);
        write_json(out / "report.json", report);
        const json config = {{"mean", a.mean}, {"variance", a.variance}, {"samples", a.samples},
                             {"steps", a.steps}, {"rescale", a.rescale}, {"seed", a.seed}};
        write_manifest(out, "oracle-check", config, a.seed, "", {"report.json"}, report);
    }
    std::cout << report.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string input, ref, ref_set, out_dir;
    std::size_t window = 8;
    double peak = kDefaultPeak;
};

int run_evaluate(const EvaluateArgs& a) {
    const Tensor video = read_video(a.input);
    json metrics;
    metrics["frames"] = video.extent(0);
    metrics["consistency_lite"] = consistency_score(video);
    if (!a.ref.empty()) {
        const Tensor ref = read_video(a.ref);
        metrics["psnr_vs_ref"] = video_psnr(video, ref, a.peak);
        metrics["ssim_vs_ref"] = video_ssim(video, ref, a.peak);
    }
    if (!a.ref_set.empty()) {
        const auto gen = to_matrix(windowed_video_features(video, a.window));
        const auto ref = to_matrix(windowed_video_features(read_video(a.ref_set), a.window));
        const FrechetResult f = frechet_lite(gen, ref);
        metrics["fvd_lite"] = f.distance;
        metrics["fvd_lite_regularized"] = f.regularized;
    }
    metrics["feature_extractor"] = "consistency-lite: fixed random-projection conv features";
    if (!a.out_dir.empty()) {
        const fs::path out(a.out_dir);
        fs::create_directories(out);
        write_json(out / "metrics.json", metrics);
        json config = {{"window", a.window}, {"peak", a.peak}, {"input_hash", tensor_hash(video)}};
        write_manifest(out, "evaluate", config, 0, "", {"metrics.json"}, metrics);
    }
    std::cout << metrics.dump(2) << "\n";
    return 0;
}

void add_sampler_flags(CLI::App* app, Overrides& o) {
    o.option(app, "--steps", "steps", "DDIM substeps");
    o.option(app, "--cfg-scale", "cfg_scale", "classifier-free guidance scale s");
    o.option(app, "--resample-scale", "resample_scale", "std resampling scale r in [0,1]");
    o.toggle(app, "--resample-per-step", "resample_per_step", "resample at every step (false: once at the end)");
    o.option(app, "--rounds", "rounds", "number of rounds m");
    o.option(app, "--frames-per-round", "frames_per_round", "latent frames per round f");
    o.option(app, "--overlap", "overlap", "overlapping frames n_o between rounds");
    o.toggle(app, "--init-overlap-noise", "init_overlap_noise", "start overlap frames from noised condition frames");
    o.option(app, "--seed", "seed", "sampling seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flexifilm: toy long-video diffusion with frame conditioning"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "render a synthetic moving-shape dataset");
    gen_cmd->add_option("--out-dir", gen.out_dir, "output directory")->required();
    gen_cmd->add_option("--clips", gen.clips, "number of clips")->capture_default_str();
    gen_cmd->add_option("--frames", gen.frames, "frames per clip")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "dataset seed")->capture_default_str();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "co-train the temporal modules (optionally after a base phase)");
    train_cmd->add_option("--out-dir", tr.out_dir, "output directory")->required();
    train_cmd->add_option("--config", tr.config, "key=value config file; flags override it")->check(CLI::ExistingFile);
    train_cmd->add_option("--data", tr.data, "dataset directory from gen-data")->check(CLI::ExistingDirectory);
    train_cmd->add_option("--clips", tr.clips, "clips to generate when --data is absent")->capture_default_str();
    train_cmd->add_option("--init", tr.init, "start from this checkpoint directory")->check(CLI::ExistingDirectory);
    train_cmd->add_flag("--no-temporal", tr.no_temporal, "disable the denoiser temporal blocks");
    train_cmd->add_option("--log-every", tr.log_every, "print loss to stderr every N steps (0: quiet)");
    tr.overrides.option(train_cmd, "--p", "p", "unconditional probability");
    tr.overrides.option(train_cmd, "--n-c-min", "n_c_min", "minimum condition frames");
    tr.overrides.option(train_cmd, "--n-c-max", "n_c_max", "maximum condition frames");
    tr.overrides.option(train_cmd, "--n-g", "n_g", "frames per training clip");
    tr.overrides.option(train_cmd, "--steps", "steps", "co-training steps");
    tr.overrides.option(train_cmd, "--base-steps", "base_steps", "all-parameter steps before co-training");
    tr.overrides.option(train_cmd, "--lr", "lr", "Adam learning rate");
    tr.overrides.option(train_cmd, "--batch", "batch", "clips per step");
    tr.overrides.option(train_cmd, "--seed", "seed", "training seed");
    tr.overrides.option(train_cmd, "--cfg-scale", "cfg_scale", "sampler default recorded with the run");
    tr.overrides.option(train_cmd, "--resample-scale", "resample_scale", "sampler default recorded with the run");

    SampleArgs sa;
    auto* sample_cmd = app.add_subcommand("sample", "generate a (multi-round) video from a checkpoint");
    sample_cmd->add_option("--checkpoint", sa.checkpoint, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
    sample_cmd->add_option("--out-dir", sa.out_dir, "output directory")->required();
    sample_cmd->add_option("--config", sa.config, "key=value config file; flags override it")->check(CLI::ExistingFile);
    sample_cmd->add_option("--prompt-seed", sa.prompt_seed, "seed of the synthetic prompt scene")->capture_default_str();
    sample_cmd->add_option("--condition-frames", sa.condition_frames, "condition frames for round 1")->capture_default_str();
    sample_cmd->add_flag("--unconditional", sa.unconditional, "sample round 1 without caption or frames");
    add_sampler_flags(sample_cmd, sa.overrides);

    DriftArgs dr;
    auto* drift_cmd = app.add_subcommand("drift-probe", "per-round latent std and intensity across r values");
    drift_cmd->add_option("--checkpoint", dr.checkpoint, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
    drift_cmd->add_option("--out-dir", dr.out_dir, "output directory")->required();
    drift_cmd->add_option("--config", dr.config, "key=value config file; flags override it")->check(CLI::ExistingFile);
    drift_cmd->add_option("--r-values", dr.r_values, "resampling scales to compare")->delimiter(',')->capture_default_str();
    drift_cmd->add_option("--prompt-seed", dr.prompt_seed, "seed of the synthetic prompt scene")->capture_default_str();
    drift_cmd->add_option("--condition-frames", dr.condition_frames, "condition frames for round 1")->capture_default_str();
    add_sampler_flags(drift_cmd, dr.overrides);

    ScheduleArgs sc;
    auto* sched_cmd = app.add_subcommand("analyze-schedule", "SNR table and terminal-SNR check");
    sched_cmd->add_option("--out-dir", sc.out_dir, "output directory")->required();
    sched_cmd->add_option("--train-steps", sc.steps, "timeline length T")->capture_default_str();
    sched_cmd->add_option("--beta-start", sc.beta_start, "first beta")->capture_default_str();
    sched_cmd->add_option("--beta-end", sc.beta_end, "last beta")->capture_default_str();
    sched_cmd->add_flag("--rescale", sc.rescale, "rescale to zero terminal SNR first");

    OracleArgs orc;
    auto* oracle_cmd = app.add_subcommand("oracle-check", "DDIM transport with the exact Gaussian predictor");
    oracle_cmd->add_option("--seed", orc.seed, "noise seed")->capture_default_str();
    oracle_cmd->add_option("--mean", orc.mean, "target mean")->capture_default_str();
    oracle_cmd->add_option("--variance", orc.variance, "target variance")->capture_default_str();
    oracle_cmd->add_option("--samples", orc.samples, "independent draws")->capture_default_str();
    oracle_cmd->add_option("--steps", orc.steps, "DDIM substeps")->capture_default_str();
    oracle_cmd->add_flag("--rescale", orc.rescale, "use the zero-terminal-SNR schedule");
    oracle_cmd->add_option("--out-dir", orc.out_dir, "also write report.json and a manifest here");

    EvaluateArgs ev;
    auto* eval_cmd = app.add_subcommand("evaluate", "consistency-lite, PSNR/SSIM and fvd-lite for a video");
    eval_cmd->add_option("--input", ev.input, "FFT1 video or directory of PPM frames")->required()->check(CLI::ExistingPath);
    eval_cmd->add_option("--ref", ev.ref, "reference video for PSNR/SSIM")->check(CLI::ExistingPath);
    eval_cmd->add_option("--ref-set", ev.ref_set, "reference video for fvd-lite")->check(CLI::ExistingPath);
    eval_cmd->add_option("--window", ev.window, "fvd-lite window length")->capture_default_str();
    eval_cmd->add_option("--peak", ev.peak, "signal peak for PSNR/SSIM")->capture_default_str();
    eval_cmd->add_option("--out-dir", ev.out_dir, "also write metrics.json and a manifest here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (*gen_cmd) return run_gen_data(gen);
        if (*train_cmd) return run_train(tr);
        if (*sample_cmd) return run_sample(sa);
        if (*drift_cmd) return run_drift(dr);
        if (*sched_cmd) return run_schedule(sc);
        if (*oracle_cmd) return run_oracle(orc);
        if (*eval_cmd) return run_evaluate(ev);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cerr << app.help();
    return 1;
}
