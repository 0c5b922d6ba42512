#ifndef FLEXIFILM_CHECKPOINT_HPP
#define FLEXIFILM_CHECKPOINT_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

#include "flexifilm/io.hpp"
#include "flexifilm/model.hpp"

// Checkpoint directory layout:
//   manifest.json          model config + one entry per parameter
//   params/NNNN.fft1       parameter tensors in registry order

namespace flexifilm {

inline nlohmann::json to_json(const ModelConfig& c) {
    return {{"image_size", c.image_size},
            {"channels", c.channels},
            {"codec_patch", c.codec_patch},
            {"token_patch", c.token_patch},
            {"dim", c.dim},
            {"ip_queries", c.ip_queries},
            {"vocab", c.vocab},
            {"spatial_blocks", c.spatial_blocks},
            {"temporal_blocks", c.temporal_blocks},
            {"projector_temporal_layers", c.projector_temporal_layers},
            {"train_steps", c.train_steps},
            {"temporal_enabled", c.temporal_enabled},
            {"seed", c.seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
        c.image_size = j.at("image_size");
        c.channels = j.at("channels");
        c.codec_patch = j.at("codec_patch");
        c.token_patch = j.at("token_patch");
        c.dim = j.at("dim");
        c.ip_queries = j.at("ip_queries");
        c.vocab = j.at("vocab");
        c.spatial_blocks = j.at("spatial_blocks");
        c.temporal_blocks = j.at("temporal_blocks");
        c.projector_temporal_layers = j.at("projector_temporal_layers");
        c.train_steps = j.at("train_steps");
        c.temporal_enabled = j.at("temporal_enabled");
        c.seed = j.at("seed");
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint: bad model config: ") + e.what());
    }
    return c;
}

inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Hash of the manifest and every parameter file, in manifest order.
inline std::string checkpoint_hash(const std::filesystem::path& dir) {
    const std::string manifest = read_file_bytes(dir / "manifest.json");
    std::uint64_t h = fnv1a(manifest);
    const nlohmann::json parsed = nlohmann::json::parse(manifest);
    for (const auto& p : parsed.at("params")) {
        h = fnv1a(read_file_bytes(dir / p.at("file").get<std::string>()), h);
    }
    return hex64(h);
}

inline std::string save_checkpoint(const std::filesystem::path& dir, const FlexiModel& model) {
    std::filesystem::create_directories(dir / "params");
    nlohmann::json manifest;
    manifest["format"] = "flexifilm-checkpoint";
    manifest["version"] = 1;
    manifest["model"] = to_json(model.config());
    manifest["params"] = nlohmann::json::array();
    const auto& params = model.registry().params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "params/%04zu.fft1", i);
        write_fft1(dir / name, params[i].value);
        manifest["params"].push_back({{"name", params[i].name},
                                      {"shape", params[i].value.shape()},
                                      {"group", group_label(params[i].group)},
                                      {"file", name}});
    }
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << "\n";
    if (!os) throw IoError("checkpoint: cannot write manifest in " + dir.string());
    os.close();
    return checkpoint_hash(dir);
}

/// Rebuilds the model from its recorded config and overwrites every
/// parameter; names, shapes and groups must match the rebuilt registry.
inline FlexiModel load_checkpoint(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file_bytes(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint: unreadable manifest: ") + e.what());
    }
    if (manifest.value("format", "") != "flexifilm-checkpoint") throw IoError("checkpoint: wrong format tag");
    FlexiModel model(model_config_from_json(manifest.at("model")));
    auto& params = model.registry().params();
    const auto& entries = manifest.at("params");
    if (entries.size() != params.size()) throw IoError("checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& e = entries[i];
        if (e.at("name").get<std::string>() != params[i].name) throw IoError("checkpoint: parameter order mismatch at " + params[i].name);
        if (parse_group_label(e.at("group").get<std::string>()) != params[i].group) {
            throw IoError("checkpoint: group mismatch for " + params[i].name);
        }
        const Tensor t = read_fft1(dir / e.at("file").get<std::string>());
        if (t.shape() != params[i].value.shape()) throw IoError("checkpoint: shape mismatch for " + params[i].name);
        std::ranges::copy(t.data(), params[i].value.mutable_data().begin());
    }
    return model;
}

}  // namespace flexifilm

#endif
