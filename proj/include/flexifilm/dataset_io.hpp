#ifndef FLEXIFILM_DATASET_IO_HPP
#define FLEXIFILM_DATASET_IO_HPP

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "flexifilm/checkpoint.hpp"
#include "flexifilm/synthdata.hpp"

// dataset.json holds every scene spec and render seed, so clips can be
// re-rendered bit-identically without reading the FFT1 dumps.

namespace flexifilm {

inline nlohmann::json to_json(const SceneSpec& s) {
    return {{"shape", s.shape == ShapeKind::kCircle ? "circle" : "square"},
            {"color", s.color},
            {"vx", s.vx},
            {"vy", s.vy},
            {"x0", s.x0},
            {"y0", s.y0},
            {"radius", s.radius},
            {"background", s.background},
            {"frames", s.frames},
            {"size", s.size}};
}

inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
    SceneSpec s;
    const std::string shape = j.at("shape");
    if (shape != "circle" && shape != "square") throw IoError("dataset: unknown shape '" + shape + "'");
    s.shape = shape == "circle" ? ShapeKind::kCircle : ShapeKind::kSquare;
    s.color = j.at("color");
    s.vx = j.at("vx");
    s.vy = j.at("vy");
    s.x0 = j.at("x0");
    s.y0 = j.at("y0");
    s.radius = j.at("radius");
    s.background = j.at("background");
    s.frames = j.at("frames");
    s.size = j.at("size");
    s.validate();
    return s;
}

inline nlohmann::json to_json(const Dataset& d) {
    nlohmann::json clips = nlohmann::json::array();
    for (std::size_t i = 0; i < d.size(); ++i) clips.push_back({{"spec", to_json(d.specs[i])}, {"seed", d.seeds[i]}});
    return {{"clips", clips}, {"train", d.train}, {"eval", d.eval}};
}

inline Dataset dataset_from_json(const nlohmann::json& j) {
    Dataset d;
    try {
        for (const auto& c : j.at("clips")) {
            d.specs.push_back(scene_spec_from_json(c.at("spec")));
            d.seeds.push_back(c.at("seed"));
        }
        d.train = j.at("train").get<std::vector<std::size_t>>();
        d.eval = j.at("eval").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("dataset: malformed description: ") + e.what());
    }
    for (auto i : d.train)
        if (i >= d.size()) throw IoError("dataset: split index out of range");
    for (auto i : d.eval)
        if (i >= d.size()) throw IoError("dataset: split index out of range");
    return d;
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
    try {
        return dataset_from_json(nlohmann::json::parse(read_file_bytes(dir / "dataset.json")));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("dataset: unreadable dataset.json: ") + e.what());
    }
}

}  // namespace flexifilm

#endif
