#ifndef FLEXIFILM_CONFIG_HPP
#define FLEXIFILM_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>

#include "flexifilm/error.hpp"

// Flat key=value config files. '#' starts a comment; blank lines are skipped.

namespace flexifilm {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline KeyValues parse_key_values(std::istream& is) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path.string());
    return parse_key_values(is);
}

/// Pulls typed values out of a KeyValues map and rejects leftovers.
class KeyReader {
public:
    explicit KeyReader(const KeyValues& kv) : kv_(kv) {}

    template <class T>
    void get(const std::string& key, T& out) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        seen_.insert(key);
        out = convert<T>(key, it->second);
    }

    void finish() const {
        for (const auto& [k, v] : kv_)
            if (!seen_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }

private:
    template <class T>
    static T convert(const std::string& key, const std::string& v) {
        if constexpr (std::is_same_v<T, bool>) {
            if (v == "true" || v == "1") return true;
            if (v == "false" || v == "0") return false;
            throw ConfigError("config key '" + key + "': expected true/false");
        } else if constexpr (std::is_same_v<T, std::string>) {
            return v;
        } else if constexpr (std::is_floating_point_v<T>) {
            try {
                std::size_t used = 0;
                const double d = std::stod(v, &used);
                if (used != v.size()) throw ConfigError("");
                return T(d);
            } catch (const std::exception&) {
                throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
            }
        } else {
            T out{};
            const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc() || ptr != v.data() + v.size()) {
                throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
            }
            return out;
        }
    }

    const KeyValues& kv_;
    std::set<std::string> seen_;
};

}  // namespace flexifilm

#endif
