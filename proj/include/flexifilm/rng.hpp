#ifndef FLEXIFILM_RNG_HPP
#define FLEXIFILM_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include "flexifilm/tensor.hpp"

namespace flexifilm {

// splitmix64 finaliser, used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Explicit-state generator. Same seed and same call sequence give the same
/// stream; there is no global instance.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    // Independent generator for a named component, a pure function of (seed, tag).
    Rng derive(std::string_view tag) const { return Rng(mix64(seed_ ^ hash_tag(tag))); }
    Rng derive(std::uint64_t index) const { return Rng(mix64(seed_ + mix64(index + 1))); }

    std::uint64_t next_u64() { return engine_(); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
    bool bernoulli(double p) { return uniform() < p; }
    double normal() { return normal_(engine_); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

template <class T = float>
BasicTensor<T> randn(Rng& rng, const Shape& shape) {
    require_positive_extents(shape);
    BasicTensor<T> out(shape);
    for (auto& v : out.mutable_data()) v = static_cast<T>(rng.normal());
    return out;
}

template <class T = float>
BasicTensor<T> rand_uniform(Rng& rng, const Shape& shape, double lo, double hi) {
    require_positive_extents(shape);
    BasicTensor<T> out(shape);
    for (auto& v : out.mutable_data()) v = static_cast<T>(rng.uniform(lo, hi));
    return out;
}

}  // namespace flexifilm

#endif
