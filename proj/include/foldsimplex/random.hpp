#pragma once

#include <cstdint>
#include <random>

#include "foldsimplex/geometry.hpp"

namespace foldsimplex {

using Rng = std::mt19937_64;

/// Independent stream seed for work unit `stream` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finaliser over the combined words
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline void fill_standard_normal(Rng& rng, Vector& out) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out[i] = normal(rng);
    }
}

} // namespace foldsimplex
