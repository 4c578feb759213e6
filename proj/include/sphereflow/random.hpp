#pragma once

#include <cstdint>
#include <random>

namespace sphereflow {

using Rng = std::mt19937_64;

/// Independent stream for parallel or per-purpose generation: seed + stream.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(seed + stream); }

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace sphereflow
