#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lipmrac {

// splitmix64; used to derive independent per-trial and per-purpose seeds
// from a single master seed so parallel ensembles stay reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t state = master ^ (0x517cc1b727220a95ULL * (stream + 1));
    return splitmix64(state);
}

// Uniform in [0, 1). mt19937_64 is fully specified by the standard;
// std::uniform_real_distribution is not, so we map the raw bits ourselves.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on the deterministic uniform above.
inline double standard_normal(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) {
        u1 = uniform01(rng);
    }
    const double u2 = uniform01(rng);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace lipmrac
