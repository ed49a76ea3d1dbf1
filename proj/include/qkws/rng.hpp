#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace qkws::rng {

// All randomness flows through mt19937_64 plus the explicit transforms below.
// The standard pins the engine but not the distributions, so hand-rolled
// transforms keep runs identical across standard libraries and machines.
using Engine = std::mt19937_64;

// Uniform in [0, 1) with 53-bit resolution.
inline double uniform01(Engine& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

// Standard normal via Box-Muller; one draw per call.
inline double normal(Engine& g) {
    double u1 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.28318530717958647692 * u2);
}

// Bounded draw in [0, n); multiply-shift keeps bias negligible for n << 2^64.
inline std::uint64_t below(Engine& g, std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(g()) * n) >> 64);
}

// Fisher-Yates with the pinned bounded draw.
template <class T>
void shuffle(std::vector<T>& v, Engine& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[below(g, i)]);
    }
}

// Stable seed derivation for sub-streams (per-epoch shuffles etc.).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

} // namespace qkws::rng
