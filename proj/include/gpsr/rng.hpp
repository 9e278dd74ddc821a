#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gpsr {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed of the substream (a, b) of a run seeded with `seed`. Work items that
// draw from their own substream give the same results in any schedule.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
    return Rng(substream_seed(seed, a, b));
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

// Scales v back onto the closed l2 ball of the given radius if it lies outside.
inline void project_to_ball(std::span<double> v, double radius) {
    const double n = norm2(v);
    if (n > radius && n > 0.0) {
        const double k = radius / n;
        for (double& x : v) x *= k;
        // Rounding can leave the norm a hair above the radius.
        while (norm2(v) > radius) {
            for (double& x : v) x = std::nextafter(x, 0.0);
        }
    }
}

// Uniform draw from the l2 ball {v : |v| <= radius} in dimension p.
inline std::vector<double> sample_in_ball(Rng& rng, std::size_t p, double radius) {
    std::vector<double> v(p);
    if (p == 0 || radius <= 0.0) return v;
    std::normal_distribution<double> gauss(0.0, 1.0);
    double n = 0.0;
    do {
        for (double& x : v) x = gauss(rng);
        n = norm2(v);
    } while (n == 0.0);
    const double r = radius * std::pow(uniform(rng, 0.0, 1.0), 1.0 / static_cast<double>(p));
    for (double& x : v) x *= r / n;
    project_to_ball(v, radius);
    return v;
}

}  // namespace gpsr
