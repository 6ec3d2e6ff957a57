#pragma once

#include <cstdint>
#include <random>

namespace wospp {

// Seeded generator with implementation-independent value mappings, so traces replay
// identically across standard libraries. Each simulation derives independent streams
// (layout, one per signal layer) from a single 64-bit seed.
class Rng {
public:
    Rng() : Rng(0, 0) {}
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform01();
    // Uniform integer in [lo, hi], unbiased.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    // Standard normal deviate (Box-Muller, one value per call).
    double normal();
    bool bernoulli(double p) { return uniform01() < p; }

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace wospp
