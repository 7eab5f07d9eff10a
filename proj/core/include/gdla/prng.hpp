#pragma once

#include <cstdint>

#include "gdla/tensor.hpp"

namespace gdla {

// SplitMix64; also the seeding stream for Xoshiro256ss below.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256**. State is seeded from four successive SplitMix64 outputs so a
// single 64-bit seed fully determines the stream.
class Xoshiro256ss {
public:
    explicit Xoshiro256ss(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0, 1), 53 mantissa bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller, pair cached: u1 = 1 - uniform01() in (0,1], u2 = uniform01();
    // returns r*cos(2*pi*u2) then r*sin(2*pi*u2) with r = sqrt(-2*ln(u1)).
    double gaussian();

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// N(0,1) entries drawn in row-major order.
Tensor random_gaussian(std::vector<std::size_t> dims, Xoshiro256ss& rng);

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; fan_in is the input width
// (first extent for matrices).
Tensor random_fanin(std::vector<std::size_t> dims, std::size_t fan_in,
                    Xoshiro256ss& rng);

}  // namespace gdla
