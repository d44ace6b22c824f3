#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace intenreg {

// splitmix64 step; advances x and returns the next output.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Combines a base seed with a stream index into a new seed. Used to give
// subjects/pairs/attempts independent deterministic streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ull;
    std::uint64_t a = splitmix64(x);
    x = a ^ (stream + 0xbf58476d1ce4e5b9ull);
    return splitmix64(x);
}

// xoshiro256++ seeded through splitmix64. The algorithm is pinned so that
// corpora, training runs and experiments reproduce bit-identically across
// platforms; std:: distributions are implementation-defined and never used.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1), 53-bit mantissa.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0,n). Modulo bias is < n/2^64, irrelevant here,
    // and keeps the draw sequence trivially portable.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Box-Muller, two uniforms per draw, no cached spare.
    double normal() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi_v<double> * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> state_;
};

}  // namespace intenreg
