#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace evospring {

// xoshiro256++ with splitmix64 seeding. The standard library distributions are
// implementation-defined, so all sampling (uniform, normal, bernoulli) is done
// here to keep runs bit-reproducible across platforms and library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t h = seed;
        for (auto& word : state_) word = splitmix64(h);
    }

    // Derives an independent stream from (seed, path...). Used for per-robot
    // and per-generation streams so results do not depend on thread schedule.
    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t h = seed;
        for (std::uint64_t elem : path) {
            h ^= elem + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h = mix(h);
        }
        return Rng(h);
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

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Unbiased integer in [0, n); n must be >= 1.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t u = next_u64();
        while (u > limit) u = next_u64();
        return u % n;
    }

    // Standard normal via Box-Muller; one draw per pair, no cached spare.
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t splitmix64(std::uint64_t& s) {
        s += 0x9e3779b97f4a7c15ULL;
        return mix(s);
    }

    std::uint64_t state_[4];
};

// Stream tags for derived RNG streams; fixed values are part of the
// reproducibility contract (checkpointed runs must resume identically).
namespace rng_tag {
inline constexpr std::uint64_t genome = 1;
inline constexpr std::uint64_t train = 2;
inline constexpr std::uint64_t variation = 3;
inline constexpr std::uint64_t terrain = 4;
} // namespace rng_tag

} // namespace evospring
