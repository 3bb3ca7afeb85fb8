#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace tmf {

/// Deterministic random stream: xoshiro256** seeded through SplitMix64,
/// with in-house draw helpers. The standard <random> distributions are
/// implementation-defined, which would break the digest-identical
/// reproducibility contract, so nothing here touches them.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t z = seed;
        for (auto& word : state_) {
            z += 0x9e3779b97f4a7c15ull;
            std::uint64_t x = z;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
            word = x ^ (x >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Unbiased integer in [0, bound). bound must be nonzero.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (true) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Standard normal via Box-Muller; caches the paired draw.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] so the log is finite.
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Fisher-Yates shuffle using this stream.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    /// First `count` entries of a Fisher-Yates pass over [0, n): a uniform
    /// sample of `count` distinct indices.
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t count) {
        std::vector<std::uint32_t> pool(n);
        for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
        for (std::uint32_t i = 0; i < count; ++i) {
            const std::uint32_t j = i + static_cast<std::uint32_t>(uniform_below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(count);
        return pool;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace tmf
