#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace uc3rl {

/// Counter-based pseudo random stream.
///
/// Output number k of a stream with seed s is mix(s + k * golden_gamma), so the
/// whole state is the pair (seed, counter). The mixing function is the
/// SplitMix64 finalizer; all derived draws (uniform reals, indices, Dirichlet
/// rows) use fixed arithmetic mappings rather than <random> distributions,
/// whose outputs differ between standard library implementations.
class Rng {
public:
    static constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

    constexpr explicit Rng(std::uint64_t seed = 0, std::uint64_t counter = 0) noexcept
        : seed_(seed), counter_(counter) {}

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    constexpr std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix(seed_ + counter_ * golden_gamma);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n), n > 0 (multiply-high reduction).
    std::size_t index(std::size_t n) noexcept {
        const auto wide = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::size_t>(wide >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Unit-rate exponential variate.
    double exponential() noexcept { return -std::log1p(-uniform()); }

    /// Symmetric Dirichlet(1) vector of the given length (normalized exponentials).
    std::vector<double> dirichlet_uniform(std::size_t n) {
        std::vector<double> out(n);
        double total = 0.0;
        for (auto& x : out) {
            x = exponential();
            total += x;
        }
        if (total <= 0.0) {
            for (auto& x : out) x = 1.0 / static_cast<double>(n);
            return out;
        }
        for (auto& x : out) x /= total;
        return out;
    }

    /// Independent child stream; deterministic in (seed, stream id), not in counter.
    [[nodiscard]] constexpr Rng split(std::uint64_t stream) const noexcept {
        return Rng(mix(seed_ ^ mix(stream + golden_gamma)), 0);
    }

    constexpr std::uint64_t seed() const noexcept { return seed_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

    friend constexpr bool operator==(const Rng&, const Rng&) = default;

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

/// Inverse-CDF draw from a finite distribution. Falls back to the last index
/// with positive mass when rounding leaves the cumulative sum below u.
inline std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) last_positive = i;
        cumulative += probs[i];
        if (u < cumulative) return i;
    }
    return last_positive;
}

}  // namespace uc3rl
