#pragma once

// Reproducible random-number substrate. A SeedStream is a counter-based
// generator keyed by (root seed, derivation path): output i is a hash of
// (key, i), and child streams rehash the key in a separate domain, so any
// task can derive its own stream and results never depend on scheduling.

#include <cstdint>
#include <span>
#include <vector>

namespace crc::rng {

inline constexpr std::uint64_t kDefaultSeed = 7;

/// 64-bit avalanche finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

/// Deterministic child-seed derivation for callers that store plain seeds.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept {
    return mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + 0x9e3779b97f4a7c15ULL * (key + 1));
}

class SeedStream {
public:
    explicit SeedStream(std::uint64_t root_seed) noexcept
        : key_(mix64(root_seed ^ 0xbb67ae8584caa73bULL)) {}

    /// Stream with an independent sequence; identical (root, path) pairs give
    /// identical sequences regardless of what the parent has produced.
    SeedStream child(std::uint64_t path_key) const noexcept {
        SeedStream s(*this);
        s.key_ = mix64(mix64(key_ ^ 0x3c6ef372fe94f82bULL) +
                       0x9e3779b97f4a7c15ULL * (path_key + 1));
        s.counter_ = 0;
        return s;
    }

    std::uint64_t next_u64() noexcept {
        return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
    }

    /// Uniform on the open interval (0,1).
    double uniform01() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool bernoulli(double p) noexcept { return uniform01() < p; }

    /// Unbiased uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Standard normal (Box-Muller).
    double normal() noexcept;

    /// Gamma(shape, scale=1) via the squeeze-accept method; shapes below 1
    /// are boosted through Gamma(shape+1) * U^{1/shape}.
    double gamma(double shape);

    double beta(double a, double b);

    /// Normalized independent gamma variates; sums to 1.
    std::vector<double> dirichlet(std::span<const double> concentrations);

    /// Uniform sample of `sample_size` distinct indices from
    /// {0, ..., population_size-1}.
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t population_size,
                                                          std::uint32_t sample_size);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace crc::rng
