#include "anchorcrc/rng.hpp"

#include "anchorcrc/model.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace crc::rng {

std::uint64_t SeedStream::below(std::uint64_t bound) noexcept {
    // Lemire's multiply-shift rejection sampler.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (lo < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * bound;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double SeedStream::normal() noexcept {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

double SeedStream::gamma(double shape) {
    if (!(shape > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "gamma shape must be positive");
    }
    if (shape < 1.0) {
        const double boosted = gamma(shape + 1.0);
        return boosted * std::pow(uniform01(), 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze-accept.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d - d * v + d * std::log(v)) return d * v;
    }
}

double SeedStream::beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
}

std::vector<double> SeedStream::dirichlet(std::span<const double> concentrations) {
    std::vector<double> draw(concentrations.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < concentrations.size(); ++i) {
        draw[i] = gamma(concentrations[i]);
        sum += draw[i];
    }
    for (double& v : draw) v /= sum;
    return draw;
}

std::vector<std::uint32_t> SeedStream::sample_without_replacement(
    std::uint32_t population_size, std::uint32_t sample_size) {
    if (sample_size > population_size) {
        throw Error(ErrorCode::InvalidSize,
                    "sample size exceeds population size");
    }
    std::vector<std::uint32_t> pool(population_size);
    std::iota(pool.begin(), pool.end(), 0u);
    // Partial Fisher-Yates: the first sample_size slots become the sample.
    for (std::uint32_t i = 0; i < sample_size; ++i) {
        const auto j = i + static_cast<std::uint32_t>(below(population_size - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(sample_size);
    return pool;
}

} // namespace crc::rng
