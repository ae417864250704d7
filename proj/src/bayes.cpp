#include "anchorcrc/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace crc {

namespace {

constexpr std::uint64_t kDrawDomain = 0xd1a;

std::array<double, 9> posterior_concentrations(const CellCounts& cells) {
    std::array<double, 9> conc{};
    for (std::size_t j = 0; j < 9; ++j) {
        conc[j] = static_cast<double>(cells.n[j]) + 0.5;
    }
    return conc;
}

} // namespace

const char* to_string(IntervalSource source) noexcept {
    switch (source) {
        case IntervalSource::CrcScaleShift: return "crc_scale_shift";
        case IntervalSource::RsComparator: return "rs_comparator";
        case IntervalSource::NarrowerOf: return "narrower_of";
    }
    return "unknown";
}

double CredibleInterval::width() const noexcept {
    if (failed()) return std::numeric_limits<double>::infinity();
    return upper - lower;
}

bool CredibleInterval::failed() const noexcept {
    return std::isnan(lower) || std::isnan(upper);
}

CredibleInterval CredibleInterval::failure(IntervalSource source) noexcept {
    CredibleInterval ci;
    ci.lower = std::numeric_limits<double>::quiet_NaN();
    ci.upper = std::numeric_limits<double>::quiet_NaN();
    ci.source = source;
    return ci;
}

std::vector<std::vector<double>> sample_dirichlet_posterior(const ValidatedData& data,
                                                            std::size_t n_draws,
                                                            rng::SeedStream stream) {
    if (n_draws < 100) {
        throw Error(ErrorCode::InvalidArgument,
                    "posterior sampling needs at least 100 draws");
    }
    const auto conc = posterior_concentrations(data.cells());
    std::vector<std::vector<double>> draws;
    draws.reserve(n_draws);
    for (std::size_t s = 0; s < n_draws; ++s) {
        auto draw_stream = stream.child(kDrawDomain).child(s);
        draws.push_back(draw_stream.dirichlet(conc));
    }
    return draws;
}

std::vector<PosteriorDraw> crc_scale_shift_draws(const ValidatedData& data,
                                                 const TestAccuracy& acc1,
                                                 const TestAccuracy& acc2,
                                                 std::size_t n_draws,
                                                 rng::SeedStream stream,
                                                 std::size_t* n_skipped,
                                                 bool force_unit_scale) {
    acc1.require_positive_youden();
    acc2.require_positive_youden();

    const double n_tot = static_cast<double>(data.design().n_tot);
    const double psi = data.design().psi;
    const double observed =
        crc_closed_form(data, acc1, acc2).point;
    const auto conc = posterior_concentrations(data.cells());
    const double min_mass = 1e-9 * n_tot;

    std::vector<PosteriorDraw> draws;
    draws.reserve(n_draws);
    std::size_t skipped = 0;
    for (std::size_t s = 0; s < n_draws; ++s) {
        auto draw_stream = stream.child(kDrawDomain).child(s);
        const auto probs = draw_stream.dirichlet(conc);

        CellMasses masses;
        for (std::size_t j = 0; j < 9; ++j) masses.n[j] = n_tot * probs[j];

        // A draw is unusable if any estimator denominator underflowed.
        const bool degenerate = masses.both_streams_size() < min_mass ||
                                masses.stream1_only_size() < min_mass ||
                                masses.stream2_only_size() < min_mass ||
                                (n_tot - masses.stream1_size()) < min_mass;
        if (degenerate) {
            ++skipped;
            continue;
        }

        const auto eval = evaluate_crc(masses, n_tot, psi, acc1, acc2);
        if (!(eval.variance.v1 > 0.0) || !std::isfinite(eval.variance.v2) ||
            eval.variance.v2 < 0.0) {
            ++skipped;
            continue;
        }

        PosteriorDraw draw;
        std::copy(probs.begin(), probs.end(), draw.cell_probs.begin());
        draw.estimate = eval.point;
        draw.v1 = eval.variance.v1;
        draw.v2 = eval.variance.v2;
        draw.scale = force_unit_scale ? 1.0 : std::sqrt(draw.v2 / draw.v1);
        draw.adjusted = draw.scale * draw.estimate + (1.0 - draw.scale) * observed;
        draws.push_back(draw);
    }
    if (n_skipped != nullptr) *n_skipped = skipped;
    return draws;
}

namespace detail {

double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 1) return values[0];
    const double h = q * static_cast<double>(n - 1);
    const auto idx = static_cast<std::size_t>(h);
    if (idx + 1 >= n) return values[n - 1];
    const double frac = h - static_cast<double>(idx);
    return values[idx] + frac * (values[idx + 1] - values[idx]);
}

CredibleInterval interval_from_adjusted(std::vector<double> adjusted,
                                        std::size_t requested,
                                        std::size_t n_skipped,
                                        IntervalSource source,
                                        double max_skip_fraction) {
    if (adjusted.empty() ||
        static_cast<double>(n_skipped) >
            max_skip_fraction * static_cast<double>(requested)) {
        std::ostringstream msg;
        msg << n_skipped << " of " << requested
            << " posterior draws were degenerate";
        throw Error(ErrorCode::DegenerateDraw, msg.str());
    }
    CredibleInterval ci;
    ci.lower = percentile(adjusted, 0.025);
    ci.upper = percentile(std::move(adjusted), 0.975);
    ci.n_draws = requested;
    ci.n_skipped = n_skipped;
    ci.source = source;
    ci.chosen = source;
    return ci;
}

} // namespace detail

CredibleInterval crc_credible_interval_stream(const ValidatedData& data,
                                              const TestAccuracy& acc1,
                                              const TestAccuracy& acc2,
                                              std::size_t n_draws,
                                              rng::SeedStream stream) {
    if (n_draws < 100) {
        throw Error(ErrorCode::InvalidArgument,
                    "credible interval needs at least 100 draws");
    }
    std::size_t skipped = 0;
    const auto draws =
        crc_scale_shift_draws(data, acc1, acc2, n_draws, stream, &skipped);
    std::vector<double> adjusted;
    adjusted.reserve(draws.size());
    for (const auto& d : draws) adjusted.push_back(d.adjusted);
    return detail::interval_from_adjusted(std::move(adjusted), n_draws, skipped,
                                          IntervalSource::CrcScaleShift);
}

CredibleInterval crc_credible_interval(const ValidatedData& data,
                                       const TestAccuracy& acc1,
                                       const TestAccuracy& acc2,
                                       std::size_t n_draws, std::uint64_t seed) {
    return crc_credible_interval_stream(data, acc1, acc2, n_draws,
                                        rng::SeedStream(seed));
}

CredibleInterval rs_comparator_interval(const RandomSampleData& data,
                                        const DesignParams& design,
                                        const TestAccuracy& acc2,
                                        std::size_t n_draws, std::uint64_t seed) {
    acc2.require_positive_youden();
    if (data.n < 2) {
        throw Error(ErrorCode::SampleTooSmall,
                    "comparator interval needs a sample of at least 2");
    }
    if (n_draws < 100) {
        throw Error(ErrorCode::InvalidArgument,
                    "credible interval needs at least 100 draws");
    }

    const double n = static_cast<double>(data.n);
    const double n_tot = static_cast<double>(design.n_tot);
    const double observed =
        n_tot * threshold_prevalence(static_cast<double>(data.n_pos) / n, acc2);
    const double a_conc = static_cast<double>(data.n_pos) + 0.5;
    const double b_conc = static_cast<double>(data.n - data.n_pos) + 0.5;

    rng::SeedStream stream(seed);
    std::vector<double> adjusted;
    adjusted.reserve(n_draws);
    std::size_t skipped = 0;
    for (std::size_t s = 0; s < n_draws; ++s) {
        auto draw_stream = stream.child(kDrawDomain).child(s);
        const double pi_raw = draw_stream.beta(a_conc, b_conc);
        const double pi_corrected = threshold_prevalence(pi_raw, acc2);
        const auto parts =
            rs_variance_parts(pi_raw, pi_corrected, n, design, acc2);
        if (!(parts.plain > 0.0)) {
            ++skipped;
            continue;
        }
        const double scale = std::sqrt(parts.with_fpc / parts.plain);
        adjusted.push_back(scale * n_tot * pi_corrected +
                           (1.0 - scale) * observed);
    }
    return detail::interval_from_adjusted(std::move(adjusted), n_draws, skipped,
                                          IntervalSource::RsComparator);
}

CredibleInterval rs_comparator_interval(const ValidatedData& data,
                                        const TestAccuracy& acc2,
                                        std::size_t n_draws, std::uint64_t seed) {
    const RandomSampleData margin(data.cells().stream2_size(),
                                  data.cells().stream2_positives());
    return rs_comparator_interval(margin, data.design(), acc2, n_draws, seed);
}

CredibleInterval narrower_of(const CredibleInterval& crc_ci,
                             const CredibleInterval& rs_ci) {
    const bool crc_wins = crc_ci.width() <= rs_ci.width();
    CredibleInterval result = crc_wins ? crc_ci : rs_ci;
    result.chosen = crc_wins ? IntervalSource::CrcScaleShift
                             : IntervalSource::RsComparator;
    result.source = IntervalSource::NarrowerOf;
    return result;
}

} // namespace crc
