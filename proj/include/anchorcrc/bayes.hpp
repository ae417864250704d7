#pragma once

// Credible intervals built from the Jeffreys-Dirichlet posterior over the
// nine cells. Posterior draws of the closed-form estimator are scaled toward
// the observed estimate by sqrt(V2/V1) evaluated on the drawn cells, which
// imposes the finite-population and misclassification variance structure on
// the posterior spread; the interval is the 2.5/97.5 percentile pair of the
// adjusted draws. A binomial analogue serves as the random-sampling
// comparator, and the narrower of the two intervals is recommended.

#include "anchorcrc/estimators.hpp"
#include "anchorcrc/model.hpp"
#include "anchorcrc/rng.hpp"

#include <cstddef>
#include <vector>

namespace crc {

enum class IntervalSource { CrcScaleShift, RsComparator, NarrowerOf };

const char* to_string(IntervalSource source) noexcept;

struct CredibleInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    std::size_t n_draws = 0;
    std::size_t n_skipped = 0;
    IntervalSource source = IntervalSource::CrcScaleShift;
    // Which construction won; only meaningful when source is NarrowerOf.
    IntervalSource chosen = IntervalSource::CrcScaleShift;

    double width() const noexcept;
    bool failed() const noexcept;

    static CredibleInterval failure(IntervalSource source) noexcept;
};

/// One posterior draw and everything evaluated on it.
struct PosteriorDraw {
    std::array<double, 9> cell_probs{};
    double estimate = 0.0;  // closed-form functional on the drawn cells
    double v1 = 0.0;
    double v2 = 0.0;
    double scale = 0.0;     // sqrt(v2 / v1)
    double adjusted = 0.0;  // scale * estimate + (1 - scale) * observed point
};

/// Draws from Dirichlet(n_1 + 1/2, ..., n_9 + 1/2). Draw s is keyed by
/// (stream, s), so results do not depend on evaluation order.
std::vector<std::vector<double>> sample_dirichlet_posterior(const ValidatedData& data,
                                                            std::size_t n_draws,
                                                            rng::SeedStream stream);

/// Scale-shift draws for the closed-form estimator. Draws whose subgroup
/// masses underflow are skipped and counted through `n_skipped`. When
/// `force_unit_scale` is set the affine adjustment degenerates to the
/// identity (used to cross-check the percentile machinery).
std::vector<PosteriorDraw> crc_scale_shift_draws(const ValidatedData& data,
                                                 const TestAccuracy& acc1,
                                                 const TestAccuracy& acc2,
                                                 std::size_t n_draws,
                                                 rng::SeedStream stream,
                                                 std::size_t* n_skipped = nullptr,
                                                 bool force_unit_scale = false);

CredibleInterval crc_credible_interval(const ValidatedData& data,
                                       const TestAccuracy& acc1,
                                       const TestAccuracy& acc2,
                                       std::size_t n_draws, std::uint64_t seed);

/// Same construction from a caller-provided stream (used by the multiple
/// imputation engine to key per-imputation draws).
CredibleInterval crc_credible_interval_stream(const ValidatedData& data,
                                              const TestAccuracy& acc1,
                                              const TestAccuracy& acc2,
                                              std::size_t n_draws,
                                              rng::SeedStream stream);

/// Comparator interval from the Stream 2 binomial margin alone: Jeffreys-Beta
/// posterior draws of the apparent prevalence, corrected, then scaled by the
/// ratio of the finite-population-corrected variance to the plain binomial
/// one and shifted to center on the observed estimate.
CredibleInterval rs_comparator_interval(const RandomSampleData& data,
                                        const DesignParams& design,
                                        const TestAccuracy& acc2,
                                        std::size_t n_draws, std::uint64_t seed);

/// Convenience overload taking the Stream 2 margin of a cell table.
CredibleInterval rs_comparator_interval(const ValidatedData& data,
                                        const TestAccuracy& acc2,
                                        std::size_t n_draws, std::uint64_t seed);

/// The interval with smaller width; ties and double failures go to the
/// scale-shift interval, and a failed interval always loses.
CredibleInterval narrower_of(const CredibleInterval& crc_ci,
                             const CredibleInterval& rs_ci);

namespace detail {

/// Type-7 percentile (linear interpolation between order statistics).
/// `values` need not be sorted; q in [0,1].
double percentile(std::vector<double> values, double q);

/// Percentile interval of the adjusted draws with the failure policy applied:
/// throws when more than `max_skip_fraction` of the requested draws were
/// skipped.
CredibleInterval interval_from_adjusted(std::vector<double> adjusted,
                                        std::size_t requested,
                                        std::size_t n_skipped,
                                        IntervalSource source,
                                        double max_skip_fraction = 0.01);

} // namespace detail

} // namespace crc
