#pragma once

// Closed-form estimators for the two-stream design: the bias-corrected
// random-sampling estimator with its finite-population variance, and the
// closed-form capture-recapture estimator with unadjusted and FPC-adjusted
// delta-method variances.

#include "anchorcrc/model.hpp"

#include <array>

namespace crc {

/// 95% normal quantile used for every Wald interval.
inline constexpr double kZ95 = 1.959963985;

/// Bias-corrected prevalence with the natural [0,1] threshold: apparent
/// prevalences at or below 1-sp map to 0, at or above se map to 1, anything
/// between is corrected by (pi + sp - 1) / (se + sp - 1).
double threshold_prevalence(double pi_raw, const TestAccuracy& acc);

/// Real-valued view of the nine-cell layout. Posterior machinery evaluates
/// the same estimator formulas on fractional cell masses, so the arithmetic
/// lives on doubles; integer counts convert losslessly.
struct CellMasses {
    std::array<double, 9> n{};

    static CellMasses from_counts(const CellCounts& counts) noexcept {
        CellMasses m;
        for (std::size_t i = 0; i < 9; ++i) m.n[i] = static_cast<double>(counts.n[i]);
        return m;
    }

    double n1() const noexcept { return n[0]; }
    double n4() const noexcept { return n[3]; }
    double n5() const noexcept { return n[4]; }
    double n6() const noexcept { return n[5]; }
    double n7() const noexcept { return n[6]; }
    double stream1_size() const noexcept {
        return n[0] + n[1] + n[2] + n[3] + n[4] + n[5];
    }
    double both_streams_size() const noexcept { return n[0] + n[1] + n[2] + n[3]; }
    double stream1_only_size() const noexcept { return n[4] + n[5]; }
    double stream2_only_size() const noexcept { return n[6] + n[7]; }
};

/// Subgroup prevalence estimates feeding the capture-recapture estimator:
/// the Stream 1 sampling fraction and the three subgroup prevalences, both
/// as raw apparent ratios and after misclassification correction.
struct PrevalenceComponents {
    double phi_hat = 0.0;
    double pi11_hat = 0.0;
    double pi10_hat = 0.0;
    double pi01_hat = 0.0;
    double raw_pi11 = 0.0;
    double raw_pi10 = 0.0;
    double raw_pi01 = 0.0;
};

/// Per-term decomposition of the two delta-method variance approximations.
/// v1 carries no finite-population adjustment; v2 multiplies each subgroup
/// kernel by its FPC factor and adds the misclassification extra term. Both
/// are on the case-count scale (already multiplied by n_tot^2).
struct VarianceBreakdown {
    double v1 = 0.0;
    double v2 = 0.0;
    double d11 = 0.0, d10 = 0.0, d01 = 0.0;
    double v1_pi11 = 0.0, v1_pi10 = 0.0, v1_pi01 = 0.0;
    double v2_pi11 = 0.0, v2_pi10 = 0.0, v2_pi01 = 0.0;
    double fpc11 = 0.0, fpc10 = 0.0, fpc01 = 0.0;
    double extra11 = 0.0, extra10 = 0.0, extra01 = 0.0;
    bool degenerate_fpc = false; // some FPC denominator was empty; factor fell back to 1
};

/// Point estimate plus everything computed along the way.
struct CrcEvaluation {
    double point = 0.0;
    PrevalenceComponents components;
    VarianceBreakdown variance;
};

/// Random-sampling estimator from a single test-positive count, with the
/// finite-population-corrected variance and a Wald interval.
EstimateReport rs_estimate(const RandomSampleData& data, const TestAccuracy& acc2,
                           const DesignParams& design);

/// The two bracket terms of the random-sampling variance, exposed separately
/// so the posterior comparator can form its scale factor. `pi_raw` is the
/// apparent prevalence, `pi_corrected` the thresholded one.
struct RsVarianceParts {
    double with_fpc = 0.0;  // FPC-weighted binomial kernel plus the extra term
    double plain = 0.0;     // bare binomial kernel
};
RsVarianceParts rs_variance_parts(double pi_raw, double pi_corrected,
                                  double sample_size, const DesignParams& design,
                                  const TestAccuracy& acc2);

PrevalenceComponents prevalence_components(const ValidatedData& data,
                                           const TestAccuracy& acc1,
                                           const TestAccuracy& acc2);

VarianceBreakdown delta_variance_unadjusted(const PrevalenceComponents& components,
                                            const CellMasses& cells,
                                            const DesignParams& design,
                                            const TestAccuracy& acc1,
                                            const TestAccuracy& acc2);

VarianceBreakdown fpc_adjusted_variance(const PrevalenceComponents& components,
                                        const CellMasses& cells,
                                        const DesignParams& design,
                                        const TestAccuracy& acc1,
                                        const TestAccuracy& acc2);

/// Full evaluation on real-valued masses: subgroup prevalences, the clamped
/// overall-prevalence point estimate, and both variance approximations.
/// Throws EmptySubgroup when a subgroup denominator is not positive.
CrcEvaluation evaluate_crc(const CellMasses& cells, double n_tot, double psi,
                           const TestAccuracy& acc1, const TestAccuracy& acc2);

/// Closed-form capture-recapture estimate with the FPC-adjusted standard
/// error and Wald interval.
EstimateReport crc_closed_form(const ValidatedData& data, const TestAccuracy& acc1,
                               const TestAccuracy& acc2);

/// Wald interval about `point`, clamped to [0, n_tot]; the returned width is
/// the unclamped one.
Interval wald_interval(double point, double se, double n_tot, double* width_out);

} // namespace crc
