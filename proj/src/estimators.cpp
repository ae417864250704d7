#include "anchorcrc/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace crc {

namespace {

double clamp01(double x) noexcept { return std::clamp(x, 0.0, 1.0); }

void require_subgroup(double denom, const char* which) {
    if (!(denom > 0.0)) {
        throw Error(ErrorCode::EmptySubgroup,
                    std::string("subgroup has no observations: ") + which);
    }
}

PrevalenceComponents components_from_masses(const CellMasses& cells, double n_tot,
                                            const TestAccuracy& acc1,
                                            const TestAccuracy& acc2) {
    acc1.require_positive_youden();
    acc2.require_positive_youden();

    const double n11 = cells.both_streams_size();
    const double n10 = cells.stream1_only_size();
    const double n01 = cells.stream2_only_size();
    require_subgroup(n11, "sampled in both streams");
    require_subgroup(n10, "sampled in stream 1 only");
    require_subgroup(n01, "sampled in stream 2 only");

    PrevalenceComponents c;
    c.phi_hat = cells.stream1_size() / n_tot;
    c.raw_pi11 = (cells.n1() + cells.n4()) / n11;
    c.raw_pi10 = cells.n5() / n10;
    c.raw_pi01 = cells.n7() / n01;
    c.pi11_hat = threshold_prevalence(c.raw_pi11, acc2);
    c.pi10_hat = threshold_prevalence(c.raw_pi10, acc1);
    c.pi01_hat = threshold_prevalence(c.raw_pi01, acc2);
    return c;
}

VarianceBreakdown variance_breakdown(const PrevalenceComponents& c,
                                     const CellMasses& cells, double n_tot,
                                     double psi, const TestAccuracy& acc1,
                                     const TestAccuracy& acc2) {
    const double inv_y1_sq = 1.0 / (acc1.youden() * acc1.youden());
    const double inv_y2_sq = 1.0 / (acc2.youden() * acc2.youden());

    const double n1 = cells.stream1_size();
    const double n11 = cells.both_streams_size();
    const double n10 = cells.stream1_only_size();
    const double n01 = cells.stream2_only_size();
    const double rest = n_tot - n1;

    VarianceBreakdown v;
    v.d11 = psi * c.phi_hat;
    v.d10 = (1.0 - psi) * c.phi_hat;
    v.d01 = 1.0 - c.phi_hat;

    // Unadjusted kernels use the raw apparent ratios.
    v.v1_pi11 = inv_y2_sq * c.raw_pi11 * (1.0 - c.raw_pi11) / n11;
    v.v1_pi10 = inv_y1_sq * c.raw_pi10 * (1.0 - c.raw_pi10) / n10;
    v.v1_pi01 = inv_y2_sq * c.raw_pi01 * (1.0 - c.raw_pi01) / n01;

    // FPC factors; an empty denominator falls back to 1 (no reduction).
    if (n11 > 1.0) {
        v.fpc11 = n11 * (n1 - n11) / (n1 * (n11 - 1.0));
    } else {
        v.fpc11 = 1.0;
        v.degenerate_fpc = true;
    }
    if (n10 > 1.0) {
        v.fpc10 = n10 * n11 / (n1 * (n10 - 1.0));
    } else {
        v.fpc10 = 1.0;
        v.degenerate_fpc = true;
    }
    if (n01 > 1.0) {
        v.fpc01 = n01 * (rest - n01) / (rest * (n01 - 1.0));
    } else {
        v.fpc01 = 1.0;
        v.degenerate_fpc = true;
    }

    // Extra misclassification terms use the corrected prevalences.
    v.extra11 = inv_y2_sq / n1 *
                (c.pi11_hat * acc2.se * (1.0 - acc2.se) +
                 (1.0 - c.pi11_hat) * acc2.sp * (1.0 - acc2.sp));
    v.extra10 = inv_y1_sq / n1 *
                (c.pi10_hat * acc1.se * (1.0 - acc1.se) +
                 (1.0 - c.pi10_hat) * acc1.sp * (1.0 - acc1.sp));
    v.extra01 = inv_y2_sq / rest *
                (c.pi01_hat * acc2.se * (1.0 - acc2.se) +
                 (1.0 - c.pi01_hat) * acc2.sp * (1.0 - acc2.sp));

    v.v2_pi11 = v.fpc11 * v.v1_pi11 + v.extra11;
    v.v2_pi10 = v.fpc10 * v.v1_pi10 + v.extra10;
    v.v2_pi01 = v.fpc01 * v.v1_pi01 + v.extra01;

    const double scale = n_tot * n_tot;
    v.v1 = scale * (v.d11 * v.d11 * v.v1_pi11 + v.d10 * v.d10 * v.v1_pi10 +
                    v.d01 * v.d01 * v.v1_pi01);
    v.v2 = scale * (v.d11 * v.d11 * v.v2_pi11 + v.d10 * v.d10 * v.v2_pi10 +
                    v.d01 * v.d01 * v.v2_pi01);
    return v;
}

} // namespace

double threshold_prevalence(double pi_raw, const TestAccuracy& acc) {
    acc.require_positive_youden();
    if (pi_raw <= 1.0 - acc.sp) return 0.0;
    if (pi_raw >= acc.se) return 1.0;
    return (pi_raw + acc.sp - 1.0) / acc.youden();
}

RsVarianceParts rs_variance_parts(double pi_raw, double pi_corrected,
                                  double sample_size, const DesignParams& design,
                                  const TestAccuracy& acc2) {
    const double inv_y_sq = 1.0 / (acc2.youden() * acc2.youden());
    const double n_tot = static_cast<double>(design.n_tot);
    const double fpc = sample_size * (n_tot - sample_size) /
                       (n_tot * (sample_size - 1.0));
    const double kernel = pi_raw * (1.0 - pi_raw) / sample_size;
    const double extra =
        (pi_corrected * acc2.se * (1.0 - acc2.se) +
         (1.0 - pi_corrected) * acc2.sp * (1.0 - acc2.sp)) / n_tot;

    RsVarianceParts parts;
    parts.plain = inv_y_sq * kernel;
    parts.with_fpc = inv_y_sq * (fpc * kernel + extra);
    return parts;
}

Interval wald_interval(double point, double se, double n_tot, double* width_out) {
    const double lower = point - kZ95 * se;
    const double upper = point + kZ95 * se;
    if (width_out != nullptr) *width_out = upper - lower;
    return Interval{std::clamp(lower, 0.0, n_tot), std::clamp(upper, 0.0, n_tot)};
}

EstimateReport rs_estimate(const RandomSampleData& data, const TestAccuracy& acc2,
                           const DesignParams& design) {
    acc2.require_positive_youden();
    if (data.n < 2) {
        throw Error(ErrorCode::SampleTooSmall,
                    "random sample needs at least 2 observations");
    }
    if (data.n > design.n_tot) {
        throw Error(ErrorCode::InvalidSize,
                    "random sample exceeds the registry size");
    }

    const double n = static_cast<double>(data.n);
    const double n_tot = static_cast<double>(design.n_tot);
    const double pi_raw = static_cast<double>(data.n_pos) / n;
    const double pi_corrected = threshold_prevalence(pi_raw, acc2);
    const auto parts = rs_variance_parts(pi_raw, pi_corrected, n, design, acc2);

    EstimateReport report;
    report.kind = EstimatorKind::Rs;
    report.point = n_tot * pi_corrected;
    report.se = n_tot * std::sqrt(parts.with_fpc);
    double width = 0.0;
    report.wald_ci = wald_interval(report.point, *report.se, n_tot, &width);
    report.wald_width = width;
    return report;
}

PrevalenceComponents prevalence_components(const ValidatedData& data,
                                           const TestAccuracy& acc1,
                                           const TestAccuracy& acc2) {
    return components_from_masses(CellMasses::from_counts(data.cells()),
                                  static_cast<double>(data.design().n_tot), acc1,
                                  acc2);
}

VarianceBreakdown delta_variance_unadjusted(const PrevalenceComponents& components,
                                            const CellMasses& cells,
                                            const DesignParams& design,
                                            const TestAccuracy& acc1,
                                            const TestAccuracy& acc2) {
    return variance_breakdown(components, cells, static_cast<double>(design.n_tot),
                              design.psi, acc1, acc2);
}

VarianceBreakdown fpc_adjusted_variance(const PrevalenceComponents& components,
                                        const CellMasses& cells,
                                        const DesignParams& design,
                                        const TestAccuracy& acc1,
                                        const TestAccuracy& acc2) {
    return variance_breakdown(components, cells, static_cast<double>(design.n_tot),
                              design.psi, acc1, acc2);
}

CrcEvaluation evaluate_crc(const CellMasses& cells, double n_tot, double psi,
                           const TestAccuracy& acc1, const TestAccuracy& acc2) {
    CrcEvaluation eval;
    eval.components = components_from_masses(cells, n_tot, acc1, acc2);
    const auto& c = eval.components;
    // Point estimate: the corrected subgroup prevalences enter unclamped
    // (negative components may cancel against positive ones) and only the
    // overall prevalence is thresholded to [0,1]. The clamped components
    // apply to the variance formulas, not here.
    const double c11 = (c.raw_pi11 + acc2.sp - 1.0) / acc2.youden();
    const double c10 = (c.raw_pi10 + acc1.sp - 1.0) / acc1.youden();
    const double c01 = (c.raw_pi01 + acc2.sp - 1.0) / acc2.youden();
    const double overall = clamp01(psi * c11 * c.phi_hat +
                                   (1.0 - psi) * c10 * c.phi_hat +
                                   c01 * (1.0 - c.phi_hat));
    eval.point = n_tot * overall;
    eval.variance = variance_breakdown(c, cells, n_tot, psi, acc1, acc2);
    return eval;
}

EstimateReport crc_closed_form(const ValidatedData& data, const TestAccuracy& acc1,
                               const TestAccuracy& acc2) {
    const double n_tot = static_cast<double>(data.design().n_tot);
    const auto eval = evaluate_crc(CellMasses::from_counts(data.cells()), n_tot,
                                   data.design().psi, acc1, acc2);

    EstimateReport report;
    report.kind = EstimatorKind::CrcClosed;
    report.point = eval.point;
    report.se = std::sqrt(eval.variance.v2);
    double width = 0.0;
    report.wald_ci = wald_interval(report.point, *report.se, n_tot, &width);
    report.wald_width = width;
    report.degenerate_fpc = eval.variance.degenerate_fpc;
    return report;
}

} // namespace crc
