#pragma once

// Multiple-imputation extension for test accuracy estimated from external
// validation data: accuracy parameters are drawn from a Jeffreys-Dirichlet
// posterior over the validation table, the estimator runs once per
// imputation, and results pool through Rubin's rules. For the
// capture-recapture target the credible interval pools the scale-shift
// posterior draws of every imputation with equal weight.

#include "anchorcrc/model.hpp"
#include "anchorcrc/rng.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace crc {

struct MiConfig {
    std::size_t m = 100;                  // imputations (Rubin's B needs >= 2)
    std::size_t s_per_imputation = 1000;  // posterior draws per imputation
    std::uint64_t seed = rng::kDefaultSeed;

    void validate() const;
};

enum class MiTarget { Rs, Crc };

struct MiResult {
    EstimatorKind kind = EstimatorKind::RsMi;
    double pooled_point = 0.0;
    double within_var_mean = 0.0;  // mean of within-imputation variances
    double between_var = 0.0;      // sample variance of the imputation points
    double total_var = 0.0;        // (1 + 1/M) * between + within
    double se = 0.0;               // sqrt(total_var)
    Interval wald_ci;
    double wald_width = 0.0;
    std::optional<Interval> pooled_credible_ci;
    std::optional<double> pooled_credible_width;
    std::vector<double> per_imputation_points;
    std::size_t total_redraws = 0;  // accuracy draws rejected for weak Youden
    std::size_t m = 0;
};

/// One posterior draw of (se, sp) from the validation table: a Dirichlet draw
/// over the four cells with Jeffreys concentration, reduced to the two
/// conditional proportions.
TestAccuracy impute_accuracy(const ValidationCounts& validation,
                             rng::SeedStream& stream);

/// Full-table target: per imputation draws accuracies for both streams and
/// computes either the random-sampling estimate from the Stream 2 margin or
/// the closed-form capture-recapture estimate with its FPC-adjusted variance.
MiResult mi_estimate(const ValidatedData& data, const ValidationCounts& val1,
                     const ValidationCounts& val2, const MiConfig& config,
                     MiTarget which);

/// Random-sample-only target.
MiResult mi_estimate(const RandomSampleData& data, const DesignParams& design,
                     const ValidationCounts& val2, const MiConfig& config);

EstimateReport to_report(const MiResult& result);

} // namespace crc
