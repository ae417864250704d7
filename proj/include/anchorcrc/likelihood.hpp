#pragma once

// Nine-cell multinomial model for the two-stream layout and the numerically
// maximized capture-recapture estimator. Two of the three free parameters
// have closed-form maximizers; the within-stream-1 prevalence is profiled
// with a bounded golden-section / parabolic-interpolation search.

#include "anchorcrc/model.hpp"

#include <array>
#include <functional>

namespace crc {

/// Free parameters of the multinomial cell model. `psi` is the known Stream 2
/// sampling probability and is never estimated.
struct ModelParams {
    double phi = 0.0;   // Pr(sampled in Stream 1)
    double pi1 = 0.0;   // Pr(diseased | sampled in Stream 1)
    double pi01 = 0.0;  // Pr(diseased | not sampled in Stream 1)
    double psi = 0.5;
};

/// The nine cell probabilities; sums to 1 for any parameters in [0,1].
std::array<double, 9> cell_probabilities(const ModelParams& params,
                                         const TestAccuracy& acc1,
                                         const TestAccuracy& acc2);

/// Multinomial log-likelihood with the 0*log(0) = 0 convention; returns
/// -infinity when an observed cell has probability zero.
double log_likelihood(const CellCounts& cells, const ModelParams& params,
                      const TestAccuracy& acc1, const TestAccuracy& acc2);

struct MleFit {
    ModelParams params;   // phi and pi01 at their closed forms, pi1 profiled
    double point = 0.0;   // case-count estimate from the fitted parameters
    double log_lik = 0.0;
    bool boundary = false; // profiled maximizer landed on 0 or 1
};

/// Profiles the likelihood over the Stream 1 prevalence with the other
/// parameters fixed at their closed-form maximizers, then verifies the
/// optimum against the interval endpoints and the closed-form approximation.
MleFit fit_mle(const ValidatedData& data, const TestAccuracy& acc1,
               const TestAccuracy& acc2);

EstimateReport crc_mle_report(const MleFit& fit);

namespace detail {

/// Deterministic bounded maximizer (Brent) to absolute tolerance `xtol`.
double maximize_scalar(const std::function<double(double)>& f, double lo,
                       double hi, double xtol);

} // namespace detail

} // namespace crc
