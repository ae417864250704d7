#include "anchorcrc/likelihood.hpp"

#include "anchorcrc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crc {

std::array<double, 9> cell_probabilities(const ModelParams& params,
                                         const TestAccuracy& acc1,
                                         const TestAccuracy& acc2) {
    const double se1 = acc1.se, sp1 = acc1.sp;
    const double se2 = acc2.se, sp2 = acc2.sp;
    const double phi = params.phi, pi1 = params.pi1, pi01 = params.pi01;
    const double psi = params.psi;

    std::array<double, 9> p{};
    p[0] = psi * (se2 * se1 * pi1 + (1 - sp2) * (1 - sp1) * (1 - pi1)) * phi;
    p[1] = psi * ((1 - se2) * (1 - se1) * pi1 + sp2 * sp1 * (1 - pi1)) * phi;
    p[2] = psi * ((1 - se2) * se1 * pi1 + sp2 * (1 - sp1) * (1 - pi1)) * phi;
    p[3] = psi * (se2 * (1 - se1) * pi1 + (1 - sp2) * sp1 * (1 - pi1)) * phi;
    p[4] = (1 - psi) * (se1 * pi1 + (1 - sp1) * (1 - pi1)) * phi;
    p[5] = (1 - psi) * ((1 - se1) * pi1 + sp1 * (1 - pi1)) * phi;
    p[6] = psi * (se2 * pi01 + (1 - sp2) * (1 - pi01)) * (1 - phi);
    p[7] = psi * ((1 - se2) * pi01 + sp2 * (1 - pi01)) * (1 - phi);
    p[8] = (1 - psi) * (1 - phi);
    return p;
}

double log_likelihood(const CellCounts& cells, const ModelParams& params,
                      const TestAccuracy& acc1, const TestAccuracy& acc2) {
    const auto p = cell_probabilities(params, acc1, acc2);
    double ll = 0.0;
    for (std::size_t j = 0; j < 9; ++j) {
        if (cells.n[j] == 0) continue;
        if (!(p[j] > 0.0)) return -std::numeric_limits<double>::infinity();
        ll += static_cast<double>(cells.n[j]) * std::log(p[j]);
    }
    return ll;
}

namespace detail {

double maximize_scalar(const std::function<double(double)>& f, double lo,
                       double hi, double xtol) {
    // Brent's method on -f. Parabolic steps are attempted only when the
    // bracketing values are finite.
    const double golden = 0.3819660112501051;
    const int max_iter = 200;

    auto g = [&](double t) { return -f(t); };

    double a = lo, b = hi;
    double x = a + golden * (b - a);
    double w = x, v = x;
    double fx = g(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;

    for (int iter = 0; iter < max_iter; ++iter) {
        const double xm = 0.5 * (a + b);
        const double tol1 = xtol * 0.5;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;

        bool use_golden = true;
        if (std::abs(e) > tol1 && std::isfinite(fx) && std::isfinite(fw) &&
            std::isfinite(fv)) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double pq = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) pq = -pq;
            q = std::abs(q);
            const double e_prev = e;
            e = d;
            if (std::abs(pq) < std::abs(0.5 * q * e_prev) && pq > q * (a - x) &&
                pq < q * (b - x)) {
                d = pq / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) {
                    d = (xm - x >= 0.0) ? tol1 : -tol1;
                }
                use_golden = false;
            }
        }
        if (use_golden) {
            e = (x >= xm) ? a - x : b - x;
            d = golden * e;
        }

        const double u =
            (std::abs(d) >= tol1) ? x + d : x + ((d >= 0.0) ? tol1 : -tol1);
        const double fu = g(u);

        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return x;
}

} // namespace detail

MleFit fit_mle(const ValidatedData& data, const TestAccuracy& acc1,
               const TestAccuracy& acc2) {
    acc1.require_positive_youden();
    acc2.require_positive_youden();

    const auto& cells = data.cells();
    const double n_tot = static_cast<double>(data.design().n_tot);
    const double n01 = static_cast<double>(cells.stream2_only_size());
    if (!(n01 > 0.0)) {
        throw Error(ErrorCode::EmptySubgroup,
                    "subgroup has no observations: sampled in stream 2 only");
    }

    ModelParams params;
    params.psi = data.design().psi;
    params.phi = static_cast<double>(cells.stream1_size()) / n_tot;
    params.pi01 =
        threshold_prevalence(static_cast<double>(cells.n7()) / n01, acc2);

    auto profile = [&](double pi1) {
        ModelParams p = params;
        p.pi1 = pi1;
        return log_likelihood(cells, p, acc1, acc2);
    };

    constexpr double xtol = 1e-9;
    double best = detail::maximize_scalar(profile, 0.0, 1.0, xtol);
    double best_ll = profile(best);

    // Verification pass: the optimum must not lose to the interval endpoints
    // or to the closed-form mixture approximation of the same parameter.
    std::array<double, 3> candidates{0.0, 1.0,
                                     std::numeric_limits<double>::quiet_NaN()};
    const double n11 = static_cast<double>(cells.both_streams_size());
    const double n10 = static_cast<double>(cells.stream1_only_size());
    if (n11 > 0.0 && n10 > 0.0) {
        const double pi11 = threshold_prevalence(
            (static_cast<double>(cells.n1()) + static_cast<double>(cells.n4())) / n11,
            acc2);
        const double pi10 = threshold_prevalence(
            static_cast<double>(cells.n5()) / n10, acc1);
        candidates[2] = std::clamp(
            params.psi * pi11 + (1.0 - params.psi) * pi10, 0.0, 1.0);
    }
    for (double cand : candidates) {
        if (std::isnan(cand)) continue;
        const double ll = profile(cand);
        if (ll > best_ll + 1e-9) {
            if (ll > best_ll + 1e-6) {
                throw Error(ErrorCode::OptimizerFailed,
                            "profiled optimum lost to a verification candidate");
            }
            best = cand;
            best_ll = ll;
        }
    }

    MleFit fit;
    params.pi1 = best;
    fit.params = params;
    fit.log_lik = best_ll;
    fit.boundary = (best <= xtol) || (best >= 1.0 - xtol);
    fit.point = n_tot * (best * params.phi + params.pi01 * (1.0 - params.phi));
    return fit;
}

EstimateReport crc_mle_report(const MleFit& fit) {
    EstimateReport report;
    report.kind = EstimatorKind::CrcMle;
    report.point = fit.point;
    report.boundary_solution = fit.boundary;
    return report;
}

} // namespace crc
