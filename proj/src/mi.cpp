#include "anchorcrc/mi.hpp"

#include "anchorcrc/bayes.hpp"
#include "anchorcrc/estimators.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <sstream>

namespace crc {

namespace {

constexpr std::uint64_t kAccuracyDomain = 0xacc;
constexpr std::uint64_t kPosteriorDomain = 0x905;
constexpr double kMinYouden = 0.05;
constexpr int kMaxRedraws = 100;

struct ImputationOutcome {
    double point = 0.0;
    double within_var = 0.0;
};

/// Draw accuracies for one imputation, rejecting draws whose Youden index is
/// too weak to invert. `need_first` is false for the random-sample target,
/// where only the Stream 2 test matters.
std::pair<TestAccuracy, TestAccuracy> draw_accuracies(
    const ValidationCounts* val1, const ValidationCounts& val2,
    rng::SeedStream stream, std::size_t* redraws) {
    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
        auto acc_stream = stream.child(kAccuracyDomain).child(attempt);
        TestAccuracy acc1;
        if (val1 != nullptr) acc1 = impute_accuracy(*val1, acc_stream);
        const TestAccuracy acc2 = impute_accuracy(val2, acc_stream);
        const bool weak = (val1 != nullptr && acc1.youden() <= kMinYouden) ||
                          acc2.youden() <= kMinYouden;
        if (!weak) return {acc1, acc2};
        ++*redraws;
    }
    std::ostringstream msg;
    msg << "accuracy imputation exceeded " << kMaxRedraws
        << " redraws with Youden index <= " << kMinYouden;
    throw Error(ErrorCode::DegenerateDraw, msg.str());
}

MiResult pool(std::vector<ImputationOutcome> outcomes, EstimatorKind kind,
              double n_tot, std::size_t redraws) {
    const auto m = outcomes.size();
    MiResult result;
    result.kind = kind;
    result.m = m;
    result.total_redraws = redraws;
    result.per_imputation_points.reserve(m);

    double mean = 0.0;
    double u_bar = 0.0;
    for (const auto& o : outcomes) {
        result.per_imputation_points.push_back(o.point);
        mean += o.point;
        u_bar += o.within_var;
    }
    mean /= static_cast<double>(m);
    u_bar /= static_cast<double>(m);

    double between = 0.0;
    for (const auto& o : outcomes) {
        const double d = o.point - mean;
        between += d * d;
    }
    between /= static_cast<double>(m - 1);

    result.pooled_point = mean;
    result.within_var_mean = u_bar;
    result.between_var = between;
    result.total_var = (1.0 + 1.0 / static_cast<double>(m)) * between + u_bar;
    result.se = std::sqrt(result.total_var);
    result.wald_ci =
        wald_interval(mean, result.se, n_tot, &result.wald_width);
    return result;
}

} // namespace

void MiConfig::validate() const {
    if (m < 2) {
        throw Error(ErrorCode::InvalidArgument,
                    "multiple imputation needs at least 2 imputations");
    }
    if (s_per_imputation < 100) {
        throw Error(ErrorCode::InvalidArgument,
                    "multiple imputation needs at least 100 draws per imputation");
    }
}

TestAccuracy impute_accuracy(const ValidationCounts& validation,
                             rng::SeedStream& stream) {
    const std::array<double, 4> conc{
        static_cast<double>(validation.v11) + 0.5,
        static_cast<double>(validation.v10) + 0.5,
        static_cast<double>(validation.v01) + 0.5,
        static_cast<double>(validation.v00) + 0.5,
    };
    const auto draw = stream.dirichlet(conc);
    return TestAccuracy(draw[0] / (draw[0] + draw[1]),
                        draw[3] / (draw[2] + draw[3]));
}

MiResult mi_estimate(const ValidatedData& data, const ValidationCounts& val1,
                     const ValidationCounts& val2, const MiConfig& config,
                     MiTarget which) {
    config.validate();
    const double n_tot = static_cast<double>(data.design().n_tot);
    rng::SeedStream root(config.seed);

    std::vector<ImputationOutcome> outcomes;
    outcomes.reserve(config.m);
    std::vector<double> pooled_draws;
    std::size_t redraws = 0;
    std::size_t requested_draws = 0;
    std::size_t skipped_draws = 0;

    for (std::size_t m = 0; m < config.m; ++m) {
        auto imputation_stream = root.child(m);
        const auto [acc1, acc2] =
            draw_accuracies(which == MiTarget::Crc ? &val1 : nullptr, val2,
                            imputation_stream, &redraws);

        ImputationOutcome outcome;
        if (which == MiTarget::Rs) {
            const RandomSampleData margin(data.cells().stream2_size(),
                                          data.cells().stream2_positives());
            const auto report = rs_estimate(margin, acc2, data.design());
            outcome.point = report.point;
            outcome.within_var = *report.se * *report.se;
        } else {
            const auto report = crc_closed_form(data, acc1, acc2);
            outcome.point = report.point;
            outcome.within_var = *report.se * *report.se;

            std::size_t skipped = 0;
            const auto draws = crc_scale_shift_draws(
                data, acc1, acc2, config.s_per_imputation,
                imputation_stream.child(kPosteriorDomain), &skipped);
            requested_draws += config.s_per_imputation;
            skipped_draws += skipped;
            for (const auto& d : draws) pooled_draws.push_back(d.adjusted);
        }
        outcomes.push_back(outcome);
    }

    auto result = pool(std::move(outcomes),
                       which == MiTarget::Rs ? EstimatorKind::RsMi
                                             : EstimatorKind::CrcMi,
                       n_tot, redraws);
    if (which == MiTarget::Crc) {
        auto ci = detail::interval_from_adjusted(std::move(pooled_draws),
                                                 requested_draws, skipped_draws,
                                                 IntervalSource::CrcScaleShift);
        result.pooled_credible_ci = Interval{ci.lower, ci.upper};
        result.pooled_credible_width = ci.upper - ci.lower;
    }
    return result;
}

MiResult mi_estimate(const RandomSampleData& data, const DesignParams& design,
                     const ValidationCounts& val2, const MiConfig& config) {
    config.validate();
    const double n_tot = static_cast<double>(design.n_tot);
    rng::SeedStream root(config.seed);

    std::vector<ImputationOutcome> outcomes;
    outcomes.reserve(config.m);
    std::size_t redraws = 0;
    for (std::size_t m = 0; m < config.m; ++m) {
        auto imputation_stream = root.child(m);
        const auto [acc1, acc2] =
            draw_accuracies(nullptr, val2, imputation_stream, &redraws);
        (void)acc1;
        const auto report = rs_estimate(data, acc2, design);
        outcomes.push_back({report.point, *report.se * *report.se});
    }
    return pool(std::move(outcomes), EstimatorKind::RsMi, n_tot, redraws);
}

EstimateReport to_report(const MiResult& result) {
    EstimateReport report;
    report.kind = result.kind;
    report.point = result.pooled_point;
    report.se = result.se;
    report.wald_ci = result.wald_ci;
    report.wald_width = result.wald_width;
    report.credible_ci = result.pooled_credible_ci;
    report.credible_width = result.pooled_credible_width;
    return report;
}

} // namespace crc
