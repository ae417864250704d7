#include "anchorcrc/sim.hpp"

#include "anchorcrc/bayes.hpp"
#include "anchorcrc/estimators.hpp"
#include "anchorcrc/likelihood.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace crc {

namespace {

constexpr std::uint64_t kDiseaseDomain = 1;
constexpr std::uint64_t kSymptomDomain = 2;
constexpr std::uint64_t kStream1Domain = 3;
constexpr std::uint64_t kStream2Domain = 4;
constexpr std::uint64_t kTest1Domain = 5;
constexpr std::uint64_t kTest2Domain = 6;
constexpr std::uint64_t kBayesDomain = 7;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_probability(double value, const char* name) {
    if (!(value >= 0.0 && value <= 1.0)) {
        std::ostringstream msg;
        msg << name << " must lie in [0,1], got " << value;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

struct ReplicateOutcome {
    bool excluded = false;
    double rs_point = 0.0, rs_se = 0.0;
    double crc_point = 0.0, crc_se = 0.0;
    double mle_point = 0.0;
    double cred_lo = 0.0, cred_hi = 0.0;
};

/// Order-fixed compensated accumulator.
class KahanSum {
public:
    void add(double value) noexcept {
        const double y = value - compensation_;
        const double t = sum_ + y;
        compensation_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

double kahan_mean(std::span<const double> values) {
    KahanSum s;
    for (double v : values) s.add(v);
    return s.value() / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values, double mean) {
    if (values.size() < 2) return 0.0;
    KahanSum ss;
    for (double v : values) ss.add((v - mean) * (v - mean));
    return std::sqrt(ss.value() / static_cast<double>(values.size() - 1));
}

std::string format_cell(double value) {
    if (std::isnan(value)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

std::string format_prevalence(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

} // namespace

void SimulationConfig::validate() const {
    if (n_tot < 2) {
        throw Error(ErrorCode::InvalidArgument, "n_tot must be at least 2");
    }
    if (n2 == 0 || n2 > n_tot) {
        throw Error(ErrorCode::InvalidArgument, "n2 must lie in [1, n_tot]");
    }
    require_probability(prevalence, "prevalence");
    require_probability(p_symptom_given_diseased, "p_symptom_given_diseased");
    require_probability(p_symptom_given_healthy, "p_symptom_given_healthy");
    require_probability(p_stream1_given_symptom, "p_stream1_given_symptom");
    require_probability(p_stream1_given_no_symptom, "p_stream1_given_no_symptom");
    if (n_replicates == 0) {
        throw Error(ErrorCode::InvalidArgument, "n_replicates must be positive");
    }
    if (s_draws < 100) {
        throw Error(ErrorCode::InvalidArgument, "s_draws must be at least 100");
    }
}

std::uint64_t SimulationConfig::n_true() const noexcept {
    return static_cast<std::uint64_t>(
        std::llround(static_cast<double>(n_tot) * prevalence));
}

ReplicateData generate_replicate(const SimulationConfig& config,
                                 rng::SeedStream stream) {
    const auto n_tot = static_cast<std::uint32_t>(config.n_tot);
    std::vector<std::uint8_t> diseased(n_tot, 0);
    std::vector<std::uint8_t> in_stream1(n_tot, 0);
    std::vector<std::uint8_t> in_stream2(n_tot, 0);

    std::uint64_t n_true = 0;
    auto disease_stream = stream.child(kDiseaseDomain);
    if (config.fixed_case_count) {
        n_true = config.n_true();
        for (auto idx : disease_stream.sample_without_replacement(
                 n_tot, static_cast<std::uint32_t>(n_true))) {
            diseased[idx] = 1;
        }
    } else {
        for (std::uint32_t i = 0; i < n_tot; ++i) {
            if (disease_stream.bernoulli(config.prevalence)) {
                diseased[i] = 1;
                ++n_true;
            }
        }
    }

    auto symptom_stream = stream.child(kSymptomDomain);
    auto stream1_stream = stream.child(kStream1Domain);
    for (std::uint32_t i = 0; i < n_tot; ++i) {
        const double p_symptom = diseased[i] != 0
                                     ? config.p_symptom_given_diseased
                                     : config.p_symptom_given_healthy;
        const bool symptomatic = symptom_stream.bernoulli(p_symptom);
        const double p_select = symptomatic ? config.p_stream1_given_symptom
                                            : config.p_stream1_given_no_symptom;
        in_stream1[i] = stream1_stream.bernoulli(p_select) ? 1 : 0;
    }

    auto stream2_stream = stream.child(kStream2Domain);
    for (auto idx : stream2_stream.sample_without_replacement(
             n_tot, static_cast<std::uint32_t>(config.n2))) {
        in_stream2[idx] = 1;
    }

    // Each stream applies its own test; a dual-sampled individual gets two
    // independent error-prone results.
    auto test1_stream = stream.child(kTest1Domain);
    auto test2_stream = stream.child(kTest2Domain);
    CellCounts cells;
    for (std::uint32_t i = 0; i < n_tot; ++i) {
        const bool s1 = in_stream1[i] != 0;
        const bool s2 = in_stream2[i] != 0;
        bool pos1 = false, pos2 = false;
        if (s1) {
            const double p = diseased[i] != 0 ? config.acc1.se : 1.0 - config.acc1.sp;
            pos1 = test1_stream.bernoulli(p);
        }
        if (s2) {
            const double p = diseased[i] != 0 ? config.acc2.se : 1.0 - config.acc2.sp;
            pos2 = test2_stream.bernoulli(p);
        }
        std::size_t cell;
        if (s1 && s2) {
            cell = pos1 ? (pos2 ? 0 : 2) : (pos2 ? 3 : 1);
        } else if (s1) {
            cell = pos1 ? 4 : 5;
        } else if (s2) {
            cell = pos2 ? 6 : 7;
        } else {
            cell = 8;
        }
        ++cells.n[cell];
    }
    return ReplicateData{cells, n_true};
}

SimulationSummary run_scenario(const SimulationConfig& config, unsigned workers) {
    config.validate();
    const DesignParams design(config.n_tot, config.psi());
    const auto replicates = config.n_replicates;
    std::vector<ReplicateOutcome> outcomes(replicates);

    rng::SeedStream root(config.seed);
    auto run_one = [&](std::uint64_t r) {
        auto rep_stream = root.child(r);
        const auto data = generate_replicate(config, rep_stream);
        ReplicateOutcome& out = outcomes[r];
        try {
            const auto paired = ValidatedData::trusted(data.cells, design);
            const RandomSampleData margin(data.cells.stream2_size(),
                                          data.cells.stream2_positives());
            const auto rs = rs_estimate(margin, config.acc2, design);
            out.rs_point = rs.point;
            out.rs_se = *rs.se;

            const auto crc = crc_closed_form(paired, config.acc1, config.acc2);
            out.crc_point = crc.point;
            out.crc_se = *crc.se;

            out.mle_point = fit_mle(paired, config.acc1, config.acc2).point;

            const auto ci = crc_credible_interval_stream(
                paired, config.acc1, config.acc2, config.s_draws,
                rep_stream.child(kBayesDomain));
            out.cred_lo = ci.lower;
            out.cred_hi = ci.upper;
        } catch (const Error&) {
            out.excluded = true;
        }
    };

    const unsigned worker_count = std::max(
        1u, std::min<unsigned>(workers, static_cast<unsigned>(
                                            std::min<std::uint64_t>(replicates, 256))));
    if (worker_count == 1) {
        for (std::uint64_t r = 0; r < replicates; ++r) run_one(r);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(worker_count);
        for (unsigned w = 0; w < worker_count; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const auto r = next.fetch_add(1);
                    if (r >= replicates) break;
                    run_one(r);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    // Aggregate in replicate order regardless of how the work was scheduled.
    const double n_true = static_cast<double>(config.n_true());
    std::vector<double> rs_points, crc_points, mle_points;
    std::vector<double> rs_ses, crc_ses, cred_widths;
    std::size_t rs_covered = 0, crc_covered = 0, cred_covered = 0;
    std::size_t excluded = 0;
    for (const auto& out : outcomes) {
        if (out.excluded) {
            ++excluded;
            continue;
        }
        rs_points.push_back(out.rs_point);
        crc_points.push_back(out.crc_point);
        mle_points.push_back(out.mle_point);
        rs_ses.push_back(out.rs_se);
        crc_ses.push_back(out.crc_se);
        cred_widths.push_back(out.cred_hi - out.cred_lo);
        // Coverage uses the unclamped Wald bounds.
        if (std::abs(out.rs_point - n_true) <= kZ95 * out.rs_se) ++rs_covered;
        if (std::abs(out.crc_point - n_true) <= kZ95 * out.crc_se) ++crc_covered;
        if (out.cred_lo <= n_true && n_true <= out.cred_hi) ++cred_covered;
    }

    const auto used = rs_points.size();
    if (used == 0) {
        throw Error(ErrorCode::DegenerateDraw, "every replicate failed estimation");
    }
    const double pct = 100.0 / static_cast<double>(used);

    SimulationSummary summary;
    summary.config = config;
    summary.n_excluded = excluded;

    EstimatorSummary rs_row;
    rs_row.estimator = "RS";
    rs_row.mean = kahan_mean(rs_points);
    rs_row.sd = sample_sd(rs_points, rs_row.mean);
    rs_row.avg_se = kahan_mean(rs_ses);
    rs_row.avg_wald_width = 2.0 * kZ95 * rs_row.avg_se;
    rs_row.avg_credible_width = kNaN;
    rs_row.wald_coverage_pct = pct * static_cast<double>(rs_covered);
    rs_row.credible_coverage_pct = kNaN;
    rs_row.n_replicates_used = used;
    summary.rows.push_back(rs_row);

    EstimatorSummary crc_row;
    crc_row.estimator = "CRC";
    crc_row.mean = kahan_mean(crc_points);
    crc_row.sd = sample_sd(crc_points, crc_row.mean);
    crc_row.avg_se = kahan_mean(crc_ses);
    crc_row.avg_wald_width = 2.0 * kZ95 * crc_row.avg_se;
    crc_row.avg_credible_width = kahan_mean(cred_widths);
    crc_row.wald_coverage_pct = pct * static_cast<double>(crc_covered);
    crc_row.credible_coverage_pct = pct * static_cast<double>(cred_covered);
    crc_row.n_replicates_used = used;
    summary.rows.push_back(crc_row);

    EstimatorSummary mle_row;
    mle_row.estimator = "CRC_MLE";
    mle_row.mean = kahan_mean(mle_points);
    mle_row.sd = sample_sd(mle_points, mle_row.mean);
    mle_row.avg_se = kNaN;
    mle_row.avg_wald_width = kNaN;
    mle_row.avg_credible_width = kNaN;
    mle_row.wald_coverage_pct = kNaN;
    mle_row.credible_coverage_pct = kNaN;
    mle_row.n_replicates_used = used;
    summary.rows.push_back(mle_row);

    return summary;
}

TableFormat parse_table_format(const std::string& name) {
    if (name == "csv") return TableFormat::Csv;
    if (name == "json") return TableFormat::Json;
    if (name == "markdown") return TableFormat::Markdown;
    throw Error(ErrorCode::UnsupportedFormat,
                "unsupported table format: " + name);
}

std::string emit_table(std::span<const SimulationSummary> summaries,
                       TableFormat format) {
    if (summaries.empty()) {
        throw Error(ErrorCode::InvalidArgument, "no summaries to render");
    }

    static const char* kColumns[] = {
        "prevalence", "n2",           "estimator",
        "mean",       "sd",           "avg_se",
        "avg_wald_width", "avg_credible_width", "wald_cov", "credible_cov"};

    switch (format) {
        case TableFormat::Csv: {
            std::ostringstream out;
            for (std::size_t c = 0; c < std::size(kColumns); ++c) {
                out << (c == 0 ? "" : ",") << kColumns[c];
            }
            out << "\n";
            for (const auto& summary : summaries) {
                for (const auto& row : summary.rows) {
                    out << format_prevalence(summary.config.prevalence) << ","
                        << summary.config.n2 << "," << row.estimator << ","
                        << format_cell(row.mean) << "," << format_cell(row.sd)
                        << "," << format_cell(row.avg_se) << ","
                        << format_cell(row.avg_wald_width) << ","
                        << format_cell(row.avg_credible_width) << ","
                        << format_cell(row.wald_coverage_pct) << ","
                        << format_cell(row.credible_coverage_pct) << "\n";
                }
            }
            return out.str();
        }
        case TableFormat::Json: {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& summary : summaries) {
                for (const auto& row : summary.rows) {
                    nlohmann::json j;
                    j["prevalence"] = summary.config.prevalence;
                    j["n2"] = summary.config.n2;
                    j["estimator"] = row.estimator;
                    auto set = [&](const char* key, double v) {
                        if (std::isnan(v)) {
                            j[key] = nullptr;
                        } else {
                            j[key] = v;
                        }
                    };
                    set("mean", row.mean);
                    set("sd", row.sd);
                    set("avg_se", row.avg_se);
                    set("avg_wald_width", row.avg_wald_width);
                    set("avg_credible_width", row.avg_credible_width);
                    set("wald_cov", row.wald_coverage_pct);
                    set("credible_cov", row.credible_coverage_pct);
                    j["n_replicates_used"] = row.n_replicates_used;
                    j["n_excluded"] = summary.n_excluded;
                    rows.push_back(std::move(j));
                }
            }
            return rows.dump(2) + "\n";
        }
        case TableFormat::Markdown: {
            std::ostringstream out;
            out << "|";
            for (const char* col : kColumns) out << " " << col << " |";
            out << "\n|";
            for (std::size_t c = 0; c < std::size(kColumns); ++c) out << " --- |";
            out << "\n";
            for (const auto& summary : summaries) {
                for (const auto& row : summary.rows) {
                    auto cell = [](double v) {
                        const std::string s = format_cell(v);
                        return s.empty() ? std::string("-") : s;
                    };
                    out << "| " << format_prevalence(summary.config.prevalence)
                        << " | " << summary.config.n2 << " | " << row.estimator
                        << " | " << cell(row.mean) << " | " << cell(row.sd)
                        << " | " << cell(row.avg_se) << " | "
                        << cell(row.avg_wald_width) << " | "
                        << cell(row.avg_credible_width) << " | "
                        << cell(row.wald_coverage_pct) << " | "
                        << cell(row.credible_coverage_pct) << " |\n";
                }
            }
            return out.str();
        }
    }
    throw Error(ErrorCode::UnsupportedFormat, "unsupported table format");
}

} // namespace crc
