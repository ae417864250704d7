#pragma once

// Replicate generator and scenario runner: a closed registry with
// symptom-driven non-representative Stream 1 sampling, an independent
// fixed-size anchor Stream 2, error-prone tests in both streams, and
// aggregation of estimator performance metrics across replicates.

#include "anchorcrc/model.hpp"
#include "anchorcrc/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crc {

struct SimulationConfig {
    std::uint64_t n_tot = 1000;
    double prevalence = 0.1;
    std::uint64_t n2 = 100;  // anchor stream size; psi is n2 / n_tot exactly
    TestAccuracy acc1;
    TestAccuracy acc2;
    double p_symptom_given_diseased = 0.5;
    double p_symptom_given_healthy = 0.1;
    double p_stream1_given_symptom = 0.8;
    double p_stream1_given_no_symptom = 0.1;
    std::uint64_t n_replicates = 5000;
    std::size_t s_draws = 1000;
    // Exactly round(n_tot * prevalence) cases per replicate; the Bernoulli
    // per-individual alternative sits behind this flag.
    bool fixed_case_count = true;
    std::uint64_t seed = rng::kDefaultSeed;

    void validate() const;
    double psi() const noexcept {
        return static_cast<double>(n2) / static_cast<double>(n_tot);
    }
    std::uint64_t n_true() const noexcept;
};

struct ReplicateData {
    CellCounts cells;
    std::uint64_t n_true = 0;
};

/// One synthetic registry draw, tabulated into the nine cells.
ReplicateData generate_replicate(const SimulationConfig& config,
                                 rng::SeedStream stream);

struct EstimatorSummary {
    std::string estimator;  // "RS", "CRC", "CRC_MLE"
    double mean = 0.0;
    double sd = 0.0;
    double avg_se = 0.0;
    double avg_wald_width = 0.0;
    double avg_credible_width = 0.0;
    double wald_coverage_pct = 0.0;
    double credible_coverage_pct = 0.0;
    std::size_t n_replicates_used = 0;
    // Columns that do not apply to an estimator are NaN and render as blanks.
};

struct SimulationSummary {
    SimulationConfig config;
    std::vector<EstimatorSummary> rows;
    std::size_t n_excluded = 0;  // replicates dropped on estimation failure
};

/// Runs every replicate (work split across `workers` threads with
/// per-replicate seed streams) and aggregates in replicate order, so the
/// output is byte-stable under any worker count.
SimulationSummary run_scenario(const SimulationConfig& config,
                               unsigned workers = 1);

enum class TableFormat { Csv, Json, Markdown };

TableFormat parse_table_format(const std::string& name);

/// Renders one row per (scenario, estimator) with a fixed column order.
/// Counts and coverage print with one decimal; missing cells are blank in
/// CSV, null in JSON, and "-" in markdown.
std::string emit_table(std::span<const SimulationSummary> summaries,
                       TableFormat format);

} // namespace crc
