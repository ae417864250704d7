// Command-line front end: estimation on observed data, multiple-imputation
// estimation from validation tables, the bundled worked example, and the
// simulation harness.
//
// Exit codes: 0 success, 2 usage or input-schema error, 3 estimation failure.
// Errors print machine-readable JSON on stderr.

#include "anchorcrc/bayes.hpp"
#include "anchorcrc/estimators.hpp"
#include "anchorcrc/io.hpp"
#include "anchorcrc/likelihood.hpp"
#include "anchorcrc/mi.hpp"
#include "anchorcrc/model.hpp"
#include "anchorcrc/rng.hpp"
#include "anchorcrc/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void print_error(const std::string& code, const std::string& message) {
    json err;
    err["error"] = json{{"code", code}, {"message", message}};
    std::cerr << err.dump() << "\n";
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open input file: " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw crc::Error(crc::ErrorCode::SchemaViolation,
                         std::string("malformed JSON: ") + e.what());
    }
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) {
        throw UsageError("cannot open output file: " + out_path);
    }
    out << text;
}

// ---------------------------------------------------------------- estimate

struct EstimateInput {
    crc::DesignParams design;
    std::optional<crc::CellCounts> cells;
    std::optional<crc::RandomSampleData> random_sample;
    std::optional<crc::TestAccuracy> acc1;
    std::optional<crc::TestAccuracy> acc2;
};

EstimateInput parse_common_input(const json& j) {
    if (!j.is_object()) {
        throw crc::Error(crc::ErrorCode::SchemaViolation,
                         "input must be a JSON object");
    }
    if (!j.contains("design")) {
        throw crc::Error(crc::ErrorCode::SchemaViolation, "missing field: design");
    }
    EstimateInput input{crc::io::parse_design(j.at("design")), {}, {}, {}, {}};
    if (j.contains("cells")) input.cells = crc::io::parse_cells(j.at("cells"));
    if (j.contains("random_sample")) {
        input.random_sample = crc::io::parse_random_sample(j.at("random_sample"));
    }
    if (!input.cells && !input.random_sample) {
        throw crc::Error(crc::ErrorCode::SchemaViolation,
                         "input needs cells or random_sample");
    }
    if (j.contains("acc1")) input.acc1 = crc::io::parse_test_accuracy(j.at("acc1"));
    if (j.contains("acc2")) input.acc2 = crc::io::parse_test_accuracy(j.at("acc2"));
    return input;
}

crc::RandomSampleData stream2_margin(const EstimateInput& input) {
    if (input.random_sample) return *input.random_sample;
    return crc::RandomSampleData(input.cells->stream2_size(),
                                 input.cells->stream2_positives());
}

int cmd_estimate(const std::string& input_path, const std::string& method,
                 std::size_t draws, std::uint64_t seed,
                 const std::string& out_path) {
    const json j = load_json_file(input_path);
    const EstimateInput input = parse_common_input(j);
    if (!input.acc2) {
        throw crc::Error(crc::ErrorCode::SchemaViolation, "missing field: acc2");
    }

    std::optional<crc::ValidatedData> paired;
    if (input.cells) {
        paired = crc::validate_cells(*input.cells, input.design);
    }

    // Explicit cell-table methods demand their inputs; "all" runs every
    // estimator the input supports.
    const bool cells_ready = paired.has_value() && input.acc1.has_value();
    if ((method == "crc" || method == "mle") && !cells_ready) {
        throw crc::Error(crc::ErrorCode::SchemaViolation,
                         "the requested method needs cells and acc1");
    }
    const bool want_rs = method == "rs" || method == "all";
    const bool want_crc = method == "crc" || (method == "all" && cells_ready);
    const bool want_mle = method == "mle" || (method == "all" && cells_ready);

    json out;
    out["design"] = crc::io::design_to_json(input.design);
    out["seed"] = seed;
    out["draws"] = draws;
    out["estimates"] = json::array();

    std::optional<crc::CredibleInterval> crc_ci;
    std::optional<crc::CredibleInterval> rs_ci;

    if (want_rs) {
        auto report = crc::rs_estimate(stream2_margin(input), *input.acc2,
                                       input.design);
        rs_ci = crc::rs_comparator_interval(stream2_margin(input), input.design,
                                            *input.acc2, draws,
                                            crc::rng::derive_seed(seed, 2));
        report.credible_ci = crc::Interval{rs_ci->lower, rs_ci->upper};
        report.credible_width = rs_ci->width();
        auto rj = crc::io::to_json(report);
        rj["credible_source"] = to_string(rs_ci->source);
        out["estimates"].push_back(std::move(rj));
    }
    if (want_crc) {
        auto report = crc::crc_closed_form(*paired, *input.acc1, *input.acc2);
        try {
            crc_ci = crc::crc_credible_interval(*paired, *input.acc1, *input.acc2,
                                                draws, crc::rng::derive_seed(seed, 1));
        } catch (const crc::Error& e) {
            if (e.code() != crc::ErrorCode::DegenerateDraw) throw;
            crc_ci = crc::CredibleInterval::failure(
                crc::IntervalSource::CrcScaleShift);
        }
        if (!crc_ci->failed()) {
            report.credible_ci = crc::Interval{crc_ci->lower, crc_ci->upper};
            report.credible_width = crc_ci->width();
        }
        auto cj = crc::io::to_json(report);
        cj["credible_source"] = to_string(crc_ci->source);
        if (crc_ci->failed()) cj["credible_failed"] = true;
        out["estimates"].push_back(std::move(cj));
    }
    if (want_mle) {
        const auto fit = crc::fit_mle(*paired, *input.acc1, *input.acc2);
        out["estimates"].push_back(crc::io::to_json(crc::crc_mle_report(fit)));
    }
    if (crc_ci && rs_ci) {
        out["narrower_of"] = crc::io::to_json(crc::narrower_of(*crc_ci, *rs_ci));
    }

    write_output(out_path, out.dump(2) + "\n");
    return kExitOk;
}

// -------------------------------------------------------------- mi-estimate

int cmd_mi_estimate(const std::string& input_path, const std::string& method,
                    std::size_t m, std::size_t draws, std::uint64_t seed,
                    const std::string& out_path) {
    const json j = load_json_file(input_path);
    const EstimateInput input = parse_common_input(j);
    if (!j.contains("validation2")) {
        throw crc::Error(crc::ErrorCode::SchemaViolation,
                         "missing field: validation2");
    }
    const auto val2 = crc::io::parse_validation(j.at("validation2"));
    std::optional<crc::ValidationCounts> val1;
    if (j.contains("validation1")) {
        val1 = crc::io::parse_validation(j.at("validation1"));
    }

    std::optional<crc::ValidatedData> paired;
    if (input.cells) {
        paired = crc::validate_cells(*input.cells, input.design);
    }

    const bool crc_ready = paired.has_value() && val1.has_value();
    if (method == "crc" && !crc_ready) {
        throw crc::Error(crc::ErrorCode::SchemaViolation,
                         "capture-recapture imputation needs cells and validation1");
    }
    const bool want_rs = method == "rs" || method == "all";
    const bool want_crc = method == "crc" || (method == "all" && crc_ready);

    crc::MiConfig config;
    config.m = m;
    config.s_per_imputation = draws;

    json out;
    out["design"] = crc::io::design_to_json(input.design);
    out["seed"] = seed;
    out["m"] = m;
    out["draws"] = draws;
    out["estimates"] = json::array();

    if (want_rs) {
        config.seed = crc::rng::derive_seed(seed, 11);
        crc::MiResult result =
            paired ? crc::mi_estimate(*paired, val1.value_or(crc::ValidationCounts()),
                                      val2, config, crc::MiTarget::Rs)
                   : crc::mi_estimate(*input.random_sample, input.design, val2,
                                      config);
        out["estimates"].push_back(crc::io::to_json(result));
    }
    if (want_crc) {
        config.seed = crc::rng::derive_seed(seed, 12);
        const auto result =
            crc::mi_estimate(*paired, *val1, val2, config, crc::MiTarget::Crc);
        out["estimates"].push_back(crc::io::to_json(result));
    }

    write_output(out_path, out.dump(2) + "\n");
    return kExitOk;
}

// ------------------------------------------------------------------ example

struct ExampleFixture {
    crc::CellCounts cells{3, 12, 0, 2, 27, 130, 6, 77, 743};
    crc::DesignParams design{1000, 0.1};
    crc::ValidationCounts val1{65, 38, 1, 552};
    crc::ValidationCounts val2{89, 6, 0, 100};
};

std::string format_interval(const crc::Interval& interval) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "(%.1f, %.1f)", interval.lower,
                  interval.upper);
    return buf;
}

int cmd_example(std::size_t m, std::size_t draws, std::uint64_t seed,
                const std::string& format, const std::string& out_path) {
    const ExampleFixture fixture;
    const auto acc1 = fixture.val1.proportions();
    const auto acc2 = fixture.val2.proportions();
    const auto paired = crc::validate_cells(fixture.cells, fixture.design);

    const crc::RandomSampleData margin(fixture.cells.stream2_size(),
                                       fixture.cells.stream2_positives());
    auto rs = crc::rs_estimate(margin, acc2, fixture.design);

    auto crc_report = crc::crc_closed_form(paired, acc1, acc2);
    const auto crc_ci = crc::crc_credible_interval(
        paired, acc1, acc2, draws, crc::rng::derive_seed(seed, 1));
    crc_report.credible_ci = crc::Interval{crc_ci.lower, crc_ci.upper};
    crc_report.credible_width = crc_ci.width();

    crc::MiConfig config;
    config.m = m;
    config.s_per_imputation = draws;
    config.seed = crc::rng::derive_seed(seed, 11);
    const auto rs_mi = crc::mi_estimate(paired, fixture.val1, fixture.val2,
                                        config, crc::MiTarget::Rs);
    config.seed = crc::rng::derive_seed(seed, 12);
    const auto crc_mi = crc::mi_estimate(paired, fixture.val1, fixture.val2,
                                         config, crc::MiTarget::Crc);

    if (format == "json") {
        json out;
        out["design"] = crc::io::design_to_json(fixture.design);
        out["cells"] = crc::io::cells_to_json(fixture.cells);
        out["validation1"] = crc::io::validation_to_json(fixture.val1);
        out["validation2"] = crc::io::validation_to_json(fixture.val2);
        out["acc1"] = crc::io::accuracy_to_json(acc1);
        out["acc2"] = crc::io::accuracy_to_json(acc2);
        out["seed"] = seed;
        out["m"] = m;
        out["draws"] = draws;
        out["estimates"] = json::array({
            crc::io::to_json(rs),
            crc::io::to_json(crc_report),
            crc::io::to_json(rs_mi),
            crc::io::to_json(crc_mi),
        });
        write_output(out_path, out.dump(2) + "\n");
        return kExitOk;
    }
    if (format != "text") {
        throw UsageError("unsupported format: " + format);
    }

    std::ostringstream out;
    out << "Bundled example: n_tot=1000, psi=0.1, stream-2 sample of 100\n";
    out << "cells: 3 12 0 2 27 130 6 77 743   "
           "(accuracies from the validation proportions)\n\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-8s %10s %8s %18s %8s %18s %8s\n",
                  "method", "estimate", "se", "wald 95% ci", "width",
                  "credible 95% ci", "width");
    out << line;
    auto row = [&](const char* name, double point, double se,
                   const std::optional<crc::Interval>& wald, double wald_width,
                   const std::optional<crc::Interval>& cred,
                   double cred_width) {
        char cred_text[96] = "-";
        char cred_w[32] = "-";
        if (cred) {
            std::snprintf(cred_text, sizeof(cred_text), "%s",
                          format_interval(*cred).c_str());
            std::snprintf(cred_w, sizeof(cred_w), "%.1f", cred_width);
        }
        std::snprintf(line, sizeof(line),
                      "%-8s %10.1f %8.1f %18s %8.1f %18s %8s\n", name, point,
                      se, format_interval(*wald).c_str(), wald_width, cred_text,
                      cred_w);
        out << line;
    };
    row("rs", rs.point, *rs.se, rs.wald_ci, *rs.wald_width, std::nullopt, 0.0);
    row("crc", crc_report.point, *crc_report.se, crc_report.wald_ci,
        *crc_report.wald_width, crc_report.credible_ci,
        *crc_report.credible_width);
    row("rs_mi", rs_mi.pooled_point, rs_mi.se, rs_mi.wald_ci, rs_mi.wald_width,
        std::nullopt, 0.0);
    row("crc_mi", crc_mi.pooled_point, crc_mi.se, crc_mi.wald_ci,
        crc_mi.wald_width, crc_mi.pooled_credible_ci,
        *crc_mi.pooled_credible_width);
    write_output(out_path, out.str());
    return kExitOk;
}

// ----------------------------------------------------------------- simulate

int cmd_simulate(const std::string& scenarios_path, const std::string& out_path,
                 unsigned workers, std::uint64_t seed,
                 const std::string& format) {
    const crc::TableFormat table_format = crc::parse_table_format(format);
    const json j = load_json_file(scenarios_path);
    if (!j.is_array() || j.empty()) {
        throw crc::Error(crc::ErrorCode::SchemaViolation,
                         "scenario file must be a nonempty JSON array");
    }

    std::vector<crc::SimulationConfig> configs;
    configs.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        configs.push_back(crc::io::parse_simulation_config(
            j[i], crc::rng::derive_seed(seed, i)));
    }

    std::vector<crc::SimulationSummary> summaries;
    summaries.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::cerr << "scenario " << (i + 1) << "/" << configs.size()
                  << ": n_tot=" << configs[i].n_tot
                  << " p=" << configs[i].prevalence << " n2=" << configs[i].n2
                  << " replicates=" << configs[i].n_replicates << " ..."
                  << std::flush;
        summaries.push_back(crc::run_scenario(configs[i], workers));
        std::cerr << " done (excluded " << summaries.back().n_excluded << ")\n";
    }

    write_output(out_path, crc::emit_table(summaries, table_format));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Misclassification-corrected case-count estimation for "
                 "two-stream surveillance with an anchor random sample"};
    app.require_subcommand(1);

    std::string input_path, out_path, method = "all", format = "csv";
    std::size_t draws = 1000, m = 100;
    std::uint64_t seed = crc::rng::kDefaultSeed;
    unsigned workers = 1;

    auto* estimate = app.add_subcommand(
        "estimate", "Point, interval, and credible estimates from observed data");
    estimate->add_option("-i,--input", input_path, "Input JSON file")->required();
    estimate->add_option("--method", method, "rs, crc, mle, or all")
        ->check(CLI::IsMember({"rs", "crc", "mle", "all"}));
    estimate->add_option("--draws", draws, "Posterior draws (at least 100)")
        ->check(CLI::Range(std::size_t{100}, std::size_t{100000000}));
    estimate->add_option("--seed", seed, "Root seed");
    estimate->add_option("-o,--out", out_path, "Output file (stdout if absent)");

    std::string mi_method = "all";
    auto* mi = app.add_subcommand(
        "mi-estimate", "Multiple-imputation estimates from validation tables");
    mi->add_option("-i,--input", input_path, "Input JSON file")->required();
    mi->add_option("--method", mi_method, "rs, crc, or all")
        ->check(CLI::IsMember({"rs", "crc", "all"}));
    mi->add_option("--m", m, "Number of imputations (at least 2)")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
    mi->add_option("--draws", draws, "Posterior draws per imputation")
        ->check(CLI::Range(std::size_t{100}, std::size_t{100000000}));
    mi->add_option("--seed", seed, "Root seed");
    mi->add_option("-o,--out", out_path, "Output file (stdout if absent)");

    std::string example_format = "text";
    auto* example = app.add_subcommand(
        "example", "Reproduce the bundled worked example end to end");
    example->add_option("--m", m, "Number of imputations")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
    example->add_option("--draws", draws, "Posterior draws")
        ->check(CLI::Range(std::size_t{100}, std::size_t{100000000}));
    example->add_option("--seed", seed, "Root seed");
    example->add_option("--format", example_format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    example->add_option("-o,--out", out_path, "Output file (stdout if absent)");

    auto* simulate = app.add_subcommand(
        "simulate", "Run replicate scenarios and tabulate estimator metrics");
    simulate->add_option("--scenarios", input_path, "Scenario JSON array file")
        ->required();
    simulate->add_option("-o,--out", out_path, "Output file (stdout if absent)");
    simulate->add_option("--workers", workers, "Worker threads")
        ->check(CLI::Range(1u, 1024u));
    simulate->add_option("--seed", seed, "Root seed for scenarios without one");
    simulate->add_option("--format", format, "csv, json, or markdown")
        ->check(CLI::IsMember({"csv", "json", "markdown"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return kExitUsage;
    }

    try {
        if (estimate->parsed()) {
            return cmd_estimate(input_path, method, draws, seed, out_path);
        }
        if (mi->parsed()) {
            return cmd_mi_estimate(input_path, mi_method, m, draws, seed,
                                   out_path);
        }
        if (example->parsed()) {
            return cmd_example(m, draws, seed, example_format, out_path);
        }
        if (simulate->parsed()) {
            return cmd_simulate(input_path, out_path, workers, seed, format);
        }
        print_error("usage", "no subcommand given");
        return kExitUsage;
    } catch (const UsageError& e) {
        print_error("usage", e.what());
        return kExitUsage;
    } catch (const crc::Error& e) {
        const bool usage = e.code() == crc::ErrorCode::SchemaViolation ||
                           e.code() == crc::ErrorCode::InvalidArgument ||
                           e.code() == crc::ErrorCode::UnsupportedFormat;
        print_error(to_string(e.code()), e.what());
        return usage ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return kExitRuntime;
    }
}
