#include "anchorcrc/io.hpp"

#include <sstream>

namespace crc::io {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& message) {
    throw Error(ErrorCode::SchemaViolation, message);
}

const json& require_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) {
        schema_error(std::string("missing field: ") + key);
    }
    return *it;
}

double number_field(const json& j, const char* key) {
    const auto& v = require_field(j, key);
    if (!v.is_number()) {
        schema_error(std::string("field must be a number: ") + key);
    }
    return v.get<double>();
}

std::uint64_t count_field(const json& j, const char* key) {
    const auto& v = require_field(j, key);
    if (!v.is_number_integer() || v.is_number_float()) {
        schema_error(std::string("field must be a non-negative integer: ") + key);
    }
    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        schema_error(std::string("field must be a non-negative integer: ") + key);
    }
    return v.get<std::uint64_t>();
}

template <typename Fn>
auto reschema(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaViolation) throw;
        std::ostringstream msg;
        msg << "invalid " << what << ": " << e.what();
        schema_error(msg.str());
    }
}

} // namespace

TestAccuracy parse_test_accuracy(const json& j) {
    if (!j.is_object()) schema_error("accuracy must be an object");
    return reschema("accuracy", [&] {
        return TestAccuracy(number_field(j, "se"), number_field(j, "sp"));
    });
}

DesignParams parse_design(const json& j) {
    if (!j.is_object()) schema_error("design must be an object");
    return reschema("design", [&] {
        return DesignParams(count_field(j, "n_tot"), number_field(j, "psi"));
    });
}

CellCounts parse_cells(const json& j) {
    if (!j.is_object()) schema_error("cells must be an object");
    CellCounts cells;
    static const char* kKeys[] = {"n1", "n2", "n3", "n4", "n5",
                                  "n6", "n7", "n8", "n9"};
    for (std::size_t i = 0; i < 9; ++i) {
        cells.n[i] = count_field(j, kKeys[i]);
    }
    return cells;
}

ValidationCounts parse_validation(const json& j) {
    if (!j.is_object()) schema_error("validation must be an object");
    return reschema("validation", [&] {
        return ValidationCounts(count_field(j, "v11"), count_field(j, "v10"),
                                count_field(j, "v01"), count_field(j, "v00"));
    });
}

RandomSampleData parse_random_sample(const json& j) {
    if (!j.is_object()) schema_error("random_sample must be an object");
    return reschema("random_sample", [&] {
        return RandomSampleData(count_field(j, "n"), count_field(j, "n_pos"));
    });
}

SimulationConfig parse_simulation_config(const json& j,
                                         std::uint64_t fallback_seed) {
    if (!j.is_object()) schema_error("scenario must be an object");
    SimulationConfig config;
    config.n_tot = count_field(j, "n_tot");
    config.prevalence = number_field(j, "prevalence");
    config.n2 = count_field(j, "n2");
    config.acc1 = parse_test_accuracy(require_field(j, "acc1"));
    config.acc2 = parse_test_accuracy(require_field(j, "acc2"));

    auto optional_number = [&](const char* key, double fallback) {
        return j.contains(key) ? number_field(j, key) : fallback;
    };
    config.p_symptom_given_diseased =
        optional_number("p_symptom_given_diseased", config.p_symptom_given_diseased);
    config.p_symptom_given_healthy =
        optional_number("p_symptom_given_healthy", config.p_symptom_given_healthy);
    config.p_stream1_given_symptom =
        optional_number("p_stream1_given_symptom", config.p_stream1_given_symptom);
    config.p_stream1_given_no_symptom = optional_number(
        "p_stream1_given_no_symptom", config.p_stream1_given_no_symptom);

    if (j.contains("n_replicates")) config.n_replicates = count_field(j, "n_replicates");
    if (j.contains("s_draws")) config.s_draws = count_field(j, "s_draws");
    if (j.contains("fixed_case_count")) {
        const auto& v = j.at("fixed_case_count");
        if (!v.is_boolean()) schema_error("fixed_case_count must be a boolean");
        config.fixed_case_count = v.get<bool>();
    }
    config.seed = j.contains("seed") ? count_field(j, "seed") : fallback_seed;

    reschema("scenario", [&] { config.validate(); return 0; });
    return config;
}

json to_json(const Interval& interval) {
    return json::array({interval.lower, interval.upper});
}

json to_json(const EstimateReport& report) {
    json j;
    j["estimator"] = to_string(report.kind);
    j["point"] = report.point;
    if (report.se) j["se"] = *report.se;
    if (report.wald_ci) {
        j["wald_ci"] = to_json(*report.wald_ci);
        j["wald_width"] = *report.wald_width;
    }
    if (report.credible_ci) {
        j["credible_ci"] = to_json(*report.credible_ci);
        j["credible_width"] = *report.credible_width;
    }
    if (report.degenerate_fpc) j["degenerate_fpc"] = true;
    if (report.boundary_solution) j["boundary_solution"] = true;
    return j;
}

json to_json(const CredibleInterval& interval) {
    json j;
    j["source"] = to_string(interval.source);
    if (interval.failed()) {
        j["failed"] = true;
        return j;
    }
    j["ci"] = json::array({interval.lower, interval.upper});
    j["width"] = interval.width();
    j["level"] = interval.level;
    j["draws"] = interval.n_draws;
    if (interval.n_skipped > 0) j["skipped_draws"] = interval.n_skipped;
    if (interval.source == IntervalSource::NarrowerOf) {
        j["chosen"] = to_string(interval.chosen);
    }
    return j;
}

json to_json(const MiResult& result) {
    json j;
    j["estimator"] = to_string(result.kind);
    j["point"] = result.pooled_point;
    j["se"] = result.se;
    j["wald_ci"] = to_json(result.wald_ci);
    j["wald_width"] = result.wald_width;
    if (result.pooled_credible_ci) {
        j["credible_ci"] = to_json(*result.pooled_credible_ci);
        j["credible_width"] = *result.pooled_credible_width;
    }
    j["m"] = result.m;
    j["between_var"] = result.between_var;
    j["within_var_mean"] = result.within_var_mean;
    j["total_var"] = result.total_var;
    j["redraws"] = result.total_redraws;
    return j;
}

json cells_to_json(const CellCounts& cells) {
    json j;
    static const char* kKeys[] = {"n1", "n2", "n3", "n4", "n5",
                                  "n6", "n7", "n8", "n9"};
    for (std::size_t i = 0; i < 9; ++i) j[kKeys[i]] = cells.n[i];
    return j;
}

json design_to_json(const DesignParams& design) {
    return json{{"n_tot", design.n_tot}, {"psi", design.psi}};
}

json accuracy_to_json(const TestAccuracy& acc) {
    return json{{"se", acc.se}, {"sp", acc.sp}};
}

json validation_to_json(const ValidationCounts& validation) {
    return json{{"v11", validation.v11},
                {"v10", validation.v10},
                {"v01", validation.v01},
                {"v00", validation.v00}};
}

} // namespace crc::io
