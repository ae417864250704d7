#pragma once

// JSON wire formats. Field names are part of the external contract:
//   cells        {"n1":int, ..., "n9":int}
//   accuracy     {"se":float, "sp":float}
//   design       {"n_tot":int, "psi":float}
//   validation   {"v11":int, "v10":int, "v01":int, "v00":int}
// Parsing failures throw Error(SchemaViolation) with a field-level message.

#include "anchorcrc/bayes.hpp"
#include "anchorcrc/mi.hpp"
#include "anchorcrc/model.hpp"
#include "anchorcrc/sim.hpp"

#include <json.hpp>

namespace crc::io {

TestAccuracy parse_test_accuracy(const nlohmann::json& j);
DesignParams parse_design(const nlohmann::json& j);
CellCounts parse_cells(const nlohmann::json& j);
ValidationCounts parse_validation(const nlohmann::json& j);
RandomSampleData parse_random_sample(const nlohmann::json& j);

/// Scenario object; absent optional fields take the documented defaults.
/// When the scenario omits "seed", `fallback_seed` is used.
SimulationConfig parse_simulation_config(const nlohmann::json& j,
                                         std::uint64_t fallback_seed);

nlohmann::json to_json(const Interval& interval);
nlohmann::json to_json(const EstimateReport& report);
nlohmann::json to_json(const CredibleInterval& interval);
nlohmann::json to_json(const MiResult& result);

nlohmann::json cells_to_json(const CellCounts& cells);
nlohmann::json design_to_json(const DesignParams& design);
nlohmann::json accuracy_to_json(const TestAccuracy& acc);
nlohmann::json validation_to_json(const ValidationCounts& validation);

} // namespace crc::io
