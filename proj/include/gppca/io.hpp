#pragma once

#include "gppca/core.hpp"
#include "gppca/simulate.hpp"

#include <json.hpp>
#include <string>

namespace gppca {

/// Reads a CSV matrix: comma-separated rows, optional single header line,
/// UTF-8. Rejects ragged rows and non-finite entries with the offending line
/// number. Values written by write_csv_matrix round-trip bitwise.
Matrix read_csv_matrix(const std::string& path);

/// Writes row-major CSV with 17 significant digits, no header.
void write_csv_matrix(const Matrix& m, const std::string& path);

nlohmann::json scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const nlohmann::json& j);

/// Accepts either a preset name (see named_scenario) or a path to a JSON file.
Scenario load_scenario(const std::string& name_or_path);

nlohmann::json fit_config_to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(const nlohmann::json& j);

void write_model_json(const FittedModel& model, const std::string& path);
FittedModel read_model_json(const std::string& path);

}  // namespace gppca
