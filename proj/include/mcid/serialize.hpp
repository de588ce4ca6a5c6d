#pragma once

#include <string>

#include "mcid/bandwidth.hpp"
#include "mcid/estimation.hpp"
#include "mcid/inference.hpp"
#include "mcid/simulation.hpp"

namespace mcid {

// All JSON payloads carry {"schema_version": 1}. Coefficients are written
// sparsely as 1-based index/value pairs.
inline constexpr int kSchemaVersion = 1;

std::string fitted_model_to_json(const FittedModel& model, Eigen::Index dim);
FittedModel fitted_model_from_json(const std::string& text, Eigen::Index* dim_out = nullptr);

std::string test_result_to_json(const TestResult& result);
std::string bandwidth_selection_to_json(const BandwidthSelection& sel);
std::string simulation_report_to_json(const SimulationReport& report);

// delta,V,B,M rows for plotting.
std::string bandwidth_curves_to_csv(const BandwidthSelection& sel);
std::string qq_points_to_csv(const std::vector<QQPoint>& points);

}  // namespace mcid
