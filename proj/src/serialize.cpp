#include "mcid/serialize.hpp"

#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace mcid {

using nlohmann::json;

namespace {

json sparse_vector(const Eigen::VectorXd& v) {
  json entries = json::array();
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (v[j] != 0.0) entries.push_back({{"index", j + 1}, {"value", v[j]}});
  return entries;
}

json fitted_model_json(const FittedModel& m, Eigen::Index dim) {
  json stages = json::array();
  for (const StageRecord& s : m.stage_trace)
    stages.push_back({{"lambda", s.lambda}, {"objective", s.objective}, {"iterations", s.iterations}});
  return json{{"schema_version", kSchemaVersion},
              {"dim", dim},
              {"beta_hat", sparse_vector(m.beta_hat)},
              {"delta", m.delta},
              {"lambda", m.lambda},
              {"objective", m.objective},
              {"iterations", m.iterations},
              {"converged", m.converged},
              {"kkt_residual", m.kkt_residual},
              {"stage_trace", stages}};
}

json decor_json(const DecorrelationVector& d) {
  return json{{"omega_hat", sparse_vector(d.omega_hat)},
              {"v_hat", sparse_vector(d.v_hat)},
              {"lambda_prime", d.lambda_prime},
              {"feasibility_residual", d.feasibility_residual},
              {"psd_projected", d.psd_projected}};
}

std::string csv_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string fitted_model_to_json(const FittedModel& model, Eigen::Index dim) {
  return fitted_model_json(model, dim).dump(2);
}

FittedModel fitted_model_from_json(const std::string& text, Eigen::Index* dim_out) {
  const json j = json::parse(text);
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw std::runtime_error("fitted model: unsupported schema version");
  FittedModel m;
  const auto dim = j.at("dim").get<Eigen::Index>();
  if (dim_out) *dim_out = dim;
  m.beta_hat = Eigen::VectorXd::Zero(dim);
  for (const auto& e : j.at("beta_hat")) {
    const auto idx = e.at("index").get<Eigen::Index>();
    if (idx < 1 || idx > dim) throw std::runtime_error("fitted model: index out of range");
    m.beta_hat[idx - 1] = e.at("value").get<double>();
  }
  m.delta = j.at("delta").get<double>();
  m.lambda = j.at("lambda").get<double>();
  m.objective = j.at("objective").get<double>();
  m.iterations = j.at("iterations").get<int>();
  m.converged = j.at("converged").get<bool>();
  m.kkt_residual = j.value("kkt_residual", 0.0);
  for (const auto& s : j.at("stage_trace"))
    m.stage_trace.push_back({s.at("lambda").get<double>(), s.at("objective").get<double>(),
                             s.at("iterations").get<int>()});
  return m;
}

std::string test_result_to_json(const TestResult& r) {
  json j{{"schema_version", kSchemaVersion},
         {"statistic", r.statistic},
         {"p_value", r.p_value},
         {"mu_hat", r.mu_hat},
         {"sigma_hat", r.sigma_hat},
         {"delta_used", r.delta_used},
         {"score_value", r.score_value},
         {"fold_scores", {r.fold_scores.first, r.fold_scores.second}},
         {"bandwidth_data_driven", r.bandwidth_data_driven},
         {"beta_hat_fold1", fitted_model_json(r.beta_hats.first, r.beta_hats.first.beta_hat.size())},
         {"beta_hat_fold2", fitted_model_json(r.beta_hats.second, r.beta_hats.second.beta_hat.size())},
         {"decor_fold1", decor_json(r.decor.first)},
         {"decor_fold2", decor_json(r.decor.second)}};
  if (r.contrast) {
    json c = json::array();
    for (Eigen::Index i = 0; i < r.contrast->size(); ++i) c.push_back((*r.contrast)[i]);
    j["contrast"] = c;
  }
  return j.dump(2);
}

std::string bandwidth_selection_to_json(const BandwidthSelection& sel) {
  return json{{"schema_version", kSchemaVersion},
              {"delta_hat", sel.delta_hat},
              {"grid", sel.grid},
              {"m_hat", sel.m_hat},
              {"v_hat_curve", sel.v_hat_curve},
              {"b_hat_curve", sel.b_hat_curve},
              {"b_pilot", sel.b_pilot},
              {"kernel_j_order", sel.kernel_j_order}}
      .dump(2);
}

std::string simulation_report_to_json(const SimulationReport& rep) {
  json records = json::array();
  for (const ReplicateRecord& r : rep.records)
    records.push_back({{"statistic", r.statistic},
                       {"p_value", r.p_value},
                       {"delta_used", r.delta_used},
                       {"rejected", r.rejected},
                       {"converged1", r.converged1},
                       {"converged2", r.converged2},
                       {"kkt_residual1", r.kkt_residual1},
                       {"kkt_residual2", r.kkt_residual2}});
  return json{{"schema_version", kSchemaVersion},
              {"scenario", rep.dgp.scenario == Scenario::HeteroGaussian ? "gaussian" : "uniform"},
              {"n", rep.dgp.n},
              {"d", rep.dgp.d},
              {"s", rep.dgp.s},
              {"rho", rep.dgp.rho},
              {"beta1", rep.dgp.beta1},
              {"equal_beta", rep.dgp.equal_beta},
              {"alpha", rep.alpha},
              {"replicates", rep.replicates},
              {"excluded", rep.excluded},
              {"rejection_rate", rep.rejection_rate},
              {"rejection_se", rep.rejection_se},
              {"statistics", rep.statistics},
              {"records", records}}
      .dump(2);
}

std::string bandwidth_curves_to_csv(const BandwidthSelection& sel) {
  std::string out = "delta,V,B,M\n";
  for (std::size_t i = 0; i < sel.grid.size(); ++i) {
    out += csv_double(sel.grid[i]) + "," + csv_double(sel.v_hat_curve[i]) + "," +
           csv_double(sel.b_hat_curve[i]) + "," + csv_double(sel.m_hat[i]) + "\n";
  }
  return out;
}

std::string qq_points_to_csv(const std::vector<QQPoint>& points) {
  std::string out = "theoretical,observed\n";
  for (const QQPoint& p : points)
    out += csv_double(p.theoretical) + "," + csv_double(p.observed) + "\n";
  return out;
}

}  // namespace mcid
