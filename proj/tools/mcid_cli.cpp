// Command-line front end: estimation, coordinate and contrast tests,
// bandwidth selection, and Monte Carlo simulation presets.
//
// Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mcid/bandwidth.hpp"
#include "mcid/dataset.hpp"
#include "mcid/estimation.hpp"
#include "mcid/inference.hpp"
#include "mcid/parallel.hpp"
#include "mcid/serialize.hpp"
#include "mcid/simulation.hpp"
#include "mcid/stats.hpp"

namespace {

using namespace mcid;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write to " + path);
  out << content;
}

double env_override(const char* name, double fallback) {
  const char* v = std::getenv(name);
  if (!v) return fallback;
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("environment variable ") + name +
                                " is not numeric: " + v);
  }
}

// lo:hi:count, log-spaced
std::vector<double> parse_grid(const std::string& spec) {
  double lo = 0.0, hi = 0.0;
  int count = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(spec);
  if (!(is >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || is.peek() != EOF ||
      !(lo > 0.0) || !(hi > lo) || count < 2)
    throw std::invalid_argument("malformed grid spec '" + spec + "', expected lo:hi:count");
  std::vector<double> g(count);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i)
    g[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / (count - 1));
  return g;
}

struct CommonOpts {
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware
  std::string weights = "inverse";
  int kernel_order = 2;
  bool standardize_z = false;
  bool no_plug_refit = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--threads", o.threads, "worker thread cap (0 = all cores)");
  cmd->add_option("--weights", o.weights, "inverse | uniform")
      ->check(CLI::IsMember({"inverse", "uniform"}));
  cmd->add_option("--kernel-order", o.kernel_order, "even kernel order (default 2)");
  cmd->add_flag("--standardize-z", o.standardize_z, "rescale z columns to unit sample sd");
  cmd->add_flag("--no-plug-refit", o.no_plug_refit,
                "skip the unpenalized support refit of the fold estimates");
}

WeightMode weight_mode(const CommonOpts& o) {
  return o.weights == "uniform" ? WeightMode::Uniform : WeightMode::InverseProportion;
}

TestConfig base_test_config(const CommonOpts& o) {
  TestConfig cfg;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.weight_mode = weight_mode(o);
  cfg.kernel_order = o.kernel_order;
  cfg.delta_c = env_override("MCID_DELTA_C", cfg.delta_c);
  cfg.lambda_c = env_override("MCID_LAMBDA_C", cfg.lambda_c);
  cfg.h_c = env_override("MCID_H_C", cfg.h_c);
  cfg.g_c = env_override("MCID_G_C", cfg.g_c);
  cfg.b_c = env_override("MCID_B_C", cfg.b_c);
  cfg.h = env_override("MCID_H", cfg.h);
  cfg.g = env_override("MCID_G", cfg.g);
  cfg.b = env_override("MCID_B", cfg.b);
  cfg.lambda_prime = env_override("MCID_LAMBDA_PRIME", cfg.lambda_prime);
  cfg.relaxed_plug = !o.no_plug_refit;
  return cfg;
}

void apply_delta_spec(TestConfig& cfg, const std::string& spec) {
  if (spec == "rule") {
    cfg.delta_rule = DeltaRule::RateRule;
  } else if (spec == "data-driven") {
    cfg.delta_rule = DeltaRule::DataDriven;
  } else {
    try {
      cfg.delta = std::stod(spec);
    } catch (const std::exception&) {
      throw std::invalid_argument("--delta expects a number, 'rule', or 'data-driven'");
    }
    cfg.delta_rule = DeltaRule::Explicit;
  }
}

Dataset load_data(const std::string& path, bool standardize) {
  Dataset d = load_csv(path);
  return standardize ? d.standardized_z() : d;
}

int cmd_estimate(const std::string& data_path, const CommonOpts& common,
                 const std::string& delta_spec, const std::string& lambda_spec,
                 const std::string& delta_grid_spec, const std::string& lambda_grid_spec,
                 int cv_folds, const std::string& out_path) {
  const Dataset data = load_data(data_path, common.standardize_z);
  const Kernel kernel = make_gaussian_order(common.kernel_order);
  const WeightFn weights = empirical_weights(data, weight_mode(common));

  double delta = 0.0, lambda = 0.0;
  const bool auto_delta = delta_spec == "auto";
  const bool auto_lambda = lambda_spec == "auto";
  if (!auto_delta) delta = std::stod(delta_spec);
  if (!auto_lambda) lambda = std::stod(lambda_spec);

  if (auto_delta || auto_lambda) {
    std::vector<double> dgrid =
        auto_delta ? parse_grid(delta_grid_spec) : std::vector<double>{delta};
    std::vector<double> lgrid =
        auto_lambda ? parse_grid(lambda_grid_spec) : std::vector<double>{lambda};
    const CrossValidationResult cv = cross_validate(data, dgrid, lgrid, cv_folds, common.seed,
                                                    weight_mode(common), kernel, {},
                                                    common.threads);
    delta = cv.delta;
    lambda = cv.lambda;
    std::cerr << "cross-validation selected delta=" << delta << " lambda=" << lambda << "\n";
  }

  const RiskContext ctx(data, weights, kernel, delta);
  const FittedModel model = fit_penalized(ctx, lambda);
  write_file(out_path, fitted_model_to_json(model, data.d));
  std::cout << "wrote " << out_path << " (objective " << model.objective << ", "
            << (model.converged ? "converged" : "NOT converged") << ")\n";
  return 0;
}

Eigen::VectorXd load_contrast(const std::string& path, Eigen::Index d) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open contrast file " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty contrast file " + path);
  std::vector<double> vals;
  std::istringstream is(line);
  std::string cell;
  while (std::getline(is, cell, ',')) vals.push_back(std::stod(cell));
  if (static_cast<Eigen::Index>(vals.size()) != d)
    throw std::invalid_argument("contrast file must hold one row of d numbers");
  Eigen::VectorXd c(d);
  for (Eigen::Index i = 0; i < d; ++i) c[i] = vals[i];
  return c;
}

int cmd_test(const std::string& data_path, const CommonOpts& common, long coord,
             const std::string& contrast_path, bool all_coords, const std::string& delta_spec,
             double alpha, double lambda, double lambda_prime, double h, double g,
             const std::string& variance_mode, const std::string& out_path) {
  const int given = (coord > 0 ? 1 : 0) + (!contrast_path.empty() ? 1 : 0) + (all_coords ? 1 : 0);
  if (given != 1)
    throw std::invalid_argument("give exactly one of --coord, --contrast, --all-coords");

  const Dataset data = load_data(data_path, common.standardize_z);
  TestConfig cfg = base_test_config(common);
  apply_delta_spec(cfg, delta_spec);
  if (lambda > 0.0) cfg.lambda = lambda;
  if (lambda_prime > 0.0) cfg.lambda_prime = lambda_prime;
  if (h > 0.0) cfg.h = h;
  if (g > 0.0) cfg.g = g;
  cfg.variance_mode = variance_mode == "moment" ? VarianceMode::Moment : VarianceMode::Pilot;

  if (all_coords) {
    std::vector<TestResult> results(static_cast<std::size_t>(data.d));
    TestConfig worker_cfg = cfg;
    worker_cfg.threads = 1;
    parallel_for(static_cast<std::size_t>(data.d), common.threads, [&](std::size_t j) {
      results[j] = score_test(data, static_cast<Eigen::Index>(j) + 1, worker_cfg);
    });
    std::ostringstream os;
    os.precision(17);
    os << "coord,statistic,p_value,p_bonferroni,significant_bonferroni\n";
    for (std::size_t j = 0; j < results.size(); ++j) {
      const double p_bonf = std::min(1.0, results[j].p_value * static_cast<double>(data.d));
      os << (j + 1) << "," << results[j].statistic << "," << results[j].p_value << ","
         << p_bonf << "," << (results[j].p_value < alpha / static_cast<double>(data.d)) << "\n";
    }
    write_file(out_path, os.str());
    std::cout << "wrote " << out_path << "\n";
    return 0;
  }

  TestResult res;
  if (coord > 0) {
    res = score_test(data, coord, cfg);
  } else {
    res = linear_combination_test(data, load_contrast(contrast_path, data.d), cfg);
  }
  write_file(out_path, test_result_to_json(res));
  std::cout << "statistic " << res.statistic << ", p-value " << res.p_value << " (delta "
            << res.delta_used << "); wrote " << out_path << "\n";
  return 0;
}

int cmd_bandwidth(const std::string& data_path, const CommonOpts& common, long coord,
                  const std::string& grid_spec, double b, const std::string& out_path,
                  const std::string& curves_path) {
  const Dataset data = load_data(data_path, common.standardize_z);
  TestConfig cfg = base_test_config(common);
  if (!grid_spec.empty()) cfg.delta_grid = parse_grid(grid_spec);
  if (b > 0.0) cfg.b = b;
  const BandwidthSelection sel = select_bandwidth(data, coord, cfg);
  write_file(out_path, bandwidth_selection_to_json(sel));
  if (!curves_path.empty()) write_file(curves_path, bandwidth_curves_to_csv(sel));
  std::cout << "delta_hat " << sel.delta_hat << "; wrote " << out_path << "\n";
  return 0;
}

struct Preset {
  DGPConfig dgp;
  bool data_driven = false;
  std::vector<double> beta1_grid;  // nonempty for power presets
};

Preset lookup_preset(const std::string& name) {
  Preset p;
  if (name == "table1-gaussian") {
    p.dgp = DGPConfig{Scenario::HeteroGaussian, 800, 100, 3, 0.2, 0.0, false, 1, 1};
  } else if (name == "table2-uniform") {
    p.dgp = DGPConfig{Scenario::HeteroUniform, 800, 100, 3, 0.2, 0.0, false, 1, 1};
  } else if (name == "table4-gaussian") {
    p.dgp = DGPConfig{Scenario::HeteroGaussian, 800, 100, 3, 0.2, 0.0, false, 1, 1};
    p.data_driven = true;
  } else if (name == "power-gaussian-s3" || name == "power-gaussian-s10") {
    p.dgp = DGPConfig{Scenario::HeteroGaussian, 800, 100, name.back() == '0' ? 10 : 3,
                      0.2, 0.0, false, 1, 1};
    p.beta1_grid = {0.02, 0.05, 0.075, 0.10, 0.15, 0.20, 0.25, 0.30};
  } else if (name == "power-uniform-s3" || name == "power-uniform-s10") {
    p.dgp = DGPConfig{Scenario::HeteroUniform, 800, 100, name.back() == '0' ? 10 : 3,
                      0.2, 0.0, false, 1, 1};
    p.beta1_grid = {0.025, 0.05, 0.075, 0.10, 0.125, 0.15, 0.175};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return p;
}

void apply_cell(DGPConfig& dgp, const std::string& cell) {
  std::istringstream is(cell);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad --cell item '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key == "d")
      dgp.d = std::stol(val);
    else if (key == "s")
      dgp.s = std::stol(val);
    else if (key == "n")
      dgp.n = std::stol(val);
    else if (key == "rho")
      dgp.rho = std::stod(val);
    else
      throw std::invalid_argument("unknown --cell key '" + key + "'");
  }
}

int cmd_simulate(const CommonOpts& common, const std::string& preset_name,
                 const std::string& cell, const std::string& scenario, long n, long d, long s,
                 double rho, double beta1, bool beta1_given, int reps, double alpha,
                 const std::string& delta_spec, bool freeze_beta, const std::string& out_path,
                 const std::string& qq_path, const std::string& power_path) {
  Preset preset;
  if (!preset_name.empty()) {
    preset = lookup_preset(preset_name);
  } else {
    preset.dgp.scenario =
        scenario == "uniform" ? Scenario::HeteroUniform : Scenario::HeteroGaussian;
  }
  if (!cell.empty()) apply_cell(preset.dgp, cell);
  if (n > 0) preset.dgp.n = n;
  if (d > 0) preset.dgp.d = d;
  if (s > 0) preset.dgp.s = s;
  if (rho >= 0.0) preset.dgp.rho = rho;
  preset.dgp.seed = common.seed;
  preset.dgp.beta_draw_seed = derive_seed(common.seed, 0x62657461ULL);

  TestConfig cfg = base_test_config(common);
  cfg.threads = 1;
  if (!delta_spec.empty())
    apply_delta_spec(cfg, delta_spec);
  else if (preset.data_driven)
    cfg.delta_rule = DeltaRule::DataDriven;

  if (beta1_given) {
    preset.dgp.beta1 = beta1;
    preset.beta1_grid.clear();
  }

  if (!preset.beta1_grid.empty()) {
    // power mode over the preset's beta1 grid
    std::ostringstream os;
    os.precision(17);
    os << "beta1,rejection_rate,rejection_se,replicates\n";
    for (double b1 : preset.beta1_grid) {
      DGPConfig dgp = preset.dgp;
      dgp.beta1 = b1;
      const SimulationReport rep =
          run_monte_carlo(dgp, cfg, reps, alpha, common.seed, freeze_beta, common.threads);
      os << b1 << "," << rep.rejection_rate << "," << rep.rejection_se << ","
         << rep.replicates << "\n";
      std::cout << "beta1 " << b1 << ": rejection rate " << rep.rejection_rate << "\n";
    }
    const std::string path = power_path.empty() ? out_path : power_path;
    write_file(path, os.str());
    std::cout << "wrote " << path << "\n";
    return 0;
  }

  const SimulationReport rep =
      run_monte_carlo(preset.dgp, cfg, reps, alpha, common.seed, freeze_beta, common.threads);
  write_file(out_path, simulation_report_to_json(rep));
  if (!qq_path.empty()) write_file(qq_path, qq_points_to_csv(export_qq_data(rep.statistics)));
  std::cout << "rejection rate " << rep.rejection_rate << " (se " << rep.rejection_se << ", "
            << rep.replicates << " replicates, " << rep.excluded << " excluded); wrote "
            << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"high-dimensional linear threshold estimation and score tests"};
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand("estimate", "penalized smoothed-surrogate fit");
  CommonOpts est_common;
  std::string est_data, est_delta = "auto", est_lambda = "auto", est_out = "model.json";
  std::string est_dgrid = "0.1:1.2:6", est_lgrid = "0.01:1:8";
  int est_folds = 5;
  est->add_option("--data", est_data, "input CSV")->required();
  est->add_option("--delta", est_delta, "bandwidth or 'auto'");
  est->add_option("--lambda", est_lambda, "penalty or 'auto'");
  est->add_option("--delta-grid", est_dgrid, "CV grid lo:hi:count (log-spaced)");
  est->add_option("--lambda-grid", est_lgrid, "CV grid lo:hi:count (log-spaced)");
  est->add_option("--cv-folds", est_folds, "cross-validation folds");
  est->add_option("--out", est_out, "output JSON path");
  add_common(est, est_common);

  // test
  auto* tst = app.add_subcommand("test", "decorrelated score test");
  CommonOpts tst_common;
  std::string tst_data, tst_contrast, tst_delta = "rule", tst_out = "test.json";
  std::string tst_variance = "pilot";
  long tst_coord = 0;
  bool tst_all = false;
  double tst_alpha = 0.05, tst_lambda = 0.0, tst_lp = 0.0, tst_h = 0.0, tst_g = 0.0;
  tst->add_option("--data", tst_data, "input CSV")->required();
  tst->add_option("--coord", tst_coord, "tested coordinate (1-based)");
  tst->add_option("--contrast", tst_contrast, "CSV with one row of d contrast weights");
  tst->add_flag("--all-coords", tst_all, "test every coordinate");
  tst->add_option("--delta", tst_delta, "number, 'rule', or 'data-driven'");
  tst->add_option("--alpha", tst_alpha, "significance level");
  tst->add_option("--lambda", tst_lambda, "fit penalty (default: rate rule)");
  tst->add_option("--lambda-prime", tst_lp, "Dantzig tuning (default: rate rule)");
  tst->add_option("--pilot-h", tst_h, "bias pilot bandwidth");
  tst->add_option("--pilot-g", tst_g, "variance pilot bandwidth");
  tst->add_option("--variance-mode", tst_variance, "pilot | moment")
      ->check(CLI::IsMember({"pilot", "moment"}));
  tst->add_option("--out", tst_out, "output path (JSON, or CSV for --all-coords)");
  add_common(tst, tst_common);

  // bandwidth
  auto* bw = app.add_subcommand("bandwidth", "data-driven bandwidth selection");
  CommonOpts bw_common;
  std::string bw_data, bw_grid, bw_out = "bandwidth.json", bw_curves;
  long bw_coord = 1;
  double bw_b = 0.0;
  bw->add_option("--data", bw_data, "input CSV")->required();
  bw->add_option("--coord", bw_coord, "tested coordinate (1-based)");
  bw->add_option("--grid", bw_grid, "delta grid lo:hi:count (log-spaced)");
  bw->add_option("--b", bw_b, "double-smoothing bandwidth");
  bw->add_option("--out", bw_out, "output JSON path");
  bw->add_option("--emit-curves", bw_curves, "write delta,V,B,M curve CSV here");
  add_common(bw, bw_common);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo reproduction harness");
  CommonOpts sim_common;
  std::string sim_preset, sim_cell, sim_scenario = "gaussian", sim_delta;
  std::string sim_out = "simulation.json", sim_qq, sim_power;
  long sim_n = 0, sim_d = 0, sim_s = 0;
  double sim_rho = -1.0, sim_beta1 = 0.0, sim_alpha = 0.05;
  int sim_reps = 250;
  bool sim_freeze = false;
  bool sim_beta1_given = false;
  sim->add_option("--preset", sim_preset,
                  "table1-gaussian | table2-uniform | table4-gaussian | power-gaussian-s3 | "
                  "power-gaussian-s10 | power-uniform-s3 | power-uniform-s10");
  sim->add_option("--cell", sim_cell, "overrides, e.g. d=100,s=3,rho=0.2");
  sim->add_option("--scenario", sim_scenario, "gaussian | uniform")
      ->check(CLI::IsMember({"gaussian", "uniform"}));
  sim->add_option("--n", sim_n, "sample size");
  sim->add_option("--d", sim_d, "dimension");
  sim->add_option("--s", sim_s, "sparsity");
  sim->add_option("--rho", sim_rho, "AR correlation");
  sim->add_option("--beta1", sim_beta1, "signal at coordinate 1 (pre-normalization)")
      ->trigger_on_parse()
      ->each([&](const std::string&) { sim_beta1_given = true; });
  sim->add_option("--reps", sim_reps, "replicates");
  sim->add_option("--alpha", sim_alpha, "significance level");
  sim->add_option("--delta", sim_delta, "number, 'rule', or 'data-driven'");
  sim->add_flag("--freeze-beta", sim_freeze, "draw coefficient slots 2..s once, not per replicate");
  sim->add_option("--out", sim_out, "report JSON path");
  sim->add_option("--qq-out", sim_qq, "QQ pairs CSV path");
  sim->add_option("--power-out", sim_power, "power-curve CSV path");
  add_common(sim, sim_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (est->parsed())
      return cmd_estimate(est_data, est_common, est_delta, est_lambda, est_dgrid, est_lgrid,
                          est_folds, est_out);
    if (tst->parsed())
      return cmd_test(tst_data, tst_common, tst_coord, tst_contrast, tst_all, tst_delta,
                      tst_alpha, tst_lambda, tst_lp, tst_h, tst_g, tst_variance, tst_out);
    if (bw->parsed())
      return cmd_bandwidth(bw_data, bw_common, bw_coord, bw_grid, bw_b, bw_out, bw_curves);
    if (sim->parsed())
      return cmd_simulate(sim_common, sim_preset, sim_cell, sim_scenario, sim_n, sim_d, sim_s,
                          sim_rho, sim_beta1, sim_beta1_given, sim_reps, sim_alpha, sim_delta,
                          sim_freeze, sim_out, sim_qq, sim_power);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
