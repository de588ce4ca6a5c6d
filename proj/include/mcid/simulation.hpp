#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mcid/dataset.hpp"
#include "mcid/inference.hpp"

namespace mcid {

enum class Scenario { HeteroGaussian, HeteroUniform };

struct DGPConfig {
  Scenario scenario = Scenario::HeteroGaussian;
  Eigen::Index n = 800;
  Eigen::Index d = 100;
  Eigen::Index s = 3;      // sparsity, slots 1..s nonzero before normalization
  double rho = 0.2;        // AR(1) correlation of Z
  double beta1 = 0.0;      // signal at slot 1 before normalization
  bool equal_beta = false; // beta*_1..s all equal instead of Unif[1,2] draws
  std::uint64_t seed = 1;
  std::uint64_t beta_draw_seed = 1;

  void validate() const;
};

// Draws the coefficient vector: beta1 at slot 1, Unif[1,2] at slots 2..s
// (or all-equal entries when equal_beta), zeros after, normalized to unit
// l2 norm.
Eigen::VectorXd draw_beta_star(const DGPConfig& cfg);

// X ~ N(0,1), Z ~ AR(1) with correlation rho, eps per scenario with zero
// conditional median, Y = sign(X - beta*'Z + eps).
std::pair<Dataset, Eigen::VectorXd> generate_dgp(const DGPConfig& cfg);

struct ReplicateRecord {
  double statistic = 0.0;
  double p_value = 1.0;
  double delta_used = 0.0;
  bool rejected = false;
  bool converged1 = false;
  bool converged2 = false;
  bool kkt_ok = true;        // both fold fits converged
  double kkt_residual1 = 0.0;  // exact stationarity residual, fold-1 fit
  double kkt_residual2 = 0.0;  // exact stationarity residual, fold-2 fit
};

struct SimulationReport {
  DGPConfig dgp;
  int replicates = 0;
  int excluded = 0;
  double alpha = 0.05;
  double rejection_rate = 0.0;
  double rejection_se = 0.0;
  std::vector<double> statistics;
  std::vector<ReplicateRecord> records;
  double wall_seconds = 0.0;
};

// Monte Carlo over fresh data sets; coefficient slots 2..s are redrawn per
// replicate unless freeze_beta is set. A failing replicate is recorded and
// excluded; more than 5% exclusions fails the run.
SimulationReport run_monte_carlo(const DGPConfig& dgp, const TestConfig& test_cfg, int replicates,
                                 double alpha, std::uint64_t master_seed, bool freeze_beta = false,
                                 int threads = 1);

struct QQPoint {
  double theoretical;
  double observed;
};

// Sorted statistics against normal quantiles Phi^{-1}((i - 0.5)/m).
std::vector<QQPoint> export_qq_data(const std::vector<double>& statistics);

// --- Monte Carlo MSE oracle -------------------------------------------------

enum class OracleVMode {
  LargeNDantzig,  // average Dantzig solutions at beta* over 10n-sized draws
  UnitTested      // v* = e_j, no nuisance projection
};

struct OracleCurve {
  std::vector<double> grid;
  std::vector<double> m;      // mean of squares per grid point
  std::vector<double> sd;     // replicate standard deviation of the squares
  Eigen::VectorXd v_star;
};

// Approximates M(delta) = E[(v*' grad R^n_delta(beta*))^2] by fresh draws.
OracleCurve mc_mse_oracle(const DGPConfig& dgp, const Eigen::VectorXd& beta_star,
                          OracleVMode v_mode, Eigen::Index tested_index,
                          const std::vector<double>& grid, int reps, std::uint64_t seed,
                          const TestConfig& cfg, int threads = 1);

}  // namespace mcid
