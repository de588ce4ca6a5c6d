#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "mcid/risk.hpp"

namespace mcid {

struct PathConfig {
  int stages = 25;
  double nu = 0.25;          // sufficient-decrease parameter
  double eta = 0.25;         // line-search shrink factor
  double eps_tgt = 1e-4;     // stationarity tolerance at the target lambda
  double radius = 1e3;       // ||beta||_2 ball constraint
  int max_inner_iters = 5000;

  void validate() const;
};

struct StageRecord {
  double lambda;
  double objective;
  int iterations;
};

struct FittedModel {
  Eigen::VectorXd beta_hat;
  double delta = 0.0;
  double lambda = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;  // exact stationarity residual at beta_hat
  std::vector<StageRecord> stage_trace;
};

// Stationarity residual of min R + lambda||.||_1 at beta: excess of
// |grad_j| over lambda on zero coordinates, |grad_j + lambda sign(beta_j)|
// on the rest.
double penalized_kkt_residual(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta,
                              double lambda);

// Proximal operator of t*(lambda ||.||_1 + indicator of the l2 ball):
// soft-threshold then radial projection (exact for this pair).
Eigen::VectorXd prox_l1_ball(const Eigen::VectorXd& v, double thresh, double radius);

// Penalized smoothed-surrogate fit by lambda-continuation: geometric path
// from ||grad(0)||_inf down to lambda, each stage solved by proximal
// gradient with backtracking, warm-started from the previous stage.
FittedModel fit_penalized(const RiskContext& ctx, double lambda, const PathConfig& cfg = {},
                          const std::optional<Eigen::VectorXd>& beta_init = std::nullopt);

// Unpenalized descent restricted to the support of beta: removes the
// shrinkage bias of the fitted coordinates while keeping the selected set.
// Zero coordinates stay zero; an all-zero input is returned unchanged.
Eigen::VectorXd refit_on_support(const RiskContext& ctx, const Eigen::VectorXd& beta,
                                 int max_iters = 300, double grad_tol = 1e-7);

struct CrossValidationResult {
  double delta = 0.0;
  double lambda = 0.0;
  Eigen::MatrixXd cv_table;  // delta_grid.size() x lambda_grid.size()
};

// Two-way cross-validation over (delta, lambda), scored by the weighted
// 0-1 risk on held-out folds. Ties break toward larger delta, then
// larger lambda.
CrossValidationResult cross_validate(const Dataset& data, const std::vector<double>& delta_grid,
                                     const std::vector<double>& lambda_grid, int folds,
                                     std::uint64_t seed, WeightMode weight_mode,
                                     const Kernel& kernel, const PathConfig& cfg = {},
                                     int threads = 1);

}  // namespace mcid
