#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <utility>

#include "mcid/decorrelation.hpp"
#include "mcid/estimation.hpp"
#include "mcid/risk.hpp"

namespace mcid {

enum class DeltaRule { Explicit, RateRule, DataDriven };
enum class VarianceMode { Pilot, Moment };

// Default constants of the bandwidth and penalty rules. Calibrated on the
// n = 800 simulation scale; each can be overridden per run.
inline constexpr double kDefaultDeltaC = 0.9;    // delta = c n^{-1/(2l'+1)}
inline constexpr double kDefaultHC = 0.34;        // h = c (log d / n)^{1/(2l'+3)}
inline constexpr double kDefaultGC = 2.0;        // g = c (log d / n)^{1/(2l'+1)}
inline constexpr double kDefaultLambdaC = 0.25;  // lambda = c sqrt(log d / (m delta))
inline constexpr double kDefaultBC = 0.36;        // b = c (log d / n)^{1/(2l'+2r'+1)}

struct TestConfig {
  DeltaRule delta_rule = DeltaRule::RateRule;
  double delta = 0.0;        // used when delta_rule == Explicit
  double delta_c = kDefaultDeltaC;
  int kernel_order = 2;      // l', even

  // pilot bandwidths; <= 0 means "use the default rule"
  double h = 0.0;            // bias pilot
  double g = 0.0;            // variance pilot
  double h_c = kDefaultHC;
  double g_c = kDefaultGC;

  VarianceMode variance_mode = VarianceMode::Moment;

  double lambda = 0.0;       // <= 0: lambda_c * sqrt(log d / (m delta)), m = fold size
  double lambda_c = kDefaultLambdaC;
  double lambda_prime = 0.0; // <= 0: 2 (log d / n)^{1/5}
  double delta_dantzig = 1.0;

  // refit the fold estimates without penalty on their support before they
  // enter the score; removes the first-order shrinkage bias of the plug-ins
  bool relaxed_plug = true;

  WeightMode weight_mode = WeightMode::InverseProportion;
  std::uint64_t seed = 1;
  int threads = 1;
  PathConfig path;

  // data-driven bandwidth settings
  std::vector<double> delta_grid;  // empty: 24 log-spaced points on [0.1, 1.2]
  double b = 0.0;                  // <= 0: b_c (log d / n)^{1/(2l'+2r'+1)}, r' = 2
  double b_c = kDefaultBC;
  int kernel_order_j = 2;          // r', order of the double-smoothing kernel

  void validate() const;
};

// Concrete parameter values for a given (n, d).
struct ResolvedParams {
  double delta;
  double h;
  double g;
  double lambda;
  double lambda_prime;
  double b;
};
ResolvedParams resolve_params(const TestConfig& cfg, Eigen::Index n, Eigen::Index d);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  double delta_used = 0.0;
  double score_value = 0.0;
  std::pair<double, double> fold_scores{0.0, 0.0};
  std::pair<FittedModel, FittedModel> beta_hats;
  std::pair<DecorrelationVector, DecorrelationVector> decor;
  std::optional<Eigen::VectorXd> contrast;
  bool bandwidth_data_driven = false;
};

// --- single-fold pieces ----------------------------------------------------

// v' * grad R_delta at beta_restricted on this fold.
double decorrelated_score(const RiskContext& fold, const Eigen::VectorXd& beta_restricted,
                          const Eigen::VectorXd& v_hat);

// Pilot estimate of the fold's approximation-bias term
// gamma * v' * (1/m) sum w(y_i) y_i z_i / h^{1+l} U^(l)((beta'z_i - x_i)/h).
double estimate_bias(const RiskContext& fold, const Eigen::VectorXd& beta_plug,
                     const Eigen::VectorXd& v_hat, double h, const Kernel& u_kernel,
                     double gamma);

// Pilot estimate of the fold's variance term
// mu_tilde * v' H v with H = (1/m) sum w^2 z z' L((x - beta'z)/g)/g.
double estimate_variance_pilot(const RiskContext& fold, const Eigen::VectorXd& beta_plug,
                               const Eigen::VectorXd& v_hat, double g, const Kernel& l_kernel,
                               double mu_tilde);

// Per-observation summands D_i of the moment-based variance route; their
// fold mean equals decorrelated_score - delta^l * bias by construction.
Eigen::VectorXd moment_summands(const RiskContext& fold, const Eigen::VectorXd& beta_restricted,
                                const Eigen::VectorXd& beta_plug, const Eigen::VectorXd& v_hat,
                                double delta, double h, const Kernel& u_kernel, double gamma);

// Sample variance of the pooled summands; throws when it is zero.
double estimate_variance_moment(const Eigen::VectorXd& summands);

// --- full pipelines ---------------------------------------------------------

TestResult score_test(const Dataset& data, Eigen::Index tested_index, const TestConfig& cfg);

// Tests c0' beta = 0 via the reparametrization onto (xi, gamma). The
// contrast is normalized by its first nonzero entry, which makes the
// statistic exactly invariant to rescaling of c0; coordinates are permuted
// internally so that entry leads, and reported back in original order.
TestResult linear_combination_test(const Dataset& data, const Eigen::VectorXd& c0,
                                   const TestConfig& cfg);

// score_test with a caller-supplied fold split (fold-symmetry tests).
TestResult score_test_with_folds(const Dataset& data, Eigen::Index tested_index,
                                 const TestConfig& cfg, const FoldPair& folds);

}  // namespace mcid
