#pragma once

#include <Eigen/Core>
#include <vector>

#include "mcid/inference.hpp"
#include "mcid/risk.hpp"

namespace mcid {

// Fixed plug-ins for the bandwidth curves: per-fold contexts, the opposite
// fold's fit used on each, and the decorrelation directions. Held fixed
// across the delta grid.
struct SelectionState {
  std::vector<RiskContext> folds;        // two entries
  std::vector<Eigen::VectorXd> beta_plug;  // beta_plug[k] applied on fold k
  std::vector<Eigen::VectorXd> v_hat;    // direction for fold k
};

// Moment estimator of the score variance V(delta), cross-fitted.
double estimate_variance_curve(const SelectionState& st, double delta);

// Double-smoothing estimator of the score bias B(delta): pilot kernel J at
// bandwidth b, the inner integral against K taken by 64-node Gauss-Hermite
// quadrature in whichever frame keeps the integrand wide.
double estimate_bias_curve(const SelectionState& st, double delta, double b, const Kernel& j_kernel,
                           const Kernel& k_kernel);

// MSE assembly V/n + (n-1)/n B^2 with V floored at zero.
double estimate_mse(double v_curve, double b_curve, Eigen::Index n);

struct BandwidthSelection {
  double delta_hat = 0.0;
  std::vector<double> grid;
  std::vector<double> m_hat;
  std::vector<double> v_hat_curve;
  std::vector<double> b_hat_curve;
  double b_pilot = 0.0;
  int kernel_j_order = 2;
};

// 24 log-spaced points on [0.1, 1.2].
std::vector<double> default_delta_grid();

// Builds the fixed plug-ins at the reference bandwidth n^{-1/(2l'+1)}.
SelectionState make_selection_state(const Dataset& data, Eigen::Index tested_index,
                                    const TestConfig& cfg);

// Minimizes the estimated MSE of the decorrelated score over the grid;
// ties break toward the smaller delta.
BandwidthSelection select_bandwidth(const Dataset& data, Eigen::Index tested_index,
                                    const TestConfig& cfg);

}  // namespace mcid
