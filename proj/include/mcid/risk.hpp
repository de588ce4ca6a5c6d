#pragma once

#include <Eigen/Core>
#include <vector>

#include "mcid/dataset.hpp"
#include "mcid/kernels.hpp"

namespace mcid {

// Evaluation context: a fold of a Dataset together with the weights, the
// smoothing kernel and the bandwidth. The fold rows are copied into
// contiguous storage once; everything downstream is a pure function of it.
class RiskContext {
 public:
  RiskContext(const Dataset& data, const WeightFn& weights, Kernel kernel, double delta);
  RiskContext(const Dataset& data, const std::vector<Eigen::Index>& fold_indices,
              const WeightFn& weights, Kernel kernel, double delta);

  // Same fold and weights with a different bandwidth or kernel.
  RiskContext with_delta(double delta) const;
  RiskContext with_kernel(Kernel kernel, double delta) const;

  Eigen::Index size() const { return x_.size(); }
  Eigen::Index dim() const { return z_.cols(); }
  double delta() const { return delta_; }
  const Kernel& kernel() const { return kernel_; }
  const WeightFn& weights() const { return weights_; }
  const Eigen::MatrixXd& z() const { return z_; }
  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }   // +-1 as double
  const Eigen::VectorXd& w() const { return w_; }   // per-row weight

  // x - z*beta for every row of the fold.
  Eigen::VectorXd margins(const Eigen::VectorXd& beta) const;

 private:
  Eigen::MatrixXd z_;
  Eigen::VectorXd x_, y_, w_;
  WeightFn weights_;
  Kernel kernel_;
  double delta_;
};

// Weighted empirical 0-1 risk; sign(0) = +1.
double zero_one_risk(const RiskContext& ctx, const Eigen::VectorXd& beta);

// Smoothed surrogate risk, its gradient and Hessian. The gradient is the
// exact derivative of smoothed_risk and the Hessian is symmetric by
// construction; both are pinned against finite differences in the tests.
double smoothed_risk(const RiskContext& ctx, const Eigen::VectorXd& beta);
Eigen::VectorXd smoothed_gradient(const RiskContext& ctx, const Eigen::VectorXd& beta);
Eigen::MatrixXd smoothed_hessian(const RiskContext& ctx, const Eigen::VectorXd& beta);

// Hessian-vector product without materializing the matrix.
Eigen::VectorXd smoothed_hessian_vec(const RiskContext& ctx, const Eigen::VectorXd& beta,
                                     const Eigen::VectorXd& v);

// Per-observation gradient scalars: coefficient c_i with the i-th
// gradient term equal to c_i * z_i, i.e. c_i = w(y_i) y_i K(u_i/delta)/delta.
Eigen::VectorXd per_obs_gradient_coefs(const RiskContext& ctx, const Eigen::VectorXd& beta);

}  // namespace mcid
