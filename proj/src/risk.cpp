#include "mcid/risk.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "mcid/stats.hpp"

namespace mcid {

namespace {
void check_context(const Eigen::Index n, double delta) {
  if (n == 0) throw std::invalid_argument("risk context: empty fold");
  if (!(delta > 0.0)) throw std::invalid_argument("risk context: delta must be > 0");
}
}  // namespace

RiskContext::RiskContext(const Dataset& data, const WeightFn& weights, Kernel kernel,
                         double delta)
    : z_(data.z), x_(data.x), weights_(weights), kernel_(std::move(kernel)), delta_(delta) {
  check_context(data.n, delta);
  y_.resize(data.n);
  w_.resize(data.n);
  for (Eigen::Index i = 0; i < data.n; ++i) {
    y_[i] = static_cast<double>(data.y[i]);
    w_[i] = weights(data.y[i]);
  }
}

RiskContext::RiskContext(const Dataset& data, const std::vector<Eigen::Index>& fold,
                         const WeightFn& weights, Kernel kernel, double delta)
    : weights_(weights), kernel_(std::move(kernel)), delta_(delta) {
  const auto m = static_cast<Eigen::Index>(fold.size());
  check_context(m, delta);
  z_.resize(m, data.d);
  x_.resize(m);
  y_.resize(m);
  w_.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = fold[static_cast<std::size_t>(r)];
    z_.row(r) = data.z.row(i);
    x_[r] = data.x[i];
    y_[r] = static_cast<double>(data.y[i]);
    w_[r] = weights(data.y[i]);
  }
}

RiskContext RiskContext::with_delta(double delta) const {
  RiskContext c = *this;
  check_context(c.size(), delta);
  c.delta_ = delta;
  return c;
}

RiskContext RiskContext::with_kernel(Kernel kernel, double delta) const {
  RiskContext c = *this;
  check_context(c.size(), delta);
  c.kernel_ = std::move(kernel);
  c.delta_ = delta;
  return c;
}

Eigen::VectorXd RiskContext::margins(const Eigen::VectorXd& beta) const {
  return x_ - z_ * beta;
}

double zero_one_risk(const RiskContext& ctx, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd m = ctx.margins(beta);
  NeumaierSum acc;
  for (Eigen::Index i = 0; i < ctx.size(); ++i) {
    const double u = ctx.y()[i] * m[i];
    // L01(u) = (1 - sign u)/2 with sign 0 = +1
    if (u < 0.0) acc.add(ctx.w()[i]);
  }
  return acc.value() / static_cast<double>(ctx.size());
}

double smoothed_risk(const RiskContext& ctx, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd m = ctx.margins(beta);
  const double inv_delta = 1.0 / ctx.delta();
  NeumaierSum acc;
  for (Eigen::Index i = 0; i < ctx.size(); ++i)
    acc.add(ctx.w()[i] * ctx.kernel().complement_cdf(ctx.y()[i] * m[i] * inv_delta));
  return acc.value() / static_cast<double>(ctx.size());
}

Eigen::VectorXd per_obs_gradient_coefs(const RiskContext& ctx, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd m = ctx.margins(beta);
  const double inv_delta = 1.0 / ctx.delta();
  Eigen::VectorXd c(ctx.size());
  for (Eigen::Index i = 0; i < ctx.size(); ++i)
    c[i] = ctx.w()[i] * ctx.y()[i] * inv_delta * ctx.kernel().eval(ctx.y()[i] * m[i] * inv_delta);
  return c;
}

Eigen::VectorXd smoothed_gradient(const RiskContext& ctx, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd c = per_obs_gradient_coefs(ctx, beta);
  return ctx.z().transpose() * c / static_cast<double>(ctx.size());
}

namespace {
// Hessian term coefficients: -w(y_i) y_i K'(m_i/delta) / delta^2, using
// K'(y u) = y K'(u) for symmetric K to drop y from the argument.
Eigen::VectorXd hessian_coefs(const RiskContext& ctx, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd m = ctx.margins(beta);
  const double inv_delta = 1.0 / ctx.delta();
  Eigen::VectorXd c(ctx.size());
  for (Eigen::Index i = 0; i < ctx.size(); ++i)
    c[i] = -ctx.w()[i] * ctx.y()[i] * inv_delta * inv_delta *
           ctx.kernel().derivative(1, m[i] * inv_delta);
  return c;
}
}  // namespace

Eigen::MatrixXd smoothed_hessian(const RiskContext& ctx, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd c = hessian_coefs(ctx, beta) / static_cast<double>(ctx.size());
  Eigen::MatrixXd h = ctx.z().transpose() * c.asDiagonal() * ctx.z();
  // exact symmetry: mirror the lower triangle
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose().triangularView<Eigen::StrictlyUpper>();
  return h;
}

Eigen::VectorXd smoothed_hessian_vec(const RiskContext& ctx, const Eigen::VectorXd& beta,
                                     const Eigen::VectorXd& v) {
  const Eigen::VectorXd c = hessian_coefs(ctx, beta);
  const Eigen::VectorXd zv = ctx.z() * v;
  return ctx.z().transpose() * (c.cwiseProduct(zv)) / static_cast<double>(ctx.size());
}

}  // namespace mcid
