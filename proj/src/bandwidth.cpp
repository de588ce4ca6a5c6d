#include "mcid/bandwidth.hpp"

#include <cmath>
#include <stdexcept>

#include "mcid/parallel.hpp"
#include "mcid/quadrature.hpp"
#include "mcid/stats.hpp"

namespace mcid {

double estimate_variance_curve(const SelectionState& st, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("variance curve: delta must be > 0");
  double total = 0.0;
  for (std::size_t k = 0; k < st.folds.size(); ++k) {
    const RiskContext ctx = st.folds[k].with_delta(delta);
    const Eigen::VectorXd coefs = per_obs_gradient_coefs(ctx, st.beta_plug[k]);
    const Eigen::VectorXd proj = ctx.z() * st.v_hat[k];
    NeumaierSum acc;
    for (Eigen::Index i = 0; i < ctx.size(); ++i) {
      const double t = coefs[i] * proj[i];
      acc.add(t * t);
    }
    total += acc.value() / static_cast<double>(ctx.size());
  }
  return total / static_cast<double>(st.folds.size());
}

namespace {

// Nodes v_q = sqrt(2) t_q and weights W_q = sqrt(2) w_q e^{t_q^2}, so that
// int f(v) dv ~= sum W_q f(v_q) for integrands carrying their own Gaussian
// factor (here one of the two kernels).
struct GhRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GhRule& gh64() {
  static const GhRule rule = [] {
    const auto [t, w] = gauss_hermite(64);
    GhRule r;
    r.nodes.resize(t.size());
    r.weights.resize(t.size());
    for (std::size_t q = 0; q < t.size(); ++q) {
      r.nodes[q] = t[q] * M_SQRT2;
      r.weights[q] = M_SQRT2 * w[q] * std::exp(t[q] * t[q]);
    }
    return r;
  }();
  return rule;
}

// int K(v) J((m - v delta)/b) dv by Gauss-Hermite in whichever of the two
// frames keeps the non-weight factor wide: for delta <= b integrate in the
// K frame, otherwise substitute onto the J frame.
double smoothed_pair_integral(double m, double delta, double b, const Kernel& j_kernel,
                              const Kernel& k_kernel) {
  const GhRule& rule = gh64();
  double acc = 0.0;
  if (delta <= b) {
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double v = rule.nodes[q];
      acc += rule.weights[q] * k_kernel.eval(v) * j_kernel.eval((m - v * delta) / b);
    }
    return acc;
  }
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double s = rule.nodes[q];
    acc += rule.weights[q] * j_kernel.eval(s) * k_kernel.eval((m - s * b) / delta);
  }
  return acc * b / delta;
}

}  // namespace

double estimate_bias_curve(const SelectionState& st, double delta, double b,
                           const Kernel& j_kernel, const Kernel& k_kernel) {
  if (delta < 0.0 || !(b > 0.0)) throw std::invalid_argument("bias curve: need delta >= 0, b > 0");
  if (delta == 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < st.folds.size(); ++k) {
    const RiskContext& ctx = st.folds[k];
    const Eigen::VectorXd margins = ctx.x() - ctx.z() * st.beta_plug[k];
    const Eigen::VectorXd proj = ctx.z() * st.v_hat[k];
    NeumaierSum acc;
    for (Eigen::Index i = 0; i < ctx.size(); ++i) {
      const double inner =
          smoothed_pair_integral(margins[i], delta, b, j_kernel, k_kernel) -
          j_kernel.eval(margins[i] / b);
      acc.add(ctx.w()[i] * ctx.y()[i] * proj[i] / b * inner);
    }
    total += acc.value() / static_cast<double>(ctx.size());
  }
  return total / static_cast<double>(st.folds.size());
}

double estimate_mse(double v_curve, double b_curve, Eigen::Index n) {
  const double nn = static_cast<double>(n);
  return std::max(v_curve, 0.0) / nn + (nn - 1.0) / nn * b_curve * b_curve;
}

std::vector<double> default_delta_grid() {
  const int count = 24;
  const double lo = std::log(0.1), hi = std::log(1.2);
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i)
    g[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
  return g;
}

SelectionState make_selection_state(const Dataset& data, Eigen::Index tested_index,
                                    const TestConfig& cfg) {
  if (tested_index < 1 || tested_index > data.d)
    throw std::out_of_range("select_bandwidth: tested index out of range");

  // reference bandwidth for the plug-in fits
  TestConfig ref = cfg;
  ref.delta_rule = DeltaRule::RateRule;
  const ResolvedParams par = resolve_params(ref, data.n, data.d);

  const Kernel k_main = make_gaussian_order(cfg.kernel_order);
  const WeightFn weights = empirical_weights(data, cfg.weight_mode);
  const FoldPair folds = split_two_folds(data, cfg.seed);

  SelectionState st;
  st.folds.emplace_back(data, folds.fold1, weights, k_main, par.delta);
  st.folds.emplace_back(data, folds.fold2, weights, k_main, par.delta);

  Eigen::VectorXd plugs[2];
  parallel_for(2, cfg.threads > 1 ? 2 : 1, [&](std::size_t k) {
    const FittedModel fit = fit_penalized(st.folds[k], par.lambda, cfg.path);
    plugs[k] = cfg.relaxed_plug ? refit_on_support(st.folds[k], fit.beta_hat) : fit.beta_hat;
  });

  st.beta_plug.resize(2);
  st.v_hat.resize(2);
  parallel_for(2, cfg.threads > 1 ? 2 : 1, [&](std::size_t k) {
    st.beta_plug[k] = plugs[1 - k];
    const DecorrelationVector dv = decorrelation_vector(
        st.folds[k], st.beta_plug[k], tested_index, par.lambda_prime, cfg.delta_dantzig);
    st.v_hat[k] = dv.v_hat;
  });
  return st;
}

BandwidthSelection select_bandwidth(const Dataset& data, Eigen::Index tested_index,
                                    const TestConfig& cfg) {
  BandwidthSelection out;
  out.grid = cfg.delta_grid.empty() ? default_delta_grid() : cfg.delta_grid;
  if (out.grid.empty()) throw std::invalid_argument("select_bandwidth: empty grid");
  for (std::size_t i = 1; i < out.grid.size(); ++i)
    if (out.grid[i] <= out.grid[i - 1])
      throw std::invalid_argument("select_bandwidth: grid must be ascending");

  const ResolvedParams par = resolve_params(cfg, data.n, data.d);
  out.b_pilot = par.b;
  out.kernel_j_order = cfg.kernel_order_j;

  const SelectionState st = make_selection_state(data, tested_index, cfg);
  const Kernel j_kernel = make_gaussian_order(cfg.kernel_order_j);
  const Kernel k_main = make_gaussian_order(cfg.kernel_order);

  const std::size_t g = out.grid.size();
  out.v_hat_curve.resize(g);
  out.b_hat_curve.resize(g);
  out.m_hat.resize(g);
  parallel_for(g, cfg.threads, [&](std::size_t i) {
    out.v_hat_curve[i] = estimate_variance_curve(st, out.grid[i]);
    out.b_hat_curve[i] = estimate_bias_curve(st, out.grid[i], par.b, j_kernel, k_main);
    out.m_hat[i] = estimate_mse(out.v_hat_curve[i], out.b_hat_curve[i], data.n);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < g; ++i)
    if (out.m_hat[i] < out.m_hat[best]) best = i;  // ties keep the smaller delta
  out.delta_hat = out.grid[best];
  return out;
}

}  // namespace mcid
