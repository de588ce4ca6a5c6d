#include "mcid/inference.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "mcid/bandwidth.hpp"
#include "mcid/parallel.hpp"
#include "mcid/stats.hpp"

namespace mcid {

void TestConfig::validate() const {
  if (kernel_order < 2 || kernel_order % 2 != 0)
    throw std::invalid_argument("test config: kernel_order must be even and >= 2");
  if (kernel_order_j < 2 || kernel_order_j % 2 != 0)
    throw std::invalid_argument("test config: kernel_order_j must be even and >= 2");
  if (delta_rule == DeltaRule::Explicit && !(delta > 0.0))
    throw std::invalid_argument("test config: explicit delta must be > 0");
  if (delta_rule == DeltaRule::RateRule && !(delta_c > 0.0))
    throw std::invalid_argument("test config: delta_c must be > 0");
  if (h < 0.0 || g < 0.0 || lambda < 0.0 || lambda_prime < 0.0 || b < 0.0)
    throw std::invalid_argument("test config: bandwidths and penalties cannot be negative");
  if (!(delta_dantzig > 0.0))
    throw std::invalid_argument("test config: delta_dantzig must be > 0");
  path.validate();
}

ResolvedParams resolve_params(const TestConfig& cfg, Eigen::Index n, Eigen::Index d) {
  cfg.validate();
  const double nn = static_cast<double>(n);
  const double logd_n = std::log(static_cast<double>(d)) / nn;
  const int l = cfg.kernel_order;
  const int r = cfg.kernel_order_j;

  ResolvedParams p{};
  switch (cfg.delta_rule) {
    case DeltaRule::Explicit:
      p.delta = cfg.delta;
      break;
    case DeltaRule::RateRule:
    case DeltaRule::DataDriven:
      p.delta = cfg.delta_c * std::pow(nn, -1.0 / (2.0 * l + 1.0));
      break;
  }
  p.h = cfg.h > 0.0 ? cfg.h : cfg.h_c * std::pow(logd_n, 1.0 / (2.0 * l + 3.0));
  p.g = cfg.g > 0.0 ? cfg.g : cfg.g_c * std::pow(logd_n, 1.0 / (2.0 * l + 1.0));
  p.lambda_prime = cfg.lambda_prime > 0.0 ? cfg.lambda_prime : default_lambda_prime(n, d);
  const double fold_m = std::ceil(nn / 2.0);
  p.lambda = cfg.lambda > 0.0
                 ? cfg.lambda
                 : cfg.lambda_c * std::sqrt(std::log(static_cast<double>(d)) / (fold_m * p.delta));
  p.b = cfg.b > 0.0 ? cfg.b : cfg.b_c * std::pow(logd_n, 1.0 / (2.0 * l + 2.0 * r + 1.0));
  return p;
}

namespace {

// u' * per-observation gradient terms, averaged over the fold.
double projected_score(const RiskContext& fold, const Eigen::VectorXd& beta_base,
                       const Eigen::VectorXd& u) {
  const Eigen::VectorXd coefs = per_obs_gradient_coefs(fold, beta_base);
  const Eigen::VectorXd proj = fold.z() * u;
  NeumaierSum acc;
  for (Eigen::Index i = 0; i < fold.size(); ++i) acc.add(coefs[i] * proj[i]);
  return acc.value() / static_cast<double>(fold.size());
}

double projected_bias(const RiskContext& fold, const Eigen::VectorXd& beta_plug,
                      const Eigen::VectorXd& u, double h, const Kernel& u_kernel, double gamma,
                      int ell) {
  const Eigen::VectorXd proj = fold.z() * u;
  const Eigen::VectorXd margins = fold.x() - fold.z() * beta_plug;
  const double hpow = std::pow(h, 1.0 + ell);
  NeumaierSum acc;
  for (Eigen::Index i = 0; i < fold.size(); ++i)
    acc.add(fold.w()[i] * fold.y()[i] * proj[i] / hpow *
            u_kernel.derivative(ell, -margins[i] / h));
  return gamma * acc.value() / static_cast<double>(fold.size());
}

double projected_variance_pilot(const RiskContext& fold, const Eigen::VectorXd& beta_plug,
                                const Eigen::VectorXd& u, double g, const Kernel& l_kernel,
                                double mu_tilde) {
  const Eigen::VectorXd proj = fold.z() * u;
  const Eigen::VectorXd margins = fold.x() - fold.z() * beta_plug;
  NeumaierSum acc;
  for (Eigen::Index i = 0; i < fold.size(); ++i) {
    const double w = fold.w()[i];
    acc.add(w * w * proj[i] * proj[i] * l_kernel.eval(margins[i] / g) / g);
  }
  return mu_tilde * acc.value() / static_cast<double>(fold.size());
}

Eigen::VectorXd projected_moment_summands(const RiskContext& fold,
                                          const Eigen::VectorXd& beta_restricted,
                                          const Eigen::VectorXd& beta_plug,
                                          const Eigen::VectorXd& u, double delta, double h,
                                          const Kernel& k_kernel, const Kernel& u_kernel,
                                          double gamma, int ell) {
  const Eigen::VectorXd proj = fold.z() * u;
  const Eigen::VectorXd m_restricted = fold.x() - fold.z() * beta_restricted;
  const Eigen::VectorXd m_plug = fold.x() - fold.z() * beta_plug;
  const double scale = gamma * std::pow(delta, ell + 1.0) / std::pow(h, ell + 1.0);
  Eigen::VectorXd out(fold.size());
  for (Eigen::Index i = 0; i < fold.size(); ++i) {
    const double bracket = k_kernel.eval(m_restricted[i] / delta) -
                           scale * u_kernel.derivative(ell, -m_plug[i] / h);
    out[i] = fold.w()[i] * fold.y()[i] * proj[i] / delta * bracket;
  }
  return out;
}

struct MomentAggregate {
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations from the fold mean
  Eigen::Index count = 0;
};

MomentAggregate aggregate_summands(const Eigen::VectorXd& d) {
  MomentAggregate a;
  a.count = d.size();
  NeumaierSum s;
  for (Eigen::Index i = 0; i < d.size(); ++i) s.add(d[i]);
  a.mean = s.value() / static_cast<double>(d.size());
  NeumaierSum q;
  for (Eigen::Index i = 0; i < d.size(); ++i) q.add((d[i] - a.mean) * (d[i] - a.mean));
  a.m2 = q.value();
  return a;
}

}  // namespace

double decorrelated_score(const RiskContext& fold, const Eigen::VectorXd& beta_restricted,
                          const Eigen::VectorXd& v_hat) {
  return projected_score(fold, beta_restricted, v_hat);
}

double estimate_bias(const RiskContext& fold, const Eigen::VectorXd& beta_plug,
                     const Eigen::VectorXd& v_hat, double h, const Kernel& u_kernel,
                     double gamma) {
  if (!(h > 0.0)) throw std::invalid_argument("estimate_bias: h must be > 0");
  return projected_bias(fold, beta_plug, v_hat, h, u_kernel, gamma, u_kernel.order());
}

double estimate_variance_pilot(const RiskContext& fold, const Eigen::VectorXd& beta_plug,
                               const Eigen::VectorXd& v_hat, double g, const Kernel& l_kernel,
                               double mu_tilde) {
  if (!(g > 0.0)) throw std::invalid_argument("estimate_variance_pilot: g must be > 0");
  return projected_variance_pilot(fold, beta_plug, v_hat, g, l_kernel, mu_tilde);
}

Eigen::VectorXd moment_summands(const RiskContext& fold, const Eigen::VectorXd& beta_restricted,
                                const Eigen::VectorXd& beta_plug, const Eigen::VectorXd& v_hat,
                                double delta, double h, const Kernel& u_kernel, double gamma) {
  return projected_moment_summands(fold, beta_restricted, beta_plug, v_hat, delta, h,
                                   fold.kernel(), u_kernel, gamma, u_kernel.order());
}

double estimate_variance_moment(const Eigen::VectorXd& summands) {
  const MomentAggregate a = aggregate_summands(summands);
  if (summands.size() < 2 || a.m2 <= 0.0)
    throw std::runtime_error("moment variance: zero sample variance of the score summands");
  return a.m2 / static_cast<double>(a.count - 1);
}

namespace {

// The working problem handed to the shared pipeline. For a coordinate test
// the transform is the identity and tested_slot names the coordinate; for a
// contrast the data are already column-permuted, tested_slot is 0, and
// `transform` carries the reparametrization matrix C.
struct WorkingProblem {
  const Dataset& data;
  Eigen::Index tested_slot;                 // 0-based, in working coordinates
  std::optional<Eigen::MatrixXd> transform; // C; identity when absent
  std::optional<Eigen::VectorXd> c02_over_c01;  // nuisance part of the normalized contrast
};

TestResult run_pipeline(const WorkingProblem& wp, const TestConfig& cfg, const FoldPair& folds) {
  const Dataset& data = wp.data;
  const ResolvedParams par = resolve_params(cfg, data.n, data.d);
  const int ell = cfg.kernel_order;
  const Kernel k_main = make_gaussian_order(ell);
  const Kernel u_pilot = make_gaussian_order(ell);
  const Kernel l_pilot = make_gaussian_order(ell);
  const KernelMoments mom = kernel_moments(k_main);

  const WeightFn weights = empirical_weights(data, cfg.weight_mode);

  const std::vector<Eigen::Index>* fold_idx[2] = {&folds.fold1, &folds.fold2};
  std::vector<RiskContext> ctx;
  ctx.reserve(2);
  for (int k = 0; k < 2; ++k)
    ctx.emplace_back(data, *fold_idx[k], weights, k_main, par.delta);

  // full-model fit on each fold, then an unpenalized refit on the fitted
  // support so the plug-in coefficients carry no shrinkage bias
  FittedModel fits[2];
  Eigen::VectorXd plugs[2];
  parallel_for(2, cfg.threads > 1 ? 2 : 1, [&](std::size_t k) {
    fits[k] = fit_penalized(ctx[k], par.lambda, cfg.path);
    plugs[k] = cfg.relaxed_plug ? refit_on_support(ctx[k], fits[k].beta_hat)
                                : fits[k].beta_hat;
  });

  struct FoldOut {
    DecorrelationVector decor;
    double score = 0.0;
    double bias = 0.0;
    double var = 0.0;
    MomentAggregate moments;
  };
  FoldOut fo[2];

  parallel_for(2, cfg.threads > 1 ? 2 : 1, [&](std::size_t k) {
    const std::size_t other = 1 - k;
    const Eigen::VectorXd& beta_plug = plugs[other];

    // restricted coefficient: tested slot replaced so the working-space
    // tested parameter is zero
    Eigen::VectorXd beta_restricted = beta_plug;
    if (wp.c02_over_c01) {
      double dot = 0.0;
      for (Eigen::Index j = 1; j < data.d; ++j)
        dot += (*wp.c02_over_c01)[j - 1] * beta_plug[j];
      beta_restricted[0] = -dot;
    } else {
      beta_restricted[wp.tested_slot] = 0.0;
    }

    // decorrelation from this fold's Hessian at the other fold's fit
    Eigen::MatrixXd hess = smoothed_hessian(ctx[k].with_delta(cfg.delta_dantzig), beta_plug);
    if (wp.transform) hess = (*wp.transform) * hess * wp.transform->transpose();
    fo[k].decor = decorrelate_from_hessian(std::move(hess), wp.tested_slot, par.lambda_prime);

    // direction in model coordinates: u = C' v
    const Eigen::VectorXd u = wp.transform ? Eigen::VectorXd(wp.transform->transpose() * fo[k].decor.v_hat)
                                           : fo[k].decor.v_hat;

    fo[k].score = projected_score(ctx[k], beta_restricted, u);
    fo[k].bias = projected_bias(ctx[k], beta_plug, u, par.h, u_pilot, mom.gamma, ell);
    fo[k].var = projected_variance_pilot(ctx[k], beta_plug, u, par.g, l_pilot, mom.mu_tilde);
    if (cfg.variance_mode == VarianceMode::Moment) {
      const Eigen::VectorXd d = projected_moment_summands(
          ctx[k], beta_restricted, beta_plug, u, par.delta, par.h, k_main, u_pilot, mom.gamma,
          ell);
      fo[k].moments = aggregate_summands(d);
    }
  });

  TestResult res;
  res.delta_used = par.delta;
  res.fold_scores = {fo[0].score, fo[1].score};
  res.score_value = 0.5 * (fo[0].score + fo[1].score);
  res.mu_hat = 0.5 * (fo[0].bias + fo[1].bias);

  double sigma2;
  if (cfg.variance_mode == VarianceMode::Pilot) {
    sigma2 = 0.5 * (fo[0].var + fo[1].var);
    if (!(sigma2 > 0.0))
      throw std::runtime_error("score test: nonpositive pilot variance estimate");
  } else {
    // pooled sample variance of the summands, combined from per-fold
    // aggregates so fold relabeling commutes exactly
    const auto& a = fo[0].moments;
    const auto& b = fo[1].moments;
    const double n_tot = static_cast<double>(a.count + b.count);
    const double mean = (a.mean * a.count + b.mean * b.count) / n_tot;
    const double m2 = a.m2 + b.m2 + a.count * (a.mean - mean) * (a.mean - mean) +
                      b.count * (b.mean - mean) * (b.mean - mean);
    if (n_tot < 2 || m2 <= 0.0)
      throw std::runtime_error("moment variance: zero sample variance of the score summands");
    sigma2 = par.delta * m2 / (n_tot - 1.0);
  }
  res.sigma_hat = std::sqrt(sigma2);

  const double n = static_cast<double>(data.n);
  const double numerator = res.score_value - std::pow(par.delta, ell) * res.mu_hat;
  res.statistic = std::sqrt(n * par.delta) * numerator / res.sigma_hat;
  res.p_value = two_sided_p(res.statistic);
  res.beta_hats = {std::move(fits[0]), std::move(fits[1])};
  res.decor = {std::move(fo[0].decor), std::move(fo[1].decor)};
  return res;
}

TestConfig with_explicit_delta(const TestConfig& cfg, double delta) {
  TestConfig out = cfg;
  out.delta_rule = DeltaRule::Explicit;
  out.delta = delta;
  return out;
}

}  // namespace

TestResult score_test_with_folds(const Dataset& data, Eigen::Index tested_index,
                                 const TestConfig& cfg, const FoldPair& folds) {
  if (tested_index < 1 || tested_index > data.d)
    throw std::out_of_range("score_test: tested index out of range");
  WorkingProblem wp{data, tested_index - 1, std::nullopt, std::nullopt};
  return run_pipeline(wp, cfg, folds);
}

TestResult score_test(const Dataset& data, Eigen::Index tested_index, const TestConfig& cfg) {
  if (cfg.delta_rule == DeltaRule::DataDriven) {
    const BandwidthSelection sel = select_bandwidth(data, tested_index, cfg);
    TestResult res = score_test(data, tested_index, with_explicit_delta(cfg, sel.delta_hat));
    res.bandwidth_data_driven = true;
    return res;
  }
  const FoldPair folds = split_two_folds(data, cfg.seed);
  return score_test_with_folds(data, tested_index, cfg, folds);
}

TestResult linear_combination_test(const Dataset& data, const Eigen::VectorXd& c0,
                                   const TestConfig& cfg) {
  if (c0.size() != data.d)
    throw std::invalid_argument("linear_combination_test: contrast length != d");
  Eigen::Index lead = -1;
  for (Eigen::Index j = 0; j < c0.size(); ++j)
    if (c0[j] != 0.0) {
      lead = j;
      break;
    }
  if (lead < 0) throw std::invalid_argument("linear_combination_test: contrast is zero");

  // permute so the leading nonzero sits first, then normalize it away
  Dataset work = data;
  Eigen::VectorXd c = c0;
  if (lead != 0) {
    work.z.col(0).swap(work.z.col(lead));
    std::swap(c[0], c[lead]);
  }
  c /= c[0];
  const Eigen::VectorXd c02 = c.tail(data.d - 1);

  Eigen::MatrixXd transform = Eigen::MatrixXd::Identity(data.d, data.d);
  transform.block(1, 0, data.d - 1, 1) = -c02;

  TestConfig local = cfg;
  if (cfg.delta_rule == DeltaRule::DataDriven) {
    const BandwidthSelection sel = select_bandwidth(data, lead + 1, cfg);
    local = with_explicit_delta(cfg, sel.delta_hat);
  }

  const FoldPair folds = split_two_folds(work, local.seed);
  WorkingProblem wp{work, 0, transform, c02};
  TestResult res = run_pipeline(wp, local, folds);
  res.contrast = c0;
  res.bandwidth_data_driven = cfg.delta_rule == DeltaRule::DataDriven;

  // report fold estimates in the original coordinate order
  if (lead != 0) {
    std::swap(res.beta_hats.first.beta_hat[0], res.beta_hats.first.beta_hat[lead]);
    std::swap(res.beta_hats.second.beta_hat[0], res.beta_hats.second.beta_hat[lead]);
  }
  return res;
}

}  // namespace mcid
