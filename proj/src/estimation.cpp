#include "mcid/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcid/parallel.hpp"
#include "mcid/stats.hpp"

namespace mcid {

void PathConfig::validate() const {
  if (stages < 1) throw std::invalid_argument("path config: stages >= 1");
  if (!(eps_tgt > 0.0)) throw std::invalid_argument("path config: eps_tgt > 0");
  if (!(radius > 0.0)) throw std::invalid_argument("path config: radius > 0");
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("path config: nu in (0,1)");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("path config: eta in (0,1)");
  if (max_inner_iters < 1) throw std::invalid_argument("path config: max_inner_iters >= 1");
}

double penalized_kkt_residual(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta,
                              double lambda) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double v = beta[j] == 0.0 ? std::max(std::fabs(grad[j]) - lambda, 0.0)
                                    : std::fabs(grad[j] + lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    r = std::max(r, v);
  }
  return r;
}

Eigen::VectorXd prox_l1_ball(const Eigen::VectorXd& v, double thresh, double radius) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double a = std::fabs(v[j]) - thresh;
    out[j] = a > 0.0 ? (v[j] > 0.0 ? a : -a) : 0.0;
  }
  const double norm = out.norm();
  if (norm > radius) out *= radius / norm;
  return out;
}

namespace {

// Spectral-norm estimate of the Hessian at beta by power iteration on
// matrix-free Hessian-vector products.
double hessian_spectral_norm(const RiskContext& ctx, const Eigen::VectorXd& beta) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(ctx.dim());
  // deterministic perturbation so the start is not orthogonal to the top space
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] += 1e-3 * static_cast<double>(j % 7);
  v /= v.norm();
  double lam = 0.0;
  for (int it = 0; it < 20; ++it) {
    Eigen::VectorXd hv = smoothed_hessian_vec(ctx, beta, v);
    const double norm = hv.norm();
    if (norm < 1e-300) return 0.0;
    lam = norm;
    v = hv / norm;
  }
  return lam;
}

struct StageResult {
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

StageResult solve_stage(const RiskContext& ctx, double lambda, double eps,
                        const PathConfig& cfg, Eigen::VectorXd& beta) {
  StageResult res;
  const double l_hat = hessian_spectral_norm(ctx, beta);
  double step = 1.0 / std::clamp(l_hat, 1e-8, 1e12);
  step = std::min(step, 1e6);

  double risk = smoothed_risk(ctx, beta);
  Eigen::VectorXd grad = smoothed_gradient(ctx, beta);

  for (int it = 0; it < cfg.max_inner_iters; ++it) {
    if (penalized_kkt_residual(grad, beta, lambda) <= eps && beta.norm() < cfg.radius * (1.0 - 1e-12)) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd beta_new;
    double risk_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      beta_new = prox_l1_ball(beta - step * grad, step * lambda, cfg.radius);
      const Eigen::VectorXd diff = beta_new - beta;
      const double dn2 = diff.squaredNorm();
      if (dn2 == 0.0) {
        accepted = true;
        risk_new = risk;
        break;
      }
      risk_new = smoothed_risk(ctx, beta_new);
      const double quad = risk + grad.dot(diff) + dn2 / (2.0 * step);
      const double obj_old = risk + lambda * beta.lpNorm<1>();
      const double obj_new = risk_new + lambda * beta_new.lpNorm<1>();
      const bool majorized = risk_new <= quad + 1e-12 * (1.0 + std::fabs(quad));
      const bool decreased = obj_new <= obj_old - cfg.nu * dn2 / (2.0 * step) +
                                            1e-12 * (1.0 + std::fabs(obj_old));
      if (majorized && decreased) {
        accepted = true;
        break;
      }
      step *= cfg.eta;
    }
    ++res.iterations;
    if (!accepted) break;  // line search exhausted, leave unconverged
    if ((beta_new - beta).lpNorm<Eigen::Infinity>() == 0.0) {
      // prox fixed point at this step size
      res.converged = penalized_kkt_residual(grad, beta, lambda) <= eps;
      break;
    }
    beta = std::move(beta_new);
    risk = risk_new;
    grad = smoothed_gradient(ctx, beta);
    step /= cfg.eta;  // allow the step to grow back
  }
  if (!res.converged)
    res.converged = penalized_kkt_residual(grad, beta, lambda) <= eps && beta.norm() < cfg.radius;
  res.objective = risk + lambda * beta.lpNorm<1>();
  return res;
}

}  // namespace

FittedModel fit_penalized(const RiskContext& ctx, double lambda, const PathConfig& cfg,
                          const std::optional<Eigen::VectorXd>& beta_init) {
  cfg.validate();
  if (!(lambda > 0.0)) throw std::invalid_argument("fit_penalized: lambda must be > 0");

  FittedModel model;
  model.delta = ctx.delta();
  model.lambda = lambda;

  Eigen::VectorXd beta = beta_init ? *beta_init : Eigen::VectorXd::Zero(ctx.dim());
  if (beta.size() != ctx.dim()) throw std::invalid_argument("fit_penalized: beta_init size");
  if (beta.norm() > cfg.radius) beta *= cfg.radius / beta.norm();

  const double lambda0 = smoothed_gradient(ctx, Eigen::VectorXd::Zero(ctx.dim()))
                             .lpNorm<Eigen::Infinity>();
  model.converged = true;

  if (lambda >= lambda0 && !beta_init) {
    // the origin already satisfies the KKT condition
    model.beta_hat = Eigen::VectorXd::Zero(ctx.dim());
    model.objective = smoothed_risk(ctx, model.beta_hat);
    model.kkt_residual = 0.0;
    model.stage_trace.push_back({lambda, model.objective, 0});
    return model;
  }

  // with a warm start the continuation is skipped: a single proximal-
  // gradient stage at the target lambda descends from beta_init
  const int stages = (lambda >= lambda0 || beta_init) ? 1 : cfg.stages;
  const double ratio = stages == 1 ? 1.0 : std::pow(lambda / lambda0, 1.0 / cfg.stages);
  double lam_k = lambda0;
  for (int k = 1; k <= stages; ++k) {
    lam_k = (k == stages) ? lambda : std::max(lambda, lam_k * ratio);
    const double eps = (k == stages) ? cfg.eps_tgt : std::max(cfg.eps_tgt, 0.25 * lam_k);
    const StageResult sr = solve_stage(ctx, lam_k, eps, cfg, beta);
    model.iterations += sr.iterations;
    model.stage_trace.push_back({lam_k, sr.objective, sr.iterations});
  }

  model.beta_hat = std::move(beta);
  model.objective = smoothed_risk(ctx, model.beta_hat) + lambda * model.beta_hat.lpNorm<1>();
  model.kkt_residual =
      penalized_kkt_residual(smoothed_gradient(ctx, model.beta_hat), model.beta_hat, lambda);
  model.converged =
      model.kkt_residual <= cfg.eps_tgt && model.beta_hat.norm() < cfg.radius * (1.0 - 1e-12);
  return model;
}

Eigen::VectorXd refit_on_support(const RiskContext& ctx, const Eigen::VectorXd& beta0,
                                 int max_iters, double grad_tol) {
  if (beta0.size() != ctx.dim()) throw std::invalid_argument("refit_on_support: beta size");
  std::vector<Eigen::Index> sup;
  for (Eigen::Index j = 0; j < beta0.size(); ++j)
    if (beta0[j] != 0.0) sup.push_back(j);
  if (sup.empty()) return beta0;

  Eigen::VectorXd beta = beta0;
  double step = 1.0;
  double risk = smoothed_risk(ctx, beta);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd g_full = smoothed_gradient(ctx, beta);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(beta.size());
    double gmax = 0.0;
    for (Eigen::Index j : sup) {
      g[j] = g_full[j];
      gmax = std::max(gmax, std::fabs(g[j]));
    }
    if (gmax < grad_tol) break;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd cand = beta - step * g;
      const double r = smoothed_risk(ctx, cand);
      if (r <= risk - 1e-4 * step * g.squaredNorm()) {
        beta = cand;
        risk = r;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step *= 1.6;
  }
  return beta;
}

CrossValidationResult cross_validate(const Dataset& data, const std::vector<double>& delta_grid,
                                     const std::vector<double>& lambda_grid, int folds,
                                     std::uint64_t seed, WeightMode weight_mode,
                                     const Kernel& kernel, const PathConfig& cfg, int threads) {
  if (delta_grid.empty() || lambda_grid.empty())
    throw std::invalid_argument("cross_validate: empty grid");
  if (folds < 2) throw std::invalid_argument("cross_validate: folds >= 2");

  const WeightFn weights = empirical_weights(data, weight_mode);
  const auto parts = split_k_folds(data, folds, seed);

  // training/validation contexts per fold, shared across grid cells
  std::vector<RiskContext> train_ctx, valid_ctx;
  train_ctx.reserve(folds);
  valid_ctx.reserve(folds);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train;
    for (int g = 0; g < folds; ++g)
      if (g != f) train.insert(train.end(), parts[g].begin(), parts[g].end());
    train_ctx.emplace_back(data, train, weights, kernel, 1.0);
    valid_ctx.emplace_back(data, parts[f], weights, kernel, 1.0);
  }

  const std::size_t nd = delta_grid.size(), nl = lambda_grid.size();
  Eigen::MatrixXd table(static_cast<Eigen::Index>(nd), static_cast<Eigen::Index>(nl));
  const std::size_t cells = nd * nl * static_cast<std::size_t>(folds);
  std::vector<double> cell_risk(cells, 0.0);

  parallel_for(cells, threads, [&](std::size_t c) {
    const std::size_t f = c % folds;
    const std::size_t cell = c / folds;
    const std::size_t li = cell % nl;
    const std::size_t di = cell / nl;
    const RiskContext ctx = train_ctx[f].with_delta(delta_grid[di]);
    const FittedModel fit = fit_penalized(ctx, lambda_grid[li], cfg);
    cell_risk[c] = zero_one_risk(valid_ctx[f], fit.beta_hat);
  });

  CrossValidationResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t di = 0; di < nd; ++di) {
    for (std::size_t li = 0; li < nl; ++li) {
      NeumaierSum acc;
      for (std::size_t f = 0; f < static_cast<std::size_t>(folds); ++f)
        acc.add(cell_risk[(di * nl + li) * folds + f]);
      const double risk = acc.value() / folds;
      table(static_cast<Eigen::Index>(di), static_cast<Eigen::Index>(li)) = risk;
      // scanning in ascending (delta, lambda) order with <= keeps the
      // largest delta, then largest lambda, among exact ties
      if (risk <= best) {
        best = risk;
        out.delta = delta_grid[di];
        out.lambda = lambda_grid[li];
      }
    }
  }
  out.cv_table = std::move(table);
  return out;
}

}  // namespace mcid
