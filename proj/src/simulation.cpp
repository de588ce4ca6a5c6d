#include "mcid/simulation.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mcid/parallel.hpp"
#include "mcid/stats.hpp"

namespace mcid {

void DGPConfig::validate() const {
  if (n < 4) throw std::invalid_argument("dgp: n >= 4");
  if (s < 2 || s > d) throw std::invalid_argument("dgp: need 2 <= s <= d");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("dgp: rho in [0,1)");
}

Eigen::VectorXd draw_beta_star(const DGPConfig& cfg) {
  cfg.validate();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(cfg.d);
  if (cfg.equal_beta) {
    beta.head(cfg.s).setOnes();
    return beta / beta.norm();
  }
  // nuisance slots 2..s drawn and normalized to unit length, then the
  // tested signal inserted, so beta1 is the effective tested coefficient
  Rng rng(cfg.beta_draw_seed);
  for (Eigen::Index j = 1; j < cfg.s; ++j) beta[j] = 1.0 + rng.uniform();
  const double norm = beta.norm();
  if (norm == 0.0) throw std::invalid_argument("dgp: zero coefficient vector");
  beta /= norm;
  beta[0] = cfg.beta1;
  return beta;
}

std::pair<Dataset, Eigen::VectorXd> generate_dgp(const DGPConfig& cfg) {
  const Eigen::VectorXd beta = draw_beta_star(cfg);
  Rng rng(cfg.seed);
  Eigen::VectorXd x(cfg.n);
  Eigen::VectorXi y(cfg.n);
  Eigen::MatrixXd z(cfg.n, cfg.d);
  const double rho_tail = std::sqrt(1.0 - cfg.rho * cfg.rho);
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    x[i] = rng.normal();
    z(i, 0) = rng.normal();
    for (Eigen::Index j = 1; j < cfg.d; ++j)
      z(i, j) = cfg.rho * z(i, j - 1) + rho_tail * rng.normal();
    const double margin = x[i] - z.row(i).dot(beta);
    const double scale_sq = 1.0 + 2.0 * margin * margin;
    double eps;
    if (cfg.scenario == Scenario::HeteroGaussian) {
      eps = 0.2 * std::sqrt(scale_sq) * rng.normal();
    } else {
      eps = 0.2 * std::sqrt(scale_sq) * rng.uniform_signed();
    }
    y[i] = (margin + eps >= 0.0) ? 1 : -1;  // sign(0) = +1
  }
  return {Dataset::make(std::move(x), std::move(y), std::move(z)), beta};
}

SimulationReport run_monte_carlo(const DGPConfig& dgp, const TestConfig& test_cfg, int replicates,
                                 double alpha, std::uint64_t master_seed, bool freeze_beta,
                                 int threads) {
  if (replicates < 1) throw std::invalid_argument("run_monte_carlo: replicates >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("run_monte_carlo: alpha in (0,1)");
  dgp.validate();

  const auto t_start = std::chrono::steady_clock::now();

  struct Slot {
    ReplicateRecord rec;
    bool ok = false;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(replicates));
  const double z_crit = norm_quantile(1.0 - alpha / 2.0);

  parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    DGPConfig cfg = dgp;
    cfg.seed = derive_seed(master_seed, r);
    cfg.beta_draw_seed =
        freeze_beta ? dgp.beta_draw_seed : derive_seed(dgp.beta_draw_seed, r);
    try {
      auto [data, beta_star] = generate_dgp(cfg);
      TestConfig tc = test_cfg;
      tc.seed = derive_seed(cfg.seed, 1);
      tc.threads = 1;  // parallelism lives at the replicate level
      const TestResult res = score_test(data, 1, tc);
      Slot s;
      s.ok = true;
      s.rec.statistic = res.statistic;
      s.rec.p_value = res.p_value;
      s.rec.delta_used = res.delta_used;
      s.rec.rejected = std::fabs(res.statistic) > z_crit;
      s.rec.converged1 = res.beta_hats.first.converged;
      s.rec.converged2 = res.beta_hats.second.converged;
      s.rec.kkt_residual1 = res.beta_hats.first.kkt_residual;
      s.rec.kkt_residual2 = res.beta_hats.second.kkt_residual;
      s.rec.kkt_ok = res.beta_hats.first.converged && res.beta_hats.second.converged;
      slots[r] = std::move(s);
    } catch (const std::exception&) {
      slots[r].ok = false;
    }
  });

  SimulationReport rep;
  rep.dgp = dgp;
  rep.alpha = alpha;
  int rejected = 0;
  for (const Slot& s : slots) {
    if (!s.ok) {
      ++rep.excluded;
      continue;
    }
    rep.records.push_back(s.rec);
    rep.statistics.push_back(s.rec.statistic);
    if (s.rec.rejected) ++rejected;
  }
  rep.replicates = static_cast<int>(rep.records.size());
  if (rep.excluded > 0 &&
      rep.excluded * 20 > replicates)  // more than 5% of the requested runs
    throw std::runtime_error("run_monte_carlo: more than 5% of replicates failed");
  if (rep.replicates == 0) throw std::runtime_error("run_monte_carlo: no usable replicates");
  const double m = static_cast<double>(rep.replicates);
  rep.rejection_rate = static_cast<double>(rejected) / m;
  rep.rejection_se = std::sqrt(rep.rejection_rate * (1.0 - rep.rejection_rate) / m);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

std::vector<QQPoint> export_qq_data(const std::vector<double>& statistics) {
  if (statistics.empty()) throw std::invalid_argument("export_qq_data: empty statistics");
  std::vector<double> sorted = statistics;
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  std::vector<QQPoint> out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out[i].theoretical = norm_quantile((static_cast<double>(i) + 0.5) / m);
    out[i].observed = sorted[i];
  }
  return out;
}

OracleCurve mc_mse_oracle(const DGPConfig& dgp, const Eigen::VectorXd& beta_star,
                          OracleVMode v_mode, Eigen::Index tested_index,
                          const std::vector<double>& grid, int reps, std::uint64_t seed,
                          const TestConfig& cfg, int threads) {
  if (grid.empty()) throw std::invalid_argument("mc_mse_oracle: empty grid");
  if (reps < 1) throw std::invalid_argument("mc_mse_oracle: reps >= 1");
  if (beta_star.size() != dgp.d) throw std::invalid_argument("mc_mse_oracle: beta_star length");

  const Kernel k_main = make_gaussian_order(cfg.kernel_order);
  const ResolvedParams par = resolve_params(cfg, dgp.n, dgp.d);

  OracleCurve out;
  out.grid = grid;

  // v* stand-in: average of Dantzig solutions computed at beta* on fresh
  // draws of size 10n.
  if (v_mode == OracleVMode::UnitTested) {
    out.v_star = Eigen::VectorXd::Zero(dgp.d);
    out.v_star[tested_index - 1] = 1.0;
  } else {
    const int v_reps = 8;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dgp.d);
    for (int r = 0; r < v_reps; ++r) {
      DGPConfig big = dgp;
      big.n = 10 * dgp.n;
      big.seed = derive_seed(seed ^ 0x5eedULL, static_cast<std::uint64_t>(r));
      big.beta_draw_seed = dgp.beta_draw_seed;
      auto [data, bs] = generate_dgp(big);
      const WeightFn weights = empirical_weights(data, cfg.weight_mode);
      const RiskContext ctx(data, weights, k_main, cfg.delta_dantzig);
      const DecorrelationVector dv =
          decorrelation_vector(ctx, beta_star, tested_index, par.lambda_prime, cfg.delta_dantzig);
      acc += dv.v_hat;
    }
    out.v_star = acc / static_cast<double>(v_reps);
  }

  const std::size_t g = grid.size();
  Eigen::MatrixXd squares(reps, static_cast<Eigen::Index>(g));
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    DGPConfig cfg_r = dgp;
    cfg_r.seed = derive_seed(seed, r);
    cfg_r.beta_draw_seed = dgp.beta_draw_seed;
    auto [data, bs] = generate_dgp(cfg_r);
    const WeightFn weights = empirical_weights(data, cfg.weight_mode);
    const RiskContext base(data, weights, k_main, 1.0);
    for (std::size_t i = 0; i < g; ++i) {
      const RiskContext ctx = base.with_delta(grid[i]);
      const Eigen::VectorXd coefs = per_obs_gradient_coefs(ctx, beta_star);
      const Eigen::VectorXd proj = ctx.z() * out.v_star;
      NeumaierSum acc;
      for (Eigen::Index k = 0; k < ctx.size(); ++k) acc.add(coefs[k] * proj[k]);
      const double s = acc.value() / static_cast<double>(ctx.size());
      squares(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = s * s;
    }
  });

  out.m.resize(g);
  out.sd.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    const auto col = squares.col(static_cast<Eigen::Index>(i));
    const double mean = col.mean();
    out.m[i] = mean;
    out.sd[i] = reps > 1 ? std::sqrt((col.array() - mean).square().sum() / (reps - 1)) : 0.0;
  }
  return out;
}

}  // namespace mcid
