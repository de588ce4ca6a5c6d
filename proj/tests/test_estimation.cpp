#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mcid/estimation.hpp"
#include "mcid/simulation.hpp"

using namespace mcid;

namespace {

Dataset random_dataset(int n, int d, unsigned seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd x(n);
  Eigen::VectorXi y(n);
  Eigen::MatrixXd z(n, d);
  for (int i = 0; i < n; ++i) {
    x[i] = gauss(eng);
    y[i] = (eng() & 1) ? 1 : -1;
    for (int j = 0; j < d; ++j) z(i, j) = gauss(eng);
  }
  y[0] = 1;
  y[1] = -1;
  return Dataset::make(x, y, z);
}

RiskContext make_ctx(const Dataset& d, double delta) {
  return RiskContext(d, empirical_weights(d, WeightMode::InverseProportion),
                     make_gaussian_order(2), delta);
}

}  // namespace

TEST_CASE("soft-threshold prox against the scalar rule") {
  std::mt19937_64 eng(4);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd v(7);
    for (int j = 0; j < 7; ++j) v[j] = 3.0 * gauss(eng);
    const double thr = std::fabs(gauss(eng));
    const Eigen::VectorXd p = prox_l1_ball(v, thr, 1e9);
    for (int j = 0; j < 7; ++j) {
      const double expect = (v[j] > 0 ? 1.0 : -1.0) * std::max(std::fabs(v[j]) - thr, 0.0);
      CHECK(p[j] == doctest::Approx(expect).epsilon(1e-15));
    }
  }
  // ball projection kicks in radially
  Eigen::VectorXd big(2);
  big << 30.0, 40.0;
  const Eigen::VectorXd q = prox_l1_ball(big, 0.0, 5.0);
  CHECK(q.norm() == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(q[1] / q[0] == doctest::Approx(big[1] / big[0]).epsilon(1e-12));
}

TEST_CASE("large lambda returns exactly zero") {
  const Dataset d = random_dataset(40, 5, 10);
  const RiskContext ctx = make_ctx(d, 0.4);
  const double lam0 = smoothed_gradient(ctx, Eigen::VectorXd::Zero(5)).lpNorm<Eigen::Infinity>();
  const FittedModel m = fit_penalized(ctx, lam0 * 1.01);
  CHECK(m.beta_hat.norm() == 0.0);
  CHECK(m.converged);
  CHECK(m.kkt_residual == 0.0);
}

TEST_CASE("one-dimensional fit lands near the grid minimizer") {
  // a separated two-cluster design whose smoothed objective decreases and
  // then increases in the coefficient
  const int n = 60;
  Eigen::VectorXd x(n);
  Eigen::VectorXi y(n);
  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(n, 1);
  std::mt19937_64 eng(2);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < n; ++i) {
    y[i] = (i % 2 == 0) ? 1 : -1;
    x[i] = 0.8 * y[i] + 0.25 * gauss(eng);  // threshold near b* = 0 separates well
  }
  const Dataset d = Dataset::make(x, y, z);
  const RiskContext ctx = make_ctx(d, 0.3);
  const double lambda = 0.01;
  const FittedModel m = fit_penalized(ctx, lambda);

  const double step = 1e-3;
  double best_b = 0.0, best_obj = std::numeric_limits<double>::infinity();
  std::vector<double> grid_obj;
  for (double b = -2.0; b <= 2.0; b += step) {
    Eigen::VectorXd beta(1);
    beta << b;
    const double obj = smoothed_risk(ctx, beta) + lambda * std::fabs(b);
    grid_obj.push_back(obj);
    if (obj < best_obj) {
      best_obj = obj;
      best_b = b;
    }
  }
  // verify the decreasing-then-increasing premise on a coarse subsample
  std::size_t argmin = 0;
  for (std::size_t i = 1; i < grid_obj.size(); ++i)
    if (grid_obj[i] < grid_obj[argmin]) argmin = i;
  for (std::size_t i = 50; i + 50 < grid_obj.size(); i += 50) {
    if (i + 50 <= argmin) REQUIRE(grid_obj[i + 50] <= grid_obj[i] + 1e-9);
    if (i >= argmin + 50) REQUIRE(grid_obj[i] >= grid_obj[i - 50] - 1e-9);
  }

  CHECK(m.objective <= smoothed_risk(ctx, Eigen::VectorXd::Zero(1)) + 1e-12);
  CHECK(std::fabs(m.beta_hat[0] - best_b) <= 2.0 * step);
  CHECK(m.objective <= best_obj + 1e-6);
}

TEST_CASE("objective never exceeds the zero-initialized value") {
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset d = random_dataset(30 + rep, 4, 200 + rep);
    const RiskContext ctx = make_ctx(d, 0.35);
    const double lambda = 0.02 + 0.01 * (rep % 5);
    const FittedModel m = fit_penalized(ctx, lambda);
    const double at_zero = smoothed_risk(ctx, Eigen::VectorXd::Zero(4));
    CHECK(m.objective <= at_zero + 1e-12);
  }
}

TEST_CASE("stage trace: lambdas non-increasing, last equals target") {
  const Dataset d = random_dataset(50, 6, 33);
  const RiskContext ctx = make_ctx(d, 0.4);
  const double lambda = 0.03;
  const FittedModel m = fit_penalized(ctx, lambda);
  REQUIRE(!m.stage_trace.empty());
  for (std::size_t k = 1; k < m.stage_trace.size(); ++k)
    CHECK(m.stage_trace[k].lambda <= m.stage_trace[k - 1].lambda + 1e-15);
  CHECK(m.stage_trace.back().lambda == doctest::Approx(lambda).epsilon(1e-14));
}

TEST_CASE("kkt conditions hold coordinate-wise at the solution") {
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset d = random_dataset(60, 8, 300 + rep);
    const RiskContext ctx = make_ctx(d, 0.35);
    const double lambda = 0.05;
    const FittedModel m = fit_penalized(ctx, lambda);
    if (!m.converged) continue;
    const Eigen::VectorXd g = smoothed_gradient(ctx, m.beta_hat);
    for (int j = 0; j < 8; ++j) {
      if (m.beta_hat[j] == 0.0) {
        CHECK(std::fabs(g[j]) <= lambda + 1e-4);
      } else {
        CHECK(std::fabs(g[j] + lambda * (m.beta_hat[j] > 0 ? 1.0 : -1.0)) <= 1e-4);
      }
    }
  }
}

TEST_CASE("warm start is honored and objective does not regress") {
  const Dataset d = random_dataset(40, 5, 17);
  const RiskContext ctx = make_ctx(d, 0.4);
  const FittedModel cold = fit_penalized(ctx, 0.05);
  const FittedModel warm = fit_penalized(ctx, 0.05, {}, cold.beta_hat);
  const double obj_init = smoothed_risk(ctx, cold.beta_hat) + 0.05 * cold.beta_hat.lpNorm<1>();
  CHECK(warm.objective <= obj_init + 1e-10);
}

TEST_CASE("support refit keeps zeros, lowers risk, kills support gradient") {
  const Dataset d = random_dataset(80, 6, 55);
  const RiskContext ctx = make_ctx(d, 0.35);
  const FittedModel m = fit_penalized(ctx, 0.08);
  const Eigen::VectorXd refit = refit_on_support(ctx, m.beta_hat);
  REQUIRE(refit.size() == 6);
  for (int j = 0; j < 6; ++j)
    if (m.beta_hat[j] == 0.0) CHECK(refit[j] == 0.0);
  CHECK(smoothed_risk(ctx, refit) <= smoothed_risk(ctx, m.beta_hat) + 1e-12);
  const Eigen::VectorXd g = smoothed_gradient(ctx, refit);
  for (int j = 0; j < 6; ++j)
    if (m.beta_hat[j] != 0.0) CHECK(std::fabs(g[j]) < 1e-6);

  // all-zero input returned unchanged
  const Eigen::VectorXd zero = refit_on_support(ctx, Eigen::VectorXd::Zero(6));
  CHECK(zero.norm() == 0.0);
}

TEST_CASE("invalid arguments are rejected") {
  const Dataset d = random_dataset(20, 3, 9);
  const RiskContext ctx = make_ctx(d, 0.5);
  CHECK_THROWS_AS(static_cast<void>(fit_penalized(ctx, 0.0)), std::invalid_argument);
  PathConfig bad;
  bad.stages = 0;
  CHECK_THROWS_AS(static_cast<void>(fit_penalized(ctx, 0.1, bad)), std::invalid_argument);
}

TEST_CASE("cross-validation: single cell and determinism") {
  const Dataset d = random_dataset(40, 3, 70);
  const Kernel k = make_gaussian_order(2);
  const CrossValidationResult cv =
      cross_validate(d, {0.3}, {0.05}, 2, 5, WeightMode::InverseProportion, k);
  CHECK(cv.delta == 0.3);
  CHECK(cv.lambda == 0.05);
  CHECK(cv.cv_table.rows() == 1);
  CHECK(cv.cv_table.cols() == 1);

  const CrossValidationResult a =
      cross_validate(d, {0.2, 0.4}, {0.02, 0.2}, 3, 9, WeightMode::InverseProportion, k);
  const CrossValidationResult b =
      cross_validate(d, {0.2, 0.4}, {0.02, 0.2}, 3, 9, WeightMode::InverseProportion, k, {}, 2);
  CHECK(a.delta == b.delta);
  CHECK(a.lambda == b.lambda);
  CHECK((a.cv_table - b.cv_table).norm() == 0.0);
}

TEST_CASE("cross-validation picks the small lambda on a signal-bearing dgp") {
  DGPConfig dgp;
  dgp.scenario = Scenario::HeteroGaussian;
  dgp.n = 300;
  dgp.d = 5;
  dgp.s = 2;
  dgp.rho = 0.0;
  dgp.beta1 = 3.0;  // strong coordinate-1 signal before normalization
  dgp.seed = 42;
  dgp.beta_draw_seed = 7;
  auto [data, beta_star] = generate_dgp(dgp);

  const double delta = std::pow(static_cast<double>(data.n), -0.2);
  const Kernel k = make_gaussian_order(2);
  const double lam_small = 0.05;
  const double lam_huge = 50.0;
  const CrossValidationResult cv = cross_validate(data, {delta}, {lam_small, lam_huge}, 3, 11,
                                                  WeightMode::InverseProportion, k);
  CHECK(cv.lambda == lam_small);
  // the huge-lambda column collapses to beta = 0 and scores clearly worse
  CHECK(cv.cv_table(0, 0) < cv.cv_table(0, 1) - 0.02);
}

TEST_CASE("missing label class in a fold is an error") {
  const Dataset d = random_dataset(12, 2, 123);
  Eigen::VectorXi y = d.y;
  for (int i = 0; i < 12; ++i) y[i] = i < 2 ? 1 : -1;
  const Dataset skew = Dataset::make(d.x, y, d.z);
  const Kernel k = make_gaussian_order(2);
  CHECK_THROWS_AS(static_cast<void>(cross_validate(skew, {0.3}, {0.1}, 6, 3,
                                                   WeightMode::InverseProportion, k)),
                  std::runtime_error);
}
