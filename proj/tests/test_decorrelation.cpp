#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mcid/decorrelation.hpp"
#include "oracles.hpp"

using namespace mcid;

namespace {

Eigen::MatrixXd random_sym(int m, unsigned seed, double diag_boost = 0.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = gauss(eng);
  Eigen::MatrixXd s = 0.5 * (a + a.transpose());
  s.diagonal().array() += diag_boost;
  return s;
}

Eigen::MatrixXd random_spd(int m, unsigned seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = gauss(eng);
  return a * a.transpose() / m + 0.5 * Eigen::MatrixXd::Identity(m, m);
}

Eigen::VectorXd random_vec(int m, unsigned seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i) v[i] = gauss(eng);
  return v;
}

}  // namespace

TEST_CASE("project_psd leaves a well-conditioned matrix alone") {
  const Eigen::MatrixXd h = random_spd(6, 3);
  const Eigen::MatrixXd p = project_psd(h, 1e-8);
  CHECK((p - h).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("project_psd clips a diagonal matrix") {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
  h(0, 0) = 2.0;
  h(1, 1) = -1.0;
  const Eigen::MatrixXd p = project_psd(h, 1e-6);
  CHECK(p(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p(1, 1) == doctest::Approx(1e-6).epsilon(1e-9));
  CHECK(std::fabs(p(0, 1)) < 1e-15);
}

TEST_CASE("project_psd floors eigenvalues, checked by an independent solver") {
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
    const Eigen::MatrixXd h = random_sym(5, seed);
    const double floor = 1e-6;
    const Eigen::MatrixXd p = project_psd(h, floor);
    const auto ev = oracle::jacobi_eigenvalues(p);
    CHECK(ev.front() >= floor * (1.0 - 1e-9));
    // idempotence
    const Eigen::MatrixXd pp = project_psd(p, floor);
    CHECK((pp - p).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("project_psd rejects bad input") {
  CHECK_THROWS_AS(static_cast<void>(project_psd(Eigen::MatrixXd::Ones(2, 3), 1e-6)),
                  std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(project_psd(Eigen::MatrixXd::Ones(2, 2), 0.0)),
                  std::invalid_argument);
  Eigen::MatrixXd nan_mat = Eigen::MatrixXd::Ones(2, 2);
  nan_mat(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(static_cast<void>(project_psd(nan_mat, 1e-6)), std::invalid_argument);
}

TEST_CASE("dantzig: identity matrix cases") {
  const int m = 5;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m, m);
  const Eigen::VectorXd a = random_vec(m, 11);

  // lambda' = 0 forces omega = a
  const DantzigSolution exact = solve_dantzig(id, a, 0.0);
  CHECK(exact.converged);
  CHECK((exact.omega - a).lpNorm<Eigen::Infinity>() < 1e-7);

  // lambda' > 0 soft-thresholds componentwise
  const double lp = 0.35;
  const DantzigSolution soft = solve_dantzig(id, a, lp);
  CHECK(soft.converged);
  for (int j = 0; j < m; ++j) {
    const double expect = (a[j] > 0 ? 1.0 : -1.0) * std::max(std::fabs(a[j]) - lp, 0.0);
    CHECK(soft.omega[j] == doctest::Approx(expect).epsilon(1e-6).scale(1.0));
  }

  // zero target: omega = 0 at any lambda'
  const DantzigSolution zero = solve_dantzig(id, Eigen::VectorXd::Zero(m), 0.7);
  CHECK(zero.omega.norm() == 0.0);
}

TEST_CASE("dantzig admm matches the exact enumeration oracle for m <= 6") {
  int checked = 0;
  for (unsigned seed = 1; seed <= 24; ++seed) {
    const int m = 2 + static_cast<int>(seed % 5);  // 2..6
    const Eigen::MatrixXd h = random_spd(m, seed);
    const Eigen::VectorXd c = random_vec(m, seed + 100);
    const double lp = 0.05 + 0.1 * (seed % 4);
    const DantzigSolution sol = solve_dantzig(h, c, lp);
    REQUIRE(sol.converged);
    CHECK(sol.residual <= lp * (1.0 + 1e-6) + 1e-12);
    const double best = oracle::dantzig_l1_minimum_by_enumeration(h, c, lp);
    CHECK(std::fabs(sol.omega.lpNorm<1>() - best) <= 1e-6 * (1.0 + best));
    ++checked;
  }
  CHECK(checked == 24);
}

TEST_CASE("dantzig simplex agrees with admm on larger problems") {
  for (unsigned seed : {2u, 9u, 14u}) {
    const int m = 20;
    const Eigen::MatrixXd h = random_spd(m, seed);
    const Eigen::VectorXd c = random_vec(m, seed + 31);
    const double lp = 0.15;
    const DantzigSolution admm = solve_dantzig(h, c, lp);
    const DantzigSolution lp_exact = solve_dantzig_simplex(h, c, lp);
    REQUIRE(admm.converged);
    REQUIRE(lp_exact.converged);
    CHECK(lp_exact.residual <= lp * (1.0 + 1e-9) + 1e-10);
    CHECK(std::fabs(admm.objective - lp_exact.objective) <= 1e-6 * (1.0 + lp_exact.objective));
  }
}

TEST_CASE("dantzig solutions shrink as lambda' grows") {
  const int m = 8;
  const Eigen::MatrixXd h = random_spd(m, 5);
  const Eigen::VectorXd c = random_vec(m, 55);
  double prev = std::numeric_limits<double>::infinity();
  for (double lp : {0.01, 0.05, 0.1, 0.3, 0.8}) {
    const DantzigSolution sol = solve_dantzig(h, c, lp);
    REQUIRE(sol.converged);
    CHECK(sol.objective <= prev + 1e-6);
    prev = sol.objective;
  }
}

TEST_CASE("decorrelation vector on a diagonal-dominant synthetic instance") {
  // coordinate 3 independent of the rest: Hessian block-diagonal
  const int d = 6;
  Eigen::MatrixXd h = random_spd(d, 8);
  for (int j = 0; j < d; ++j) {
    if (j == 2) continue;
    h(2, j) = 0.0;
    h(j, 2) = 0.0;
  }
  const DecorrelationVector dv = decorrelate_from_hessian(h, 2, 0.05);
  CHECK(dv.omega_hat.lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(dv.v_hat[2] == 1.0);
  CHECK(dv.feasibility_residual <= 0.05 * (1.0 + 1e-6));
  CHECK_FALSE(dv.psd_projected);
}

TEST_CASE("decorrelation vector bookkeeping at d = 2") {
  Eigen::MatrixXd h(2, 2);
  h << 2.0, 0.6, 0.6, 1.5;
  const DecorrelationVector dv = decorrelate_from_hessian(h, 0, 0.01);
  CHECK(dv.v_hat.size() == 2);
  CHECK(dv.v_hat[0] == 1.0);
  CHECK(dv.v_hat[1] == doctest::Approx(-dv.omega_hat[0]));
  // omega solves |h_gt - h_gg w| <= lp with minimal |w|: w = (0.6 - 0.01)/1.5
  CHECK(dv.omega_hat[0] == doctest::Approx((0.6 - 0.01) / 1.5).epsilon(1e-6));
}

TEST_CASE("feasibility residual bound holds on random instances") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const int d = 4 + static_cast<int>(seed % 6);
    Eigen::MatrixXd h = random_sym(d, seed, 1.5);
    const double lp = 0.02 + 0.05 * (seed % 3);
    const DecorrelationVector dv = decorrelate_from_hessian(h, seed % d, lp);
    CHECK(dv.feasibility_residual <= lp * (1.0 + 1e-6) + 1e-12);
    CHECK(dv.lambda_prime == lp);
  }
}

TEST_CASE("psd projection triggers on an indefinite nuisance block") {
  const int d = 5;
  Eigen::MatrixXd h = random_sym(d, 21);  // indefinite almost surely
  const auto ev = oracle::jacobi_eigenvalues(h);
  REQUIRE(ev.front() < 0.0);
  const DecorrelationVector dv = decorrelate_from_hessian(h, 0, 0.5);
  CHECK(dv.psd_projected);
  CHECK(dv.feasibility_residual <= 0.5 * (1.0 + 1e-6));
}

TEST_CASE("default lambda prime follows the rate rule") {
  CHECK(default_lambda_prime(800, 100) ==
        doctest::Approx(2.0 * std::pow(std::log(100.0) / 800.0, 0.2)).epsilon(1e-14));
}
