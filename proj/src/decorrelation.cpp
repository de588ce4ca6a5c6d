#include "mcid/decorrelation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mcid {

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& h, double floor) {
  if (!(floor > 0.0)) throw std::invalid_argument("project_psd: floor must be > 0");
  if (h.rows() != h.cols()) throw std::invalid_argument("project_psd: matrix not square");
  if (!h.allFinite()) throw std::invalid_argument("project_psd: non-finite entries");
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("project_psd: eigendecomposition failed");
  Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out =
      eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose().triangularView<Eigen::StrictlyUpper>();
  return out;
}

double default_lambda_prime(Eigen::Index n, Eigen::Index d) {
  return 2.0 * std::pow(std::log(static_cast<double>(d)) / static_cast<double>(n), 0.2);
}

namespace {

double dual_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& c, double lambda_prime,
                      const Eigen::VectorXd& y) {
  // dual of the Dantzig LP: max -c'nu - lambda'||nu||_1 over ||A nu||_inf <= 1
  const double scale = (a * y).lpNorm<Eigen::Infinity>();
  if (scale <= 0.0) return 0.0;
  const Eigen::VectorXd nu = y / std::max(1.0, scale);
  return -c.dot(nu) - lambda_prime * nu.lpNorm<1>();
}

double spectral_norm_sym(const Eigen::MatrixXd& a) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(a.rows());
  v /= v.norm();
  double lam = 0.0;
  for (int it = 0; it < 30; ++it) {
    Eigen::VectorXd av = a * v;
    const double norm = av.norm();
    if (norm < 1e-300) return 0.0;
    lam = norm;
    v = av / norm;
  }
  return lam;
}

// Attempts to land exactly on the optimal vertex identified by the ADMM
// iterate: solve the active square system, then certify optimality with a
// dual multiplier supported on the active rows.
bool try_vertex_polish_at(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                          double lambda_prime, double support_tol, double active_tol,
                          DantzigSolution& sol) {
  const Eigen::Index m = a.rows();
  const Eigen::VectorXd& w = sol.omega;
  const double wmax = w.lpNorm<Eigen::Infinity>();

  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < m; ++j)
    if (std::fabs(w[j]) > support_tol * std::max(1.0, wmax)) support.push_back(j);

  const Eigen::VectorXd rho = a * w - c;
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::fabs(rho[i]) >= lambda_prime - active_tol * (1.0 + lambda_prime)) active.push_back(i);

  const auto ns = static_cast<Eigen::Index>(support.size());
  const auto na = static_cast<Eigen::Index>(active.size());
  if (ns == 0) {
    // candidate omega = 0; optimal iff feasible and no descent direction
    if (c.lpNorm<Eigen::Infinity>() <= lambda_prime * (1.0 + 1e-12)) {
      sol.omega.setZero();
      sol.objective = 0.0;
      sol.residual = c.lpNorm<Eigen::Infinity>();
      sol.gap = 0.0;
      sol.converged = true;
      sol.polished = true;
      return true;
    }
    return false;
  }
  if (na < ns) return false;

  Eigen::MatrixXd a_es(na, ns);
  Eigen::VectorXd b_e(na);
  for (Eigen::Index r = 0; r < na; ++r) {
    for (Eigen::Index s = 0; s < ns; ++s) a_es(r, s) = a(active[r], support[s]);
    b_e[r] = c[active[r]] + lambda_prime * (rho[active[r]] > 0.0 ? 1.0 : -1.0);
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a_es);
  const Eigen::VectorXd ws = cod.solve(b_e);
  if ((a_es * ws - b_e).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + lambda_prime)) return false;

  Eigen::VectorXd w_new = Eigen::VectorXd::Zero(m);
  for (Eigen::Index s = 0; s < ns; ++s) w_new[support[s]] = ws[s];
  const Eigen::VectorXd rho_new = a * w_new - c;
  if (rho_new.lpNorm<Eigen::Infinity>() > lambda_prime * (1.0 + 1e-10) + 1e-14) return false;

  // dual certificate: nu on active rows with (A nu)_S = -sign(omega_S)
  Eigen::VectorXd sgn(ns);
  for (Eigen::Index s = 0; s < ns; ++s) {
    if (w_new[support[s]] == 0.0) return false;
    sgn[s] = w_new[support[s]] > 0.0 ? 1.0 : -1.0;
  }
  Eigen::MatrixXd a_se(ns, na);
  for (Eigen::Index s = 0; s < ns; ++s)
    for (Eigen::Index r = 0; r < na; ++r) a_se(s, r) = a(support[s], active[r]);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod2(a_se);
  const Eigen::VectorXd nu_e = cod2.solve(-sgn);
  if ((a_se * nu_e + sgn).lpNorm<Eigen::Infinity>() > 1e-8) return false;

  Eigen::VectorXd nu = Eigen::VectorXd::Zero(m);
  for (Eigen::Index r = 0; r < na; ++r) {
    // multiplier sign must match the active face
    if (nu_e[r] * rho[active[r]] < -1e-8) return false;
    nu[active[r]] = nu_e[r];
  }
  const Eigen::VectorXd anu = a * nu;
  for (Eigen::Index j = 0; j < m; ++j)
    if (std::fabs(anu[j]) > 1.0 + 1e-8) return false;

  const double primal = w_new.lpNorm<1>();
  const double dual = -c.dot(nu) - lambda_prime * nu.lpNorm<1>();
  if (std::fabs(primal - dual) > 1e-8 * (1.0 + primal)) return false;

  sol.omega = std::move(w_new);
  sol.objective = primal;
  sol.residual = rho_new.lpNorm<Eigen::Infinity>();
  sol.gap = std::fabs(primal - dual);
  sol.converged = true;
  sol.polished = true;
  return true;
}

bool try_vertex_polish(const Eigen::MatrixXd& a, const Eigen::VectorXd& c, double lambda_prime,
                       DantzigSolution& sol) {
  for (double support_tol : {1e-9, 1e-6, 1e-4}) {
    for (double active_tol : {1e-6, 1e-4, 1e-3}) {
      DantzigSolution candidate = sol;
      if (try_vertex_polish_at(a, c, lambda_prime, support_tol, active_tol, candidate)) {
        sol = std::move(candidate);
        return true;
      }
    }
  }
  return false;
}

}  // namespace

DantzigSolution solve_dantzig(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                              double lambda_prime, const DantzigOptions& opts) {
  if (a.rows() != a.cols() || a.rows() != c.size())
    throw std::invalid_argument("solve_dantzig: dimension mismatch");
  if (lambda_prime < 0.0) throw std::invalid_argument("solve_dantzig: lambda_prime < 0");
  const Eigen::Index m = a.rows();

  DantzigSolution sol;
  sol.omega = Eigen::VectorXd::Zero(m);
  if (c.lpNorm<Eigen::Infinity>() <= lambda_prime) {
    sol.converged = true;
    sol.residual = c.lpNorm<Eigen::Infinity>();
    return sol;
  }

  // linearized ADMM on  A w + r = c,  ||r||_inf <= lambda'
  const double a_spec = spectral_norm_sym(a);
  double a_norm2 = std::max(1.1 * a_spec * a_spec, 1e-12);
  const double a_frob2 = std::max(a.squaredNorm(), 1e-12);  // certain upper bound on ||A||_2^2
  double rho = opts.rho;
  double mu = rho * a_norm2;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd r = c.cwiseMax(-lambda_prime).cwiseMin(lambda_prime);
  Eigen::VectorXd r_prev = r;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd aw = Eigen::VectorXd::Zero(m);

  const double feas_tol = std::max(1e-11, 1e-8 * lambda_prime);
  for (int it = 1; it <= opts.max_iters; ++it) {
    // w-step (proximal linearization)
    const Eigen::VectorXd g = a * (y + rho * (aw + r - c));
    const Eigen::VectorXd u = w - g / mu;
    const double thr = 1.0 / mu;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = std::fabs(u[j]) - thr;
      w[j] = v > 0.0 ? (u[j] > 0.0 ? v : -v) : 0.0;
    }
    aw = a * w;
    // r-step: projection onto the box
    r_prev.swap(r);
    r = (c - aw - y / rho).cwiseMax(-lambda_prime).cwiseMin(lambda_prime);
    // multiplier step
    y += rho * (aw + r - c);

    if (it % 25 == 0 || it == opts.max_iters) {
      sol.iterations = it;
      const double primal_res = (aw + r - c).lpNorm<Eigen::Infinity>();
      const double y_mag = y.lpNorm<Eigen::Infinity>();
      if (!std::isfinite(primal_res) || !std::isfinite(y_mag) || y_mag > 1e14) {
        // diverged: restart with the provably safe majorization constant
        a_norm2 = a_frob2;
        rho = opts.rho;
        mu = rho * a_norm2;
        w.setZero();
        r = c.cwiseMax(-lambda_prime).cwiseMin(lambda_prime);
        y.setZero();
        aw.setZero();
        continue;
      }
      const double feas = (aw - c).lpNorm<Eigen::Infinity>();
      const double primal_obj = w.lpNorm<1>();
      const double dual_obj = dual_objective(a, c, lambda_prime, y);
      const double gap = primal_obj - dual_obj;
      sol.omega = w;
      sol.objective = primal_obj;
      sol.residual = feas;
      sol.gap = std::fabs(gap);
      if (primal_res < 1e-6 && try_vertex_polish(a, c, lambda_prime, sol)) return sol;
      if (primal_res <= feas_tol && feas <= lambda_prime * (1.0 + 1e-7) + 1e-12 &&
          sol.gap <= opts.gap_tol * (1.0 + primal_obj)) {
        sol.converged = true;
        return sol;
      }
      // residual balancing
      const double dual_res = rho * (a * (r - r_prev)).lpNorm<Eigen::Infinity>();
      if (primal_res > 10.0 * dual_res) {
        rho *= 2.0;
        mu = rho * a_norm2;
      } else if (dual_res > 10.0 * primal_res) {
        rho *= 0.5;
        mu = rho * a_norm2;
      }
    }
  }

  // first-order tail stalled below the certified gap: finish on the exact
  // simplex path so the returned solution still meets the gap contract
  DantzigSolution lp = solve_dantzig_simplex(a, c, lambda_prime);
  lp.iterations = opts.max_iters;
  return lp;
}

// ---------------------------------------------------------------------------
// Two-phase dense simplex with Bland's rule on the split LP
//   min 1'(w+ + w-)   s.t.  A(w+ - w-) + s  = c + l'1
//                          -A(w+ - w-) + s' = l'1 - c,   all vars >= 0.
// ---------------------------------------------------------------------------
namespace {

class DenseSimplex {
 public:
  DenseSimplex(Eigen::MatrixXd constraints, Eigen::VectorXd rhs, Eigen::VectorXd cost)
      : a_(std::move(constraints)), b_(std::move(rhs)), cost_(std::move(cost)) {}

  // returns false on infeasibility
  bool solve(Eigen::VectorXd& x) {
    const Eigen::Index rows = a_.rows();
    const Eigen::Index cols = a_.cols();
    // flip rows so b >= 0, then add artificials
    for (Eigen::Index i = 0; i < rows; ++i)
      if (b_[i] < 0.0) {
        a_.row(i) *= -1.0;
        b_[i] *= -1.0;
      }
    const Eigen::MatrixXd a_orig = a_;
    const Eigen::VectorXd b_orig = b_;
    Eigen::MatrixXd t(rows, cols + rows);
    t << a_, Eigen::MatrixXd::Identity(rows, rows);
    basis_.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) basis_[i] = cols + i;

    // phase 1: minimize the artificial sum
    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(cols + rows);
    phase1_cost.tail(rows).setOnes();
    if (!run(t, phase1_cost)) return false;
    double art = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i)
      if (basis_[i] >= cols) art += b_[i];
    if (art > 1e-8) return false;

    // drive remaining artificials out of the basis where possible
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (basis_[i] < cols) continue;
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < cols; ++j)
        if (std::fabs(t(i, j)) > 1e-9) {
          enter = j;
          break;
        }
      if (enter >= 0) pivot(t, i, enter);
      // a fully-zero row is redundant; the artificial stays basic at 0
    }

    // phase 2
    Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(cols + rows);
    phase2_cost.head(cols) = cost_;
    // forbid re-entry of artificials
    phase2_cost.tail(rows).setConstant(1e30);
    if (!run(t, phase2_cost)) return false;

    // the tableau accumulates roundoff across pivots; re-solve the final
    // basic system against the pristine data
    std::vector<Eigen::Index> structural;
    for (Eigen::Index i = 0; i < rows; ++i)
      if (basis_[i] < cols) structural.push_back(basis_[i]);
    Eigen::MatrixXd basis_mat(rows, static_cast<Eigen::Index>(structural.size()));
    for (std::size_t k = 0; k < structural.size(); ++k)
      basis_mat.col(static_cast<Eigen::Index>(k)) = a_orig.col(structural[k]);
    const Eigen::VectorXd xb =
        basis_mat.completeOrthogonalDecomposition().solve(b_orig);

    x = Eigen::VectorXd::Zero(cols);
    bool resolve_ok = (basis_mat * xb - b_orig).lpNorm<Eigen::Infinity>() <
                      1e-8 * (1.0 + b_orig.lpNorm<Eigen::Infinity>());
    if (resolve_ok) {
      for (std::size_t k = 0; k < structural.size(); ++k)
        x[structural[k]] = std::max(xb[static_cast<Eigen::Index>(k)], 0.0);
    } else {
      for (Eigen::Index i = 0; i < rows; ++i)
        if (basis_[i] < cols) x[basis_[i]] = std::max(b_[i], 0.0);
    }
    return true;
  }

 private:
  void pivot(Eigen::MatrixXd& t, Eigen::Index row, Eigen::Index col) {
    const double piv = t(row, col);
    t.row(row) /= piv;
    b_[row] /= piv;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      if (i == row) continue;
      const double f = t(i, col);
      if (f != 0.0) {
        t.row(i) -= f * t.row(row);
        b_[i] -= f * b_[row];
      }
    }
    basis_[row] = col;
  }

  bool run(Eigen::MatrixXd& t, const Eigen::VectorXd& cost) {
    const Eigen::Index rows = t.rows();
    const Eigen::Index cols = t.cols();
    for (long iter = 0; iter < 50L * (rows + cols) * (rows + cols); ++iter) {
      // reduced costs via basis multipliers
      Eigen::VectorXd cb(rows);
      for (Eigen::Index i = 0; i < rows; ++i) cb[i] = cost[basis_[i]];
      // Bland: first column with negative reduced cost
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double red = cost[j] - cb.dot(t.col(j));
        if (red < -1e-9) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;  // optimal
      // ratio test, Bland ties by smallest basis index
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (t(i, enter) > 1e-11) {
          const double ratio = b_[i] / t(i, enter);
          if (leave < 0 || ratio < best - 1e-12 ||
              (std::fabs(ratio - best) <= 1e-12 && basis_[i] < basis_[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(t, leave, enter);
    }
    return false;  // iteration cap: treat as failure
  }

  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::VectorXd cost_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

DantzigSolution solve_dantzig_simplex(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                                      double lambda_prime) {
  if (a.rows() != a.cols() || a.rows() != c.size())
    throw std::invalid_argument("solve_dantzig_simplex: dimension mismatch");
  const Eigen::Index m = a.rows();
  Eigen::MatrixXd constraints(2 * m, 4 * m);
  constraints.setZero();
  constraints.block(0, 0, m, m) = a;
  constraints.block(0, m, m, m) = -a;
  constraints.block(0, 2 * m, m, m) = Eigen::MatrixXd::Identity(m, m);
  constraints.block(m, 0, m, m) = -a;
  constraints.block(m, m, m, m) = a;
  constraints.block(m, 3 * m, m, m) = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd rhs(2 * m);
  rhs.head(m) = c.array() + lambda_prime;
  rhs.tail(m) = lambda_prime - c.array();
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(4 * m);
  cost.head(2 * m).setOnes();

  DenseSimplex lp(std::move(constraints), std::move(rhs), std::move(cost));
  Eigen::VectorXd x;
  DantzigSolution sol;
  if (!lp.solve(x)) throw std::runtime_error("solve_dantzig_simplex: infeasible LP");
  sol.omega = x.head(m) - x.segment(m, m);
  sol.objective = sol.omega.lpNorm<1>();
  sol.residual = (a * sol.omega - c).lpNorm<Eigen::Infinity>();
  sol.converged = true;
  sol.polished = true;
  // land exactly on the vertex when the active system certifies
  try_vertex_polish(a, c, lambda_prime, sol);
  return sol;
}

DecorrelationVector decorrelate_from_hessian(Eigen::MatrixXd hessian, Eigen::Index tested_slot,
                                             double lambda_prime, const DantzigOptions& opts) {
  const Eigen::Index d = hessian.rows();
  if (tested_slot < 0 || tested_slot >= d)
    throw std::out_of_range("decorrelate_from_hessian: tested slot out of range");
  if (d < 2) throw std::invalid_argument("decorrelate_from_hessian: need d >= 2");

  DecorrelationVector out;
  out.lambda_prime = lambda_prime;

  const Eigen::Index m = d - 1;
  Eigen::MatrixXd h_gg(m, m);
  Eigen::VectorXd h_gt(m);
  for (Eigen::Index i = 0, r = 0; i < d; ++i) {
    if (i == tested_slot) continue;
    h_gt[r] = hessian(i, tested_slot);
    for (Eigen::Index j = 0, s = 0; j < d; ++j) {
      if (j == tested_slot) continue;
      h_gg(r, s) = hessian(i, j);
      ++s;
    }
    ++r;
  }

  // PSD fallback for ill-conditioned nuisance blocks
  const double floor = 1e-8 * std::max(1.0, 1.0 + h_gg.trace() / static_cast<double>(m));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (h_gg + h_gg.transpose()));
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("decorrelation: eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() < floor) {
    h_gg = project_psd(h_gg, floor);
    out.psd_projected = true;
  }

  DantzigSolution sol = solve_dantzig(h_gg, h_gt, lambda_prime, opts);
  if (!sol.converged)
    throw std::runtime_error("decorrelation: Dantzig solver did not converge");
  if (sol.residual > lambda_prime * (1.0 + 1e-6) + 1e-12)
    throw std::runtime_error("decorrelation: infeasible Dantzig solution");

  out.omega_hat = std::move(sol.omega);
  out.feasibility_residual = sol.residual;
  out.v_hat = Eigen::VectorXd::Zero(d);
  out.v_hat[tested_slot] = 1.0;
  for (Eigen::Index i = 0, r = 0; i < d; ++i) {
    if (i == tested_slot) continue;
    out.v_hat[i] = -out.omega_hat[r++];
  }
  return out;
}

DecorrelationVector decorrelation_vector(const RiskContext& fold, const Eigen::VectorXd& beta_plug,
                                         Eigen::Index tested_index, double lambda_prime,
                                         double delta_dantzig, const DantzigOptions& opts) {
  if (tested_index < 1 || tested_index > fold.dim())
    throw std::out_of_range("decorrelation_vector: tested index out of range");
  const RiskContext ctx = fold.with_delta(delta_dantzig);
  Eigen::MatrixXd h = smoothed_hessian(ctx, beta_plug);
  return decorrelate_from_hessian(std::move(h), tested_index - 1, lambda_prime, opts);
}

}  // namespace mcid
