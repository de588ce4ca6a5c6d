#pragma once

#include <Eigen/Core>

#include "mcid/risk.hpp"

namespace mcid {

// Symmetrize and clip eigenvalues below `floor`; result is symmetric
// positive definite.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& h, double floor);

struct DantzigOptions {
  double gap_tol = 1e-8;       // relative duality-gap stopping
  int max_iters = 20000;       // first-order budget before the exact finish
  double rho = 1.0;            // initial ADMM penalty, rebalanced adaptively
};

struct DantzigSolution {
  Eigen::VectorXd omega;
  double objective = 0.0;       // ||omega||_1
  double residual = 0.0;        // ||h_gt - H_gg omega||_inf
  double gap = 0.0;             // certified duality gap at exit
  int iterations = 0;
  bool converged = false;
  bool polished = false;        // finished on an exact vertex
};

// min ||omega||_1  s.t.  ||h_gt - H_gg omega||_inf <= lambda_prime.
// Linearized ADMM with duality-gap stopping, finished by a vertex polish
// when the active set identifies a basic solution.
DantzigSolution solve_dantzig(const Eigen::MatrixXd& h_gg, const Eigen::VectorXd& h_gt,
                              double lambda_prime, const DantzigOptions& opts = {});

// Exact two-phase dense simplex on the split-variable LP. Intended for
// moderate dimensions; the tests check the ADMM path against it.
DantzigSolution solve_dantzig_simplex(const Eigen::MatrixXd& h_gg, const Eigen::VectorXd& h_gt,
                                      double lambda_prime);

struct DecorrelationVector {
  Eigen::VectorXd omega_hat;     // length d-1
  Eigen::VectorXd v_hat;         // length d, +1 in the tested slot
  double lambda_prime = 0.0;
  double feasibility_residual = 0.0;
  bool psd_projected = false;
};

// Assembles v = (1, -omega^T) in original coordinate order from the fold
// Hessian at beta_plug: extract the nuisance block and the tested column,
// project onto the PSD cone if the block is not positive definite, solve
// the Dantzig program.
DecorrelationVector decorrelation_vector(const RiskContext& fold, const Eigen::VectorXd& beta_plug,
                                         Eigen::Index tested_index, double lambda_prime,
                                         double delta_dantzig,
                                         const DantzigOptions& opts = {});

// Same assembly from an already-built d x d Hessian; the tested slot is a
// 0-based position in that matrix. Used directly by the contrast test,
// which transforms the Hessian first.
DecorrelationVector decorrelate_from_hessian(Eigen::MatrixXd hessian, Eigen::Index tested_slot,
                                             double lambda_prime,
                                             const DantzigOptions& opts = {});

// Default tuning lambda' = 2 (log d / n)^{1/5}.
double default_lambda_prime(Eigen::Index n, Eigen::Index d);

}  // namespace mcid
