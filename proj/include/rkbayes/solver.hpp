#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "rkbayes/kernel.hpp"
#include "rkbayes/loss.hpp"

namespace rkbayes {

struct SolverDiagnostics {
  int newton_steps = 0;
  int mu_stages = 0;
  double final_objective = 0.0;  // unsmoothed objective at the returned coefficients
  double gradient_norm = 0.0;    // smoothed gradient norm at the final mu
  double residual = 0.0;         // quadratic: relative residual of (Kbar+gamma I)c = y
  double jitter_max = 0.0;       // largest jitter engaged by Newton systems
  std::vector<double> objective_trace;   // smoothed objective after each Newton step
  std::vector<std::size_t> stage_starts; // trace offsets where a new mu stage begins
};

// Coefficients c of F(.) = sum_i c_i K(x_i, .), evaluable anywhere.
struct RepresenterEstimate {
  Eigen::VectorXd coefficients;
  std::vector<double> training_locations;
  KernelSpec kernel;
  double gamma = 0.0;
  SolverDiagnostics diagnostics;
};

// Quadratic-loss closed form: c = (Kbar + gamma I)^-1 y.
RepresenterEstimate solve_quadratic(const GramMatrix& g, const Eigen::VectorXd& y, double gamma);

// General convex losses: minimize
//   sum_i V_i[y_i - (Kbar c)_i] + gamma c^T Kbar c
// by smoothed Newton continuation. Kinks are smoothed with parameter mu,
// driven down a schedule mu_k = 4^-k from 1 until mu <= 1e-8; each smoothed
// problem is solved by damped Newton (Armijo backtracking) and terminates on
// relative objective decrease < 1e-10 or gradient norm < 1e-9 (1 + |obj|).
RepresenterEstimate solve_general(const GramMatrix& g, const Eigen::VectorXd& y,
                                  const std::vector<LossSpec>& losses, double gamma);

// F(x) = sum_i c_i K(x_i, x).
double evaluate(const RepresenterEstimate& est, double x);
Eigen::VectorXd evaluate(const RepresenterEstimate& est, std::span<const double> xs);

// MAP values of the field at the N training locations followed by M extra
// ones. Internally cross-checks the covariance-projection construction
// (weights Kbar^-1 g_hat applied to the extra kernel sections) against direct
// evaluation of the representer expansion.
Eigen::VectorXd map_at_locations(const RepresenterEstimate& est, std::span<const double> extra);

// Smoothed objective (and optionally its gradient) at coefficients c.
double smoothed_objective(const GramMatrix& g, const Eigen::VectorXd& y,
                          const std::vector<LossSpec>& losses, double gamma,
                          const Eigen::VectorXd& c, double mu,
                          Eigen::VectorXd* gradient = nullptr);

}  // namespace rkbayes
