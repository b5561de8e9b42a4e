#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rkbayes/gauss.hpp"

namespace rkbayes {

struct QuadratureSpec {
  double lower = 0.0;
  double upper = 1.0;
  double abs_tol = 1e-10;
  int max_depth = 60;
};

// Adaptive Simpson with interval bisection. Exceeding the subdivision cap
// raises AccuracyError carrying the best estimate.
double integrate(const std::function<double(double)>& f, const QuadratureSpec& spec);

// Integrals over [a, inf) and (-inf, inf) via the atanh substitution
// x = a + atanh(t); integrands must decay super-polynomially.
double integrate_half_line(const std::function<double(double)>& f, double lower, double abs_tol = 1e-10);
double integrate_real_line(const std::function<double(double)>& f, double abs_tol = 1e-10);

// Verification of the scalar worked example (single measurement y = 1,
// absolute loss, unit scales): the MAP value is 1/2, the posterior mean is
// below it, and the closed-form integral identity for the gap holds.
struct ExampleReport {
  double f_hat = 0.0;            // MAP estimate from the continuation solver
  double e_f_given_y = 0.0;      // posterior mean by quadrature
  double normalizer = 0.0;       // A = integral of exp(-f^2 - |1 - f|)
  double lhs = 0.0;              // e_f_given_y - f_hat
  double rhs = 0.0;              // exp(-3/4)/A * int_{1/2}^inf s (e^{1-2s} - 1) e^{-s^2} ds
  double identity_residual = 0.0;
};

ExampleReport example_check();

struct GridArgmaxResult {
  std::vector<double> location;
  double value = 0.0;
};

// Exhaustive grid maximizer over an axis-aligned box, d <= 3.
GridArgmaxResult grid_argmax(const std::function<double(std::span<const double>)>& f,
                             std::span<const std::pair<double, double>> box, int points_per_dim);

// Sampling oracle for Gaussian conditioning: draws from the joint law via an
// eigendecomposition square root, then predicts E(u | v = v_value) by linear
// regression of u on v (exact for Gaussians). Shares no code path with
// condition().
Eigen::VectorXd mc_conditional_mean(const JointGaussian& j, const Eigen::VectorXd& v_value,
                                    std::size_t draws, std::uint64_t seed);

}  // namespace rkbayes
