#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rkbayes/errors.hpp"

namespace rkbayes {

enum class KernelKind { cubic_spline_shifted, gaussian_rbf, linear };

// Identifies a positive definite kernel K(.,.) together with its parameters.
// Immutable after construction; locations are 1-D reals for the shipped
// kernels and only this module ever touches them, so solvers stay agnostic.
struct KernelSpec {
  KernelKind kind = KernelKind::cubic_spline_shifted;
  double rbf_width = 1.0;  // only meaningful for gaussian_rbf

  static KernelSpec cubic_spline_shifted() { return {KernelKind::cubic_spline_shifted, 1.0}; }
  static KernelSpec gaussian_rbf(double width);
  static KernelSpec linear() { return {KernelKind::linear, 1.0}; }
};

// Parse a CLI kernel description: cubic-spline-shifted | rbf:<width> | linear.
KernelSpec parse_kernel(const std::string& text);
std::string to_string(const KernelSpec& spec);

// K(a, b); symmetric in its arguments. The shifted cubic spline kernel
// requires a, b in [0, 1].
double kernel_eval(const KernelSpec& spec, double a, double b);

struct GramMatrix {
  Eigen::MatrixXd entries;          // entries(i, j) = K(x_i, x_j)
  std::vector<double> locations;    // the x_i, in order
  KernelSpec kernel;

  Eigen::Index size() const { return entries.rows(); }
};

GramMatrix gram(const KernelSpec& spec, std::span<const double> locations);

// Lower-triangular Cholesky factor of (matrix + jitter * I).
struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  double log_det() const;  // log det of the jittered matrix
};

// Factor a symmetric matrix, escalating jitter through
// {0, 1e-10, 1e-8} * trace/N until the factorization succeeds.
CholeskyFactor factor(const Eigen::MatrixXd& sym);
CholeskyFactor factor(const GramMatrix& g);

// Solve sym * x = b using an existing factor of (sym + jitter I), polishing
// with a few iterative-refinement sweeps against the unjittered matrix.
Eigen::VectorXd refined_solve(const Eigen::MatrixXd& sym, const CholeskyFactor& f,
                              const Eigen::VectorXd& b, int refinements = 2);

}  // namespace rkbayes
