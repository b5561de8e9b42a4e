#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace rkbayes {

// Bad user-supplied data or arguments (CLI exit code 3).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Linear-algebra or quadrature breakdown (CLI exit code 4).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Quadrature hit its subdivision cap; carries the best estimate so far.
class AccuracyError : public NumericalError {
 public:
  AccuracyError(const std::string& what, double best)
      : NumericalError(what), best_estimate(best) {}
  double best_estimate;
};

// Iterative solve exhausted its iteration budget (CLI exit code 5).
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd iterate, double residual)
      : std::runtime_error(what), last_iterate(std::move(iterate)), residual(residual) {}
  Eigen::VectorXd last_iterate;
  double residual;
};

// Malformed command line (CLI exit code 2).
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rkbayes
