#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "rkbayes/rng.hpp"

namespace testsupport {

// Gaussian elimination with partial pivoting; deliberately shares nothing
// with the library's Cholesky path so it can serve as an independent oracle.
inline Eigen::VectorXd gauss_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index pivot = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    if (pivot != k) {
      a.row(k).swap(a.row(pivot));
      std::swap(b(k), b(pivot));
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double m = a(i, k) / a(k, k);
      a.row(i).tail(n - k) -= m * a.row(k).tail(n - k);
      b(i) -= m * b(k);
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double acc = b(i);
    for (Eigen::Index j = i + 1; j < n; ++j) acc -= a(i, j) * x(j);
    x(i) = acc / a(i, i);
  }
  return x;
}

// Random locations in [0, 1] with a guaranteed minimum separation.
inline std::vector<double> separated_locations(rkbayes::Rng& rng, int n, double min_gap = 0.01) {
  std::vector<double> xs;
  int guard = 0;
  while (static_cast<int>(xs.size()) < n && guard < 100000) {
    ++guard;
    const double x = rng.uniform();
    bool ok = true;
    for (double other : xs)
      if (std::abs(other - x) < min_gap) {
        ok = false;
        break;
      }
    if (ok) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

inline std::vector<double> equispaced(int n) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
  return xs;
}

}  // namespace testsupport
