#include "rkbayes/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Cholesky>

namespace rkbayes {

KernelSpec KernelSpec::gaussian_rbf(double width) {
  if (!(width > 0.0)) throw InputError("rbf width must be positive");
  return {KernelKind::gaussian_rbf, width};
}

KernelSpec parse_kernel(const std::string& text) {
  if (text == "cubic-spline-shifted") return KernelSpec::cubic_spline_shifted();
  if (text == "linear") return KernelSpec::linear();
  if (text.rfind("rbf:", 0) == 0) {
    try {
      return KernelSpec::gaussian_rbf(std::stod(text.substr(4)));
    } catch (const std::logic_error&) {
      throw InputError("malformed rbf width in kernel spec '" + text + "'");
    }
  }
  throw InputError("unknown kernel '" + text + "' (expected cubic-spline-shifted, rbf:<width> or linear)");
}

std::string to_string(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::cubic_spline_shifted: return "cubic-spline-shifted";
    case KernelKind::gaussian_rbf: return "rbf:" + std::to_string(spec.rbf_width);
    case KernelKind::linear: return "linear";
  }
  return "?";
}

double kernel_eval(const KernelSpec& spec, double a, double b) {
  switch (spec.kind) {
    case KernelKind::cubic_spline_shifted: {
      if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0)
        throw InputError("shifted cubic spline kernel requires locations in [0, 1]");
      // (a+1)(b+1) min(a+1, b+1)/2 - min(a+1, b+1)^3/6
      const double s = a + 1.0;
      const double t = b + 1.0;
      const double m = std::min(s, t);
      return s * t * m / 2.0 - m * m * m / 6.0;
    }
    case KernelKind::gaussian_rbf: {
      const double d = a - b;
      return std::exp(-d * d / (2.0 * spec.rbf_width * spec.rbf_width));
    }
    case KernelKind::linear:
      return a * b;
  }
  throw InputError("unhandled kernel kind");
}

GramMatrix gram(const KernelSpec& spec, std::span<const double> locations) {
  if (locations.empty()) throw InputError("gram: need at least one location");
  const Eigen::Index n = static_cast<Eigen::Index>(locations.size());
  GramMatrix g;
  g.kernel = spec;
  g.locations.assign(locations.begin(), locations.end());
  g.entries.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_eval(spec, locations[i], locations[j]);
      g.entries(i, j) = v;
      g.entries(j, i) = v;
    }
  }
  return g;
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = lower.triangularView<Eigen::Lower>().solve(b);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd x = lower.triangularView<Eigen::Lower>().solve(b);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

double CholeskyFactor::log_det() const {
  return 2.0 * lower.diagonal().array().log().sum();
}

CholeskyFactor factor(const Eigen::MatrixXd& sym) {
  if (sym.rows() == 0 || sym.rows() != sym.cols())
    throw InputError("factor: matrix must be square and nonempty");
  if (!sym.allFinite()) throw InputError("factor: matrix has non-finite entries");

  const double scale = sym.trace() / static_cast<double>(sym.rows());
  const std::array<double, 3> ladder = {0.0, 1e-10 * scale, 1e-8 * scale};
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (double jitter : ladder) {
    Eigen::MatrixXd shifted = sym;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      CholeskyFactor f;
      f.lower = llt.matrixL();
      f.jitter = jitter;
      return f;
    }
  }
  throw NumericalError("Cholesky factorization failed at maximum jitter (trace/n = " +
                       std::to_string(scale) + ", n = " + std::to_string(sym.rows()) + ")");
}

CholeskyFactor factor(const GramMatrix& g) { return factor(g.entries); }

Eigen::VectorXd refined_solve(const Eigen::MatrixXd& sym, const CholeskyFactor& f,
                              const Eigen::VectorXd& b, int refinements) {
  Eigen::VectorXd x = f.solve(b);
  for (int k = 0; k < refinements; ++k) {
    Eigen::VectorXd r = b - sym * x;
    x += f.solve(r);
  }
  return x;
}

}  // namespace rkbayes
