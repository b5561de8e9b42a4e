#include "rkbayes/gauss.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "rkbayes/rng.hpp"

namespace rkbayes {

namespace {
constexpr double kLog2Pi = 1.837877066409345483560659472811235279;
}

ConditionalGaussian condition(const JointGaussian& j, const Eigen::VectorXd& v_value) {
  const Eigen::Index nu = j.mean_u.size();
  const Eigen::Index nv = j.mean_v.size();
  if (j.cov_uu.rows() != nu || j.cov_uu.cols() != nu || j.cov_vv.rows() != nv ||
      j.cov_vv.cols() != nv || j.cov_uv.rows() != nu || j.cov_uv.cols() != nv ||
      v_value.size() != nv)
    throw InputError("condition: inconsistent dimensions");

  const CholeskyFactor f = factor(j.cov_vv);
  // cross = cov(v,v)^-1 cov(v,u), so cov(u,v) cov(v,v)^-1 = cross^T
  const Eigen::MatrixXd cross = f.solve(Eigen::MatrixXd(j.cov_uv.transpose()));

  ConditionalGaussian out;
  out.mean = j.mean_u + cross.transpose() * (v_value - j.mean_v);
  Eigen::MatrixXd cov = j.cov_uu - j.cov_uv * cross;
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

double gp_posterior_mean(const KernelSpec& spec, const Hyperparams& hp, const Dataset& data, double x) {
  if (!(hp.lambda > 0.0) || !(hp.sigma2 > 0.0))
    throw InputError("gp_posterior_mean: lambda and sigma2 must be positive");
  const GramMatrix g = gram(spec, data.x);
  Eigen::MatrixXd shifted = g.entries;
  shifted.diagonal().array() += hp.gamma();
  const Eigen::VectorXd alpha = factor(shifted).solve(data.y);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    acc += kernel_eval(spec, data.x[static_cast<std::size_t>(i)], x) * alpha(i);
  return acc;
}

double log_marginal_gaussian(double lambda, double sigma2, const GramMatrix& g, const Eigen::VectorXd& y) {
  if (!(lambda > 0.0) || !(sigma2 > 0.0))
    throw InputError("log_marginal_gaussian: lambda and sigma2 must be positive");
  if (y.size() != g.size()) throw InputError("log_marginal_gaussian: y size mismatch");
  Eigen::MatrixXd cov = lambda * g.entries;
  cov.diagonal().array() += sigma2;
  const CholeskyFactor f = factor(cov);
  const Eigen::VectorXd alpha = f.solve(y);
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * kLog2Pi + f.log_det() + y.dot(alpha));
}

namespace {

// Golden-section maximization of f over [a, b]; tol in the argument.
double golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
  constexpr double kInvPhi = 0.6180339887498948482;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

OmlEstimate oml_lambda(const GramMatrix& g, const Eigen::VectorXd& y, double sigma2) {
  if (!(sigma2 > 0.0)) throw InputError("oml_lambda: sigma2 must be positive");
  constexpr double kLo = -4.0;  // log10 lambda
  constexpr double kHi = 6.0;
  constexpr int kGrid = 61;

  const auto objective = [&](double t) { return log_marginal_gaussian(std::pow(10.0, t), sigma2, g, y); };

  // Coarse bracket, then golden section inside the best cell pair.
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  const double step = (kHi - kLo) / (kGrid - 1);
  for (int i = 0; i < kGrid; ++i) {
    const double v = objective(kLo + step * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double lo = std::max(kLo, kLo + step * (best - 1));
  const double hi = std::min(kHi, kLo + step * (best + 1));
  const double t_hat = golden_max(objective, lo, hi, 1e-4);

  OmlEstimate out;
  out.lambda = std::pow(10.0, t_hat);
  out.log_marginal = objective(t_hat);
  out.at_boundary = (t_hat <= kLo + 1e-3) || (t_hat >= kHi - 1e-3);
  return out;
}

ConditionalMaxReport conditional_max_properties(const JointGaussian& j,
                                                const std::vector<Eigen::VectorXd>& v_values) {
  if (v_values.empty()) throw InputError("conditional_max_properties: need at least one v value");

  std::vector<ConditionalGaussian> conds;
  conds.reserve(v_values.size());
  for (const auto& v : v_values) conds.push_back(condition(j, v));

  ConditionalMaxReport report;
  for (std::size_t k = 1; k < conds.size(); ++k)
    report.cov_spread = std::max(report.cov_spread,
                                 (conds[k].cov - conds[0].cov).cwiseAbs().maxCoeff());

  const Eigen::MatrixXd& cov = conds[0].cov;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double emax = eig.eigenvalues().maxCoeff();
  const double emin = eig.eigenvalues().minCoeff();
  if (emin <= 1e-12 * std::max(1.0, emax)) {
    report.degenerate = true;
    report.max_log_density = std::numeric_limits<double>::infinity();
    return report;
  }

  const double d = static_cast<double>(cov.rows());
  report.max_log_density = -0.5 * (d * kLog2Pi + eig.eigenvalues().array().log().sum());

  // The density at the mean should dominate random perturbations.
  const CholeskyFactor f = factor(cov);
  const auto log_density_offset = [&](const Eigen::VectorXd& delta) {
    return -0.5 * delta.dot(f.solve(delta));
  };
  Rng rng(0x9d2c5680u);
  double worst = -std::numeric_limits<double>::infinity();
  for (int probe = 0; probe < 32; ++probe) {
    Eigen::VectorXd delta(cov.rows());
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta(i) = std::sqrt(emax) * rng.normal();
    worst = std::max(worst, log_density_offset(delta));
  }
  report.argmax_gap = worst;  // relative to the value at the mean, which is 0
  return report;
}

}  // namespace rkbayes
