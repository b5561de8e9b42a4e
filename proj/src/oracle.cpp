#include "rkbayes/oracle.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "rkbayes/loss.hpp"
#include "rkbayes/rng.hpp"
#include "rkbayes/solver.hpp"

namespace rkbayes {

namespace {

double simpson(double h, double fa, double fm, double fb) { return h * (fa + 4.0 * fm + fb) / 6.0; }

double adapt(const std::function<double(double)>& f, double a, double b, double fa, double fm,
             double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm))
    throw NumericalError("integrate: non-finite integrand value");
  const double left = simpson(m - a, fa, flm, fm);
  const double right = simpson(b - m, fm, frm, fb);
  const double err = (left + right - whole) / 15.0;
  if (std::abs(err) <= tol) return left + right + err;
  if (depth <= 0)
    throw AccuracyError("integrate: subdivision cap exceeded", left + right + err);
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, const QuadratureSpec& spec) {
  if (!(spec.abs_tol > 0.0)) throw InputError("integrate: tolerance must be positive");
  if (spec.max_depth < 1) throw InputError("integrate: max_depth must be positive");
  if (!(spec.lower < spec.upper)) {
    if (spec.lower == spec.upper) return 0.0;
    throw InputError("integrate: lower bound above upper bound");
  }
  const double fa = f(spec.lower);
  const double fb = f(spec.upper);
  const double fm = f(0.5 * (spec.lower + spec.upper));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
    throw NumericalError("integrate: non-finite integrand value");
  const double whole = simpson(spec.upper - spec.lower, fa, fm, fb);
  return adapt(f, spec.lower, spec.upper, fa, fm, fb, whole, spec.abs_tol, spec.max_depth);
}

namespace {

// x = offset + 4 atanh(t); the stretched map keeps the 1/(1-t^2) weight
// growing slower than any integrand decaying at least like exp(-|x|/2).
constexpr double kMapScale = 4.0;

std::function<double(double)> atanh_mapped(const std::function<double(double)>& f, double offset) {
  return [f, offset](double t) {
    const double w = 1.0 - t * t;
    if (w <= 0.0) return 0.0;
    const double x = offset + kMapScale * std::atanh(t);
    const double v = f(x);
    return v == 0.0 ? 0.0 : kMapScale * v / w;
  };
}

}  // namespace

double integrate_half_line(const std::function<double(double)>& f, double lower, double abs_tol) {
  QuadratureSpec spec;
  spec.lower = 0.0;
  spec.upper = 1.0;
  spec.abs_tol = abs_tol;
  return integrate(atanh_mapped(f, lower), spec);
}

double integrate_real_line(const std::function<double(double)>& f, double abs_tol) {
  QuadratureSpec spec;
  spec.lower = -1.0;
  spec.upper = 1.0;
  spec.abs_tol = abs_tol;
  return integrate(atanh_mapped(f, 0.0), spec);
}

ExampleReport example_check() {
  // Single measurement y = 1 at a location with unit kernel value, absolute
  // loss, gamma = 1. The linear kernel at x = 1 realizes K(x1, x1) = 1.
  const GramMatrix g = gram(KernelSpec::linear(), std::vector<double>{1.0});
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.0);
  const RepresenterEstimate est = solve_general(g, y, {LossSpec::absolute()}, 1.0);

  ExampleReport report;
  report.f_hat = evaluate(est, 1.0);

  const auto joint = [](double f) { return std::exp(-f * f - std::abs(1.0 - f)); };
  report.normalizer = integrate_real_line(joint, 1e-12);
  const double first_moment =
      integrate_real_line([&](double f) { return f * joint(f); }, 1e-12);
  report.e_f_given_y = first_moment / report.normalizer;
  report.lhs = report.e_f_given_y - report.f_hat;

  const double tail = integrate_half_line(
      [](double s) { return s * (std::exp(1.0 - 2.0 * s) - 1.0) * std::exp(-s * s); }, 0.5, 1e-12);
  report.rhs = std::exp(-0.75) / report.normalizer * tail;
  report.identity_residual = std::abs(report.lhs - report.rhs);
  return report;
}

GridArgmaxResult grid_argmax(const std::function<double(std::span<const double>)>& f,
                             std::span<const std::pair<double, double>> box, int points_per_dim) {
  const std::size_t dim = box.size();
  if (dim == 0 || dim > 3) throw InputError("grid_argmax: dimension must be 1..3");
  // 100 intervals, i.e. up to 101 points per dimension
  if (points_per_dim < 2 || points_per_dim > 101)
    throw InputError("grid_argmax: points_per_dim must be in [2, 101]");

  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> point(dim);
  GridArgmaxResult best;
  best.value = -std::numeric_limits<double>::infinity();
  const auto coord = [&](std::size_t d, std::size_t i) {
    return box[d].first + (box[d].second - box[d].first) * static_cast<double>(i) /
                              static_cast<double>(points_per_dim - 1);
  };
  while (true) {
    for (std::size_t d = 0; d < dim; ++d) point[d] = coord(d, idx[d]);
    const double v = f(point);
    if (v > best.value) {
      best.value = v;
      best.location = point;
    }
    std::size_t d = 0;
    for (; d < dim; ++d) {
      if (++idx[d] < static_cast<std::size_t>(points_per_dim)) break;
      idx[d] = 0;
    }
    if (d == dim) break;
  }
  return best;
}

Eigen::VectorXd mc_conditional_mean(const JointGaussian& j, const Eigen::VectorXd& v_value,
                                    std::size_t draws, std::uint64_t seed) {
  if (draws < 10000) throw InputError("mc_conditional_mean: need at least 1e4 draws");
  const Eigen::Index nu = j.mean_u.size();
  const Eigen::Index nv = j.mean_v.size();
  if (v_value.size() != nv) throw InputError("mc_conditional_mean: v dimension mismatch");

  Eigen::MatrixXd cov(nu + nv, nu + nv);
  cov.topLeftCorner(nu, nu) = j.cov_uu;
  cov.topRightCorner(nu, nv) = j.cov_uv;
  cov.bottomLeftCorner(nv, nu) = j.cov_uv.transpose();
  cov.bottomRightCorner(nv, nv) = j.cov_vv;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd sq = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd root = eig.eigenvectors() * sq.asDiagonal();

  // Accumulate normal equations for the regression u ~ [1, v].
  const Eigen::Index p = nv + 1;
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd xtu = Eigen::MatrixXd::Zero(p, nu);
  Rng rng(seed);
  Eigen::VectorXd z(nu + nv);
  Eigen::VectorXd row(p);
  for (std::size_t k = 0; k < draws; ++k) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const Eigen::VectorXd s = root * z;
    const Eigen::VectorXd u = j.mean_u + s.head(nu);
    const Eigen::VectorXd v = j.mean_v + s.tail(nv);
    row(0) = 1.0;
    row.tail(nv) = v;
    xtx.noalias() += row * row.transpose();
    xtu.noalias() += row * u.transpose();
  }

  const Eigen::MatrixXd beta = xtx.colPivHouseholderQr().solve(xtu);
  Eigen::VectorXd predictor(p);
  predictor(0) = 1.0;
  predictor.tail(nv) = v_value;
  return beta.transpose() * predictor;
}

}  // namespace rkbayes
