#include "rkbayes/solver.hpp"

#include <algorithm>
#include <cmath>

namespace rkbayes {

namespace {

constexpr double kMu0 = 1.0;
constexpr double kMuShrink = 0.25;
constexpr double kMuFloor = 1e-8;
constexpr int kMaxMuStages = 15;
constexpr int kMaxNewtonPerStage = 200;
constexpr double kObjDecreaseTol = 1e-10;
constexpr double kGradTol = 1e-9;
constexpr double kArmijo = 1e-4;

double unsmoothed_objective(const GramMatrix& g, const Eigen::VectorXd& y,
                            const std::vector<LossSpec>& losses, double gamma,
                            const Eigen::VectorXd& c) {
  const Eigen::VectorXd r = y - g.entries * c;
  double acc = gamma * c.dot(g.entries * c);
  for (Eigen::Index i = 0; i < r.size(); ++i)
    acc += loss_value(losses[static_cast<std::size_t>(i)], r(i));
  return acc;
}

// Residual values where the smoothed loss changes its quadratic piece.
int zone_edges(const LossSpec& spec, double mu, double* edges) {
  switch (spec.kind) {
    case LossKind::quadratic:
      return 0;
    case LossKind::absolute:
      edges[0] = -mu;
      edges[1] = mu;
      return 2;
    case LossKind::huber:
      edges[0] = -spec.delta;
      edges[1] = spec.delta;
      return 2;
    case LossKind::vapnik:
      edges[0] = -(spec.epsilon + mu);
      edges[1] = -spec.epsilon;
      edges[2] = spec.epsilon;
      edges[3] = spec.epsilon + mu;
      return 4;
  }
  return 0;
}

// Exact minimizer over t in (0, t_hi] of the piecewise-quadratic slice
// t -> sum_i V_mu(r_i - t s_i) + gamma |v + t d|^2. The derivative is
// piecewise linear and nondecreasing, so it suffices to scan the breakpoints
// where some residual crosses a zone edge.
double exact_slice_step(const std::vector<LossSpec>& losses, const Eigen::VectorXd& r,
                        const Eigen::VectorXd& s, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& d, double gamma, double mu, double t_hi) {
  const Eigen::Index n = r.size();
  const auto derivative = [&](double t) {
    double acc = 2.0 * gamma * (v.dot(d) + t * d.squaredNorm());
    for (Eigen::Index i = 0; i < n; ++i)
      acc -= s(i) * smoothed_loss_derivative(losses[static_cast<std::size_t>(i)], r(i) - t * s(i), mu);
    return acc;
  };

  std::vector<double> breaks;
  breaks.reserve(static_cast<std::size_t>(4 * n) + 2);
  double edges[4];
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s(i) == 0.0) continue;
    const int count = zone_edges(losses[static_cast<std::size_t>(i)], mu, edges);
    for (int e = 0; e < count; ++e) {
      const double t = (r(i) - edges[e]) / s(i);
      if (t > 0.0 && t < t_hi) breaks.push_back(t);
    }
  }
  breaks.push_back(t_hi);
  std::sort(breaks.begin(), breaks.end());

  double prev_t = 0.0;
  double prev_d = derivative(0.0);
  if (prev_d >= 0.0) return 0.0;
  for (double t : breaks) {
    const double dt = derivative(t);
    if (dt >= 0.0) {
      if (dt == prev_d) return t;
      const double zero = prev_t + (t - prev_t) * (-prev_d) / (dt - prev_d);
      return std::min(std::max(zero, prev_t), t);
    }
    prev_t = t;
    prev_d = dt;
  }
  return t_hi;
}

}  // namespace

double smoothed_objective(const GramMatrix& g, const Eigen::VectorXd& y,
                          const std::vector<LossSpec>& losses, double gamma,
                          const Eigen::VectorXd& c, double mu, Eigen::VectorXd* gradient) {
  if (losses.size() != static_cast<std::size_t>(y.size()))
    throw InputError("smoothed_objective: one loss per measurement required");
  const Eigen::VectorXd kc = g.entries * c;
  const Eigen::VectorXd r = y - kc;
  double value = gamma * c.dot(kc);
  if (gradient) {
    Eigen::VectorXd w(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const LossSpec& spec = losses[static_cast<std::size_t>(i)];
      value += smoothed_loss_value(spec, r(i), mu);
      w(i) = smoothed_loss_derivative(spec, r(i), mu);
    }
    *gradient = g.entries * (2.0 * gamma * c - w);
  } else {
    for (Eigen::Index i = 0; i < r.size(); ++i)
      value += smoothed_loss_value(losses[static_cast<std::size_t>(i)], r(i), mu);
  }
  return value;
}

RepresenterEstimate solve_quadratic(const GramMatrix& g, const Eigen::VectorXd& y, double gamma) {
  if (!(gamma > 0.0)) throw InputError("solve_quadratic: gamma must be positive");
  if (y.size() != g.size()) throw InputError("solve_quadratic: y size mismatch");

  Eigen::MatrixXd shifted = g.entries;
  shifted.diagonal().array() += gamma;
  const CholeskyFactor f = factor(shifted);
  const Eigen::VectorXd c = refined_solve(shifted, f, y, 2);

  RepresenterEstimate est;
  est.coefficients = c;
  est.training_locations = g.locations;
  est.kernel = g.kernel;
  est.gamma = gamma;
  est.diagnostics.jitter_max = f.jitter;
  const double ynorm = y.norm();
  est.diagnostics.residual = (shifted * c - y).norm() / (ynorm > 0.0 ? ynorm : 1.0);
  const std::vector<LossSpec> losses(static_cast<std::size_t>(y.size()), LossSpec::quadratic());
  est.diagnostics.final_objective = unsmoothed_objective(g, y, losses, gamma, c);
  return est;
}

RepresenterEstimate solve_general(const GramMatrix& g, const Eigen::VectorXd& y,
                                  const std::vector<LossSpec>& losses, double gamma) {
  if (!(gamma > 0.0)) throw InputError("solve_general: gamma must be positive");
  if (y.size() != g.size()) throw InputError("solve_general: y size mismatch");
  if (losses.size() != static_cast<std::size_t>(y.size()))
    throw InputError("solve_general: one loss per measurement required");

  const Eigen::Index n = g.size();
  SolverDiagnostics diag;

  // Work in the whitened variable v = L^T c with Kbar = L L^T. The objective
  // becomes sum V(y - L v) + gamma v^T v, whose Hessian L^T D L + 2 gamma I
  // carries cond(Kbar)/gamma instead of cond(Kbar)^2: in c space, errors
  // along Kbar's weak eigendirections are invisible to both stopping rules.
  const CholeskyFactor kf = factor(g.entries);
  const Eigen::MatrixXd& lower = kf.lower;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);

  const auto objective_v = [&](const Eigen::VectorXd& vv, double mu_now,
                               Eigen::VectorXd* grad_out) {
    const Eigen::VectorXd r = y - lower * vv;
    double value = gamma * vv.squaredNorm();
    if (grad_out) {
      Eigen::VectorXd w(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const LossSpec& spec = losses[static_cast<std::size_t>(i)];
        value += smoothed_loss_value(spec, r(i), mu_now);
        w(i) = smoothed_loss_derivative(spec, r(i), mu_now);
      }
      *grad_out = 2.0 * gamma * vv - lower.transpose() * w;
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        value += smoothed_loss_value(losses[static_cast<std::size_t>(i)], r(i), mu_now);
    }
    return value;
  };
  const auto to_coefficients = [&](const Eigen::VectorXd& vv) {
    Eigen::VectorXd c = vv;
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(c);
    return c;
  };

  double mu = kMu0;
  Eigen::VectorXd grad(n);
  for (int stage = 0; stage < kMaxMuStages; ++stage) {
    ++diag.mu_stages;
    diag.stage_starts.push_back(diag.objective_trace.size());
    double obj = objective_v(v, mu, &grad);
    // Termination is judged after a step; the decrease criterion needs one.
    bool stage_done = false;

    int steps = 0;
    while (!stage_done) {
      if (steps >= kMaxNewtonPerStage)
        throw ConvergenceError("solve_general: Newton stalled at mu = " + std::to_string(mu),
                               to_coefficients(v), grad.norm());
      ++steps;
      ++diag.newton_steps;

      const Eigen::VectorXd r = y - lower * v;
      Eigen::VectorXd curv(n);
      for (Eigen::Index i = 0; i < n; ++i)
        curv(i) = smoothed_loss_curvature(losses[static_cast<std::size_t>(i)], r(i), mu);
      Eigen::MatrixXd hess = lower.transpose() * curv.asDiagonal() * lower;
      hess.diagonal().array() += 2.0 * gamma;

      const CholeskyFactor f = factor(hess);
      diag.jitter_max = std::max(diag.jitter_max, f.jitter);
      Eigen::VectorXd dir = -refined_solve(hess, f, grad, 2);
      double slope = grad.dot(dir);
      if (!(slope < 0.0)) {  // numerically non-descent; fall back to steepest descent
        dir = -grad;
        slope = grad.dot(dir);
        if (!(slope < 0.0)) break;  // gradient is exactly zero
      }

      // Step candidates: the full Newton step, then the exact minimizer of
      // the piecewise-quadratic slice (a halving cascade crawls when the
      // step must stop at a zone edge), then plain halving.
      std::vector<double> candidates{1.0};
      {
        const double exact = exact_slice_step(losses, r, lower * dir, v, dir, gamma, mu, 1.0);
        if (exact > 0.0 && exact < 1.0) candidates.push_back(exact);
      }
      while (candidates.size() < 60) candidates.push_back(candidates.back() * 0.5);

      double t = 0.0;
      double next_obj = 0.0;
      bool accepted = false;
      for (double cand : candidates) {
        next_obj = objective_v(v + cand * dir, mu, nullptr);
        if (next_obj <= obj + kArmijo * cand * slope) {
          accepted = true;
          t = cand;
          break;
        }
      }
      if (!accepted) {
        // No decrease achievable along a descent direction: numerical floor.
        if (grad.norm() <= 1e-6 * (1.0 + std::abs(obj))) break;
        throw ConvergenceError("solve_general: line search failed at mu = " + std::to_string(mu),
                               to_coefficients(v), grad.norm());
      }

      v += t * dir;
      const double decrease = obj - next_obj;
      obj = objective_v(v, mu, &grad);
      diag.objective_trace.push_back(obj);
      // A clipped step with negligible decrease and a large gradient means a
      // smoothing-zone flip is still being resolved; converged stages end on
      // a full Newton step or with the gradient already at certificate level.
      const double gnorm = grad.norm();
      stage_done = (decrease <= kObjDecreaseTol * (1.0 + std::abs(obj)) &&
                    (t == 1.0 || gnorm <= 1e-6 * (1.0 + std::abs(obj)))) ||
                   gnorm <= kGradTol * (1.0 + std::abs(obj));
    }

    if (mu <= kMuFloor) break;
    mu *= kMuShrink;
  }

  RepresenterEstimate est;
  est.coefficients = to_coefficients(v);
  est.training_locations = g.locations;
  est.kernel = g.kernel;
  est.gamma = gamma;
  est.diagnostics = std::move(diag);
  Eigen::VectorXd final_grad;
  smoothed_objective(g, y, losses, gamma, est.coefficients, mu, &final_grad);
  est.diagnostics.gradient_norm = final_grad.norm();
  est.diagnostics.final_objective = unsmoothed_objective(g, y, losses, gamma, est.coefficients);
  est.diagnostics.residual = est.diagnostics.gradient_norm;
  return est;
}

double evaluate(const RepresenterEstimate& est, double x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < est.coefficients.size(); ++i)
    acc += est.coefficients(i) *
           kernel_eval(est.kernel, est.training_locations[static_cast<std::size_t>(i)], x);
  return acc;
}

Eigen::VectorXd evaluate(const RepresenterEstimate& est, std::span<const double> xs) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = evaluate(est, xs[static_cast<std::size_t>(i)]);
  return out;
}

Eigen::VectorXd map_at_locations(const RepresenterEstimate& est, std::span<const double> extra) {
  const Eigen::Index n = est.coefficients.size();
  const Eigen::Index m = static_cast<Eigen::Index>(extra.size());
  Eigen::VectorXd out(n + m);
  for (Eigen::Index i = 0; i < n; ++i)
    out(i) = evaluate(est, est.training_locations[static_cast<std::size_t>(i)]);
  for (Eigen::Index k = 0; k < m; ++k)
    out(n + k) = evaluate(est, extra[static_cast<std::size_t>(k)]);

  if (m > 0) {
    // Cross-check: the extra values must match the Gaussian projection
    // cov(h, g) cov(g, g)^-1 g_hat = K_extra Kbar^-1 g_hat.
    const GramMatrix g = gram(est.kernel, est.training_locations);
    const CholeskyFactor f = factor(g);
    const Eigen::VectorXd d = refined_solve(g.entries, f, out.head(n), 2);
    for (Eigen::Index k = 0; k < m; ++k) {
      double proj = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        proj += d(i) * kernel_eval(est.kernel, est.training_locations[static_cast<std::size_t>(i)],
                                   extra[static_cast<std::size_t>(k)]);
      if (std::abs(proj - out(n + k)) > 1e-8 * (1.0 + std::abs(out(n + k))))
        throw NumericalError("map_at_locations: projection cross-check failed at extra location " +
                             std::to_string(extra[static_cast<std::size_t>(k)]));
    }
  }
  return out;
}

}  // namespace rkbayes
