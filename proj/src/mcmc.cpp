#include "rkbayes/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "rkbayes/gauss.hpp"
#include "rkbayes/rng.hpp"

namespace rkbayes {

namespace {
constexpr double kLog2Pi = 1.837877066409345483560659472811235279;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kDefaultLogStep = 0.15;  // proposal std in log coordinates
constexpr std::size_t kAdaptWindow = 250;

bool in_support(const Eigen::VectorXd& tau, double lambda) {
  if (lambda < 0.0) return false;
  for (Eigen::Index i = 0; i < tau.size(); ++i)
    if (!(tau(i) > 0.0)) return false;
  return true;
}
}  // namespace

double log_post(const Eigen::VectorXd& tau, double lambda, const GramMatrix& g,
                const Eigen::VectorXd& y, double sigma2) {
  if (tau.size() != g.size() || y.size() != g.size())
    throw InputError("log_post: dimension mismatch");
  if (!(sigma2 > 0.0)) throw InputError("log_post: sigma2 must be positive");
  if (!in_support(tau, lambda)) return kNegInf;

  Eigen::MatrixXd cov = lambda * g.entries;
  cov.diagonal() += tau;
  const CholeskyFactor f = factor(cov);
  const Eigen::VectorXd alpha = f.solve(y);
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * kLog2Pi + f.log_det() + y.dot(alpha)) - tau.sum() / sigma2;
}

PosteriorChain run_chain(const ChainConfig& config, const GramMatrix& g,
                         const Eigen::VectorXd& y, double sigma2) {
  if (config.length == 0) throw InputError("run_chain: chain length must be positive");
  if (!(config.burn_in_fraction >= 0.0 && config.burn_in_fraction < 1.0))
    throw InputError("run_chain: burn-in fraction must lie in [0, 1)");
  if (!(config.proposal_std_lambda > 0.0)) throw InputError("run_chain: lambda proposal std must be positive");
  if (!(sigma2 > 0.0)) throw InputError("run_chain: sigma2 must be positive");
  if (y.size() != g.size()) throw InputError("run_chain: y size mismatch");

  const Eigen::Index n = g.size();
  const double prop_tau0 = config.proposal_std_tau.value_or(kDefaultLogStep);
  if (!(prop_tau0 > 0.0)) throw InputError("run_chain: tau proposal std must be positive");

  double lambda0 = 0.0;
  if (config.initial_lambda) {
    lambda0 = *config.initial_lambda;
    if (!(lambda0 > 0.0)) throw InputError("run_chain: initial lambda must be positive");
  } else {
    const OmlEstimate oml = oml_lambda(g, y, sigma2);
    if (oml.at_boundary) {
      // A boundary OML estimate means the Gaussian noise model broke down
      // (outliers push it to the top of the search range, a spurious mode
      // that reads the outliers as signal). Start from a moment match below
      // the posterior bulk instead; the walk climbs into it during burn-in.
      const double var_y = (y.array() - y.mean()).square().mean();
      lambda0 = std::max(var_y - sigma2, sigma2) / g.entries.diagonal().mean();
    } else {
      lambda0 = oml.lambda;
    }
  }

  // Working support. Under the improper flat prior the posterior grows a
  // second, degenerate mode around lambda ~ sigma2/nu_min where the field
  // interpolates every measurement (outliers included) with collapsing tau;
  // at desk-scale N it can even dominate. The cap sits below where that mode
  // develops and two orders of magnitude above the kernel scales any of the
  // fits here call for; the tau floor removes the matching density spikes.
  const double lambda_cap = 1e5;
  const double log_lambda_cap = std::log(lambda_cap);
  const double log_tau_floor = std::log(sigma2 * 1e-3);
  lambda0 = std::min(lambda0, 0.5 * lambda_cap);

  // The walk lives in u = (log lambda, log tau): lambda and tau trade off
  // multiplicatively through C = lambda Kbar + diag(tau), and additive
  // increments mix that ridge orders of magnitude too slowly for desk-scale
  // chain lengths. The Jacobian term (sum of u) keeps the stationary law at
  // exactly exp(log_post) over (lambda, tau).
  Eigen::VectorXd u(n + 1);
  u(0) = std::log(lambda0);
  for (Eigen::Index i = 0; i < n; ++i) u(i + 1) = std::log(sigma2);
  Eigen::VectorXd scales(n + 1);
  scales(0) = config.proposal_std_lambda;
  for (Eigen::Index i = 0; i < n; ++i) scales(i + 1) = prop_tau0;

  const auto target = [&](const Eigen::VectorXd& state, Eigen::VectorXd& tau_out) -> double {
    if (state.cwiseAbs().maxCoeff() > 500.0) return kNegInf;  // exp under/overflow guard
    if (state(0) > log_lambda_cap) return kNegInf;
    for (Eigen::Index i = 0; i < n; ++i)
      if (state(i + 1) < log_tau_floor) return kNegInf;
    tau_out = state.tail(n).array().exp();
    return log_post(tau_out, std::exp(state(0)), g, y, sigma2) + state.sum();
  };

  Eigen::VectorXd tau(n);
  double lp = target(u, tau);
  if (!std::isfinite(lp))
    throw NumericalError("run_chain: initial state has zero posterior density");

  PosteriorChain chain;
  chain.seed = config.seed;
  chain.burn_in = static_cast<std::size_t>(config.burn_in_fraction * static_cast<double>(config.length));
  chain.lambda.reserve(config.length);
  chain.tau.reserve(config.length);

  const std::size_t thin = std::max<std::size_t>(1, config.thin);
  const std::size_t total_steps = config.length * thin;
  const std::size_t burn_steps = chain.burn_in * thin;

  Rng rng(config.seed);
  std::size_t accepted = 0;
  Eigen::VectorXd window_lo = u;
  Eigen::VectorXd window_hi = u;
  Eigen::VectorXd u_prop(n + 1);
  Eigen::VectorXd tau_prop(n);
  for (std::size_t step = 0; step < total_steps; ++step) {
    for (Eigen::Index i = 0; i < n + 1; ++i) u_prop(i) = u(i) + scales(i) * rng.normal();
    const double lp_prop = target(u_prop, tau_prop);

    const double accept_draw = rng.uniform_pos();
    if (std::isfinite(lp_prop) && std::log(accept_draw) < lp_prop - lp) {
      u = u_prop;
      tau = tau_prop;
      lp = lp_prop;
      ++accepted;
    }
    if ((step + 1) % thin == 0) {
      chain.lambda.push_back(std::exp(u(0)));
      chain.tau.push_back(tau);
    }
    window_lo = window_lo.cwiseMin(u);
    window_hi = window_hi.cwiseMax(u);

    // Burn-in adaptation of the tau scales, frozen afterwards to preserve
    // stationarity. Each coordinate's scale tracks the span its walk covered
    // in the window: a freely wandering coordinate expands its scale, a
    // constrained one settles near a third of its local posterior spread
    // (outlier coordinates need scales two orders above the inliers').
    // Factor-of-two moves per window at most. The lambda scale stays at its
    // configured value: slow lambda mixing would shrink a range-tracked
    // scale further, feeding back into still slower mixing.
    if (config.adapt && step + 1 < burn_steps && (step + 1) % kAdaptWindow == 0) {
      for (Eigen::Index i = 1; i < n + 1; ++i) {
        const double span = (window_hi(i) - window_lo(i)) / 13.0;
        if (span > 0.0) scales(i) = std::max(0.5 * scales(i), std::min(2.0 * scales(i), span));
      }
      window_lo = window_hi = u;
    }
  }

  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total_steps);
  chain.all_rejected = accepted == 0;
  chain.final_proposal_std_lambda = scales(0);
  chain.final_proposal_std_tau = scales.tail(n).mean();
  chain.ess_lambda = effective_sample_size(
      std::span<const double>(chain.lambda.data() + chain.burn_in, chain.kept()));
  return chain;
}

LambdaSummary posterior_lambda(const PosteriorChain& chain) {
  if (chain.kept() == 0) throw InputError("posterior_lambda: empty chain after burn-in");
  std::vector<double> kept(chain.lambda.begin() + static_cast<std::ptrdiff_t>(chain.burn_in),
                           chain.lambda.end());
  LambdaSummary s;
  double acc = 0.0;
  for (double v : kept) acc += v;
  s.mean = acc / static_cast<double>(kept.size());

  std::sort(kept.begin(), kept.end());
  const auto quantile = [&](double p) {
    const double idx = p * static_cast<double>(kept.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, kept.size() - 1);
    const double w = idx - static_cast<double>(lo);
    return kept[lo] * (1.0 - w) + kept[hi] * w;
  };
  s.median = quantile(0.5);
  s.lo95 = quantile(0.025);
  s.hi95 = quantile(0.975);
  return s;
}

MinVarianceEstimate min_variance_g(const PosteriorChain& chain, const GramMatrix& g,
                                   const Eigen::VectorXd& y) {
  if (chain.kept() == 0) throw InputError("min_variance_g: empty chain after burn-in");
  if (y.size() != g.size()) throw InputError("min_variance_g: y size mismatch");

  const Eigen::Index n = g.size();
  Eigen::VectorXd accum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd term = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd cov(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt;
  std::size_t used = 0;
  std::size_t skipped = 0;
  bool have_term = false;

  for (std::size_t l = chain.burn_in; l < chain.lambda.size(); ++l) {
    const bool repeat = have_term && l > chain.burn_in && chain.lambda[l] == chain.lambda[l - 1] &&
                        chain.tau[l].cwiseEqual(chain.tau[l - 1]).all();
    if (!repeat) {
      cov = chain.lambda[l] * g.entries;
      cov.diagonal() += chain.tau[l];
      llt.compute(cov);
      if (llt.info() != Eigen::Success) {
        ++skipped;
        have_term = false;
        continue;
      }
      term = chain.lambda[l] * llt.solve(y);
      have_term = true;
    } else if (!have_term) {
      ++skipped;
      continue;
    }
    accum += term;
    ++used;
  }

  const std::size_t total = chain.kept();
  if (skipped * 100 > total)
    throw NumericalError("min_variance_g: more than 1% of samples failed to factor (" +
                         std::to_string(skipped) + " of " + std::to_string(total) + ")");
  if (used == 0) throw NumericalError("min_variance_g: no usable samples");

  MinVarianceEstimate out;
  out.g_mean = g.entries * (accum / static_cast<double>(used));
  out.skipped = skipped;
  return out;
}

double MinVarianceFunction::operator()(double x) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    acc += weights(i) * kernel_eval(kernel, training[static_cast<std::size_t>(i)], x);
  return acc;
}

MinVarianceFunction min_variance_function(const Eigen::VectorXd& g_mean, const GramMatrix& g) {
  if (g_mean.size() != g.size()) throw InputError("min_variance_function: size mismatch");
  const CholeskyFactor f = factor(g);
  MinVarianceFunction fn;
  fn.weights = refined_solve(g.entries, f, g_mean, 2);
  fn.kernel = g.kernel;
  fn.training = g.locations;
  return fn;
}

double effective_sample_size(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);

  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0) return 0.0;  // constant series carries no information

  double rho_sum = 0.0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    double cov = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i)
      cov += (series[i] - mean) * (series[i + lag] - mean);
    cov /= static_cast<double>(n);
    const double rho = cov / var;
    if (rho <= 0.0) break;
    rho_sum += rho;
  }
  return static_cast<double>(n) / (1.0 + 2.0 * rho_sum);
}

}  // namespace rkbayes
