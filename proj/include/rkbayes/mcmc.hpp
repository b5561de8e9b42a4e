#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rkbayes/kernel.hpp"

namespace rkbayes {

// Proposal scales are standard deviations of the normal increments applied in
// log coordinates (the walk runs over log lambda and log tau; see run_chain).
struct ChainConfig {
  std::size_t length = 20000;  // stored realizations
  double burn_in_fraction = 0.2;
  double proposal_std_lambda = 0.35;
  std::optional<double> proposal_std_tau;  // defaults to 0.15
  std::size_t thin = 10;                   // Metropolis steps per stored realization
  bool adapt = true;                       // rescale proposals during burn-in only
  std::uint64_t seed = 0;
  std::optional<double> initial_lambda;    // defaults to the quadratic-loss OML estimate
};

// Random-walk Metropolis samples {tau^l, lambda^l} from p(tau, lambda | y).
struct PosteriorChain {
  std::vector<double> lambda;
  std::vector<Eigen::VectorXd> tau;
  std::size_t burn_in = 0;  // leading samples to discard in summaries
  double acceptance_rate = 0.0;
  double ess_lambda = 0.0;  // effective sample size of the post-burn-in lambda series
  bool all_rejected = false;
  double final_proposal_std_lambda = 0.0;
  double final_proposal_std_tau = 0.0;
  std::uint64_t seed = 0;

  std::size_t kept() const { return lambda.size() - burn_in; }
};

// log p(tau, lambda | y) up to a constant:
//   log N(y; 0, lambda Kbar + diag(tau)) - sum_i tau_i / sigma2
// for lambda >= 0 and tau > 0 componentwise; -inf outside that support.
// A factorization failure of the covariance raises NumericalError, which is
// distinct from the -inf rejection.
double log_post(const Eigen::VectorXd& tau, double lambda, const GramMatrix& g,
                const Eigen::VectorXd& y, double sigma2);

// Joint random-walk Metropolis over (lambda, tau), walking log coordinates:
// independent normal increments on log lambda and every log tau_i, with the
// Jacobian folded into the acceptance ratio so the stationary density over
// (lambda, tau) is exactly exp(log_post). Deterministic for a fixed seed.
// lambda and tau trade off multiplicatively through lambda Kbar + diag(tau);
// additive increments mix that ridge orders of magnitude too slowly for
// desk-scale chain lengths. When adaptation is enabled, each coordinate's
// scale is retuned every 250 burn-in steps from the span its walk covered
// (factor-of-two moves at most), then frozen for the stationary phase.
PosteriorChain run_chain(const ChainConfig& config, const GramMatrix& g,
                         const Eigen::VectorXd& y, double sigma2);

struct LambdaSummary {
  double mean = 0.0;
  double median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

// Post-burn-in mean of lambda, with median and central 95% interval.
LambdaSummary posterior_lambda(const PosteriorChain& chain);

struct MinVarianceEstimate {
  Eigen::VectorXd g_mean;     // E(g | y) ~= Kbar (1/L) sum_l lambda^l C(tau^l, lambda^l)^-1 y
  std::size_t skipped = 0;    // samples dropped because C failed to factor
};

MinVarianceEstimate min_variance_g(const PosteriorChain& chain, const GramMatrix& g,
                                   const Eigen::VectorXd& y);

// The minimum-variance function estimate: weights d = Kbar^-1 E(g|y) computed
// once, then E[F(x)|y] = sum_i d_i K(x_i, x).
struct MinVarianceFunction {
  Eigen::VectorXd weights;
  KernelSpec kernel;
  std::vector<double> training;

  double operator()(double x) const;
};

MinVarianceFunction min_variance_function(const Eigen::VectorXd& g_mean, const GramMatrix& g);

// Autocorrelation-sum ESS, truncating the sum at the first negative lag.
double effective_sample_size(std::span<const double> series);

}  // namespace rkbayes
