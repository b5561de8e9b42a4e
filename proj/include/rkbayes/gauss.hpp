#pragma once

#include <vector>

#include <Eigen/Core>

#include "rkbayes/dataset.hpp"
#include "rkbayes/kernel.hpp"

namespace rkbayes {

// Jointly Gaussian pair of random vectors (u, v).
struct JointGaussian {
  Eigen::VectorXd mean_u;
  Eigen::VectorXd mean_v;
  Eigen::MatrixXd cov_uu;
  Eigen::MatrixXd cov_uv;  // cov(u, v); cov(v, u) is its transpose
  Eigen::MatrixXd cov_vv;
};

struct ConditionalGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // independent of the conditioning value
};

// Exact Gaussian conditioning:
//   E(u|v)      = E(u) + cov(u,v) cov(v,v)^-1 [v - E(v)]
//   cov(u,u|v)  = cov(u,u) - cov(u,v) cov(v,v)^-1 cov(v,u)
// cov_vv is solved by Cholesky (jitter ladder), never inverted explicitly.
ConditionalGaussian condition(const JointGaussian& j, const Eigen::VectorXd& v_value);

// Kernel scale lambda and noise scale sigma^2; gamma = sigma^2 / lambda is the
// regularization weight they induce.
struct Hyperparams {
  double lambda = 1.0;
  double sigma2 = 1.0;

  double gamma() const { return sigma2 / lambda; }
};

// Posterior mean of the field at x under quadratic loss:
//   [K_1(x) ... K_N(x)] (Kbar + gamma I)^-1 y.
// Equals the representer estimate with quadratic loss evaluated at x.
double gp_posterior_mean(const KernelSpec& spec, const Hyperparams& hp, const Dataset& data, double x);

// log N(y; 0, lambda*Kbar + sigma^2 I) with the standard multivariate
// normalization constant (2 pi)^{N/2} det(C)^{1/2}.
double log_marginal_gaussian(double lambda, double sigma2, const GramMatrix& g, const Eigen::VectorXd& y);

struct OmlEstimate {
  double lambda = 0.0;
  double log_marginal = 0.0;
  bool at_boundary = false;  // maximizer pinned to an end of the search range
};

// Empirical-Bayes estimate of lambda: maximize the Gaussian marginal
// likelihood over lambda in [1e-4, 1e6], bracketing on a coarse log grid and
// polishing by golden section to 1e-4 in log10(lambda).
OmlEstimate oml_lambda(const GramMatrix& g, const Eigen::VectorXd& y, double sigma2);

struct ConditionalMaxReport {
  double max_log_density = 0.0;  // -log det(2 pi cov(u,u|v)) / 2; +inf when degenerate
  double cov_spread = 0.0;       // max entrywise deviation of the conditional cov across v values
  double argmax_gap = 0.0;       // max logp(mean + d) - logp(mean) over probes; <= 0 when mean is argmax
  bool degenerate = false;       // conditional covariance numerically singular
};

// Checks that the conditional density is maximized at its mean and that the
// conditional covariance (hence the maximal log-density) does not depend on
// the conditioning value.
ConditionalMaxReport conditional_max_properties(const JointGaussian& j,
                                                const std::vector<Eigen::VectorXd>& v_values);

}  // namespace rkbayes
