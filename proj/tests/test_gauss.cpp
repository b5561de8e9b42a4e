#include <doctest.h>

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "rkbayes/gauss.hpp"
#include "rkbayes/oracle.hpp"
#include "rkbayes/solver.hpp"
#include "support.hpp"

using namespace rkbayes;

namespace {
constexpr double kLog2Pi = 1.8378770664093455;
}

TEST_CASE("condition: independence and perfect observation") {
  SUBCASE("zero cross-covariance leaves the prior untouched") {
    JointGaussian j;
    j.mean_u = Eigen::VectorXd::Constant(2, 1.5);
    j.mean_v = Eigen::VectorXd::Zero(2);
    j.cov_uu = Eigen::MatrixXd::Identity(2, 2) * 3.0;
    j.cov_uv = Eigen::MatrixXd::Zero(2, 2);
    j.cov_vv = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd v(2);
    v << 9.0, -2.0;
    const ConditionalGaussian c = condition(j, v);
    CHECK((c.mean - j.mean_u).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((c.cov - j.cov_uu).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("observing the variable itself pins it down") {
    const double s = 2.7;
    JointGaussian j;
    j.mean_u = Eigen::VectorXd::Zero(1);
    j.mean_v = Eigen::VectorXd::Zero(1);
    j.cov_uu = Eigen::MatrixXd::Constant(1, 1, s);
    j.cov_uv = Eigen::MatrixXd::Constant(1, 1, s);
    j.cov_vv = Eigen::MatrixXd::Constant(1, 1, s);
    const ConditionalGaussian c = condition(j, Eigen::VectorXd::Constant(1, 3.0));
    CHECK(c.mean(0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::abs(c.cov(0, 0)) < 1e-12);
  }
}

TEST_CASE("condition: two-dimensional case against the sampling oracle") {
  JointGaussian j;
  j.mean_u = Eigen::VectorXd::Zero(1);
  j.mean_v = Eigen::VectorXd::Zero(2);
  j.cov_uu = Eigen::MatrixXd::Constant(1, 1, 2.0);
  j.cov_uv = Eigen::MatrixXd::Zero(1, 2);
  j.cov_uv(0, 0) = 1.0;
  j.cov_vv = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd v(2);
  v << 4.0, -1.0;

  const ConditionalGaussian c = condition(j, v);
  CHECK(c.mean(0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(c.cov(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const Eigen::VectorXd mc = mc_conditional_mean(j, v, 1000000, 12345);
  CHECK(std::abs(mc(0) - c.mean(0)) < 0.01);
}

TEST_CASE("condition: covariance is symmetric PSD and value-independent") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int nu = 1 + static_cast<int>(rng.uniform() * 3);
    const int nv = 1 + static_cast<int>(rng.uniform() * 3);
    Eigen::MatrixXd root(nu + nv, nu + nv);
    for (int i = 0; i < nu + nv; ++i)
      for (int k = 0; k < nu + nv; ++k) root(i, k) = rng.normal();
    const Eigen::MatrixXd cov =
        root * root.transpose() + 0.1 * Eigen::MatrixXd::Identity(nu + nv, nu + nv);

    JointGaussian j;
    j.mean_u = Eigen::VectorXd::Zero(nu);
    j.mean_v = Eigen::VectorXd::Zero(nv);
    j.cov_uu = cov.topLeftCorner(nu, nu);
    j.cov_uv = cov.topRightCorner(nu, nv);
    j.cov_vv = cov.bottomRightCorner(nv, nv);

    Eigen::VectorXd v1(nv), v2(nv);
    for (int i = 0; i < nv; ++i) {
      v1(i) = rng.normal();
      v2(i) = rng.normal();
    }
    const ConditionalGaussian c1 = condition(j, v1);
    const ConditionalGaussian c2 = condition(j, v2);
    CHECK((c1.cov - c2.cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c1.cov - c1.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    const Eigen::MatrixXd reference =
        j.cov_uu - j.cov_uv * j.cov_vv.inverse() * j.cov_uv.transpose();
    CHECK((c1.cov - reference).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c1.cov);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("gp posterior mean basics") {
  Dataset data;
  data.x = {1.0};
  data.y = Eigen::VectorXd::Constant(1, 1.0);
  const Hyperparams hp{1.0, 1.0};
  // K(x1, x1) = 1 via the linear kernel at x = 1; gamma = 1.
  CHECK(gp_posterior_mean(KernelSpec::linear(), hp, data, 1.0) ==
        doctest::Approx(0.5).epsilon(1e-12));

  Dataset zeros;
  zeros.x = {0.1, 0.4, 0.9};
  zeros.y = Eigen::VectorXd::Zero(3);
  for (double x : {0.0, 0.3, 0.8})
    CHECK(gp_posterior_mean(KernelSpec::cubic_spline_shifted(), hp, zeros, x) == 0.0);
}

TEST_CASE("proposition-2 equivalence: posterior mean equals the representer fit") {
  Rng rng(11);
  const KernelSpec kernels[] = {KernelSpec::cubic_spline_shifted(), KernelSpec::gaussian_rbf(0.3),
                                KernelSpec::linear()};
  int cases = 0;
  while (cases < 50) {
    const KernelSpec& kernel = kernels[cases % 3];
    const int n = 5 + static_cast<int>(rng.uniform() * 30);
    const std::vector<double> xs = testsupport::separated_locations(rng, n, 0.01);
    if (static_cast<int>(xs.size()) != n) continue;
    ++cases;
    Dataset data;
    data.x = xs;
    data.y.resize(n);
    for (int i = 0; i < n; ++i) data.y(i) = rng.normal();
    const double lambda = std::pow(10.0, -1.0 + 2.3 * rng.uniform());
    const double sigma2 = 0.01 + rng.uniform();
    const Hyperparams hp{lambda, sigma2};

    const GramMatrix g = gram(kernel, xs);
    const RepresenterEstimate est = solve_quadratic(g, data.y, hp.gamma());
    for (int q = 0; q < 20; ++q) {
      const double x = rng.uniform();
      CHECK(std::abs(gp_posterior_mean(kernel, hp, data, x) - evaluate(est, x)) < 1e-9);
    }
  }
}

TEST_CASE("log marginal likelihood") {
  SUBCASE("scalar value") {
    const GramMatrix g = gram(KernelSpec::linear(), std::vector<double>{1.0});
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(1);
    CHECK(log_marginal_gaussian(1.0, 1.0, g, y) ==
          doctest::Approx(-0.5 * std::log(2.0 * 3.14159265358979324 * 2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(log_marginal_gaussian(0.0, 1.0, g, y), InputError);
    CHECK_THROWS_AS(log_marginal_gaussian(1.0, 0.0, g, y), InputError);
  }
  SUBCASE("sweep over lambda on nominal simulation data has an interior peak") {
    Rng rng(1013);
    std::vector<double> xs = testsupport::equispaced(64);
    const GramMatrix g = gram(KernelSpec::cubic_spline_shifted(), xs);
    Eigen::VectorXd y(64);
    for (int i = 0; i < 64; ++i)
      y(i) = std::exp(std::sin(8.0 * xs[static_cast<std::size_t>(i)])) + 0.3 * rng.normal();

    std::vector<double> values;
    for (int k = 0; k <= 40; ++k)
      values.push_back(log_marginal_gaussian(std::pow(10.0, -4.0 + 0.25 * k), 0.09, g, y));
    const auto best = std::max_element(values.begin(), values.end());
    CHECK(best != values.begin());
    CHECK(best != values.end() - 1);
    int peaks = 0;
    for (std::size_t k = 1; k + 1 < values.size(); ++k)
      if (values[k] > values[k - 1] && values[k] > values[k + 1]) ++peaks;
    CHECK(peaks == 1);
  }
  SUBCASE("duplicated location keeps the profile finite") {
    std::vector<double> xs = {0.2, 0.2, 0.7};
    const GramMatrix g = gram(KernelSpec::cubic_spline_shifted(), xs);
    Eigen::VectorXd y(3);
    y << 1.0, 1.0, -0.5;
    double best_lambda = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 40; ++k) {
      const double lambda = std::pow(10.0, -4.0 + 0.25 * k);
      const double v = log_marginal_gaussian(lambda, 0.5, g, y);
      CHECK(std::isfinite(v));
      if (v > best) {
        best = v;
        best_lambda = lambda;
      }
    }
    CHECK(best_lambda < 1e6);
  }
}

TEST_CASE("oml lambda estimation") {
  const std::vector<double> xs = testsupport::equispaced(64);
  const GramMatrix g = gram(KernelSpec::cubic_spline_shifted(), xs);

  SUBCASE("zero data drives lambda to the lower boundary") {
    const OmlEstimate est = oml_lambda(g, Eigen::VectorXd::Zero(64), 1.0);
    CHECK(est.at_boundary);
    CHECK(est.lambda == doctest::Approx(1e-4).epsilon(0.05));
  }
  SUBCASE("overwhelming noise variance yields a small kernel scale") {
    Rng rng(2027);
    Eigen::VectorXd y(64);
    for (int i = 0; i < 64; ++i)
      y(i) = std::exp(std::sin(8.0 * xs[static_cast<std::size_t>(i)])) + 0.3 * rng.normal();
    const OmlEstimate est = oml_lambda(g, y, 1e6);
    CHECK(est.lambda < 1.0);
  }
  SUBCASE("simulation oracle: generated scale is recovered within a factor of 3") {
    const double lambda0 = 10.0;
    // The spline gram's spectrum collapses fast (78.9, 1.25, 0.08, ...), so
    // only the eigendirections above the noise floor inform lambda; the noise
    // level must stay small for a factor-3 recovery to be likely.
    const double sigma2 = 0.01;
    const CholeskyFactor f = factor(g);
    int hits = 0;
    for (int seed = 0; seed < 50; ++seed) {
      Rng rng(400 + static_cast<std::uint64_t>(seed));
      Eigen::VectorXd z(64), w(64);
      for (int i = 0; i < 64; ++i) {
        z(i) = rng.normal();
        w(i) = rng.normal();
      }
      const Eigen::VectorXd y = std::sqrt(lambda0) * (f.lower * z) + std::sqrt(sigma2) * w;
      const OmlEstimate est = oml_lambda(g, y, sigma2);
      if (est.lambda >= lambda0 / 3.0 && est.lambda <= 3.0 * lambda0) ++hits;
    }
    CHECK(hits >= 45);
  }
}

TEST_CASE("conditional maximum properties") {
  SUBCASE("max log-density is value-independent and equals the scalar formula") {
    JointGaussian j;
    j.mean_u = Eigen::VectorXd::Zero(1);
    j.mean_v = Eigen::VectorXd::Zero(1);
    j.cov_uu = Eigen::MatrixXd::Constant(1, 1, 2.0);
    j.cov_uv = Eigen::MatrixXd::Constant(1, 1, 1.0);
    j.cov_vv = Eigen::MatrixXd::Constant(1, 1, 2.0);
    std::vector<Eigen::VectorXd> values = {Eigen::VectorXd::Constant(1, -3.0),
                                           Eigen::VectorXd::Constant(1, 0.5),
                                           Eigen::VectorXd::Constant(1, 11.0)};
    const ConditionalMaxReport r = conditional_max_properties(j, values);
    CHECK(r.cov_spread < 1e-14);
    CHECK_FALSE(r.degenerate);
    const double cond_var = 2.0 - 1.0 / 2.0;
    CHECK(r.max_log_density ==
          doctest::Approx(-0.5 * (kLog2Pi + std::log(cond_var))).epsilon(1e-12));
    CHECK(r.argmax_gap <= 0.0);
  }
  SUBCASE("degenerate conditional variance is flagged") {
    JointGaussian j;
    j.mean_u = Eigen::VectorXd::Zero(1);
    j.mean_v = Eigen::VectorXd::Zero(1);
    j.cov_uu = Eigen::MatrixXd::Constant(1, 1, 1.0);
    j.cov_uv = Eigen::MatrixXd::Constant(1, 1, 1.0);
    j.cov_vv = Eigen::MatrixXd::Constant(1, 1, 1.0);
    const ConditionalMaxReport r =
        conditional_max_properties(j, {Eigen::VectorXd::Constant(1, 1.0)});
    CHECK(r.degenerate);
    CHECK(std::isinf(r.max_log_density));
  }
}

TEST_CASE("two-stage maximization matches the joint maximizer") {
  // g, h jointly Gaussian; y | g Gaussian. The joint MAP over (g, h) must
  // agree with maximizing over g first and then taking E(h | g = g_hat).
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd root(2, 2);
    root << 1.0 + rng.uniform(), 0.0, rng.normal() * 0.5, 0.5 + rng.uniform();
    const Eigen::MatrixXd cov = root * root.transpose();
    const double sigma_y2 = 0.2 + rng.uniform();
    const double y = 3.0 * (rng.uniform() - 0.5);

    // Joint maximizer: one Newton step solves the quadratic exactly.
    Eigen::MatrixXd precision = cov.inverse();
    precision(0, 0) += 1.0 / sigma_y2;
    Eigen::VectorXd rhs(2);
    rhs << y / sigma_y2, 0.0;
    const Eigen::VectorXd joint = precision.fullPivLu().solve(rhs);

    // Two-stage construction: g first, then the conditional mean of h.
    const double g_hat = y * cov(0, 0) / (cov(0, 0) + sigma_y2);
    JointGaussian j;
    j.mean_u = Eigen::VectorXd::Zero(1);  // h
    j.mean_v = Eigen::VectorXd::Zero(1);  // g
    j.cov_uu = cov.bottomRightCorner(1, 1);
    j.cov_uv = cov.bottomLeftCorner(1, 1);
    j.cov_vv = cov.topLeftCorner(1, 1);
    const ConditionalGaussian c = condition(j, Eigen::VectorXd::Constant(1, g_hat));

    CHECK(std::abs(joint(0) - g_hat) < 1e-8);
    CHECK(std::abs(joint(1) - c.mean(0)) < 1e-8);
  }
}
