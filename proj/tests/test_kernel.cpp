#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "rkbayes/kernel.hpp"
#include "support.hpp"

using namespace rkbayes;

TEST_CASE("shifted cubic spline kernel values") {
  const KernelSpec spline = KernelSpec::cubic_spline_shifted();
  CHECK(kernel_eval(spline, 0.0, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(kernel_eval(spline, 1.0, 1.0) == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(kernel_eval(spline, -0.1, 0.5), InputError);
  CHECK_THROWS_AS(kernel_eval(spline, 0.5, 1.2), InputError);
}

TEST_CASE("spline kernel matches an independent transcription") {
  // Same formula, written with a different grouping of terms.
  const auto reference = [](double a, double b) {
    const double u = a + 1.0;
    const double v = b + 1.0;
    const double m = std::min(u, v);
    return m * (0.5 * u * v - m * m / 6.0);
  };
  const KernelSpec spline = KernelSpec::cubic_spline_shifted();
  Rng rng(11);
  for (int k = 0; k < 500; ++k) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    CHECK(std::abs(kernel_eval(spline, a, b) - reference(a, b)) < 1e-14);
  }
}

TEST_CASE("kernel symmetry across all kinds") {
  const KernelSpec kernels[] = {KernelSpec::cubic_spline_shifted(), KernelSpec::gaussian_rbf(0.35),
                                KernelSpec::linear()};
  Rng rng(7);
  for (const KernelSpec& k : kernels) {
    for (int t = 0; t < 200; ++t) {
      const double a = rng.uniform();
      const double b = rng.uniform();
      CHECK(kernel_eval(k, a, b) == kernel_eval(k, b, a));
    }
  }
}

TEST_CASE("gram basics") {
  const KernelSpec spline = KernelSpec::cubic_spline_shifted();
  SUBCASE("single location") {
    const GramMatrix g = gram(spline, std::vector<double>{0.0});
    REQUIRE(g.size() == 1);
    CHECK(g.entries(0, 0) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("duplicated locations give equal entries") {
    const GramMatrix g = gram(spline, std::vector<double>{0.4, 0.4});
    CHECK(g.entries(0, 0) == g.entries(0, 1));
    CHECK(g.entries(0, 0) == g.entries(1, 1));
  }
  SUBCASE("empty location set rejected") {
    CHECK_THROWS_AS(gram(spline, std::vector<double>{}), InputError);
  }
}

TEST_CASE("gram eigenvalues are nonnegative up to roundoff") {
  Rng rng(23);
  const KernelSpec kernels[] = {KernelSpec::cubic_spline_shifted(), KernelSpec::gaussian_rbf(0.5),
                                KernelSpec::linear()};
  for (const KernelSpec& k : kernels) {
    std::vector<double> xs;
    for (int i = 0; i < 10; ++i) xs.push_back(rng.uniform());
    const GramMatrix g = gram(k, xs);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.entries);
    const double max = eig.eigenvalues().maxCoeff();
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * max);
  }
}

TEST_CASE("factor jitter ladder") {
  SUBCASE("scalar") {
    Eigen::MatrixXd m(1, 1);
    m << 4.0;
    const CholeskyFactor f = factor(m);
    CHECK(f.lower(0, 0) == doctest::Approx(2.0));
    CHECK(f.jitter == 0.0);
  }
  SUBCASE("64-point spline gram factors without jitter") {
    const GramMatrix g = gram(KernelSpec::cubic_spline_shifted(), testsupport::equispaced(64));
    const CholeskyFactor f = factor(g);
    CHECK(f.jitter == 0.0);
  }
  SUBCASE("rank-1 all-ones matrix needs jitter") {
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
    const CholeskyFactor f = factor(ones);
    CHECK(f.jitter > 0.0);
    const Eigen::MatrixXd reconstructed = f.lower * f.lower.transpose();
    Eigen::MatrixXd jittered = ones;
    jittered.diagonal().array() += f.jitter;
    CHECK((reconstructed - jittered).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("property: gram symmetry and factor-solve recovery") {
  Rng rng(101);
  const KernelSpec kernels[] = {KernelSpec::cubic_spline_shifted(), KernelSpec::gaussian_rbf(0.4),
                                KernelSpec::linear()};
  int cases = 0;
  while (cases < 120) {
    const KernelSpec& k = kernels[cases % 3];
    const int n = 2 + static_cast<int>(rng.uniform() * 10);
    const std::vector<double> xs = testsupport::separated_locations(rng, n, 0.02);
    if (static_cast<int>(xs.size()) != n) continue;
    ++cases;
    const GramMatrix g = gram(k, xs);
    CHECK((g.entries - g.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // Right-hand sides in the column space stay recoverable even when the
    // gram is numerically rank deficient (linear kernel, tight rbf).
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = rng.normal();
    const Eigen::VectorXd b = g.entries * w;
    const CholeskyFactor f = factor(g);
    const Eigen::VectorXd z = f.solve(b);
    const double scale = b.norm() > 0 ? b.norm() : 1.0;
    CHECK((g.entries * z - b).norm() / scale < 1e-6);
  }
}

TEST_CASE("kernel spec parsing") {
  CHECK(parse_kernel("cubic-spline-shifted").kind == KernelKind::cubic_spline_shifted);
  CHECK(parse_kernel("linear").kind == KernelKind::linear);
  const KernelSpec rbf = parse_kernel("rbf:0.25");
  CHECK(rbf.kind == KernelKind::gaussian_rbf);
  CHECK(rbf.rbf_width == doctest::Approx(0.25));
  CHECK_THROWS_AS(parse_kernel("rbf:-1"), InputError);
  CHECK_THROWS_AS(parse_kernel("triangle"), InputError);
}
