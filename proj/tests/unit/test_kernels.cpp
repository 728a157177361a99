#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "kgflow/kernels.hpp"

using namespace kgflow;

TEST_CASE("min kernel evaluation") {
  const Kernel k = Kernel::min();
  CHECK(k(0.25, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(k(0.5, 0.25) == doctest::Approx(0.25).epsilon(1e-15));
  for (double x : {0.0, 0.1, 0.37, 1.0}) CHECK(k(x, x) == x);
  CHECK(k.kappa_sq() == 1.0);
  CHECK_THROWS_AS(k(1.2, 0.5), std::domain_error);
  CHECK_THROWS_AS(k(0.5, -0.1), std::domain_error);
}

TEST_CASE("periodic matern32 evaluation") {
  const Kernel k = Kernel::periodic_matern32(0.5 * std::numbers::sqrt3);
  for (double x : {0.0, 0.3, 0.77, 1.0}) {
    CHECK(k(x, x) == doctest::Approx(1.0).epsilon(1e-14));
  }
  // periodic: distance between 0 and 1 is zero on the circle
  CHECK(k(0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  // symmetric in its arguments
  CHECK(k(0.13, 0.62) == doctest::Approx(k(0.62, 0.13)).epsilon(1e-15));
  CHECK(std::fabs(k(0.1, 0.9)) <= k.kappa_sq());
  CHECK_THROWS_AS(Kernel::periodic_matern32(0.0), std::invalid_argument);
}

TEST_CASE("gram matrices") {
  const Kernel k = Kernel::min();

  SUBCASE("fixed two-point case") {
    const Eigen::MatrixXd g = k.gram({0.25, 0.5});
    CHECK(g(0, 0) == 0.25);
    CHECK(g(0, 1) == 0.25);
    CHECK(g(1, 0) == 0.25);
    CHECK(g(1, 1) == 0.5);
  }

  SUBCASE("one-point case") {
    const Eigen::MatrixXd g = k.gram({1.0});
    CHECK(g.rows() == 1);
    CHECK(g(0, 0) == 1.0);
  }

  SUBCASE("empty input") { CHECK_THROWS_AS(k.gram({}), std::invalid_argument); }

  SUBCASE("matern gram is positive semi-definite") {
    const Kernel km = Kernel::periodic_matern32(0.25 * std::numbers::sqrt3);
    const Eigen::MatrixXd g = km.gram({0.0, 0.25, 0.5, 0.75, 1.0});
    for (int i = 0; i < 5; ++i) CHECK(g(i, i) == doctest::Approx(1.0).epsilon(1e-14));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
    CHECK(g == g.transpose().eval());
  }
}

TEST_CASE("min kernel spectrum") {
  CHECK(min_eigenvalue(1) == doctest::Approx(4.0 / (std::numbers::pi * std::numbers::pi))
                                 .epsilon(1e-15));
  CHECK(min_eigenfunction(1, 0.5) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(min_eigenvalue(0), std::invalid_argument);
  CHECK_THROWS_AS(min_spectrum(0), std::invalid_argument);

  const EigenPair pair = min_spectrum(2);
  CHECK(pair.value == doctest::Approx(min_eigenvalue(2)).epsilon(1e-15));
  CHECK(pair.function(0.25) == doctest::Approx(min_eigenfunction(2, 0.25)).epsilon(1e-15));

  SUBCASE("first two eigenfunctions are orthogonal under quadrature") {
    const std::size_t points = 10001;
    const double h = 1.0 / static_cast<double>(points - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
      const double w = (i == 0 || i == points - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      const double x = static_cast<double>(i) * h;
      acc += w * min_eigenfunction(1, x) * min_eigenfunction(2, x);
    }
    CHECK(std::fabs(acc * h / 3.0) <= 1e-6);
  }
}

TEST_CASE("mercer partial sums") {
  const Kernel k = Kernel::min();
  CHECK(std::fabs(mercer_partial_sum(k, 0.5, 0.5, 10000) - 0.5) <= 1e-3);
  CHECK(mercer_partial_sum(k, 0.3, 0.7, 1) ==
        doctest::Approx(min_eigenvalue(1) * min_eigenfunction(1, 0.3) * min_eigenfunction(1, 0.7))
            .epsilon(1e-15));

  // positive terms at x = x': partial sums non-decreasing in N
  double previous = 0.0;
  for (std::size_t n : {1u, 2u, 5u, 20u, 100u}) {
    const double value = mercer_partial_sum(k, 0.5, 0.5, n);
    CHECK(value >= previous);
    previous = value;
  }

  CHECK_THROWS_AS(mercer_partial_sum(k, 0.5, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(mercer_partial_sum(Kernel::periodic_matern32(1.0), 0.5, 0.5, 10),
                  std::logic_error);
}

TEST_CASE("custom mercer kernels") {
  const Kernel k = Kernel::custom_mercer({0.5, 0.2, 0.05}, EigenFamily::Sine);
  CHECK(k.has_spectrum());
  CHECK(k.max_spectrum_terms() == 3);
  // evaluation equals its own full partial sum
  CHECK(k(0.3, 0.8) == doctest::Approx(mercer_partial_sum(k, 0.3, 0.8, 3)).epsilon(1e-14));
  CHECK(std::fabs(k(0.3, 0.8)) <= k.kappa_sq());

  CHECK_THROWS_AS(Kernel::custom_mercer({}, EigenFamily::Sine), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::custom_mercer({0.2, 0.5}, EigenFamily::Sine), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::custom_mercer({0.5, -0.1}, EigenFamily::Sine), std::invalid_argument);

  SUBCASE("fourier family keeps the constant eigenfunction first") {
    const Kernel kf = Kernel::custom_mercer({1.0, 0.5, 0.25}, EigenFamily::Fourier);
    CHECK(kf.eigenfunction(1, 0.37) == 1.0);
    CHECK(kf.eigenfunction(2, 0.0) == doctest::Approx(std::numbers::sqrt2).epsilon(1e-15));
  }
}

TEST_CASE("kernel descriptors") {
  CHECK(parse_kernel("min").name() == "min");
  const Kernel m = parse_kernel("matern32:h=0.433013");
  CHECK(m.name() == "matern32");
  CHECK(m(0.2, 0.2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(parse_kernel("gauss"), std::invalid_argument);
  CHECK_THROWS_AS(parse_kernel("matern32:0.4"), std::invalid_argument);

  SUBCASE("mercer spectrum file") {
    const auto path = std::filesystem::temp_directory_path() / "kgflow_spectrum_test.csv";
    {
      std::ofstream out(path);
      out << "# truncated spectrum\nfamily,sine\n0.5\n0.25\n0.1\n";
    }
    const Kernel k = parse_kernel("mercer:" + path.string());
    CHECK(k.max_spectrum_terms() == 3);
    CHECK(k.eigenvalue(2) == 0.25);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(parse_kernel("mercer:" + path.string()), std::invalid_argument);
  }
}
