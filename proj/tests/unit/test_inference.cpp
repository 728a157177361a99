#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "kgflow/estimators.hpp"
#include "kgflow/filters.hpp"
#include "kgflow/harness.hpp"
#include "kgflow/inference.hpp"
#include "kgflow/kernels.hpp"
#include "kgflow/random.hpp"

using namespace kgflow;

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

Eigen::MatrixXd cross_kernel(const Kernel& k, const std::vector<double>& grid,
                             const std::vector<double>& train) {
  Eigen::MatrixXd out(grid.size(), train.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t j = 0; j < train.size(); ++j) {
      out(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) = k(grid[g], train[j]);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("filter vector field") {
  const Kernel k = Kernel::min();

  SUBCASE("single sample closed form") {
    const auto cache = decompose(k, {1.0});
    const double t = 3.0;
    const auto field = filter_vectors(*cache, FilterParams::continuous(t), {1.0});
    CHECK(field.v.rows() == 1);
    CHECK(field.v.cols() == 1);
    CHECK(field.v(0, 0) == doctest::Approx(1.0 - std::exp(-t)).epsilon(1e-14));
  }

  SUBCASE("zero training time gives a zero field") {
    const Dataset data = generate_data(TruthFunction::f1(), 12, 0.2, 5);
    const auto cache = decompose(k, data.x);
    const auto field = filter_vectors(*cache, FilterParams::continuous(0.0), linspace(0.1, 1, 9));
    CHECK(field.v.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("rows match the dense resolvent form on a well-conditioned instance") {
    const Dataset data = generate_data(TruthFunction::f1(), 30, 0.2, 8);
    const auto cache = decompose(k, data.x);
    const Eigen::MatrixXd& gram = *cache->gram;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
    const double cond =
        svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
    REQUIRE(cond < 1e8);

    const double t = 4.0;
    const auto grid = linspace(0.05, 1.0, 17);
    const auto field = filter_vectors(*cache, FilterParams::continuous(t), grid);

    // dense oracle: K(x, X) K^-1 (I - exp(-t K / n)), exponential by
    // diagonalizing in long double precision is avoided; instead use the
    // scaling-squaring series on the symmetric matrix
    Eigen::MatrixXd a = -t / static_cast<double>(data.size()) * gram;
    int squarings = 0;
    double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.5) {
      a *= 0.5;
      norm *= 0.5;
      ++squarings;
    }
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd expm = term;
    for (int i = 1; i <= 24; ++i) {
      term = (term * a) / static_cast<double>(i);
      expm += term;
    }
    for (int i = 0; i < squarings; ++i) expm = expm * expm;

    const Eigen::MatrixXd oracle =
        cross_kernel(k, grid, data.x) *
        gram.ldlt().solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()) - expm);
    CHECK((field.v - oracle).cwiseAbs().maxCoeff() <= 1e-8);
  }

  SUBCASE("empty grid") {
    const auto cache = decompose(k, {0.5});
    CHECK_THROWS_AS(filter_vectors(*cache, FilterParams::continuous(1.0), {}),
                    std::invalid_argument);
  }

  SUBCASE("unstable discrete learning rate") {
    const auto cache = decompose(k, {0.5});
    // kappa^2 = 1, so eta must stay below 0.5
    CHECK_THROWS_AS(filter_vectors(*cache, FilterParams::discrete_steps(0.6, 2), {0.5}),
                    std::invalid_argument);
  }
}

TEST_CASE("empirical covariance diagonal") {
  const Kernel k = Kernel::min();

  SUBCASE("single sample scalar expansion") {
    const std::vector<double> x = {0.8};
    const auto cache = decompose(k, x);
    const double t = 2.0;
    const auto field = filter_vectors(*cache, FilterParams::continuous(t), {0.3});
    Eigen::VectorXd eps(1);
    eps << 0.5;
    const auto cov = empirical_cov_diag(field, eps);
    // w = (1 - exp(-t k11)) k(x, x1) / k11 with k11 = 0.8
    const double w = (1.0 - std::exp(-t * 0.8)) * k(0.3, 0.8) / 0.8;
    CHECK(cov.values[0] == doctest::Approx(w * 0.5 * w * 0.5).epsilon(1e-12));
  }

  SUBCASE("zero residuals give a zero diagonal") {
    const Dataset data = generate_data(TruthFunction::f1(), 10, 0.2, 3);
    const auto cache = decompose(k, data.x);
    const auto field = filter_vectors(*cache, FilterParams::continuous(1.0), linspace(0.1, 1, 7));
    const auto cov = empirical_cov_diag(field, Eigen::VectorXd::Zero(10));
    CHECK(cov.values.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("discrete mode matches the iterative recursion oracle") {
    const std::size_t n = 20;
    const std::int64_t m = 50;
    const double eta = 0.02;
    const Dataset data = generate_data(TruthFunction::f1(), n, 0.3, 11);
    const auto cache = decompose(k, data.x);
    const FilterParams filter = FilterParams::discrete_steps(eta, m);
    const auto est = fit_kgf_spectral(cache, data.y, filter);
    const Eigen::VectorXd eps = residuals(est, data);
    const auto grid = linspace(0.05, 1.0, 21);
    const auto cov = empirical_cov_diag(filter_vectors(*cache, filter, grid), eps);

    // straightforward implementation of the iterative procedure: the i-th
    // column follows a gradient descent path whose responses are eps_i e_i
    const Eigen::MatrixXd gram = *cache->gram;
    const Eigen::MatrixXd cross = cross_kernel(k, grid, data.x);
    Eigen::MatrixXd on_train = Eigen::MatrixXd::Zero(n, n);  // F at the sample points
    Eigen::MatrixXd on_grid = Eigen::MatrixXd::Zero(grid.size(), n);
    const Eigen::MatrixXd target = eps.asDiagonal();
    const double scale = eta / static_cast<double>(n);
    for (std::int64_t step = 0; step < m; ++step) {
      const Eigen::MatrixXd gap = on_train - target;
      on_grid -= scale * cross * gap;
      on_train -= scale * gram * gap;
    }
    const Eigen::VectorXd oracle =
        static_cast<double>(n) * on_grid.rowwise().squaredNorm();
    CHECK((cov.values - oracle).cwiseAbs().maxCoeff() <= 1e-8);
  }

  SUBCASE("length mismatch") {
    const auto cache = decompose(k, {0.2, 0.6});
    const auto field = filter_vectors(*cache, FilterParams::continuous(1.0), {0.5});
    CHECK_THROWS_AS(empirical_cov_diag(field, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  }
}

TEST_CASE("multiplier bootstrap") {
  const Kernel k = Kernel::min();
  const Dataset data = generate_data(TruthFunction::f1(), 25, 0.2, 19);
  const auto cache = decompose(k, data.x);
  const FilterParams filter = FilterParams::continuous(10.0);
  const auto est = fit_kgf_spectral(cache, data.y, filter);
  const Eigen::VectorXd eps = residuals(est, data);
  const auto field = filter_vectors(*cache, filter, linspace(0.05, 1.0, 41));
  const auto cov = empirical_cov_diag(field, eps);

  SUBCASE("deterministic given the seed") {
    const auto a = bootstrap_sup_samples(field, cov, eps, 8, 1234);
    const auto b = bootstrap_sup_samples(field, cov, eps, 8, 1234);
    const auto c = bootstrap_sup_samples(field, cov, eps, 8, 999);
    CHECK(a == b);
    CHECK(a != c);
    for (double z : a) CHECK(z >= 0.0);
  }

  SUBCASE("residual rescaling leaves the samples unchanged") {
    const auto base = bootstrap_sup_samples(field, cov, eps, 32, 77);
    for (double c2 : {2.0, 3.0}) {
      const Eigen::VectorXd scaled = c2 * eps;
      const auto again =
          bootstrap_sup_samples(field, empirical_cov_diag(field, scaled), scaled, 32, 77);
      for (std::size_t b = 0; b < again.size(); ++b) {
        CHECK(std::fabs(again[b] - base[b]) <= 1e-12);
      }
    }
  }

  SUBCASE("single sample self-normalizes regardless of the response") {
    std::vector<std::vector<double>> draws;
    for (double y : {0.4, -2.5}) {
      Eigen::VectorXd ys(1);
      ys << y;
      const Dataset one({0.9}, ys);
      const auto c1 = decompose(k, one.x);
      const auto e1 = fit_kgf_spectral(c1, one.y, FilterParams::continuous(2.0));
      const Eigen::VectorXd r1 = residuals(e1, one);
      const auto f1 = filter_vectors(*c1, FilterParams::continuous(2.0), linspace(0.2, 1.0, 11));
      draws.push_back(bootstrap_sup_samples(f1, empirical_cov_diag(f1, r1), r1, 6, 321));
    }
    // Z = |g_1|, so up to round-off the draws cannot depend on y
    REQUIRE(draws[0].size() == draws[1].size());
    for (std::size_t b = 0; b < draws[0].size(); ++b) {
      CHECK(std::fabs(draws[0][b] - draws[1][b]) <= 1e-12);
    }
  }

  SUBCASE("degenerate covariance is reported with the grid point") {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(eps.size());
    const auto degenerate = empirical_cov_diag(field, zero);
    CHECK_THROWS_AS(bootstrap_sup_samples(field, degenerate, zero, 4, 1),
                    DegenerateCovarianceError);
    try {
      bootstrap_sup_samples(field, degenerate, zero, 4, 1);
    } catch (const DegenerateCovarianceError& e) {
      CHECK(e.grid_point() == 0.05);
      CHECK(std::string(e.what()).find("0.05") != std::string::npos);
    }
  }

  SUBCASE("bootstrap count contract") {
    CHECK_THROWS_AS(bootstrap_sup_samples(field, cov, eps, 0, 1), std::invalid_argument);
  }
}

TEST_CASE("empirical quantile order statistic") {
  CHECK(quantile({1, 2, 3, 4, 5}, 0.95) == 5.0);
  CHECK(quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
  CHECK(quantile({5, 4, 3, 2, 1}, 0.5) == 3.0);
  CHECK(quantile({2, 2, 2, 2}, 0.31) == 2.0);
  CHECK(quantile({7.5}, 0.9) == 7.5);
  // ceil(0.95 * 100) must stay 95 despite the inexact product
  std::vector<double> hundred(100);
  for (int i = 0; i < 100; ++i) hundred[static_cast<std::size_t>(i)] = i + 1;
  CHECK(quantile(hundred, 0.95) == 95.0);
  CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(quantile({1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(quantile({1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("band assembly and coverage") {
  const Kernel k = Kernel::min();
  const Dataset data = generate_data(TruthFunction::f1(), 8, 0.1, 23);
  const auto cache = decompose(k, data.x);
  const FilterParams filter = FilterParams::continuous(5.0);
  const auto est = fit_kgf_spectral(cache, data.y, filter);
  const auto grid = linspace(0.1, 1.0, 19);
  const auto field = filter_vectors(*cache, filter, grid);
  const auto cov = empirical_cov_diag(field, residuals(est, data));

  SUBCASE("half-width arithmetic") {
    CovarianceDiag fixed{{0.5}, Eigen::VectorXd::Constant(1, 0.25), filter};
    const BandResult band = build_band(est, fixed, 2.0, 100, 0.95);
    CHECK(band.half_width[0] == doctest::Approx(0.1).epsilon(1e-14));
    const BandResult zero = build_band(est, fixed, 0.0, 100, 0.95);
    CHECK(zero.half_width[0] == 0.0);
    const BandResult twice = build_band(est, fixed, 4.0, 100, 0.95);
    CHECK(twice.half_width[0] == doctest::Approx(2.0 * band.half_width[0]).epsilon(1e-14));
    CHECK_THROWS_AS(build_band(est, fixed, -1.0, 100, 0.95), std::invalid_argument);
  }

  SUBCASE("stored width matches an independent recomputation exactly") {
    const BandResult band = build_band(est, cov, 1.7, data.size(), 0.9);
    for (Eigen::Index g = 0; g < band.half_width.size(); ++g) {
      const double recomputed =
          1.7 / std::sqrt(static_cast<double>(data.size())) * std::sqrt(cov.values[g]);
      CHECK(band.half_width[g] == recomputed);
    }
  }

  SUBCASE("covers") {
    BandResult band = build_band(est, cov, 1.5, data.size(), 0.9);
    const auto center_fn = [&](double x) { return predict(est, {x})[0]; };
    CHECK(covers(band, center_fn));

    // push the truth outside at a single grid point
    const std::size_t bump = 7;
    const double offset = 2.0 * band.half_width[bump];
    REQUIRE(offset > 0.0);
    const double where = band.grid[bump];
    const auto shifted = [&](double x) {
      return center_fn(x) + (x == where ? offset : 0.0);
    };
    CHECK_FALSE(covers(band, shifted));

    band.half_width *= 3.0;
    CHECK(covers(band, shifted));
  }
}

TEST_CASE("population oracles") {
  const Kernel k = Kernel::min();

  SUBCASE("degenerate parameters") {
    CHECK(population_cov_diag(k, 100, FilterParams::continuous(0.0), 0.3, 0.5) == 0.0);
    CHECK(population_cov_diag(k, 100, FilterParams::continuous(50.0), 0.0, 0.5) == 0.0);
    CHECK_THROWS_AS(
        population_cov_diag(Kernel::periodic_matern32(1.0), 10, FilterParams::continuous(1.0),
                            0.2, 0.5),
        std::logic_error);
  }

  SUBCASE("single eigen-coefficient flow") {
    const double t = 7.0;
    std::vector<double> coeffs = {1.0};
    for (double x : {0.2, 0.6, 0.9}) {
      const double expected = (1.0 - std::exp(-t * min_eigenvalue(1))) * min_eigenfunction(1, x);
      CHECK(population_estimate(k, 50, FilterParams::continuous(t), coeffs, x) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(population_estimate(k, 50, FilterParams::continuous(0.0), coeffs, 0.3) == 0.0);
  }

  SUBCASE("long flows recover f2 through its single coefficient") {
    std::vector<double> coeffs = {0.0, 1.0};  // f2 = e_2
    const FilterParams filter = FilterParams::continuous(1e6);
    double worst = 0.0;
    for (double x : linspace(0.0, 1.0, 101)) {
      const double f2 = std::numbers::sqrt2 * std::sin(1.5 * std::numbers::pi * x);
      worst = std::fmax(worst,
                        std::fabs(population_estimate(k, 10, filter, coeffs, x) - f2));
    }
    CHECK(worst <= 1e-3);
  }

  SUBCASE("quadrature coefficients recover an eigenfunction") {
    const auto coeffs =
        truth_coefficients(k, 6, [](double x) { return min_eigenfunction(3, x); });
    for (std::size_t j = 1; j <= 6; ++j) {
      CHECK(std::fabs(coeffs[j - 1] - (j == 3 ? 1.0 : 0.0)) <= 1e-8);
    }
  }
}
