#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgflow/estimators.hpp"
#include "kgflow/filters.hpp"
#include "kgflow/kernels.hpp"

namespace kgflow {

/// Filtered kernel sections evaluated on the training sample.
///
/// Row g holds (1/n) U diag(phi(mu_i)) U^T k(x_g, X), so n * v(g, i) equals
/// phi_t(T_X) k_{x_g}(x_i), the weight entering both the empirical covariance
/// and the multiplier bootstrap.
struct FilterVectorField {
  std::vector<double> grid;
  Eigen::MatrixXd v;  // G x n
  FilterParams filter;
};

/// Diagonal of the empirical covariance estimator, one value per grid point.
struct CovarianceDiag {
  std::vector<double> grid;
  Eigen::VectorXd values;
  FilterParams filter;
};

/// Simultaneous confidence band on a grid.
struct BandResult {
  std::vector<double> grid;
  Eigen::VectorXd center;
  Eigen::VectorXd half_width;
  double quantile_value = 0.0;  // r, the q-th empirical quantile of the Z samples
  double coverage_level = 0.0;  // q
  std::vector<double> z_samples;

  std::size_t bootstrap_count() const { return z_samples.size(); }
};

/// Raised when some grid point has zero empirical covariance, which would
/// make the studentized bootstrap statistic undefined there.
class DegenerateCovarianceError : public std::runtime_error {
 public:
  DegenerateCovarianceError(double grid_point, std::string message)
      : std::runtime_error(std::move(message)), grid_point_(grid_point) {}
  double grid_point() const { return grid_point_; }

 private:
  double grid_point_;
};

FilterVectorField filter_vectors(const SpectralCache& cache, const FilterParams& filter,
                                 std::vector<double> grid);

/// Builds filter vector fields for several training times over one grid,
/// sharing the grid-to-eigenbasis projection (the dominant cost).
class FilterVectorBuilder {
 public:
  FilterVectorBuilder(SpectralCachePtr cache, std::vector<double> grid);

  FilterVectorField build(const FilterParams& filter) const;
  const std::vector<double>& grid() const { return grid_; }

 private:
  SpectralCachePtr cache_;
  std::vector<double> grid_;
  Eigen::MatrixXd projected_;  // K(grid, X) * U
};

/// C_hat(x_g, x_g) = (1/n) sum_i (phi_t(T_X) k_{x_g}(x_i) eps_i)^2.
CovarianceDiag empirical_cov_diag(const FilterVectorField& field,
                                  const Eigen::VectorXd& residuals);

/// Multiplier-bootstrap sup statistics: B independent draws of
/// max_g |sum_j phi_t(T_X) k_{x_g}(x_j) eps_j g_j| / sqrt(n C_hat(x_g, x_g))
/// with g ~ N(0, I_n) fresh per replicate. Deterministic given the seed;
/// replicate b uses the stream keyed by (seed, b).
std::vector<double> bootstrap_sup_samples(const FilterVectorField& field,
                                          const CovarianceDiag& cov,
                                          const Eigen::VectorXd& residuals, int bootstrap_count,
                                          std::uint64_t seed);

/// The ceil(q * B)-th ascending order statistic.
double quantile(std::vector<double> samples, double q);

/// Band centered at the estimator with half-width r * n^{-1/2} sqrt(C_hat).
BandResult build_band(const FittedEstimator& estimator, const CovarianceDiag& cov, double r,
                      std::size_t n, double q, std::vector<double> z_samples = {});

/// True iff |truth(x_g) - center(x_g)| <= half_width(x_g) at every grid point.
bool covers(const BandResult& band, const std::function<double(double)>& truth);

/// Population covariance diagonal through the truncated spectrum:
/// sigma^2 sum_{j<=N} (phi(lambda_j) lambda_j)^2 e_j(x)^2.
double population_cov_diag(const Kernel& kernel, std::size_t truncation,
                           const FilterParams& filter, double sigma, double x);

/// Noise-free population flow f_t(x) = sum_{j<=N} phi(lambda_j) lambda_j a_j e_j(x)
/// for truth coefficients a_j = <f*, e_j>.
double population_estimate(const Kernel& kernel, std::size_t truncation,
                           const FilterParams& filter, const std::vector<double>& truth_coeffs,
                           double x);

/// a_j = <f*, e_j> by composite Simpson quadrature (quad_points made odd).
std::vector<double> truth_coefficients(const Kernel& kernel, std::size_t truncation,
                                       const std::function<double(double)>& truth,
                                       std::size_t quad_points = 10001);

}  // namespace kgflow
