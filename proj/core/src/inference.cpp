#include "kgflow/inference.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kgflow/random.hpp"

namespace kgflow {

namespace {

Eigen::MatrixXd kernel_cross(const Kernel& kernel, const std::vector<double>& grid,
                             const std::vector<double>& train) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(grid.size()),
                    static_cast<Eigen::Index>(train.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t j = 0; j < train.size(); ++j) {
      k(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) = kernel(grid[g], train[j]);
    }
  }
  return k;
}

/// phi(lambda_j) * lambda_j, evaluated as 1 - psi(lambda_j) to avoid the
/// separate small-z branch.
double filtered_eigenvalue(const FilterParams& filter, double lambda) {
  return 1.0 - psi(filter, lambda);
}

}  // namespace

FilterVectorBuilder::FilterVectorBuilder(SpectralCachePtr cache, std::vector<double> grid)
    : cache_(std::move(cache)), grid_(std::move(grid)) {
  if (!cache_) throw std::invalid_argument("null spectral cache");
  if (grid_.empty()) throw std::invalid_argument("filter_vectors: empty grid");
  projected_ = kernel_cross(cache_->kernel, grid_, *cache_->x) * cache_->eigenvectors;
}

FilterVectorField FilterVectorBuilder::build(const FilterParams& filter) const {
  if (filter.mode() == FlowMode::Discrete &&
      !(filter.learning_rate() < 0.5 / cache_->kernel.kappa_sq())) {
    throw std::invalid_argument("filter_vectors: learning rate must satisfy eta < 1/(2 kappa^2)");
  }
  const double n = static_cast<double>(cache_->size());
  const Eigen::VectorXd filtered = apply_filter(filter, cache_->eigenvalues);
  // (1/n) (K_gX U) diag(phi) U^T, row per grid point.
  Eigen::MatrixXd v = (projected_ * filtered.asDiagonal()) * cache_->eigenvectors.transpose() / n;
  return FilterVectorField{grid_, std::move(v), filter};
}

FilterVectorField filter_vectors(const SpectralCache& cache, const FilterParams& filter,
                                 std::vector<double> grid) {
  // One-shot path; shares the implementation with the builder.
  auto alias = std::shared_ptr<const SpectralCache>(&cache, [](const SpectralCache*) {});
  return FilterVectorBuilder(std::move(alias), std::move(grid)).build(filter);
}

CovarianceDiag empirical_cov_diag(const FilterVectorField& field,
                                  const Eigen::VectorXd& residuals) {
  if (residuals.size() != field.v.cols()) {
    throw std::invalid_argument("residual length does not match the filter vector field");
  }
  // (1/n) sum_i (n v_{g,i} eps_i)^2 = n * || row_g . eps ||^2
  const double n = static_cast<double>(field.v.cols());
  Eigen::VectorXd values =
      n * (field.v * residuals.asDiagonal()).rowwise().squaredNorm();
  return CovarianceDiag{field.grid, std::move(values), field.filter};
}

std::vector<double> bootstrap_sup_samples(const FilterVectorField& field,
                                          const CovarianceDiag& cov,
                                          const Eigen::VectorXd& residuals, int bootstrap_count,
                                          std::uint64_t seed) {
  if (bootstrap_count < 1) throw std::invalid_argument("bootstrap count must be >= 1");
  if (residuals.size() != field.v.cols()) {
    throw std::invalid_argument("residual length does not match the filter vector field");
  }
  if (cov.values.size() != field.v.rows()) {
    throw std::invalid_argument("covariance grid does not match the filter vector field");
  }
  for (Eigen::Index g = 0; g < cov.values.size(); ++g) {
    if (!(cov.values[g] > 0.0)) {
      std::ostringstream msg;
      msg << "degenerate empirical covariance at grid point x = "
          << field.grid[static_cast<std::size_t>(g)];
      throw DegenerateCovarianceError(field.grid[static_cast<std::size_t>(g)], msg.str());
    }
  }

  const Eigen::Index n = field.v.cols();
  const double nd = static_cast<double>(n);
  // A(g, j) = phi_t(T_X) k_{x_g}(x_j) * eps_j = n v(g, j) eps_j
  const Eigen::MatrixXd weighted = nd * (field.v * residuals.asDiagonal());
  const Eigen::VectorXd scale = (nd * cov.values).cwiseSqrt();

  std::vector<double> samples(static_cast<std::size_t>(bootstrap_count));
  Eigen::VectorXd multipliers(n);
  for (int b = 0; b < bootstrap_count; ++b) {
    auto rng = seeded_rng({seed, static_cast<std::uint64_t>(b)});
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index j = 0; j < n; ++j) multipliers[j] = gauss(rng);
    samples[static_cast<std::size_t>(b)] =
        ((weighted * multipliers).cwiseAbs().cwiseQuotient(scale)).maxCoeff();
  }
  return samples;
}

double quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("quantile of an empty sample set");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
  const double count = static_cast<double>(samples.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * count - 1e-9));
  rank = std::min(std::max<std::size_t>(rank, 1), samples.size());
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   samples.end());
  return samples[rank - 1];
}

BandResult build_band(const FittedEstimator& estimator, const CovarianceDiag& cov, double r,
                      std::size_t n, double q, std::vector<double> z_samples) {
  if (!(r >= 0.0)) throw std::invalid_argument("quantile value must be >= 0");
  BandResult band;
  band.grid = cov.grid;
  band.center = predict(estimator, cov.grid);
  band.half_width = r / std::sqrt(static_cast<double>(n)) * cov.values.cwiseSqrt();
  band.quantile_value = r;
  band.coverage_level = q;
  band.z_samples = std::move(z_samples);
  return band;
}

bool covers(const BandResult& band, const std::function<double(double)>& truth) {
  for (std::size_t g = 0; g < band.grid.size(); ++g) {
    const auto i = static_cast<Eigen::Index>(g);
    if (std::fabs(truth(band.grid[g]) - band.center[i]) > band.half_width[i]) return false;
  }
  return true;
}

double population_cov_diag(const Kernel& kernel, std::size_t truncation,
                           const FilterParams& filter, double sigma, double x) {
  if (!kernel.has_spectrum()) {
    throw std::logic_error("population_cov_diag: kernel has no closed-form spectrum");
  }
  if (truncation == 0) throw std::invalid_argument("truncation level must be >= 1");
  const std::size_t terms = std::min(truncation, kernel.max_spectrum_terms());
  double sum = 0.0;
  for (std::size_t j = terms; j >= 1; --j) {
    const double fl = filtered_eigenvalue(filter, kernel.eigenvalue(j));
    const double e = kernel.eigenfunction(j, x);
    sum += fl * fl * e * e;
  }
  return sigma * sigma * sum;
}

double population_estimate(const Kernel& kernel, std::size_t truncation,
                           const FilterParams& filter, const std::vector<double>& truth_coeffs,
                           double x) {
  if (!kernel.has_spectrum()) {
    throw std::logic_error("population_estimate: kernel has no closed-form spectrum");
  }
  const std::size_t terms =
      std::min({truncation, kernel.max_spectrum_terms(), truth_coeffs.size()});
  double sum = 0.0;
  for (std::size_t j = terms; j >= 1; --j) {
    sum += filtered_eigenvalue(filter, kernel.eigenvalue(j)) * truth_coeffs[j - 1] *
           kernel.eigenfunction(j, x);
  }
  return sum;
}

std::vector<double> truth_coefficients(const Kernel& kernel, std::size_t truncation,
                                       const std::function<double(double)>& truth,
                                       std::size_t quad_points) {
  if (!kernel.has_spectrum()) {
    throw std::logic_error("truth_coefficients: kernel has no closed-form spectrum");
  }
  const std::size_t terms = std::min(truncation, kernel.max_spectrum_terms());
  std::size_t m = std::max<std::size_t>(quad_points, 3);
  if (m % 2 == 0) ++m;  // Simpson needs an odd point count
  const double h = 1.0 / static_cast<double>(m - 1);

  std::vector<double> coeffs(terms, 0.0);
  for (std::size_t j = 1; j <= terms; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double xi = static_cast<double>(i) * h;
      const double w = (i == 0 || i == m - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += w * truth(xi) * kernel.eigenfunction(j, xi);
    }
    coeffs[j - 1] = acc * h / 3.0;
  }
  return coeffs;
}

}  // namespace kgflow
