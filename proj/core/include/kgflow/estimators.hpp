#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "kgflow/filters.hpp"
#include "kgflow/kernels.hpp"

namespace kgflow {

/// Paired regression samples on [0,1].
struct Dataset {
  Dataset(std::vector<double> inputs, Eigen::VectorXd responses, double noise_sigma = 0.0);

  std::size_t size() const { return x.size(); }

  std::vector<double> x;
  Eigen::VectorXd y;
  double sigma = 0.0;  // noise level used at generation time, if known
};

/// Symmetric eigendecomposition of Gram/n with eigenvalues clamped at zero
/// and sorted descending. Immutable once built; shared between fits at
/// different training times.
struct SpectralCache {
  Kernel kernel;
  std::shared_ptr<const std::vector<double>> x;
  std::shared_ptr<const Eigen::MatrixXd> gram;
  Eigen::VectorXd eigenvalues;   // of Gram/n, descending, >= 0
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, matching order

  std::size_t size() const { return x->size(); }
};

using SpectralCachePtr = std::shared_ptr<const SpectralCache>;

enum class FitMethod { KgfContinuous, KgfDiscrete, Krr };

/// A fitted kernel regressor f(x) = sum_j beta_j k(x, x_j).
struct FittedEstimator {
  Kernel kernel;
  std::shared_ptr<const std::vector<double>> x;
  std::shared_ptr<const Eigen::MatrixXd> gram;
  Eigen::VectorXd beta;
  FitMethod method;
  double time = 0.0;           // KGF training time
  double learning_rate = 0.0;  // discrete KGF
  double ridge = 0.0;          // KRR

  std::size_t size() const { return x->size(); }
};

SpectralCachePtr decompose(const Kernel& kernel, const std::vector<double>& x);

/// Closed-form kernel gradient flow through the spectral filter:
/// beta = (1/n) U diag(phi(mu_i)) U^T y. Finite for singular Gram matrices
/// since phi is finite at zero. Discrete mode requires eta < 1/(2 kappa^2).
FittedEstimator fit_kgf_spectral(const SpectralCachePtr& cache, const Eigen::VectorXd& y,
                                 const FilterParams& filter);

/// Plain gradient descent on the coefficients: m iterations of
/// beta <- beta - (eta/n) (Gram beta - y) from beta = 0.
FittedEstimator fit_kgf_iterative(const Kernel& kernel, const Dataset& data, double learning_rate,
                                  std::int64_t steps);

/// Kernel ridge regression beta = (Gram + n lambda I)^-1 y via the spectral cache.
FittedEstimator fit_krr(const SpectralCachePtr& cache, const Eigen::VectorXd& y, double ridge);

Eigen::VectorXd predict(const FittedEstimator& estimator, const std::vector<double>& points);

/// y_i - f(x_i) on the training data the estimator was fit on.
Eigen::VectorXd residuals(const FittedEstimator& estimator, const Dataset& data);

double sup_error(const FittedEstimator& estimator, const std::function<double(double)>& truth,
                 const std::vector<double>& grid);

/// Sup-norm surrogate grid: base_size equispaced points on [0,1] unioned with
/// the training points, sorted with exact duplicates removed.
std::vector<double> evaluation_grid(std::size_t base_size, const std::vector<double>& training);

/// base_size equispaced points on [0,1].
std::vector<double> uniform_grid(std::size_t base_size);

}  // namespace kgflow
