#include "kgflow/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kgflow {

namespace {

void require_same_training_inputs(const FittedEstimator& estimator, const Dataset& data) {
  if (*estimator.x != data.x) {
    throw std::invalid_argument("estimator was fit on different training inputs");
  }
}

void require_learning_rate_in_range(double eta, double kappa_sq) {
  if (!(eta > 0.0) || !(eta < 0.5 / kappa_sq)) {
    std::ostringstream msg;
    msg << "learning rate " << eta << " outside (0, " << 0.5 / kappa_sq << ") = (0, 1/(2 kappa^2))";
    throw std::invalid_argument(msg.str());
  }
}

Eigen::VectorXd spectral_coefficients(const SpectralCache& cache, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& diag) {
  const double n = static_cast<double>(cache.size());
  return (cache.eigenvectors * diag.cwiseProduct(cache.eigenvectors.transpose() * y)) / n;
}

}  // namespace

Dataset::Dataset(std::vector<double> inputs, Eigen::VectorXd responses, double noise_sigma)
    : x(std::move(inputs)), y(std::move(responses)), sigma(noise_sigma) {
  if (x.empty()) throw std::invalid_argument("dataset must hold at least one sample");
  if (static_cast<std::size_t>(y.size()) != x.size()) {
    throw std::invalid_argument("input and response lengths differ");
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
  for (double xi : x) check_domain(xi);
}

SpectralCachePtr decompose(const Kernel& kernel, const std::vector<double>& x) {
  auto gram = std::make_shared<Eigen::MatrixXd>(kernel.gram(x));
  const auto n = gram->rows();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(*gram / static_cast<double>(n));
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigendecomposition failed for an " << n << "x" << n
        << " Gram matrix (trace/n = " << gram->trace() / static_cast<double>(n) << ")";
    throw std::runtime_error(msg.str());
  }

  // Eigen returns ascending order; flip to descending and clamp the
  // round-off negatives.
  Eigen::VectorXd eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  return std::make_shared<SpectralCache>(SpectralCache{
      kernel, std::make_shared<const std::vector<double>>(x), std::move(gram),
      std::move(eigenvalues), solver.eigenvectors().rowwise().reverse()});
}

FittedEstimator fit_kgf_spectral(const SpectralCachePtr& cache, const Eigen::VectorXd& y,
                                 const FilterParams& filter) {
  if (!cache) throw std::invalid_argument("null spectral cache");
  if (static_cast<std::size_t>(y.size()) != cache->size()) {
    throw std::invalid_argument("response length does not match the cache");
  }
  if (filter.mode() == FlowMode::Discrete) {
    require_learning_rate_in_range(filter.learning_rate(), cache->kernel.kappa_sq());
  }
  FittedEstimator est{cache->kernel,
                      cache->x,
                      cache->gram,
                      spectral_coefficients(*cache, y, apply_filter(filter, cache->eigenvalues)),
                      filter.mode() == FlowMode::Continuous ? FitMethod::KgfContinuous
                                                            : FitMethod::KgfDiscrete,
                      filter.time()};
  if (filter.mode() == FlowMode::Discrete) est.learning_rate = filter.learning_rate();
  return est;
}

FittedEstimator fit_kgf_iterative(const Kernel& kernel, const Dataset& data, double learning_rate,
                                  std::int64_t steps) {
  require_learning_rate_in_range(learning_rate, kernel.kappa_sq());
  if (steps < 0) throw std::invalid_argument("step count must be >= 0");

  auto gram = std::make_shared<Eigen::MatrixXd>(kernel.gram(data.x));
  const double scale = learning_rate / static_cast<double>(data.size());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(gram->rows());
  for (std::int64_t m = 0; m < steps; ++m) {
    beta -= scale * (*gram * beta - data.y);
  }

  FittedEstimator est{kernel,
                      std::make_shared<const std::vector<double>>(data.x),
                      std::move(gram),
                      std::move(beta),
                      FitMethod::KgfDiscrete,
                      learning_rate * static_cast<double>(steps)};
  est.learning_rate = learning_rate;
  return est;
}

FittedEstimator fit_krr(const SpectralCachePtr& cache, const Eigen::VectorXd& y, double ridge) {
  if (!cache) throw std::invalid_argument("null spectral cache");
  if (static_cast<std::size_t>(y.size()) != cache->size()) {
    throw std::invalid_argument("response length does not match the cache");
  }
  if (!(ridge > 0.0)) throw std::invalid_argument("ridge parameter must be positive");
  const Eigen::VectorXd diag = (cache->eigenvalues.array() + ridge).inverse().matrix();
  FittedEstimator est{cache->kernel, cache->x, cache->gram,
                      spectral_coefficients(*cache, y, diag), FitMethod::Krr};
  est.ridge = ridge;
  return est;
}

Eigen::VectorXd predict(const FittedEstimator& estimator, const std::vector<double>& points) {
  const auto& train = *estimator.x;
  Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t g = 0; g < points.size(); ++g) {
    check_domain(points[g]);
    double acc = 0.0;
    for (std::size_t j = 0; j < train.size(); ++j) {
      acc += estimator.beta[static_cast<Eigen::Index>(j)] * estimator.kernel(points[g], train[j]);
    }
    out[static_cast<Eigen::Index>(g)] = acc;
  }
  return out;
}

Eigen::VectorXd residuals(const FittedEstimator& estimator, const Dataset& data) {
  require_same_training_inputs(estimator, data);
  return data.y - *estimator.gram * estimator.beta;
}

double sup_error(const FittedEstimator& estimator, const std::function<double(double)>& truth,
                 const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("sup_error: empty grid");
  const Eigen::VectorXd predictions = predict(estimator, grid);
  double sup = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    sup = std::fmax(sup, std::fabs(predictions[static_cast<Eigen::Index>(g)] - truth(grid[g])));
  }
  return sup;
}

std::vector<double> uniform_grid(std::size_t base_size) {
  if (base_size < 2) throw std::invalid_argument("grid needs at least two points");
  std::vector<double> grid(base_size);
  const double step = 1.0 / static_cast<double>(base_size - 1);
  for (std::size_t i = 0; i < base_size; ++i) grid[i] = static_cast<double>(i) * step;
  grid.back() = 1.0;
  return grid;
}

std::vector<double> evaluation_grid(std::size_t base_size, const std::vector<double>& training) {
  std::vector<double> grid = uniform_grid(base_size);
  grid.insert(grid.end(), training.begin(), training.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace kgflow
