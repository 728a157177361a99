#include "kgflow/filters.hpp"

#include <cmath>
#include <stdexcept>

namespace kgflow {

namespace {

// Below this threshold (1 - e^{-u})/z and its discrete counterpart are
// evaluated by series; the direct expressions lose all digits as z -> 0.
constexpr double kSeriesThreshold = 1e-8;

// (1 - eta z)^m as exp(m log1p(-eta z)); repeated multiplication drifts for
// step counts around 1e5.
double discrete_remainder(double eta_z, std::int64_t steps) {
  if (steps == 0) return 1.0;
  if (eta_z == 0.0) return 1.0;
  if (eta_z == 1.0) return 0.0;
  return std::exp(static_cast<double>(steps) * std::log1p(-eta_z));
}

}  // namespace

FilterParams FilterParams::continuous(double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("training time must be >= 0");
  return FilterParams(FlowMode::Continuous, t, 0.0, 0);
}

FilterParams FilterParams::discrete_steps(double learning_rate, std::int64_t steps) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (steps < 0) throw std::invalid_argument("step count must be >= 0");
  return FilterParams(FlowMode::Discrete, learning_rate * static_cast<double>(steps),
                      learning_rate, steps);
}

FilterParams FilterParams::discrete_time(double learning_rate, double t) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(t >= 0.0)) throw std::invalid_argument("training time must be >= 0");
  return discrete_steps(learning_rate, static_cast<std::int64_t>(std::floor(t / learning_rate)));
}

double FilterParams::learning_rate() const {
  if (mode_ != FlowMode::Discrete) {
    throw std::logic_error("continuous flow has no learning rate");
  }
  return learning_rate_;
}

std::int64_t FilterParams::steps() const {
  if (mode_ != FlowMode::Discrete) {
    throw std::logic_error("continuous flow has no step count");
  }
  return steps_;
}

double phi(const FilterParams& params, double z) {
  if (!(z >= 0.0)) throw std::domain_error("phi: eigenvalue argument must be >= 0");
  const double t = params.time();
  if (params.mode() == FlowMode::Continuous) {
    const double u = t * z;
    if (u < kSeriesThreshold) {
      return t * (1.0 - 0.5 * u + u * u / 6.0);
    }
    return -std::expm1(-u) / z;
  }
  const double eta = params.learning_rate();
  if (z > 1.0 / eta) {
    throw std::domain_error("phi: eigenvalue above 1/eta is outside the discrete stability range");
  }
  const auto m = params.steps();
  const double u = eta * z * static_cast<double>(m);
  if (u < kSeriesThreshold) {
    return t * (1.0 - 0.5 * static_cast<double>(m - 1) * eta * z);
  }
  return (1.0 - discrete_remainder(eta * z, m)) / z;
}

double psi(const FilterParams& params, double z) {
  if (!(z >= 0.0)) throw std::domain_error("psi: eigenvalue argument must be >= 0");
  if (params.mode() == FlowMode::Continuous) {
    return std::exp(-params.time() * z);
  }
  const double eta = params.learning_rate();
  if (z > 1.0 / eta) {
    throw std::domain_error("psi: eigenvalue above 1/eta is outside the discrete stability range");
  }
  return discrete_remainder(eta * z, params.steps());
}

Eigen::VectorXd apply_filter(const FilterParams& params, const Eigen::VectorXd& eigenvalues) {
  Eigen::VectorXd out(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    out[i] = phi(params, eigenvalues[i]);
  }
  return out;
}

}  // namespace kgflow
