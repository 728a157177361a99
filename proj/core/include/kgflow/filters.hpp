#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace kgflow {

enum class FlowMode { Continuous, Discrete };

/// Training-time parameters of a kernel gradient flow.
///
/// Continuous flows carry only the time t >= 0. Discrete flows carry a
/// learning rate eta > 0 and an integer step count m, with t = m * eta.
/// The stability requirement eta < 1/(2 kappa^2) involves the kernel bound
/// and is enforced where the kernel is known (the fitting routines).
class FilterParams {
 public:
  static FilterParams continuous(double t);
  static FilterParams discrete_steps(double learning_rate, std::int64_t steps);
  /// Quantizes t to floor(t / eta) steps.
  static FilterParams discrete_time(double learning_rate, double t);

  FlowMode mode() const { return mode_; }
  double time() const { return time_; }
  /// Discrete only; throws for continuous parameters.
  double learning_rate() const;
  std::int64_t steps() const;

 private:
  FilterParams(FlowMode mode, double time, double eta, std::int64_t steps)
      : mode_(mode), time_(time), learning_rate_(eta), steps_(steps) {}

  FlowMode mode_;
  double time_;
  double learning_rate_;
  std::int64_t steps_;
};

/// Filter function applied to eigenvalues of Gram/n.
///
/// Continuous: (1 - exp(-t z)) / z. Discrete: (1 - (1 - eta z)^m) / z with
/// m = t/eta. Both extend continuously to z = 0 with value t; a series branch
/// keeps full precision when t z underflows the subtraction. Throws for z < 0
/// and, in discrete mode, for z > 1/eta (outside the stability range).
double phi(const FilterParams& params, double z);

/// Remainder function 1 - z phi(z): exp(-t z) continuous, (1 - eta z)^m discrete.
double psi(const FilterParams& params, double z);

/// Element-wise phi over a spectrum (eigenvalues of Gram/n, clamped >= 0).
Eigen::VectorXd apply_filter(const FilterParams& params, const Eigen::VectorXd& eigenvalues);

}  // namespace kgflow
