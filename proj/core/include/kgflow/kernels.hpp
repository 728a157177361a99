#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace kgflow {

/// Closed eigenfunction families for kernels given through a truncated
/// Mercer expansion. Both are orthonormal in L2([0,1]).
enum class EigenFamily {
  Sine,     // e_j(x) = sqrt(2) sin((2j-1) pi x / 2)
  Fourier,  // e_1 = 1, e_{2m} = sqrt(2) cos(2 pi m x), e_{2m+1} = sqrt(2) sin(2 pi m x)
};

double eigenfunction_value(EigenFamily family, std::size_t j, double x);

/// j-th Mercer eigenvalue of the min kernel on [0,1]: ((2j-1) pi / 2)^-2.
double min_eigenvalue(std::size_t j);
/// j-th Mercer eigenfunction of the min kernel: sqrt(2) sin((2j-1) pi x / 2).
double min_eigenfunction(std::size_t j, double x);

struct EigenPair {
  double value;
  std::function<double(double)> function;
};

/// Eigenvalue/eigenfunction pair of the min kernel; throws for j = 0.
EigenPair min_spectrum(std::size_t j);

/// A positive-definite kernel on [0,1], immutable after construction.
///
/// Variants: the min kernel min(x,x'); the periodic Matern-3/2 kernel
/// evaluated through the chordal distance sqrt(2 - 2 cos(2 pi |x-x'|));
/// and a kernel defined by a truncated Mercer expansion over one of the
/// closed eigenfunction families above.
class Kernel {
 public:
  static Kernel min();
  static Kernel periodic_matern32(double length_scale);
  /// Eigenvalues must be strictly decreasing and positive.
  static Kernel custom_mercer(std::vector<double> eigenvalues, EigenFamily family);

  /// k(x, x'); throws std::domain_error off [0,1].
  double operator()(double x, double xp) const;

  /// Gram matrix (k(x_i, x_j)); both triangles filled from one evaluation,
  /// so the stored matrix is exactly symmetric. Throws on empty input.
  Eigen::MatrixXd gram(const std::vector<double>& points) const;

  /// Upper bound for sup_x k(x,x).
  double kappa_sq() const { return kappa_sq_; }

  /// True when the Mercer spectrum is available in closed form (min kernel
  /// and custom-Mercer kernels; not the periodic Matern).
  bool has_spectrum() const;
  /// Largest truncation level the spectrum supports (unbounded for min).
  std::size_t max_spectrum_terms() const;
  double eigenvalue(std::size_t j) const;
  double eigenfunction(std::size_t j, double x) const;

  /// Short tag used in output file names ("min", "matern32", "mercer").
  const std::string& name() const { return name_; }
  /// Full descriptor, e.g. "matern32:h=0.433013".
  std::string describe() const;

 private:
  struct Min {};
  struct Matern32 {
    double h;
  };
  struct Mercer {
    std::vector<double> eigenvalues;
    EigenFamily family;
  };

  using Impl = std::variant<Min, Matern32, Mercer>;
  Kernel(Impl impl, double kappa_sq, std::string name);

  double eval_unchecked(double x, double xp) const;

  Impl impl_;
  double kappa_sq_;
  std::string name_;
};

/// Partial Mercer sum sum_{j<=N} lambda_j e_j(x) e_j(x'); requires a kernel
/// with an available spectrum.
double mercer_partial_sum(const Kernel& kernel, double x, double xp, std::size_t truncation);

/// Parses "min", "matern32:h=<float>" or "mercer:<csv-file>". The CSV holds a
/// "family,<sine|fourier>" line followed by one eigenvalue per line.
Kernel parse_kernel(const std::string& descriptor);

/// Throws std::domain_error unless x lies in [0,1].
void check_domain(double x);

}  // namespace kgflow
