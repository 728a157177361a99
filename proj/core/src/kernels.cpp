#include "kgflow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace kgflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kSqrt3 = std::numbers::sqrt3;

double matern32_radial(double r, double h) {
  const double u = kSqrt3 * r / h;
  return (1.0 + u) * std::exp(-u);
}

}  // namespace

void check_domain(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("input " + std::to_string(x) + " outside the domain [0,1]");
  }
}

double eigenfunction_value(EigenFamily family, std::size_t j, double x) {
  if (j == 0) throw std::invalid_argument("eigenfunction index must be >= 1");
  switch (family) {
    case EigenFamily::Sine:
      return kSqrt2 * std::sin(0.5 * static_cast<double>(2 * j - 1) * kPi * x);
    case EigenFamily::Fourier: {
      if (j == 1) return 1.0;
      const double m = static_cast<double>(j / 2);
      const double arg = 2.0 * kPi * m * x;
      return (j % 2 == 0) ? kSqrt2 * std::cos(arg) : kSqrt2 * std::sin(arg);
    }
  }
  throw std::logic_error("unknown eigenfunction family");
}

double min_eigenvalue(std::size_t j) {
  if (j == 0) throw std::invalid_argument("spectrum index must be >= 1");
  const double freq = 0.5 * static_cast<double>(2 * j - 1) * kPi;
  return 1.0 / (freq * freq);
}

double min_eigenfunction(std::size_t j, double x) {
  return eigenfunction_value(EigenFamily::Sine, j, x);
}

EigenPair min_spectrum(std::size_t j) {
  const double value = min_eigenvalue(j);
  return EigenPair{value, [j](double x) { return min_eigenfunction(j, x); }};
}

Kernel::Kernel(Impl impl, double kappa_sq, std::string name)
    : impl_(std::move(impl)), kappa_sq_(kappa_sq), name_(std::move(name)) {}

Kernel Kernel::min() { return Kernel(Min{}, 1.0, "min"); }

Kernel Kernel::periodic_matern32(double length_scale) {
  if (!(length_scale > 0.0)) {
    throw std::invalid_argument("periodic Matern length scale must be positive");
  }
  return Kernel(Matern32{length_scale}, 1.0, "matern32");
}

Kernel Kernel::custom_mercer(std::vector<double> eigenvalues, EigenFamily family) {
  if (eigenvalues.empty()) {
    throw std::invalid_argument("custom Mercer kernel needs at least one eigenvalue");
  }
  double kappa_sq = 0.0;
  for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
    const double lambda = eigenvalues[j];
    if (!(lambda > 0.0)) {
      throw std::invalid_argument("Mercer eigenvalues must be positive");
    }
    if (j > 0 && !(lambda < eigenvalues[j - 1])) {
      throw std::invalid_argument("Mercer eigenvalues must be strictly decreasing");
    }
    const double sup_sq = (family == EigenFamily::Fourier && j == 0) ? 1.0 : 2.0;
    kappa_sq += lambda * sup_sq;
  }
  return Kernel(Mercer{std::move(eigenvalues), family}, kappa_sq, "mercer");
}

double Kernel::eval_unchecked(double x, double xp) const {
  if (std::holds_alternative<Min>(impl_)) {
    return std::fmin(x, xp);
  }
  if (const auto* m = std::get_if<Matern32>(&impl_)) {
    // Chordal distance on the unit circle; the cosine argument is clamped so
    // rounding cannot push 2 - 2cos below zero.
    const double c = 2.0 - 2.0 * std::cos(2.0 * kPi * std::fabs(x - xp));
    const double r = std::sqrt(std::fmax(c, 0.0));
    return matern32_radial(r, m->h);
  }
  const auto& mercer = std::get<Mercer>(impl_);
  double sum = 0.0;
  for (std::size_t j = mercer.eigenvalues.size(); j >= 1; --j) {
    sum += mercer.eigenvalues[j - 1] * eigenfunction_value(mercer.family, j, x) *
           eigenfunction_value(mercer.family, j, xp);
  }
  return sum;
}

double Kernel::operator()(double x, double xp) const {
  check_domain(x);
  check_domain(xp);
  return eval_unchecked(x, xp);
}

Eigen::MatrixXd Kernel::gram(const std::vector<double>& points) const {
  if (points.empty()) throw std::invalid_argument("gram: empty point set");
  for (double x : points) check_domain(x);
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double value = eval_unchecked(points[i], points[j]);
      g(i, j) = value;
      g(j, i) = value;
    }
  }
  return g;
}

bool Kernel::has_spectrum() const { return !std::holds_alternative<Matern32>(impl_); }

std::size_t Kernel::max_spectrum_terms() const {
  if (std::holds_alternative<Min>(impl_)) return std::numeric_limits<std::size_t>::max();
  if (const auto* m = std::get_if<Mercer>(&impl_)) return m->eigenvalues.size();
  return 0;
}

double Kernel::eigenvalue(std::size_t j) const {
  if (j == 0) throw std::invalid_argument("spectrum index must be >= 1");
  if (std::holds_alternative<Min>(impl_)) return min_eigenvalue(j);
  if (const auto* m = std::get_if<Mercer>(&impl_)) {
    if (j > m->eigenvalues.size()) {
      throw std::invalid_argument("spectrum index beyond truncation level");
    }
    return m->eigenvalues[j - 1];
  }
  throw std::logic_error("kernel has no closed-form spectrum");
}

double Kernel::eigenfunction(std::size_t j, double x) const {
  if (std::holds_alternative<Min>(impl_)) return min_eigenfunction(j, x);
  if (const auto* m = std::get_if<Mercer>(&impl_)) {
    if (j == 0 || j > m->eigenvalues.size()) {
      throw std::invalid_argument("spectrum index beyond truncation level");
    }
    return eigenfunction_value(m->family, j, x);
  }
  throw std::logic_error("kernel has no closed-form spectrum");
}

std::string Kernel::describe() const {
  if (const auto* m = std::get_if<Matern32>(&impl_)) {
    std::ostringstream out;
    out << "matern32:h=" << m->h;
    return out.str();
  }
  if (const auto* m = std::get_if<Mercer>(&impl_)) {
    std::ostringstream out;
    out << "mercer:" << (m->family == EigenFamily::Sine ? "sine" : "fourier") << ":N="
        << m->eigenvalues.size();
    return out.str();
  }
  return "min";
}

double mercer_partial_sum(const Kernel& kernel, double x, double xp, std::size_t truncation) {
  if (!kernel.has_spectrum()) {
    throw std::logic_error("mercer_partial_sum: kernel has no closed-form spectrum");
  }
  if (truncation == 0) throw std::invalid_argument("truncation level must be >= 1");
  check_domain(x);
  check_domain(xp);
  const std::size_t terms = std::min(truncation, kernel.max_spectrum_terms());
  double sum = 0.0;
  for (std::size_t j = terms; j >= 1; --j) {
    sum += kernel.eigenvalue(j) * kernel.eigenfunction(j, x) * kernel.eigenfunction(j, xp);
  }
  return sum;
}

Kernel parse_kernel(const std::string& descriptor) {
  if (descriptor == "min") return Kernel::min();
  if (descriptor.rfind("matern32:", 0) == 0) {
    const std::string rest = descriptor.substr(9);
    if (rest.rfind("h=", 0) != 0) {
      throw std::invalid_argument("kernel descriptor \"" + descriptor +
                                  "\" should look like matern32:h=<float>");
    }
    std::size_t used = 0;
    const double h = std::stod(rest.substr(2), &used);
    if (used != rest.size() - 2) {
      throw std::invalid_argument("trailing characters in kernel descriptor \"" + descriptor + "\"");
    }
    return Kernel::periodic_matern32(h);
  }
  if (descriptor.rfind("mercer:", 0) == 0) {
    const std::string path = descriptor.substr(7);
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open Mercer spectrum file " + path);
    std::string line;
    EigenFamily family = EigenFamily::Sine;
    bool family_seen = false;
    std::vector<double> eigenvalues;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (line.rfind("family,", 0) == 0) {
        const std::string name = line.substr(7);
        if (name == "sine") {
          family = EigenFamily::Sine;
        } else if (name == "fourier") {
          family = EigenFamily::Fourier;
        } else {
          throw std::invalid_argument("unknown eigenfunction family \"" + name + "\"");
        }
        family_seen = true;
        continue;
      }
      eigenvalues.push_back(std::stod(line));
    }
    if (!family_seen) {
      throw std::invalid_argument("Mercer spectrum file " + path + " is missing a family,<name> line");
    }
    return Kernel::custom_mercer(std::move(eigenvalues), family);
  }
  throw std::invalid_argument("unknown kernel descriptor \"" + descriptor + "\"");
}

}  // namespace kgflow
