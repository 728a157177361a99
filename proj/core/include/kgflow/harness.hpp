#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "kgflow/estimators.hpp"
#include "kgflow/filters.hpp"
#include "kgflow/inference.hpp"
#include "kgflow/kernels.hpp"

namespace kgflow {

enum class TruthTag { F1, F2, F3, CustomEigen, UserSupplied };

/// Ground-truth regression functions from the experiment suite.
class TruthFunction {
 public:
  /// sqrt(2) sin(2 pi x); source condition 1.5 for the min kernel.
  static TruthFunction f1();
  /// sqrt(2) sin(3 pi x / 2); an eigenfunction of the min kernel.
  static TruthFunction f2();
  /// Periodic Matern-3/2 section k_h(x, 0.5) with h = sqrt(3)/2.
  static TruthFunction f3();
  /// j-th min-kernel eigenfunction.
  static TruthFunction custom_eigen(std::size_t j);
  static TruthFunction user(std::string name, std::function<double(double)> fn);

  double operator()(double x) const { return fn_(x); }
  TruthTag tag() const { return tag_; }
  const std::string& name() const { return name_; }
  const std::function<double(double)>& fn() const { return fn_; }

 private:
  TruthFunction(TruthTag tag, std::string name, std::function<double(double)> fn)
      : tag_(tag), name_(std::move(name)), fn_(std::move(fn)) {}

  TruthTag tag_;
  std::string name_;
  std::function<double(double)> fn_;
};

/// Parses "f1", "f2", "f3" or "eigen:<j>".
TruthFunction parse_truth(const std::string& descriptor);

/// Training-time selection rules used by the experiments.
struct TimeRule {
  enum class Kind { PowerLaw, OptMultiple };

  static TimeRule power_law(double c, double s);                      // t = c n^{1/s}
  static TimeRule opt_multiple(double multiplier, double coeff = 0.1);  // t = m * coeff * n

  double time_for(std::size_t n) const;
  std::string describe() const;

  Kind kind = Kind::PowerLaw;
  double c = 1.0;
  double s = 1.0;
  double multiplier = 1.0;
  double t_opt_coeff = 0.1;
};

struct ExperimentConfig {
  Kernel kernel = Kernel::min();
  TruthFunction truth = TruthFunction::f1();
  double sigma = 0.2;
  FlowMode mode = FlowMode::Continuous;
  double learning_rate = 0.01;
  TimeRule time_rule = TimeRule::power_law(10.0, 1.5);
  std::vector<std::size_t> n_list;
  std::vector<double> t_multipliers = {0.5, 1.0, 2.0, 4.0};  // coverage cells
  double t_opt_coeff = 0.1;
  std::vector<double> epsilons = {4.0, 5.0, 6.0};  // saturation cells
  double saturation_c = 100.0;
  double beta = 2.0;  // eigenvalue decay rate entering the saturation time rule
  int repetitions = 200;
  int bootstrap = 100;
  double coverage_q = 0.95;
  std::uint64_t seed = 0;
  std::size_t grid_size = 1001;
  int threads = 0;  // 0 = hardware concurrency
};

/// x_i iid uniform on [0,1], y_i = f*(x_i) + sigma z_i; deterministic per seed.
Dataset generate_data(const TruthFunction& truth, std::size_t n, double sigma,
                      std::uint64_t seed);

struct RatePoint {
  std::size_t n = 0;
  double t = 0.0;
  double mean_log_error = 0.0;  // mean over trials of log sup-error
};

struct RateFit {
  std::vector<std::pair<double, double>> points;  // (log n, mean log error)
  double slope = 0.0;
  double intercept = 0.0;
};

struct RateResult {
  std::vector<RatePoint> table;
  RateFit fit;
};

RateResult run_rate_experiment(const ExperimentConfig& config);

struct CoverageCell {
  std::size_t n = 0;
  double t_multiplier = 0.0;
  double t = 0.0;
  double coverage = 0.0;    // fraction of valid trials whose band covers f*
  double mean_width = 0.0;  // mean over valid trials of the grid-average 2*Delta
  int valid_trials = 0;
  int flagged_trials = 0;  // degenerate-covariance trials, excluded
  std::vector<std::uint8_t> outcomes;  // covered indicator per valid trial, trial order
};

struct CoverageResult {
  std::vector<CoverageCell> cells;  // n-major, then t-multiplier
};

CoverageResult run_coverage_experiment(const ExperimentConfig& config);

struct SaturationCell {
  double epsilon = 0.0;
  std::size_t n = 0;
  double t = 0.0;
  double mean_sup_kgf_continuous = 0.0;
  double mean_sup_kgf_discrete = 0.0;
  double mean_sup_krr = 0.0;
};

struct SaturationResult {
  std::vector<SaturationCell> cells;  // epsilon-major, then n
};

/// KGF (continuous and discrete) against KRR at the matched ridge 1/t.
/// Requires truth F2 on the min kernel.
SaturationResult run_saturation_comparison(const ExperimentConfig& config);

/// OLS of log(error) on log(n); throws unless all values are positive and
/// at least two points are given. Returns (slope, intercept).
std::pair<double, double> fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// Runs fn(0..count-1) on a worker pool; results must be written to
/// preallocated slots so aggregation order stays deterministic.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

// ---- table / summary emission ----------------------------------------------

/// "<experiment>_<kernel>_<mode>" used for output file names.
std::string experiment_file_stem(const std::string& experiment, const ExperimentConfig& config);

/// CSV with "#"-prefixed header comments and 6-significant-digit values.
void write_csv(std::ostream& out, const std::vector<std::string>& header_comments,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

/// Resolved-config comment lines placed at the top of every output file.
std::vector<std::string> config_header_lines(const ExperimentConfig& config,
                                             const std::string& experiment);

void write_rate_csv(std::ostream& out, const ExperimentConfig& config, const RateResult& result);
void write_coverage_csv(std::ostream& out, const ExperimentConfig& config,
                        const CoverageResult& result);
void write_saturation_csv(std::ostream& out, const ExperimentConfig& config,
                          const SaturationResult& result);

/// Band CSV: x, center, lower, upper, half_width with n/t/mode/B/q/r/seed in
/// the comment header.
void write_band_csv(std::ostream& out, const BandResult& band, std::size_t n,
                    const FilterParams& filter, std::uint64_t seed,
                    const std::vector<std::string>& extra_comments = {});

/// JSON summaries mirror the CSV tables losslessly at full precision.
std::string rate_json(const ExperimentConfig& config, const RateResult& result);
std::string coverage_json(const ExperimentConfig& config, const CoverageResult& result);
std::string saturation_json(const ExperimentConfig& config, const SaturationResult& result);

}  // namespace kgflow
