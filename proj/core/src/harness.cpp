#include "kgflow/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "kgflow/random.hpp"

namespace kgflow {

namespace {

constexpr std::uint64_t kDataSalt = 0x00D47A;
constexpr std::uint64_t kBootstrapSalt = 0x00B007;

std::string mode_string(FlowMode mode) {
  return mode == FlowMode::Continuous ? "continuous" : "discrete";
}

FilterParams make_filter(const ExperimentConfig& config, double t) {
  return config.mode == FlowMode::Continuous
             ? FilterParams::continuous(t)
             : FilterParams::discrete_time(config.learning_rate, t);
}

std::pair<double, double> ols(const std::vector<std::pair<double, double>>& points) {
  const double count = static_cast<double>(points.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= count;
  mean_y /= count;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("regression points share one abscissa");
  const double slope = sxy / sxx;
  return {slope, mean_y - slope * mean_x};
}

std::string fmt6(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string full(double value) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += " ";
    if constexpr (std::is_floating_point_v<T>) {
      out += full(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

nlohmann::json config_json(const ExperimentConfig& config, const std::string& experiment) {
  nlohmann::json j{{"experiment", experiment},
                   {"kernel", config.kernel.describe()},
                   {"truth", config.truth.name()},
                   {"sigma", config.sigma},
                   {"n_list", config.n_list},
                   {"repetitions", config.repetitions},
                   {"grid_size", config.grid_size},
                   {"seed", config.seed}};
  if (experiment != "saturation") j["mode"] = mode_string(config.mode);
  if (config.mode == FlowMode::Discrete) j["learning_rate"] = config.learning_rate;
  if (experiment == "rate") j["time_rule"] = config.time_rule.describe();
  if (experiment == "coverage") {
    j["t_multipliers"] = config.t_multipliers;
    j["t_opt_coeff"] = config.t_opt_coeff;
    j["bootstrap"] = config.bootstrap;
    j["q"] = config.coverage_q;
  }
  if (experiment == "saturation") {
    j["epsilons"] = config.epsilons;
    j["c"] = config.saturation_c;
    j["beta"] = config.beta;
    j["learning_rate"] = config.learning_rate;
  }
  return j;
}

}  // namespace

TruthFunction TruthFunction::f1() {
  return TruthFunction(TruthTag::F1, "f1", [](double x) {
    return std::numbers::sqrt2 * std::sin(2.0 * std::numbers::pi * x);
  });
}

TruthFunction TruthFunction::f2() {
  return TruthFunction(TruthTag::F2, "f2", [](double x) {
    return std::numbers::sqrt2 * std::sin(1.5 * std::numbers::pi * x);
  });
}

TruthFunction TruthFunction::f3() {
  Kernel section = Kernel::periodic_matern32(0.5 * std::numbers::sqrt3);
  return TruthFunction(TruthTag::F3, "f3",
                       [section](double x) { return section(x, 0.5); });
}

TruthFunction TruthFunction::custom_eigen(std::size_t j) {
  if (j == 0) throw std::invalid_argument("eigenfunction index must be >= 1");
  return TruthFunction(TruthTag::CustomEigen, "eigen:" + std::to_string(j),
                       [j](double x) { return min_eigenfunction(j, x); });
}

TruthFunction TruthFunction::user(std::string name, std::function<double(double)> fn) {
  return TruthFunction(TruthTag::UserSupplied, std::move(name), std::move(fn));
}

TruthFunction parse_truth(const std::string& descriptor) {
  if (descriptor == "f1") return TruthFunction::f1();
  if (descriptor == "f2") return TruthFunction::f2();
  if (descriptor == "f3") return TruthFunction::f3();
  if (descriptor.rfind("eigen:", 0) == 0) {
    return TruthFunction::custom_eigen(std::stoul(descriptor.substr(6)));
  }
  throw std::invalid_argument("unknown truth descriptor \"" + descriptor + "\"");
}

TimeRule TimeRule::power_law(double c, double s) {
  if (!(c > 0.0) || !(s > 0.0)) throw std::invalid_argument("time rule needs c > 0 and s > 0");
  TimeRule rule;
  rule.kind = Kind::PowerLaw;
  rule.c = c;
  rule.s = s;
  return rule;
}

TimeRule TimeRule::opt_multiple(double multiplier, double coeff) {
  if (!(multiplier > 0.0) || !(coeff > 0.0)) {
    throw std::invalid_argument("time rule needs positive multiplier and coefficient");
  }
  TimeRule rule;
  rule.kind = Kind::OptMultiple;
  rule.multiplier = multiplier;
  rule.t_opt_coeff = coeff;
  return rule;
}

double TimeRule::time_for(std::size_t n) const {
  const double nd = static_cast<double>(n);
  switch (kind) {
    case Kind::PowerLaw:
      return c * std::pow(nd, 1.0 / s);
    case Kind::OptMultiple:
      return multiplier * t_opt_coeff * nd;
  }
  throw std::logic_error("unknown time rule");
}

std::string TimeRule::describe() const {
  if (kind == Kind::PowerLaw) {
    return "power:c=" + full(c) + ",s=" + full(s);
  }
  return "topt:multiplier=" + full(multiplier) + ",coeff=" + full(t_opt_coeff);
}

Dataset generate_data(const TruthFunction& truth, std::size_t n, double sigma,
                      std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample size must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(n);
  for (double& xi : x) xi = uniform(rng);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    y[static_cast<Eigen::Index>(i)] = truth(x[i]) + sigma * gauss(rng);
  }
  return Dataset(std::move(x), std::move(y), sigma);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& worker : pool) worker.join();
  if (error) std::rethrow_exception(error);
}

RateResult run_rate_experiment(const ExperimentConfig& config) {
  if (config.n_list.size() < 2) {
    throw std::invalid_argument("rate experiment needs at least two sample sizes");
  }
  if (config.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

  RateResult result;
  const auto trials = static_cast<std::size_t>(config.repetitions);
  for (std::size_t n : config.n_list) {
    const FilterParams filter = make_filter(config, config.time_rule.time_for(n));
    std::vector<double> log_errors(trials, 0.0);
    parallel_for(trials, config.threads, [&](std::size_t k) {
      const Dataset data =
          generate_data(config.truth, n, config.sigma, mix_seed({config.seed, n, k, kDataSalt}));
      const auto cache = decompose(config.kernel, data.x);
      const FittedEstimator est = fit_kgf_spectral(cache, data.y, filter);
      const double sup =
          sup_error(est, config.truth.fn(), evaluation_grid(config.grid_size, data.x));
      log_errors[k] = std::log(std::fmax(sup, 1e-300));
    });
    const double mean_log =
        std::accumulate(log_errors.begin(), log_errors.end(), 0.0) / static_cast<double>(trials);
    result.table.push_back(RatePoint{n, filter.time(), mean_log});
  }

  for (const RatePoint& point : result.table) {
    result.fit.points.emplace_back(std::log(static_cast<double>(point.n)), point.mean_log_error);
  }
  std::tie(result.fit.slope, result.fit.intercept) = ols(result.fit.points);
  return result;
}

CoverageResult run_coverage_experiment(const ExperimentConfig& config) {
  if (config.n_list.empty()) throw std::invalid_argument("coverage experiment needs sample sizes");
  if (config.t_multipliers.empty()) {
    throw std::invalid_argument("coverage experiment needs training-time multipliers");
  }
  if (config.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (config.bootstrap < 1) throw std::invalid_argument("bootstrap count must be >= 1");
  if (!(config.coverage_q > 0.0 && config.coverage_q < 1.0)) {
    throw std::invalid_argument("coverage level must lie in (0,1)");
  }

  const auto trials = static_cast<std::size_t>(config.repetitions);
  const std::size_t t_count = config.t_multipliers.size();

  CoverageResult result;
  for (std::size_t n : config.n_list) {
    // One dataset and eigendecomposition per trial, shared by every training
    // time of this sample size.
    std::vector<std::vector<int>> outcome(trials, std::vector<int>(t_count, 0));
    std::vector<std::vector<double>> width(trials, std::vector<double>(t_count, 0.0));
    parallel_for(trials, config.threads, [&](std::size_t k) {
      const Dataset data =
          generate_data(config.truth, n, config.sigma, mix_seed({config.seed, n, k, kDataSalt}));
      const auto cache = decompose(config.kernel, data.x);
      const FilterVectorBuilder builder(cache, evaluation_grid(config.grid_size, data.x));
      for (std::size_t ti = 0; ti < t_count; ++ti) {
        const double t = config.t_multipliers[ti] * config.t_opt_coeff * static_cast<double>(n);
        const FilterParams filter = make_filter(config, t);
        const FittedEstimator est = fit_kgf_spectral(cache, data.y, filter);
        const Eigen::VectorXd eps = residuals(est, data);
        const FilterVectorField field = builder.build(filter);
        const CovarianceDiag cov = empirical_cov_diag(field, eps);
        try {
          std::vector<double> z =
              bootstrap_sup_samples(field, cov, eps, config.bootstrap,
                                    mix_seed({config.seed, n, k, ti, kBootstrapSalt}));
          const double r = quantile(z, config.coverage_q);
          const BandResult band =
              build_band(est, cov, r, n, config.coverage_q, std::move(z));
          outcome[k][ti] = covers(band, config.truth.fn()) ? 1 : 0;
          width[k][ti] = 2.0 * band.half_width.mean();
        } catch (const DegenerateCovarianceError&) {
          outcome[k][ti] = -1;
        }
      }
    });

    for (std::size_t ti = 0; ti < t_count; ++ti) {
      CoverageCell cell;
      cell.n = n;
      cell.t_multiplier = config.t_multipliers[ti];
      cell.t = config.t_multipliers[ti] * config.t_opt_coeff * static_cast<double>(n);
      double width_sum = 0.0;
      int covered = 0;
      for (std::size_t k = 0; k < trials; ++k) {
        if (outcome[k][ti] < 0) {
          ++cell.flagged_trials;
          continue;
        }
        cell.outcomes.push_back(static_cast<std::uint8_t>(outcome[k][ti]));
        covered += outcome[k][ti];
        width_sum += width[k][ti];
        ++cell.valid_trials;
      }
      if (cell.valid_trials > 0) {
        cell.coverage = static_cast<double>(covered) / cell.valid_trials;
        cell.mean_width = width_sum / cell.valid_trials;
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

SaturationResult run_saturation_comparison(const ExperimentConfig& config) {
  if (config.truth.tag() != TruthTag::F2 || config.kernel.name() != "min") {
    throw std::invalid_argument("saturation comparison is defined for truth f2 on the min kernel");
  }
  if (config.n_list.empty()) throw std::invalid_argument("saturation experiment needs sample sizes");
  if (config.epsilons.empty()) throw std::invalid_argument("saturation experiment needs epsilons");
  if (config.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

  const auto trials = static_cast<std::size_t>(config.repetitions);
  const std::size_t e_count = config.epsilons.size();

  struct Sums {
    double con = 0.0, dis = 0.0, krr = 0.0;
  };
  SaturationResult result;
  result.cells.resize(e_count * config.n_list.size());

  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
    const std::size_t n = config.n_list[ni];
    std::vector<std::vector<Sums>> per_trial(trials, std::vector<Sums>(e_count));
    parallel_for(trials, config.threads, [&](std::size_t k) {
      const Dataset data =
          generate_data(config.truth, n, config.sigma, mix_seed({config.seed, n, k, kDataSalt}));
      const auto cache = decompose(config.kernel, data.x);
      const auto grid = evaluation_grid(config.grid_size, data.x);
      for (std::size_t ei = 0; ei < e_count; ++ei) {
        const double exponent = 1.0 / (1.0 / config.beta + config.epsilons[ei]);
        const double t = config.saturation_c * std::pow(static_cast<double>(n), exponent);
        const auto con = fit_kgf_spectral(cache, data.y, FilterParams::continuous(t));
        const auto dis =
            fit_kgf_spectral(cache, data.y, FilterParams::discrete_time(config.learning_rate, t));
        const auto krr = fit_krr(cache, data.y, 1.0 / t);
        per_trial[k][ei] = Sums{sup_error(con, config.truth.fn(), grid),
                                sup_error(dis, config.truth.fn(), grid),
                                sup_error(krr, config.truth.fn(), grid)};
      }
    });

    for (std::size_t ei = 0; ei < e_count; ++ei) {
      Sums total;
      for (std::size_t k = 0; k < trials; ++k) {
        total.con += per_trial[k][ei].con;
        total.dis += per_trial[k][ei].dis;
        total.krr += per_trial[k][ei].krr;
      }
      SaturationCell& cell = result.cells[ei * config.n_list.size() + ni];
      cell.epsilon = config.epsilons[ei];
      cell.n = n;
      const double exponent = 1.0 / (1.0 / config.beta + config.epsilons[ei]);
      cell.t = config.saturation_c * std::pow(static_cast<double>(n), exponent);
      const double r = static_cast<double>(trials);
      cell.mean_sup_kgf_continuous = total.con / r;
      cell.mean_sup_kgf_discrete = total.dis / r;
      cell.mean_sup_krr = total.krr / r;
    }
  }
  return result;
}

std::pair<double, double> fit_loglog_slope(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw std::invalid_argument("log-log fit needs at least two points");
  std::vector<std::pair<double, double>> logged;
  logged.reserve(points.size());
  for (const auto& [n, error] : points) {
    if (!(n > 0.0) || !(error > 0.0)) {
      throw std::invalid_argument("log-log fit needs positive sample sizes and errors");
    }
    logged.emplace_back(std::log(n), std::log(error));
  }
  return ols(logged);
}

std::string experiment_file_stem(const std::string& experiment, const ExperimentConfig& config) {
  const std::string mode =
      experiment == "saturation" ? std::string("all") : mode_string(config.mode);
  return experiment + "_" + config.kernel.name() + "_" + mode;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header_comments,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  for (const std::string& line : header_comments) out << "# " << line << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c > 0) out << ",";
    out << columns[c];
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << ",";
      out << fmt6(row[c]);
    }
    out << "\n";
  }
}

std::vector<std::string> config_header_lines(const ExperimentConfig& config,
                                             const std::string& experiment) {
  std::vector<std::string> lines;
  lines.push_back("experiment = " + experiment);
  lines.push_back("kernel = " + config.kernel.describe());
  lines.push_back("truth = " + config.truth.name());
  lines.push_back("sigma = " + full(config.sigma));
  if (experiment != "saturation") lines.push_back("mode = " + mode_string(config.mode));
  if (config.mode == FlowMode::Discrete || experiment == "saturation") {
    lines.push_back("learning_rate = " + full(config.learning_rate));
  }
  if (experiment == "rate") lines.push_back("time_rule = " + config.time_rule.describe());
  if (experiment == "coverage") {
    lines.push_back("t_multipliers = " + join(config.t_multipliers));
    lines.push_back("t_opt_coeff = " + full(config.t_opt_coeff));
    lines.push_back("bootstrap = " + std::to_string(config.bootstrap));
    lines.push_back("q = " + full(config.coverage_q));
  }
  if (experiment == "saturation") {
    lines.push_back("epsilons = " + join(config.epsilons));
    lines.push_back("c = " + full(config.saturation_c));
    lines.push_back("beta = " + full(config.beta));
  }
  lines.push_back("n_list = " + join(config.n_list));
  lines.push_back("repetitions = " + std::to_string(config.repetitions));
  lines.push_back("grid_size = " + std::to_string(config.grid_size));
  lines.push_back("seed = " + std::to_string(config.seed));
  return lines;
}

void write_rate_csv(std::ostream& out, const ExperimentConfig& config, const RateResult& result) {
  std::vector<std::vector<double>> rows;
  for (const RatePoint& point : result.table) {
    rows.push_back({static_cast<double>(point.n), point.t, point.mean_log_error});
  }
  write_csv(out, config_header_lines(config, "rate"), {"n", "t", "mean_log_sup_error"}, rows);
  out << "# slope = " << full(result.fit.slope) << ", intercept = " << full(result.fit.intercept)
      << "\n";
}

void write_coverage_csv(std::ostream& out, const ExperimentConfig& config,
                        const CoverageResult& result) {
  std::vector<std::vector<double>> rows;
  for (const CoverageCell& cell : result.cells) {
    rows.push_back({static_cast<double>(cell.n), cell.t_multiplier, cell.t, cell.coverage,
                    cell.mean_width, static_cast<double>(cell.valid_trials),
                    static_cast<double>(cell.flagged_trials)});
  }
  write_csv(out, config_header_lines(config, "coverage"),
            {"n", "t_multiplier", "t", "coverage", "mean_width", "valid_trials", "flagged_trials"},
            rows);
}

void write_saturation_csv(std::ostream& out, const ExperimentConfig& config,
                          const SaturationResult& result) {
  std::vector<std::vector<double>> rows;
  for (const SaturationCell& cell : result.cells) {
    rows.push_back({cell.epsilon, static_cast<double>(cell.n), cell.t,
                    cell.mean_sup_kgf_continuous, cell.mean_sup_kgf_discrete, cell.mean_sup_krr});
  }
  write_csv(out, config_header_lines(config, "saturation"),
            {"epsilon", "n", "t", "mean_sup_kgf_continuous", "mean_sup_kgf_discrete",
             "mean_sup_krr"},
            rows);
}

void write_band_csv(std::ostream& out, const BandResult& band, std::size_t n,
                    const FilterParams& filter, std::uint64_t seed,
                    const std::vector<std::string>& extra_comments) {
  std::vector<std::string> comments = extra_comments;
  comments.push_back("n = " + std::to_string(n));
  comments.push_back("t = " + full(filter.time()));
  comments.push_back("mode = " + mode_string(filter.mode()));
  if (filter.mode() == FlowMode::Discrete) {
    comments.push_back("learning_rate = " + full(filter.learning_rate()));
  }
  comments.push_back("bootstrap = " + std::to_string(band.bootstrap_count()));
  comments.push_back("q = " + full(band.coverage_level));
  comments.push_back("r = " + full(band.quantile_value));
  comments.push_back("seed = " + std::to_string(seed));

  std::vector<std::vector<double>> rows;
  for (std::size_t g = 0; g < band.grid.size(); ++g) {
    const auto i = static_cast<Eigen::Index>(g);
    rows.push_back({band.grid[g], band.center[i], band.center[i] - band.half_width[i],
                    band.center[i] + band.half_width[i], band.half_width[i]});
  }
  write_csv(out, comments, {"x", "center", "lower", "upper", "half_width"}, rows);
}

std::string rate_json(const ExperimentConfig& config, const RateResult& result) {
  nlohmann::json j;
  j["config"] = config_json(config, "rate");
  j["slope"] = result.fit.slope;
  j["intercept"] = result.fit.intercept;
  j["table"] = nlohmann::json::array();
  for (const RatePoint& point : result.table) {
    j["table"].push_back({{"n", point.n}, {"t", point.t}, {"mean_log_sup_error", point.mean_log_error}});
  }
  return j.dump(2);
}

std::string coverage_json(const ExperimentConfig& config, const CoverageResult& result) {
  nlohmann::json j;
  j["config"] = config_json(config, "coverage");
  j["cells"] = nlohmann::json::array();
  for (const CoverageCell& cell : result.cells) {
    j["cells"].push_back({{"n", cell.n},
                          {"t_multiplier", cell.t_multiplier},
                          {"t", cell.t},
                          {"coverage", cell.coverage},
                          {"mean_width", cell.mean_width},
                          {"valid_trials", cell.valid_trials},
                          {"flagged_trials", cell.flagged_trials}});
  }
  return j.dump(2);
}

std::string saturation_json(const ExperimentConfig& config, const SaturationResult& result) {
  nlohmann::json j;
  j["config"] = config_json(config, "saturation");
  j["cells"] = nlohmann::json::array();
  for (const SaturationCell& cell : result.cells) {
    j["cells"].push_back({{"epsilon", cell.epsilon},
                          {"n", cell.n},
                          {"t", cell.t},
                          {"mean_sup_kgf_continuous", cell.mean_sup_kgf_continuous},
                          {"mean_sup_kgf_discrete", cell.mean_sup_kgf_discrete},
                          {"mean_sup_krr", cell.mean_sup_krr}});
  }
  return j.dump(2);
}

}  // namespace kgflow
