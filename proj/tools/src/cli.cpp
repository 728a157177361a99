#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "config.hpp"
#include "kgflow/estimators.hpp"
#include "kgflow/filters.hpp"
#include "kgflow/harness.hpp"
#include "kgflow/inference.hpp"
#include "kgflow/kernels.hpp"
#include "kgflow/random.hpp"
#include "kgflow/verify.hpp"

namespace kgflow::cli {

namespace {

constexpr std::uint64_t kCliDataSalt = 0xC11DA7A;
constexpr std::uint64_t kCliBootstrapSalt = 0xC11B007;

struct SubOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  std::uint64_t grid = 1001;
  int bootstrap = 100;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* grid_opt = nullptr;
  CLI::Option* bootstrap_opt = nullptr;
};

void add_common(CLI::App* sub, SubOpts& opts, bool needs_config) {
  auto* config = sub->add_option("--config", opts.config_path, "experiment config file");
  if (needs_config) config->required();
  sub->add_option("--out", opts.out_dir, "output directory (default: current)");
  opts.seed_opt = sub->add_option("--seed", opts.seed, "master seed override");
  sub->add_option("--threads", opts.threads, "parallelism degree (0 = hardware)");
  opts.grid_opt = sub->add_option("--grid", opts.grid, "evaluation grid size (default 1001)");
  opts.bootstrap_opt =
      sub->add_option("--bootstrap", opts.bootstrap, "bootstrap replicates (default 100)");
}

FlowMode parse_mode(const std::string& text) {
  if (text == "continuous") return FlowMode::Continuous;
  if (text == "discrete") return FlowMode::Discrete;
  throw ConfigError("mode must be \"continuous\" or \"discrete\", got \"" + text + "\"");
}

std::vector<std::size_t> to_n_list(const std::vector<double>& values) {
  std::vector<std::size_t> out;
  for (double v : values) {
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw ConfigError("n_list entries must be positive integers");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

ExperimentConfig base_experiment(const ConfigFile& cfg, const std::string& section,
                                 const SubOpts& opts) {
  ExperimentConfig e;
  e.kernel = parse_kernel(cfg.get_string(section, "kernel", "min"));
  e.truth = parse_truth(cfg.get_string(section, "truth", "f1"));
  e.sigma = cfg.get_double(section, "sigma", 0.2);
  e.mode = parse_mode(cfg.get_string(section, "mode", "continuous"));
  e.learning_rate = cfg.get_double(section, "learning_rate", 0.01);
  e.repetitions = static_cast<int>(cfg.get_int(section, "repetitions", 200));
  e.bootstrap = opts.bootstrap_opt->count() > 0
                    ? opts.bootstrap
                    : static_cast<int>(cfg.get_int(section, "bootstrap", 100));
  e.coverage_q = cfg.get_double(section, "q", 0.95);
  e.seed = opts.seed_opt->count() > 0 ? opts.seed : cfg.get_uint(section, "seed", 0);
  e.grid_size = opts.grid_opt->count() > 0 ? static_cast<std::size_t>(opts.grid)
                                           : static_cast<std::size_t>(cfg.get_int(section, "grid", 1001));
  e.threads = opts.threads;
  return e;
}

std::filesystem::path prepare_out_dir(const SubOpts& opts) {
  std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  out << contents;
}

template <typename WriteCsv>
void emit(const std::filesystem::path& dir, const std::string& stem, WriteCsv&& write_table,
          const std::string& json_text) {
  std::ostringstream csv;
  write_table(csv);
  write_file(dir / (stem + ".csv"), csv.str());
  write_file(dir / (stem + ".json"), json_text);
  std::cout << "wrote " << (dir / (stem + ".csv")).string() << " and "
            << (dir / (stem + ".json")).string() << "\n";
}

int run_rate(const SubOpts& opts) {
  const ConfigFile cfg = ConfigFile::parse_file(opts.config_path);
  ExperimentConfig e = base_experiment(cfg, "rate", opts);
  e.n_list = to_n_list(cfg.get_number_list("rate", "n_list"));
  e.time_rule = TimeRule::power_law(cfg.get_double("rate", "c", 10.0),
                                    cfg.get_double("rate", "s", 1.5));
  const RateResult result = run_rate_experiment(e);
  const auto dir = prepare_out_dir(opts);
  emit(dir, experiment_file_stem("rate", e),
       [&](std::ostream& out) { write_rate_csv(out, e, result); }, rate_json(e, result));
  std::cout << "fitted log-log slope = " << result.fit.slope
            << " (intercept " << result.fit.intercept << ")\n";
  return 0;
}

int run_coverage(const SubOpts& opts) {
  const ConfigFile cfg = ConfigFile::parse_file(opts.config_path);
  ExperimentConfig e = base_experiment(cfg, "coverage", opts);
  e.n_list = to_n_list(cfg.get_number_list("coverage", "n_list"));
  if (cfg.has("coverage", "t_multipliers")) {
    e.t_multipliers = cfg.get_number_list("coverage", "t_multipliers");
  }
  e.t_opt_coeff = cfg.get_double("coverage", "t_opt_coeff", 0.1);
  const CoverageResult result = run_coverage_experiment(e);
  const auto dir = prepare_out_dir(opts);
  emit(dir, experiment_file_stem("coverage", e),
       [&](std::ostream& out) { write_coverage_csv(out, e, result); }, coverage_json(e, result));
  for (const CoverageCell& cell : result.cells) {
    std::cout << "n=" << cell.n << " t=" << cell.t << ": coverage " << cell.coverage
              << ", mean width " << cell.mean_width;
    if (cell.flagged_trials > 0) std::cout << " (" << cell.flagged_trials << " flagged)";
    std::cout << "\n";
  }
  return 0;
}

int run_saturation(const SubOpts& opts) {
  const ConfigFile cfg = ConfigFile::parse_file(opts.config_path);
  ExperimentConfig e = base_experiment(cfg, "saturation", opts);
  e.truth = parse_truth(cfg.get_string("saturation", "truth", "f2"));
  e.n_list = to_n_list(cfg.get_number_list("saturation", "n_list"));
  if (cfg.has("saturation", "epsilons")) {
    e.epsilons = cfg.get_number_list("saturation", "epsilons");
  }
  e.saturation_c = cfg.get_double("saturation", "c", 100.0);
  e.beta = cfg.get_double("saturation", "beta", 2.0);
  const SaturationResult result = run_saturation_comparison(e);
  const auto dir = prepare_out_dir(opts);
  emit(dir, experiment_file_stem("saturation", e),
       [&](std::ostream& out) { write_saturation_csv(out, e, result); },
       saturation_json(e, result));
  return 0;
}

int run_fit(const SubOpts& opts) {
  const ConfigFile cfg = ConfigFile::parse_file(opts.config_path);
  const ExperimentConfig e = base_experiment(cfg, "fit", opts);
  const auto n = static_cast<std::size_t>(cfg.get_int("fit", "n"));
  const double t = cfg.get_double("fit", "t");

  const Dataset data = generate_data(e.truth, n, e.sigma, mix_seed({e.seed, kCliDataSalt}));
  const auto cache = decompose(e.kernel, data.x);
  const FilterParams filter = e.mode == FlowMode::Continuous
                                  ? FilterParams::continuous(t)
                                  : FilterParams::discrete_time(e.learning_rate, t);
  const FittedEstimator est = fit_kgf_spectral(cache, data.y, filter);
  const auto grid = evaluation_grid(e.grid_size, data.x);
  const Eigen::VectorXd predictions = predict(est, grid);
  const double train_rss = residuals(est, data).squaredNorm();
  const double sup = sup_error(est, e.truth.fn(), grid);

  std::vector<std::string> comments;
  comments.push_back("experiment = fit");
  comments.push_back("kernel = " + e.kernel.describe());
  comments.push_back("truth = " + e.truth.name());
  comments.push_back("sigma = " + std::to_string(e.sigma));
  comments.push_back("mode = " +
                     std::string(e.mode == FlowMode::Continuous ? "continuous" : "discrete"));
  if (e.mode == FlowMode::Discrete) {
    comments.push_back("learning_rate = " + std::to_string(e.learning_rate));
  }
  comments.push_back("n = " + std::to_string(n));
  comments.push_back("t = " + std::to_string(filter.time()));
  comments.push_back("grid_size = " + std::to_string(e.grid_size));
  comments.push_back("seed = " + std::to_string(e.seed));
  std::vector<std::vector<double>> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    rows.push_back({grid[g], predictions[static_cast<Eigen::Index>(g)]});
  }

  nlohmann::json j{{"experiment", "fit"},
                   {"kernel", e.kernel.describe()},
                   {"truth", e.truth.name()},
                   {"mode", e.mode == FlowMode::Continuous ? "continuous" : "discrete"},
                   {"n", n},
                   {"t", filter.time()},
                   {"sigma", e.sigma},
                   {"seed", e.seed},
                   {"train_rss", train_rss},
                   {"sup_error", sup}};

  const auto dir = prepare_out_dir(opts);
  emit(dir, experiment_file_stem("fit", e),
       [&](std::ostream& out) { write_csv(out, comments, {"x", "fhat"}, rows); }, j.dump(2));
  std::cout << "train RSS = " << train_rss << ", sup error vs " << e.truth.name() << " = " << sup
            << "\n";
  return 0;
}

int run_band(const SubOpts& opts) {
  const ConfigFile cfg = ConfigFile::parse_file(opts.config_path);
  const ExperimentConfig e = base_experiment(cfg, "band", opts);
  const auto n = static_cast<std::size_t>(cfg.get_int("band", "n"));
  double t = 0.0;
  if (cfg.has("band", "t")) {
    t = cfg.get_double("band", "t");
  } else {
    const double multiplier = cfg.get_double("band", "t_multiplier", 1.0);
    const double coeff = cfg.get_double("band", "t_opt_coeff", 0.1);
    t = multiplier * coeff * static_cast<double>(n);
  }

  const Dataset data = generate_data(e.truth, n, e.sigma, mix_seed({e.seed, kCliDataSalt}));
  const auto cache = decompose(e.kernel, data.x);
  const FilterParams filter = e.mode == FlowMode::Continuous
                                  ? FilterParams::continuous(t)
                                  : FilterParams::discrete_time(e.learning_rate, t);
  const FittedEstimator est = fit_kgf_spectral(cache, data.y, filter);
  const Eigen::VectorXd eps = residuals(est, data);
  const auto grid = evaluation_grid(e.grid_size, data.x);
  const FilterVectorField field = filter_vectors(*cache, filter, grid);
  const CovarianceDiag cov = empirical_cov_diag(field, eps);
  std::vector<double> z = bootstrap_sup_samples(field, cov, eps, e.bootstrap,
                                                mix_seed({e.seed, kCliBootstrapSalt}));
  const double r = quantile(z, e.coverage_q);
  const BandResult band = build_band(est, cov, r, n, e.coverage_q, std::move(z));
  const bool covered = covers(band, e.truth.fn());
  const double mean_width = 2.0 * band.half_width.mean();

  nlohmann::json j{{"experiment", "band"},
                   {"kernel", e.kernel.describe()},
                   {"truth", e.truth.name()},
                   {"mode", e.mode == FlowMode::Continuous ? "continuous" : "discrete"},
                   {"n", n},
                   {"t", filter.time()},
                   {"sigma", e.sigma},
                   {"bootstrap", e.bootstrap},
                   {"q", e.coverage_q},
                   {"r", r},
                   {"seed", e.seed},
                   {"covers_truth", covered},
                   {"mean_width", mean_width}};

  std::vector<std::string> comments;
  comments.push_back("experiment = band");
  comments.push_back("kernel = " + e.kernel.describe());
  comments.push_back("truth = " + e.truth.name());
  comments.push_back("sigma = " + std::to_string(e.sigma));
  comments.push_back("grid_size = " + std::to_string(e.grid_size));

  const auto dir = prepare_out_dir(opts);
  emit(dir, experiment_file_stem("band", e),
       [&](std::ostream& out) { write_band_csv(out, band, n, filter, e.seed, comments); },
       j.dump(2));
  std::cout << "r = " << r << ", mean width = " << mean_width
            << (covered ? ", band covers the truth" : ", band misses the truth") << "\n";
  return 0;
}

int run_verify(const SubOpts& opts, bool quick) {
  VerifyOptions v;
  v.threads = opts.threads;
  v.quick = quick;
  if (opts.seed_opt->count() > 0) v.seed = opts.seed;
  const std::vector<CheckResult> results = run_verification(v);
  int failures = 0;
  for (const CheckResult& check : results) {
    const bool ok = check.pass;
    failures += ok ? 0 : 1;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << check.module << "." << check.name << ": "
              << check.detail << "\n";
  }
  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
            << " (" << results.size() << " run)\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"kernel gradient flow estimators, simultaneous confidence bands and experiments"};
  app.require_subcommand(1);

  SubOpts fit_opts, band_opts, rate_opts, coverage_opts, saturation_opts, verify_opts;
  bool verify_quick = false;

  CLI::App* fit = app.add_subcommand("fit", "fit one estimator and emit predictions");
  add_common(fit, fit_opts, true);
  CLI::App* band = app.add_subcommand("band", "fit and build a simultaneous confidence band");
  add_common(band, band_opts, true);
  CLI::App* rate = app.add_subcommand("rate-exp", "convergence-rate experiment");
  add_common(rate, rate_opts, true);
  CLI::App* coverage = app.add_subcommand("coverage-exp", "coverage and width experiment");
  add_common(coverage, coverage_opts, true);
  CLI::App* saturation = app.add_subcommand("saturation-exp", "KGF vs KRR comparison");
  add_common(saturation, saturation_opts, true);
  CLI::App* verify = app.add_subcommand("verify", "run every module's invariant suite");
  add_common(verify, verify_opts, false);
  verify->add_flag("--quick", verify_quick, "skip the multi-minute Monte-Carlo checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit)) return run_fit(fit_opts);
    if (app.got_subcommand(band)) return run_band(band_opts);
    if (app.got_subcommand(rate)) return run_rate(rate_opts);
    if (app.got_subcommand(coverage)) return run_coverage(coverage_opts);
    if (app.got_subcommand(saturation)) return run_saturation(saturation_opts);
    if (app.got_subcommand(verify)) return run_verify(verify_opts, verify_quick);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace kgflow::cli
