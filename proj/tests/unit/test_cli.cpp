#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "config.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("kgflow");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return kgflow::cli::run(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("kgflow_cli_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("config file parsing") {
  using kgflow::cli::ConfigFile;
  const ConfigFile cfg = ConfigFile::parse_string(
      "# comment\n"
      "[rate]\n"
      "kernel = \"min\"\n"
      "sigma = 0.2   # trailing comment\n"
      "n_list = [200, 400, 600]\n"
      "repetitions = 30\n"
      "\n"
      "[band]\n"
      "t = 12.5\n");
  CHECK(cfg.has_section("rate"));
  CHECK(cfg.get_string("rate", "kernel") == "min");
  CHECK(cfg.get_double("rate", "sigma") == 0.2);
  CHECK(cfg.get_int("rate", "repetitions") == 30);
  CHECK(cfg.get_number_list("rate", "n_list") == std::vector<double>{200, 400, 600});
  CHECK(cfg.get_double("band", "t") == 12.5);
  CHECK(cfg.get_double("band", "missing", 7.0) == 7.0);

  CHECK_THROWS_AS(cfg.get_double("rate", "kernel"), kgflow::cli::ConfigError);
  CHECK_THROWS_AS(cfg.get_string("rate", "absent"), kgflow::cli::ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[unterminated\n"), kgflow::cli::ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("keywithoutvalue\n"), kgflow::cli::ConfigError);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli({"--help"}) == 0);
  CHECK(run_cli({}) == 2);
  CHECK(run_cli({"unknown-subcommand"}) == 2);
  CHECK(run_cli({"band", "--config"}) == 2);            // missing value
  CHECK(run_cli({"band", "--config", "/nonexistent/x.toml"}) == 2);
  CHECK(run_cli({"rate-exp", "--bogus-flag"}) == 2);
}

TEST_CASE("band subcommand is deterministic under a fixed seed") {
  TempDir dir;
  const fs::path config = dir.path / "band.toml";
  write(config,
        "[band]\n"
        "kernel = \"matern32:h=0.4330127018922193\"\n"
        "truth = \"f3\"\n"
        "n = 60\n"
        "sigma = 0.2\n"
        "mode = \"continuous\"\n"
        "t = 12\n"
        "bootstrap = 25\n"
        "q = 0.95\n");

  const fs::path out_a = dir.path / "a";
  const fs::path out_b = dir.path / "b";
  REQUIRE(run_cli({"band", "--config", config.string(), "--seed", "7", "--grid", "201", "--out",
                   out_a.string()}) == 0);
  REQUIRE(run_cli({"band", "--config", config.string(), "--seed", "7", "--grid", "201", "--out",
                   out_b.string()}) == 0);

  const std::string csv_a = slurp(out_a / "band_matern32_continuous.csv");
  const std::string csv_b = slurp(out_b / "band_matern32_continuous.csv");
  REQUIRE(!csv_a.empty());
  CHECK(csv_a == csv_b);
  CHECK(slurp(out_a / "band_matern32_continuous.json") ==
        slurp(out_b / "band_matern32_continuous.json"));

  // metadata header carries n, t, mode, B, q, r and the seed
  CHECK(csv_a.find("# n = 60") != std::string::npos);
  CHECK(csv_a.find("# t = 12") != std::string::npos);
  CHECK(csv_a.find("# mode = continuous") != std::string::npos);
  CHECK(csv_a.find("# bootstrap = 25") != std::string::npos);
  CHECK(csv_a.find("# q = 0.95") != std::string::npos);
  CHECK(csv_a.find("# r = ") != std::string::npos);
  CHECK(csv_a.find("# seed = 7") != std::string::npos);
  CHECK(csv_a.find("x,center,lower,upper,half_width") != std::string::npos);

  // a different seed changes the band
  const fs::path out_c = dir.path / "c";
  REQUIRE(run_cli({"band", "--config", config.string(), "--seed", "8", "--grid", "201", "--out",
                   out_c.string()}) == 0);
  CHECK(slurp(out_c / "band_matern32_continuous.csv") != csv_a);
}

TEST_CASE("rate-exp subcommand emits a table and slope summary") {
  TempDir dir;
  const fs::path config = dir.path / "rate.toml";
  write(config,
        "[rate]\n"
        "kernel = \"min\"\n"
        "truth = \"f1\"\n"
        "sigma = 0.2\n"
        "mode = \"continuous\"\n"
        "c = 5\n"
        "s = 1.5\n"
        "n_list = [40, 80]\n"
        "repetitions = 2\n"
        "grid = 101\n");

  REQUIRE(run_cli({"rate-exp", "--config", config.string(), "--seed", "3", "--out",
                   dir.path.string()}) == 0);
  const std::string csv = slurp(dir.path / "rate_min_continuous.csv");
  REQUIRE(!csv.empty());
  CHECK(csv.rfind("# experiment = rate", 0) == 0);
  CHECK(csv.find("# seed = 3") != std::string::npos);
  CHECK(csv.find("# slope = ") != std::string::npos);
  // one data row per n
  CHECK(csv.find("\n40,") != std::string::npos);
  CHECK(csv.find("\n80,") != std::string::npos);
  CHECK(!slurp(dir.path / "rate_min_continuous.json").empty());
}

TEST_CASE("fit subcommand reports predictions") {
  TempDir dir;
  const fs::path config = dir.path / "fit.toml";
  write(config,
        "[fit]\n"
        "kernel = \"min\"\n"
        "truth = \"f1\"\n"
        "n = 40\n"
        "sigma = 0.1\n"
        "mode = \"discrete\"\n"
        "learning_rate = 0.01\n"
        "t = 5\n");
  REQUIRE(run_cli({"fit", "--config", config.string(), "--seed", "11", "--grid", "101", "--out",
                   dir.path.string()}) == 0);
  const std::string csv = slurp(dir.path / "fit_min_discrete.csv");
  CHECK(csv.find("x,fhat") != std::string::npos);
  CHECK(csv.find("# seed = 11") != std::string::npos);
  const std::string json = slurp(dir.path / "fit_min_discrete.json");
  CHECK(json.find("\"train_rss\"") != std::string::npos);
  CHECK(json.find("\"sup_error\"") != std::string::npos);
}

TEST_CASE("coverage-exp and saturation-exp subcommands run end to end") {
  TempDir dir;
  const fs::path cov = dir.path / "cov.toml";
  write(cov,
        "[coverage]\n"
        "kernel = \"matern32:h=0.4330127018922193\"\n"
        "truth = \"f3\"\n"
        "sigma = 0.2\n"
        "n_list = [50]\n"
        "t_multipliers = [0.5, 2]\n"
        "repetitions = 3\n"
        "bootstrap = 10\n"
        "grid = 101\n");
  REQUIRE(run_cli({"coverage-exp", "--config", cov.string(), "--seed", "4", "--out",
                   dir.path.string()}) == 0);
  const std::string csv = slurp(dir.path / "coverage_matern32_continuous.csv");
  CHECK(csv.find("n,t_multiplier,t,coverage,mean_width,valid_trials,flagged_trials") !=
        std::string::npos);
  CHECK(csv.find("\n50,0.5,") != std::string::npos);
  CHECK(csv.find("\n50,2,") != std::string::npos);

  const fs::path sat = dir.path / "sat.toml";
  write(sat,
        "[saturation]\n"
        "kernel = \"min\"\n"
        "truth = \"f2\"\n"
        "sigma = 0.2\n"
        "epsilons = [4]\n"
        "n_list = [60]\n"
        "repetitions = 2\n"
        "grid = 101\n");
  REQUIRE(run_cli({"saturation-exp", "--config", sat.string(), "--seed", "4", "--out",
                   dir.path.string()}) == 0);
  const std::string sat_csv = slurp(dir.path / "saturation_min_all.csv");
  CHECK(sat_csv.find("epsilon,n,t,mean_sup_kgf_continuous,mean_sup_kgf_discrete,mean_sup_krr") !=
        std::string::npos);
  CHECK(sat_csv.find("\n4,60,") != std::string::npos);
}

TEST_CASE("invalid experiment configuration exits with code 2") {
  TempDir dir;
  const fs::path config = dir.path / "bad.toml";
  write(config,
        "[rate]\n"
        "kernel = \"min\"\n"
        "n_list = [40]\n");  // a rate experiment needs two sample sizes
  CHECK(run_cli({"rate-exp", "--config", config.string(), "--out", dir.path.string()}) == 2);

  const fs::path config2 = dir.path / "bad_mode.toml";
  write(config2,
        "[rate]\n"
        "mode = \"sideways\"\n"
        "n_list = [40, 80]\n");
  CHECK(run_cli({"rate-exp", "--config", config2.string(), "--out", dir.path.string()}) == 2);
}
