#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kgflow {

struct CheckResult {
  std::string module;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  int threads = 0;
  std::uint64_t seed = 0x5eed0001;
  bool quick = false;  // skip the multi-minute Monte-Carlo checks
};

/// Runs every module's named invariants and returns one result per check.
std::vector<CheckResult> run_verification(const VerifyOptions& options = {});

/// Median over seeds, per sample size, of the grid-max relative deviation of
/// the empirical covariance diagonal from its truncated-spectrum oracle
/// (min kernel, f1 truth, sigma = 0.2, t = n^{1/1.5}, continuous flow).
/// Shared between the verification suite and the acceptance run.
std::vector<double> covariance_consistency_medians(const std::vector<std::size_t>& n_list,
                                                   int seeds, int threads, std::uint64_t seed);

}  // namespace kgflow
