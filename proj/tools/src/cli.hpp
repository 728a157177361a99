#pragma once

namespace kgflow::cli {

/// Entry point behind the kgflow executable; returns the process exit code
/// (0 success, 2 usage or config errors, 1 numerical failures).
int run(int argc, const char* const* argv);

}  // namespace kgflow::cli
