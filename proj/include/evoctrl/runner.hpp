#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "evoctrl/config.hpp"

namespace evoctrl {

/// Exit codes of the experiment runner.
enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
};

struct RunOptions {
  std::string command;                // simulate | synthesize | verify | convolve-probe | dp-check | oracle
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;  // overrides the config seed
};

/// Executes the named command deterministically given the seed, writes CSV
/// artifacts and a run manifest into out_dir, and returns the exit code.
int run(const RunOptions& options);

/// Variant for pre-parsed configs (testing).
int run(const Config& config, const RunOptions& options);

}  // namespace evoctrl
