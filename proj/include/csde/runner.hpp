#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "csde/config.hpp"

namespace csde {

/// CLI-level overrides applied on top of a parsed config.
struct RunOptions {
  std::optional<std::string> output_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  bool emit_plot_script = false;
  bool quiet = false;
};

/// Exit codes of the experiment runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInvalidLevel = 3;
inline constexpr int kExitPathFailure = 4;

/// Executes the experiment: writes manifest.txt and the per-experiment CSV
/// files into the output directory, returns the exit status.
int run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace csde
