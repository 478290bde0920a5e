#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csde/analysis.hpp"
#include "csde/integrators.hpp"
#include "csde/models.hpp"

namespace csde {

enum class ExperimentKind { trajectory, conservation, strong_convergence, weak_convergence };

std::string experiment_name(ExperimentKind kind);

/// A fully validated experiment description, parsed from the line-oriented
/// `key = value` config format (see parse_config).
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::trajectory;
  std::string model;
  ParamMap model_params;
  std::string damping = "0";
  std::vector<Scheme> schemes;
  double final_time = 1.0;
  std::vector<double> tau_list;  // descending; single entry for trajectory/conservation
  double tau_ref = 0.0;          // convergence experiments only
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  int truncation_k = 0;  // resolved default; see resolve()
  double fp_tolerance = 1e-13;
  int fp_max_iterations = 100;
  int quadrature_nodes = 16;
  std::vector<double> initial_value;
  std::vector<TestFunction> test_functions;
  std::string output_dir = ".";
  bool strong_error_sup = false;  // measure strong error as sup over common nodes

  bool operator==(const ExperimentConfig& other) const = default;

  PoissonSystem make_system() const;
  SolverConfig solver_config() const;
};

/// Parses and validates config text. Line-oriented `key = value`, `#`
/// comments, vectors as comma-separated lists, dyadic ladders as
/// `2^-5 .. 2^-12`. Numbers may use the forms 0.1, 1e-3, 2^-5, 2/3,
/// cos(x), sin(x), exp(x). Raises ConfigError naming the offending line.
ExperimentConfig parse_config(const std::string& text);

/// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& config);

/// Single numeric literal in the config grammar (exposed for tests).
double parse_config_number(const std::string& token);

}  // namespace csde
