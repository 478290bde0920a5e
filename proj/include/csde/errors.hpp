#pragma once

#include <stdexcept>
#include <string>

namespace csde {

/// Implicit solver failed to reach the fixed-point tolerance within the
/// iteration budget. Signals that the step size is outside the contraction
/// regime of the scheme.
class StepDivergedError : public std::runtime_error {
 public:
  StepDivergedError(int step_index, const std::string& what)
      : std::runtime_error(what), step(step_index) {}
  int step;
};

/// A model evaluation left the model's admissible domain while integrating
/// step `step` (e.g. a Lotka-Volterra coordinate crossed zero).
class PathDomainError : public std::domain_error {
 public:
  PathDomainError(int step_index, const std::string& what)
      : std::domain_error(what), step(step_index) {}
  int step;
};

/// Invalid or incomplete experiment configuration. `line` is the 1-based
/// offending line of the config text, or -1 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line_number = -1)
      : std::runtime_error(line_number > 0
                               ? what + " (line " + std::to_string(line_number) + ")"
                               : what),
        line(line_number) {}
  int line;
};

/// Not enough usable data points for a fit.
class InsufficientDataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace csde
