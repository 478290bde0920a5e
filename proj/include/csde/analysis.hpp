#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csde/integrators.hpp"
#include "csde/models.hpp"
#include "csde/types.hpp"

namespace csde {

/// Smooth observable for weak-error measurement.
struct TestFunction {
  enum class Kind { coordinate, square, cos, sin };
  Kind kind = Kind::coordinate;
  int component = 1;  // 1-based

  double operator()(const Vec& y) const;
  std::string id() const;  // e.g. "sin_1"
  static TestFunction parse(const std::string& id);
  bool operator==(const TestFunction&) const = default;
};

/// Per-step-size Monte Carlo errors for one scheme/system, with the fitted
/// log-log slope. `errors[i]` is NaN when the level was marked invalid
/// (too many divergent samples).
struct ErrorTable {
  std::string scheme;
  std::string system;
  std::vector<double> step_sizes;  // descending
  std::vector<double> errors;
  std::vector<double> mc_stderr;
  std::vector<std::int64_t> divergent_samples;
  std::int64_t samples = 0;
  enum class Mode { strong, weak } mode = Mode::strong;
  double fitted_slope = 0.0;  // NaN when fewer than 3 usable levels
  std::optional<std::string> test_function;
  /// Largest state norm seen across every integrated path (reference and
  /// coarse); feeds the almost-sure-bound audits.
  double max_state_norm = 0.0;

  bool level_valid(std::size_t i) const;
};

struct MonteCarloOptions {
  int threads = 0;          // 0 = hardware concurrency
  bool sup_over_nodes = false;  // strong error: max over common nodes instead of final time
  /// A step-size level with more than this fraction of divergent samples is
  /// marked invalid instead of being averaged over survivors.
  double max_divergent_fraction = 1e-3;
};

/// Coupled strong-error study: per sample one fine path at tau_ref drives the
/// reference solution (conformal exponential scheme) and, coarsened, every
/// scheme run; error(tau) = sqrt(mean ||y_N - y_ref(T)||^2).
ErrorTable strong_error(const PoissonSystem& system, Scheme scheme,
                        const std::vector<double>& tau_list, double tau_ref,
                        std::int64_t samples, double final_time, const Vec& y0,
                        std::uint64_t seed, const SolverConfig& cfg,
                        const MonteCarloOptions& options = {});

/// Coupled weak-error study: error(tau) = |mean phi(y_N) - mean phi(y_ref)|
/// over the same samples, with the Monte Carlo standard error of the coupled
/// difference recorded per level.
ErrorTable weak_error(const PoissonSystem& system, Scheme scheme,
                      const std::vector<double>& tau_list, double tau_ref,
                      std::int64_t samples, double final_time, const Vec& y0,
                      const TestFunction& phi, std::uint64_t seed, const SolverConfig& cfg,
                      const MonteCarloOptions& options = {});

/// Least-squares slope of log2(error) against log2(tau). Non-positive or
/// non-finite errors are skipped; fewer than 3 surviving pairs raises
/// InsufficientDataError.
double fit_order(const std::vector<double>& step_sizes, const std::vector<double>& errors);

/// 1-sigma width of the fitted slope implied by per-level standard errors.
double fit_order_stderr(const std::vector<double>& step_sizes,
                        const std::vector<double>& errors,
                        const std::vector<double>& mc_stderr);

/// max_n |F(y_n) - exp(-p int_0^{t_n} gamma) F(y_0)| / (|F(y_0)| + eps)
/// for an invariant with homogeneity degree p.
double invariant_drift(const Trajectory& trajectory, const InvariantSpec& invariant,
                       const PoissonSystem& system);

}  // namespace csde
