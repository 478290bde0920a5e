#pragma once

#include <memory>
#include <string>
#include <vector>

#include "csde/discrete_gradient.hpp"
#include "csde/models.hpp"
#include "csde/noise.hpp"
#include "csde/time_grid.hpp"
#include "csde/types.hpp"

namespace csde {

enum class Scheme { conformal_exp, euler_maruyama, midpoint };

std::string scheme_name(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct SolverConfig {
  double fp_tolerance = 1e-13;  // mixed absolute/relative: ||dz|| <= tol (1 + ||z||)
  int fp_max_iterations = 100;
  TruncationLevel truncation{1};
  int quadrature_nodes = 16;
};

/// Result of one step: the new state plus implicit-solver diagnostics.
/// fp_residual is the scaled fixed-point residual ||psi(z) - z|| / (1 + ||z||)
/// measured after convergence; explicit schemes report zero.
struct StepRecord {
  Vec state;
  int fp_iterations = 0;
  double fp_residual = 0.0;
};

/// Half-interval damping integrals of the splitting scheme:
/// X0 = int_{t_{n+1/2}}^{t_n} gamma, X1 = int_{t_{n+1/2}}^{t_{n+1}} gamma.
struct DampingFactors {
  double X0 = 0.0;
  double X1 = 0.0;
};

DampingFactors damping_factors(const PoissonSystem& system, const TimeGrid& grid,
                               std::int64_t n);

/// Integral of gamma over [a, b]; exact via the antiderivative when present,
/// else 5-node Gauss-Legendre.
double damping_integral(const DampingFunction& damping, double a, double b);

/// One-step map with reusable workspace. `noise` points at M already
/// truncated increments for the step.
class OneStepScheme {
 public:
  virtual ~OneStepScheme() = default;
  virtual void step(const TimeGrid& grid, std::int64_t n, const Vec& y,
                    const double* noise, Vec& out, StepRecord* record) = 0;
};

std::unique_ptr<OneStepScheme> make_stepper(Scheme scheme, const PoissonSystem& system,
                                            const SolverConfig& cfg);

/// Single-step convenience entry points (the trajectory driver uses the
/// workspace-reusing class above).
StepRecord conformal_exponential_step(const PoissonSystem& system, const TimeGrid& grid,
                                      std::int64_t n, const Vec& y,
                                      const std::vector<double>& truncated_noise,
                                      const SolverConfig& cfg);
StepRecord euler_maruyama_step(const PoissonSystem& system, const TimeGrid& grid,
                               std::int64_t n, const Vec& y,
                               const std::vector<double>& truncated_noise,
                               const SolverConfig& cfg);
StepRecord midpoint_step(const PoissonSystem& system, const TimeGrid& grid,
                         std::int64_t n, const Vec& y,
                         const std::vector<double>& truncated_noise,
                         const SolverConfig& cfg);

/// The discrete solution y_0..y_N on a grid plus per-step solver diagnostics.
struct Trajectory {
  TimeGrid grid{1.0, 1};
  Scheme scheme = Scheme::conformal_exp;
  Mat states;                      // (N+1) x d, row n = y_n
  std::vector<int> fp_iterations;  // per step
  std::vector<double> fp_residuals;
  double max_fp_residual = 0.0;

  Vec state(std::int64_t n) const { return states.row(n).transpose(); }
};

/// Iterates the one-step map over the whole grid. Raw increments from
/// `noise` are truncated at cfg.truncation before every step. The first
/// failing step aborts with StepDivergedError/PathDomainError carrying its
/// index.
Trajectory integrate_path(const PoissonSystem& system, Scheme scheme, const TimeGrid& grid,
                          const NoisePath& noise, const Vec& y0, const SolverConfig& cfg);

/// Lean driver for Monte Carlo loops: runs the path with a per-step observer
/// `obs(n, y_{n+1}, record)` and no trajectory storage. The stepper is reused
/// across calls.
template <class Observer>
void integrate_observed(OneStepScheme& stepper, const PoissonSystem& system,
                        const TimeGrid& grid, const NoisePath& noise, const Vec& y0,
                        const SolverConfig& cfg, Observer&& obs);

namespace detail {

void check_path_inputs(const PoissonSystem& system, const TimeGrid& grid,
                       const NoisePath& noise, const Vec& y0);
void check_step_state(const Vec& y, std::int64_t n, const PoissonSystem& system);

}  // namespace detail

template <class Observer>
void integrate_observed(OneStepScheme& stepper, const PoissonSystem& system,
                        const TimeGrid& grid, const NoisePath& noise, const Vec& y0,
                        const SolverConfig& cfg, Observer&& obs) {
  detail::check_path_inputs(system, grid, noise, y0);
  const double tau = grid.step_size();
  const int channels = system.noise_channels;
  std::vector<double> truncated(static_cast<std::size_t>(channels));
  Vec y = y0;
  Vec next(system.dimension);
  StepRecord record;
  for (std::int64_t n = 0; n < grid.steps(); ++n) {
    for (int m = 0; m < channels; ++m) {
      truncated[static_cast<std::size_t>(m)] =
          truncate_increment(noise.increments(m, n), tau, cfg.truncation);
    }
    try {
      stepper.step(grid, n, y, truncated.data(), next, &record);
    } catch (const PathDomainError&) {
      throw;
    } catch (const std::domain_error& e) {
      throw PathDomainError(static_cast<int>(n), e.what());
    }
    detail::check_step_state(next, n, system);
    y.swap(next);
    obs(n, y, record);
  }
}

}  // namespace csde
