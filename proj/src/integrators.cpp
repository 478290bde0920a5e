#include "csde/integrators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "csde/errors.hpp"

namespace csde {

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::conformal_exp:
      return "conformal_exp";
    case Scheme::euler_maruyama:
      return "euler_maruyama";
    case Scheme::midpoint:
      return "midpoint";
  }
  throw std::logic_error("unknown scheme");
}

Scheme parse_scheme(const std::string& name) {
  if (name == "conformal_exp") return Scheme::conformal_exp;
  if (name == "euler_maruyama") return Scheme::euler_maruyama;
  if (name == "midpoint") return Scheme::midpoint;
  throw ConfigError("unknown scheme '" + name +
                    "' (expected conformal_exp, euler_maruyama or midpoint)");
}

double damping_integral(const DampingFunction& damping, double a, double b) {
  if (damping.antiderivative) return damping.antiderivative(b) - damping.antiderivative(a);
  // 5-node Gauss-Legendre on [a, b]; exact enough for the smooth damping
  // shapes this library targets over half-step intervals.
  static const double nodes[5] = {-0.906179845938663993, -0.538469310105683091, 0.0,
                                  0.538469310105683091, 0.906179845938663993};
  static const double weights[5] = {0.236926885056189088, 0.478628670499366468,
                                    0.568888888888888889, 0.478628670499366468,
                                    0.236926885056189088};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int q = 0; q < 5; ++q) {
    sum += weights[q] * damping.gamma(mid + half * nodes[q]);
  }
  return half * sum;
}

DampingFactors damping_factors(const PoissonSystem& system, const TimeGrid& grid,
                               std::int64_t n) {
  if (n < 0 || n >= grid.steps()) {
    throw std::invalid_argument("damping factors: step index out of range");
  }
  const double mid = grid.midpoint(n);
  return DampingFactors{damping_integral(system.damping, mid, grid.node(n)),
                        damping_integral(system.damping, mid, grid.node(n + 1))};
}

namespace {

struct FixedPointResult {
  int evaluations = 0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
};

// Fixed-point iteration z <- psi(z) with the mixed convergence test
// ||z^{j+1} - z^j|| <= tol (1 + ||z^j||), followed by one extra residual
// evaluation that must itself pass the (scaled) tolerance.
template <class Psi>
FixedPointResult solve_fixed_point(Psi&& psi, Vec& z, Vec& tmp, double tolerance,
                                   int max_evaluations) {
  FixedPointResult result;
  while (result.evaluations < max_evaluations) {
    const double scale = 1.0 + z.norm();
    psi(z, tmp);
    ++result.evaluations;
    const double increment = (tmp - z).norm();
    z.swap(tmp);
    if (!(increment <= tolerance * scale)) continue;
    if (result.evaluations >= max_evaluations) break;
    psi(z, tmp);
    ++result.evaluations;
    const double residual = (tmp - z).norm() / (1.0 + z.norm());
    if (residual <= tolerance) {
      result.residual = residual;
      result.converged = true;
      return result;
    }
    z.swap(tmp);  // the extra evaluation is the better iterate; keep going
  }
  return result;
}

class ConformalExpStepper final : public OneStepScheme {
 public:
  ConformalExpStepper(const PoissonSystem& system, const SolverConfig& cfg)
      : system_(system), cfg_(cfg) {
    const int d = system.dimension;
    zhat_.resize(d);
    z_.resize(d);
    tmp_.resize(d);
    acc_.resize(d);
    g_.resize(d);
    scratch_.resize(d);
    b_.resize(d, d);
    rules_.reserve(system.hamiltonians.size());
    for (const auto& h : system.hamiltonians) {
      rules_.push_back(GradientRule::for_hamiltonian(h, cfg.quadrature_nodes));
    }
  }

  void step(const TimeGrid& grid, std::int64_t n, const Vec& y, const double* noise,
            Vec& out, StepRecord* record) override {
    const double tau = grid.step_size();
    const DampingFactors xf = damping_factors(system_, grid, n);
    zhat_ = std::exp(xf.X0) * y;
    z_ = zhat_;
    auto psi = [&](const Vec& zin, Vec& zout) {
      discrete_gradient(system_.hamiltonians[0], zhat_, zin, rules_[0], g_, scratch_);
      acc_ = tau * g_;
      for (int m = 1; m <= system_.noise_channels; ++m) {
        const std::size_t mu = static_cast<std::size_t>(m);
        discrete_gradient(system_.hamiltonians[mu], zhat_, zin, rules_[mu], g_, scratch_);
        acc_ += noise[m - 1] * g_;
      }
      scratch_ = 0.5 * (zhat_ + zin);
      system_.structure_matrix(scratch_, b_);
      zout = zhat_;
      zout.noalias() += b_ * acc_;
    };
    const FixedPointResult fp =
        solve_fixed_point(psi, z_, tmp_, cfg_.fp_tolerance, cfg_.fp_max_iterations);
    if (!fp.converged) {
      throw StepDivergedError(
          static_cast<int>(n),
          "conformal exponential step " + std::to_string(n) +
              ": fixed point did not reach tolerance within " +
              std::to_string(cfg_.fp_max_iterations) + " evaluations");
    }
    out = std::exp(-xf.X1) * z_;
    if (record != nullptr) {
      record->state = out;
      record->fp_iterations = fp.evaluations;
      record->fp_residual = fp.residual;
    }
  }

 private:
  const PoissonSystem& system_;
  SolverConfig cfg_;
  std::vector<GradientRule> rules_;
  Vec zhat_, z_, tmp_, acc_, g_, scratch_;
  Mat b_;
};

class EulerMaruyamaStepper final : public OneStepScheme {
 public:
  EulerMaruyamaStepper(const PoissonSystem& system, const SolverConfig& cfg)
      : system_(system), cfg_(cfg),
        analytic_(system.diffusion_jacobians.size() ==
                  static_cast<std::size_t>(system.noise_channels)) {
    const int d = system.dimension;
    g_.resize(d);
    f_.resize(d);
    b_.resize(d, d);
    jac_.resize(d, d);
  }

  void step(const TimeGrid& grid, std::int64_t n, const Vec& y, const double* noise,
            Vec& out, StepRecord* record) override {
    if (!system_.in_domain(y)) {
      throw std::domain_error("state outside the admissible domain of " + system_.name);
    }
    const double tau = grid.step_size();
    const double t = grid.node(n);
    system_.structure_matrix(y, b_);
    system_.hamiltonians[0].gradient(y, g_);
    out = y;
    out.noalias() += tau * (b_ * g_);
    out -= (tau * system_.damping.gamma(t)) * y;
    for (int m = 1; m <= system_.noise_channels; ++m) {
      system_.hamiltonians[static_cast<std::size_t>(m)].gradient(y, g_);
      f_.noalias() = b_ * g_;
      if (analytic_) {
        system_.diffusion_jacobians[static_cast<std::size_t>(m - 1)](y, jac_);
      } else {
        diffusion_jacobian_fd(system_, m, y, jac_);
      }
      out.noalias() += (0.5 * tau) * (jac_ * f_);  // Stratonovich-to-Ito correction
      out.noalias() += noise[m - 1] * f_;
    }
    if (record != nullptr) {
      record->state = out;
      record->fp_iterations = 0;
      record->fp_residual = 0.0;
    }
  }

 private:
  const PoissonSystem& system_;
  SolverConfig cfg_;
  bool analytic_;
  Vec g_, f_;
  Mat b_, jac_;
};

class MidpointStepper final : public OneStepScheme {
 public:
  MidpointStepper(const PoissonSystem& system, const SolverConfig& cfg)
      : system_(system), cfg_(cfg) {
    const int d = system.dimension;
    z_.resize(d);
    tmp_.resize(d);
    ybar_.resize(d);
    acc_.resize(d);
    g_.resize(d);
    b_.resize(d, d);
  }

  void step(const TimeGrid& grid, std::int64_t n, const Vec& y, const double* noise,
            Vec& out, StepRecord* record) override {
    const double tau = grid.step_size();
    const double gamma_mid = system_.damping.gamma(grid.midpoint(n));
    z_ = y;
    auto psi = [&](const Vec& cur, Vec& next) {
      ybar_ = 0.5 * (y + cur);
      if (!system_.in_domain(ybar_)) {
        throw std::domain_error("midpoint state outside the admissible domain of " +
                                system_.name);
      }
      system_.hamiltonians[0].gradient(ybar_, g_);
      acc_ = tau * g_;
      for (int m = 1; m <= system_.noise_channels; ++m) {
        system_.hamiltonians[static_cast<std::size_t>(m)].gradient(ybar_, g_);
        acc_ += noise[m - 1] * g_;
      }
      system_.structure_matrix(ybar_, b_);
      next = y;
      next.noalias() += b_ * acc_;
      next -= (tau * gamma_mid) * ybar_;
    };
    const FixedPointResult fp =
        solve_fixed_point(psi, z_, tmp_, cfg_.fp_tolerance, cfg_.fp_max_iterations);
    if (!fp.converged) {
      throw StepDivergedError(static_cast<int>(n),
                              "midpoint step " + std::to_string(n) +
                                  ": fixed point did not reach tolerance within " +
                                  std::to_string(cfg_.fp_max_iterations) + " evaluations");
    }
    out = z_;
    if (record != nullptr) {
      record->state = out;
      record->fp_iterations = fp.evaluations;
      record->fp_residual = fp.residual;
    }
  }

 private:
  const PoissonSystem& system_;
  SolverConfig cfg_;
  Vec z_, tmp_, ybar_, acc_, g_;
  Mat b_;
};

}  // namespace

std::unique_ptr<OneStepScheme> make_stepper(Scheme scheme, const PoissonSystem& system,
                                            const SolverConfig& cfg) {
  switch (scheme) {
    case Scheme::conformal_exp:
      return std::make_unique<ConformalExpStepper>(system, cfg);
    case Scheme::euler_maruyama:
      return std::make_unique<EulerMaruyamaStepper>(system, cfg);
    case Scheme::midpoint:
      return std::make_unique<MidpointStepper>(system, cfg);
  }
  throw std::logic_error("unknown scheme");
}

namespace {

StepRecord run_single_step(Scheme scheme, const PoissonSystem& system, const TimeGrid& grid,
                           std::int64_t n, const Vec& y,
                           const std::vector<double>& truncated_noise,
                           const SolverConfig& cfg) {
  if (truncated_noise.size() != static_cast<std::size_t>(system.noise_channels)) {
    throw std::invalid_argument("step: expected " + std::to_string(system.noise_channels) +
                                " noise increments, got " +
                                std::to_string(truncated_noise.size()));
  }
  auto stepper = make_stepper(scheme, system, cfg);
  StepRecord record;
  Vec out(system.dimension);
  stepper->step(grid, n, y, truncated_noise.data(), out, &record);
  return record;
}

}  // namespace

StepRecord conformal_exponential_step(const PoissonSystem& system, const TimeGrid& grid,
                                      std::int64_t n, const Vec& y,
                                      const std::vector<double>& truncated_noise,
                                      const SolverConfig& cfg) {
  return run_single_step(Scheme::conformal_exp, system, grid, n, y, truncated_noise, cfg);
}

StepRecord euler_maruyama_step(const PoissonSystem& system, const TimeGrid& grid,
                               std::int64_t n, const Vec& y,
                               const std::vector<double>& truncated_noise,
                               const SolverConfig& cfg) {
  return run_single_step(Scheme::euler_maruyama, system, grid, n, y, truncated_noise, cfg);
}

StepRecord midpoint_step(const PoissonSystem& system, const TimeGrid& grid, std::int64_t n,
                         const Vec& y, const std::vector<double>& truncated_noise,
                         const SolverConfig& cfg) {
  return run_single_step(Scheme::midpoint, system, grid, n, y, truncated_noise, cfg);
}

namespace detail {

void check_path_inputs(const PoissonSystem& system, const TimeGrid& grid,
                       const NoisePath& noise, const Vec& y0) {
  if (!(noise.grid == grid)) {
    throw std::invalid_argument("integrate: noise path grid does not match the time grid");
  }
  if (noise.channels != system.noise_channels) {
    throw std::invalid_argument("integrate: noise path has " +
                                std::to_string(noise.channels) + " channels, system needs " +
                                std::to_string(system.noise_channels));
  }
  if (y0.size() != system.dimension) {
    throw std::invalid_argument("integrate: initial value dimension mismatch");
  }
  if (!y0.allFinite()) {
    throw std::invalid_argument("integrate: initial value has non-finite entries");
  }
  if (!system.in_domain(y0)) {
    throw PathDomainError(0, "initial value outside the admissible domain of " + system.name);
  }
}

void check_step_state(const Vec& y, std::int64_t n, const PoissonSystem& system) {
  if (!y.allFinite()) {
    throw StepDivergedError(static_cast<int>(n),
                            "step " + std::to_string(n) + " produced a non-finite state");
  }
  if (!system.in_domain(y)) {
    throw PathDomainError(static_cast<int>(n),
                          "step " + std::to_string(n) +
                              " left the admissible domain of " + system.name);
  }
}

}  // namespace detail

Trajectory integrate_path(const PoissonSystem& system, Scheme scheme, const TimeGrid& grid,
                          const NoisePath& noise, const Vec& y0, const SolverConfig& cfg) {
  Trajectory trajectory;
  trajectory.grid = grid;
  trajectory.scheme = scheme;
  const std::int64_t n_steps = grid.steps();
  trajectory.states.resize(n_steps + 1, system.dimension);
  trajectory.states.row(0) = y0.transpose();
  trajectory.fp_iterations.assign(static_cast<std::size_t>(n_steps), 0);
  trajectory.fp_residuals.assign(static_cast<std::size_t>(n_steps), 0.0);
  auto stepper = make_stepper(scheme, system, cfg);
  integrate_observed(*stepper, system, grid, noise, y0, cfg,
                     [&](std::int64_t n, const Vec& y, const StepRecord& record) {
                       trajectory.states.row(n + 1) = y.transpose();
                       trajectory.fp_iterations[static_cast<std::size_t>(n)] =
                           record.fp_iterations;
                       trajectory.fp_residuals[static_cast<std::size_t>(n)] =
                           record.fp_residual;
                       trajectory.max_fp_residual =
                           std::max(trajectory.max_fp_residual, record.fp_residual);
                     });
  return trajectory;
}

}  // namespace csde
