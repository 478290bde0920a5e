#include "csde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "csde/errors.hpp"
#include "csde/parallel.hpp"

namespace csde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LadderLevel {
  double tau = 0.0;
  std::int64_t factor = 1;  // fine steps per coarse step
  TimeGrid grid{1.0, 1};
};

struct Ladder {
  TimeGrid ref_grid{1.0, 1};
  std::vector<LadderLevel> levels;
};

bool is_power_of_two(std::int64_t x) { return x > 0 && (x & (x - 1)) == 0; }

std::int64_t checked_step_count(double final_time, double tau, const char* what) {
  const double ratio = final_time / tau;
  const std::int64_t n = static_cast<std::int64_t>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
    throw std::invalid_argument(std::string(what) + " must divide the final time");
  }
  return n;
}

Ladder build_ladder(const std::vector<double>& tau_list, double tau_ref, double final_time) {
  if (tau_list.empty()) throw std::invalid_argument("empty step-size list");
  if (!(tau_ref > 0.0)) throw std::invalid_argument("reference step size must be positive");
  Ladder ladder;
  const std::int64_t n_ref = checked_step_count(final_time, tau_ref, "reference step size");
  ladder.ref_grid = TimeGrid(final_time, n_ref);
  for (double tau : tau_list) {
    const double ratio = tau / tau_ref;
    const std::int64_t factor = static_cast<std::int64_t>(std::llround(ratio));
    if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio ||
        !is_power_of_two(factor)) {
      throw std::invalid_argument("step size " + std::to_string(tau) +
                                  " is not a power-of-two multiple of the reference " +
                                  std::to_string(tau_ref));
    }
    LadderLevel level;
    level.tau = tau;
    level.factor = factor;
    level.grid = TimeGrid(final_time, n_ref / factor);
    ladder.levels.push_back(std::move(level));
  }
  return ladder;
}

struct FinalStateObserver {
  Vec final_state;
  double max_norm = 0.0;
  void operator()(std::int64_t, const Vec& y, const StepRecord&) {
    max_norm = std::max(max_norm, y.norm());
    final_state = y;
  }
};

/// Shared per-sample machinery of the strong and weak studies: couples one
/// fine path to the reference run and every coarse-level run.
class CoupledSampler {
 public:
  CoupledSampler(const PoissonSystem& system, Scheme scheme, const Ladder& ladder,
                 const Vec& y0, std::uint64_t seed, const SolverConfig& cfg,
                 bool keep_ref_trajectory)
      : system_(system), ladder_(ladder), y0_(y0), seed_(seed), cfg_(cfg),
        keep_ref_(keep_ref_trajectory),
        ref_stepper_(make_stepper(Scheme::conformal_exp, system, cfg)),
        scheme_stepper_(make_stepper(scheme, system, cfg)) {
    if (keep_ref_) {
      ref_states_.resize(ladder.ref_grid.steps() + 1, system.dimension);
    }
  }

  /// Runs the reference; returns false when the reference path failed.
  bool run_reference(std::int64_t sample) {
    sample_noise_into(ladder_.ref_grid, system_.noise_channels, seed_, sample, fine_);
    try {
      if (keep_ref_) {
        ref_states_.row(0) = y0_.transpose();
        FinalStateObserver obs;
        integrate_observed(*ref_stepper_, system_, ladder_.ref_grid, fine_, y0_, cfg_,
                           [&](std::int64_t n, const Vec& y, const StepRecord& r) {
                             ref_states_.row(n + 1) = y.transpose();
                             obs(n, y, r);
                           });
        ref_final_ = obs.final_state;
        max_norm_ = std::max(max_norm_, obs.max_norm);
      } else {
        FinalStateObserver obs;
        integrate_observed(*ref_stepper_, system_, ladder_.ref_grid, fine_, y0_, cfg_, obs);
        ref_final_ = obs.final_state;
        max_norm_ = std::max(max_norm_, obs.max_norm);
      }
    } catch (const StepDivergedError&) {
      return false;
    } catch (const PathDomainError&) {
      return false;
    }
    return true;
  }

  /// Runs the scheme at ladder level `l` on the coarsened path; returns false
  /// on a failed sample. `sup_sq` receives the max squared distance to the
  /// reference over common nodes when requested.
  bool run_level(std::size_t l, bool sup_over_nodes, double& final_sq, double& sup_sq) {
    const LadderLevel& level = ladder_.levels[l];
    coarsen_into(fine_, level.factor, coarse_);
    try {
      if (sup_over_nodes) {
        double worst = 0.0;
        FinalStateObserver obs;
        integrate_observed(*scheme_stepper_, system_, level.grid, coarse_, y0_, cfg_,
                           [&](std::int64_t n, const Vec& y, const StepRecord& r) {
                             const std::int64_t ref_row = (n + 1) * level.factor;
                             worst = std::max(
                                 worst,
                                 (y.transpose() - ref_states_.row(ref_row)).squaredNorm());
                             obs(n, y, r);
                           });
        max_norm_ = std::max(max_norm_, obs.max_norm);
        final_sq = (obs.final_state - ref_final_).squaredNorm();
        sup_sq = worst;
      } else {
        FinalStateObserver obs;
        integrate_observed(*scheme_stepper_, system_, level.grid, coarse_, y0_, cfg_, obs);
        max_norm_ = std::max(max_norm_, obs.max_norm);
        final_sq = (obs.final_state - ref_final_).squaredNorm();
        sup_sq = final_sq;
      }
    } catch (const StepDivergedError&) {
      return false;
    } catch (const PathDomainError&) {
      return false;
    }
    return true;
  }

  const Vec& reference_final() const { return ref_final_; }
  double max_norm() const { return max_norm_; }

  /// Level run that only needs the final state (weak error).
  bool run_level_final(std::size_t l, Vec& out) {
    const LadderLevel& level = ladder_.levels[l];
    coarsen_into(fine_, level.factor, coarse_);
    try {
      FinalStateObserver obs;
      integrate_observed(*scheme_stepper_, system_, level.grid, coarse_, y0_, cfg_, obs);
      max_norm_ = std::max(max_norm_, obs.max_norm);
      out = obs.final_state;
    } catch (const StepDivergedError&) {
      return false;
    } catch (const PathDomainError&) {
      return false;
    }
    return true;
  }

 private:
  const PoissonSystem& system_;
  const Ladder& ladder_;
  Vec y0_;
  std::uint64_t seed_;
  SolverConfig cfg_;
  bool keep_ref_;
  std::unique_ptr<OneStepScheme> ref_stepper_;
  std::unique_ptr<OneStepScheme> scheme_stepper_;
  NoisePath fine_;
  NoisePath coarse_;
  Mat ref_states_;
  Vec ref_final_;
  double max_norm_ = 0.0;
};

struct LevelStats {
  double mean = kNaN;
  double stderr_of_mean = kNaN;
  std::int64_t divergent = 0;
  std::int64_t survivors = 0;
};

/// Deterministic mean/stderr over the surviving per-sample values (NaN marks
/// a divergent sample). Reduction order is fixed by the sample index.
LevelStats reduce_level(const std::vector<double>& values) {
  LevelStats stats;
  std::vector<double> surviving;
  surviving.reserve(values.size());
  for (double v : values) {
    if (std::isnan(v)) {
      ++stats.divergent;
    } else {
      surviving.push_back(v);
    }
  }
  stats.survivors = static_cast<std::int64_t>(surviving.size());
  if (surviving.empty()) return stats;
  const double n = static_cast<double>(surviving.size());
  stats.mean = pairwise_sum(surviving) / n;
  if (surviving.size() > 1) {
    std::vector<double> sq(surviving.size());
    for (std::size_t i = 0; i < surviving.size(); ++i) {
      const double d = surviving[i] - stats.mean;
      sq[i] = d * d;
    }
    const double variance = pairwise_sum(sq) / (n - 1.0);
    stats.stderr_of_mean = std::sqrt(variance / n);
  } else {
    stats.stderr_of_mean = 0.0;
  }
  return stats;
}

void finish_table(ErrorTable& table, double max_divergent_fraction) {
  for (std::size_t l = 0; l < table.step_sizes.size(); ++l) {
    const double limit =
        max_divergent_fraction * static_cast<double>(table.samples);
    if (static_cast<double>(table.divergent_samples[l]) > limit) {
      table.errors[l] = kNaN;  // level invalid: too many divergent samples
      table.mc_stderr[l] = kNaN;
    }
  }
  try {
    table.fitted_slope = fit_order(table.step_sizes, table.errors);
  } catch (const InsufficientDataError&) {
    table.fitted_slope = kNaN;
  }
}

}  // namespace

double TestFunction::operator()(const Vec& y) const {
  const double v = y[component - 1];
  switch (kind) {
    case Kind::coordinate:
      return v;
    case Kind::square:
      return v * v;
    case Kind::cos:
      return std::cos(v);
    case Kind::sin:
      return std::sin(v);
  }
  throw std::logic_error("unknown test function kind");
}

std::string TestFunction::id() const {
  std::string prefix;
  switch (kind) {
    case Kind::coordinate:
      prefix = "coordinate";
      break;
    case Kind::square:
      prefix = "square";
      break;
    case Kind::cos:
      prefix = "cos";
      break;
    case Kind::sin:
      prefix = "sin";
      break;
  }
  return prefix + "_" + std::to_string(component);
}

TestFunction TestFunction::parse(const std::string& id) {
  const auto underscore = id.rfind('_');
  if (underscore == std::string::npos || underscore + 1 >= id.size()) {
    throw ConfigError("malformed test function '" + id +
                      "' (expected e.g. coordinate_1, square_2, cos_1, sin_3)");
  }
  TestFunction f;
  const std::string prefix = id.substr(0, underscore);
  if (prefix == "coordinate") {
    f.kind = Kind::coordinate;
  } else if (prefix == "square") {
    f.kind = Kind::square;
  } else if (prefix == "cos") {
    f.kind = Kind::cos;
  } else if (prefix == "sin") {
    f.kind = Kind::sin;
  } else {
    throw ConfigError("unknown test function kind '" + prefix + "'");
  }
  try {
    f.component = std::stoi(id.substr(underscore + 1));
  } catch (const std::exception&) {
    throw ConfigError("malformed test function component in '" + id + "'");
  }
  if (f.component < 1) throw ConfigError("test function component must be >= 1");
  return f;
}

bool ErrorTable::level_valid(std::size_t i) const {
  return i < errors.size() && std::isfinite(errors[i]);
}

ErrorTable strong_error(const PoissonSystem& system, Scheme scheme,
                        const std::vector<double>& tau_list, double tau_ref,
                        std::int64_t samples, double final_time, const Vec& y0,
                        std::uint64_t seed, const SolverConfig& cfg,
                        const MonteCarloOptions& options) {
  if (samples < 1) throw std::invalid_argument("strong error: need at least one sample");
  const Ladder ladder = build_ladder(tau_list, tau_ref, final_time);
  const std::size_t n_levels = ladder.levels.size();

  // Per-sample slots keep the reduction independent of scheduling.
  std::vector<std::vector<double>> sq_errors(
      n_levels, std::vector<double>(static_cast<std::size_t>(samples), kNaN));
  const int threads = resolve_thread_count(options.threads);
  std::vector<double> worker_max_norm(static_cast<std::size_t>(threads), 0.0);
  std::vector<std::unique_ptr<CoupledSampler>> workers(static_cast<std::size_t>(threads));

  parallel_for(samples, threads, [&](int worker, std::int64_t sample) {
    auto& ctx = workers[static_cast<std::size_t>(worker)];
    if (!ctx) {
      ctx = std::make_unique<CoupledSampler>(system, scheme, ladder, y0, seed, cfg,
                                             options.sup_over_nodes);
    }
    if (ctx->run_reference(sample)) {
      for (std::size_t l = 0; l < n_levels; ++l) {
        double final_sq = kNaN, sup_sq = kNaN;
        if (ctx->run_level(l, options.sup_over_nodes, final_sq, sup_sq)) {
          sq_errors[l][static_cast<std::size_t>(sample)] =
              options.sup_over_nodes ? sup_sq : final_sq;
        }
      }
    }
    worker_max_norm[static_cast<std::size_t>(worker)] =
        std::max(worker_max_norm[static_cast<std::size_t>(worker)], ctx->max_norm());
  });

  ErrorTable table;
  table.scheme = scheme_name(scheme);
  table.system = system.name;
  table.samples = samples;
  table.mode = ErrorTable::Mode::strong;
  for (std::size_t l = 0; l < n_levels; ++l) {
    const LevelStats stats = reduce_level(sq_errors[l]);
    table.step_sizes.push_back(ladder.levels[l].tau);
    table.divergent_samples.push_back(stats.divergent);
    if (stats.survivors == 0) {
      table.errors.push_back(kNaN);
      table.mc_stderr.push_back(kNaN);
      continue;
    }
    const double rms = std::sqrt(stats.mean);
    table.errors.push_back(rms);
    // Delta method: se(sqrt(m)) = se(m) / (2 sqrt(m)).
    table.mc_stderr.push_back(rms > 0.0 ? stats.stderr_of_mean / (2.0 * rms) : 0.0);
  }
  table.max_state_norm = *std::max_element(worker_max_norm.begin(), worker_max_norm.end());
  finish_table(table, options.max_divergent_fraction);
  return table;
}

ErrorTable weak_error(const PoissonSystem& system, Scheme scheme,
                      const std::vector<double>& tau_list, double tau_ref,
                      std::int64_t samples, double final_time, const Vec& y0,
                      const TestFunction& phi, std::uint64_t seed, const SolverConfig& cfg,
                      const MonteCarloOptions& options) {
  if (samples < 1) throw std::invalid_argument("weak error: need at least one sample");
  if (phi.component > system.dimension) {
    throw std::invalid_argument("test function component exceeds the system dimension");
  }
  const Ladder ladder = build_ladder(tau_list, tau_ref, final_time);
  const std::size_t n_levels = ladder.levels.size();

  // Coupled estimator: per-sample difference phi(y_tau) - phi(y_ref).
  std::vector<std::vector<double>> differences(
      n_levels, std::vector<double>(static_cast<std::size_t>(samples), kNaN));
  const int threads = resolve_thread_count(options.threads);
  std::vector<double> worker_max_norm(static_cast<std::size_t>(threads), 0.0);
  std::vector<std::unique_ptr<CoupledSampler>> workers(static_cast<std::size_t>(threads));

  parallel_for(samples, threads, [&](int worker, std::int64_t sample) {
    auto& ctx = workers[static_cast<std::size_t>(worker)];
    if (!ctx) {
      ctx = std::make_unique<CoupledSampler>(system, scheme, ladder, y0, seed, cfg, false);
    }
    if (ctx->run_reference(sample)) {
      const double phi_ref = phi(ctx->reference_final());
      Vec final_state;
      for (std::size_t l = 0; l < n_levels; ++l) {
        if (ctx->run_level_final(l, final_state)) {
          differences[l][static_cast<std::size_t>(sample)] = phi(final_state) - phi_ref;
        }
      }
    }
    worker_max_norm[static_cast<std::size_t>(worker)] =
        std::max(worker_max_norm[static_cast<std::size_t>(worker)], ctx->max_norm());
  });

  ErrorTable table;
  table.scheme = scheme_name(scheme);
  table.system = system.name;
  table.samples = samples;
  table.mode = ErrorTable::Mode::weak;
  table.test_function = phi.id();
  for (std::size_t l = 0; l < n_levels; ++l) {
    const LevelStats stats = reduce_level(differences[l]);
    table.step_sizes.push_back(ladder.levels[l].tau);
    table.divergent_samples.push_back(stats.divergent);
    if (stats.survivors == 0) {
      table.errors.push_back(kNaN);
      table.mc_stderr.push_back(kNaN);
      continue;
    }
    table.errors.push_back(std::abs(stats.mean));
    table.mc_stderr.push_back(stats.stderr_of_mean);
  }
  table.max_state_norm = *std::max_element(worker_max_norm.begin(), worker_max_norm.end());
  finish_table(table, options.max_divergent_fraction);
  return table;
}

double fit_order(const std::vector<double>& step_sizes, const std::vector<double>& errors) {
  if (step_sizes.size() != errors.size()) {
    throw std::invalid_argument("order fit: mismatched step-size and error lists");
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(step_sizes[i] > 0.0)) {
      throw std::invalid_argument("order fit: step sizes must be positive");
    }
    if (std::isfinite(errors[i]) && errors[i] > 0.0) {
      x.push_back(std::log2(step_sizes[i]));
      y.push_back(std::log2(errors[i]));
    }
  }
  if (x.size() < 3) {
    throw InsufficientDataError("order fit needs at least 3 usable (tau, error) pairs, got " +
                                std::to_string(x.size()));
  }
  const double n = static_cast<double>(x.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mean_x) * (x[i] - mean_x);
    sxy += (x[i] - mean_x) * (y[i] - mean_y);
  }
  if (sxx == 0.0) throw InsufficientDataError("order fit: degenerate step-size list");
  return sxy / sxx;
}

double fit_order_stderr(const std::vector<double>& step_sizes,
                        const std::vector<double>& errors,
                        const std::vector<double>& mc_stderr) {
  std::vector<double> x, sigma;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (std::isfinite(errors[i]) && errors[i] > 0.0) {
      x.push_back(std::log2(step_sizes[i]));
      sigma.push_back(mc_stderr[i] / (errors[i] * std::numbers::ln2));
    }
  }
  if (x.size() < 3) return kNaN;
  double mean_x = 0.0;
  for (double v : x) mean_x += v;
  mean_x /= static_cast<double>(x.size());
  double sxx = 0.0;
  for (double v : x) sxx += (v - mean_x) * (v - mean_x);
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = (x[i] - mean_x) / sxx;
    var += w * w * sigma[i] * sigma[i];
  }
  return std::sqrt(var);
}

double invariant_drift(const Trajectory& trajectory, const InvariantSpec& invariant,
                       const PoissonSystem& system) {
  if (!invariant.homogeneity_degree) {
    throw std::invalid_argument(
        "invariant drift: invariant has no homogeneity degree, no decay law applies");
  }
  const double p = *invariant.homogeneity_degree;
  const double f0 = invariant.value(trajectory.state(0));
  const double scale = std::abs(f0) + 1e-300;
  double worst = 0.0;
  double integral = 0.0;  // int_0^{t_n} gamma
  const std::int64_t n_steps = trajectory.grid.steps();
  for (std::int64_t n = 1; n <= n_steps; ++n) {
    integral += damping_integral(system.damping, trajectory.grid.node(n - 1),
                                 trajectory.grid.node(n));
    const double predicted = std::exp(-p * integral) * f0;
    const double value = invariant.value(trajectory.state(n));
    worst = std::max(worst, std::abs(value - predicted) / scale);
  }
  return worst;
}

}  // namespace csde
