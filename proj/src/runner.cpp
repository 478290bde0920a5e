#include "csde/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "csde/analysis.hpp"
#include "csde/errors.hpp"
#include "csde/parallel.hpp"
#include "csde/version.hpp"

namespace csde {

namespace {

namespace fs = std::filesystem;

std::string fmt(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return std::string(buffer);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out.good()) throw std::runtime_error("failed writing " + path.string());
}

Vec to_vec(const std::vector<double>& values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

std::string convergence_csv(const ErrorTable& table) {
  std::ostringstream out;
  out << "tau,error,mc_stderr,divergent_samples\n";
  for (std::size_t i = 0; i < table.step_sizes.size(); ++i) {
    out << fmt(table.step_sizes[i]) << ',' << fmt(table.errors[i]) << ','
        << fmt(table.mc_stderr[i]) << ',' << table.divergent_samples[i] << "\n";
  }
  out << "# fitted_slope = " << fmt(table.fitted_slope) << "\n";
  return out.str();
}

std::string trajectory_csv(const Trajectory& trajectory, std::int64_t rows) {
  std::ostringstream out;
  const Eigen::Index d = trajectory.states.cols();
  out << "n,t";
  for (Eigen::Index j = 0; j < d; ++j) out << ",y_" << (j + 1);
  out << ",fp_iters,fp_residual\n";
  for (std::int64_t n = 0; n <= rows; ++n) {
    out << n << ',' << fmt(trajectory.grid.node(n));
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << fmt(trajectory.states(n, j));
    if (n == 0) {
      out << ",0,0\n";
    } else {
      out << ',' << trajectory.fp_iterations[static_cast<std::size_t>(n - 1)] << ','
          << fmt(trajectory.fp_residuals[static_cast<std::size_t>(n - 1)]) << "\n";
    }
  }
  return out.str();
}

std::string conservation_csv(const Trajectory& trajectory, const InvariantSpec& invariant,
                             const PoissonSystem& system) {
  const double p = invariant.homogeneity_degree.value();
  const double f0 = invariant.value(trajectory.state(0));
  const double scale = std::abs(f0) + 1e-300;
  std::ostringstream out;
  out << "n,t,invariant_value,predicted_value,rel_deviation\n";
  double integral = 0.0;
  for (std::int64_t n = 0; n <= trajectory.grid.steps(); ++n) {
    if (n > 0) {
      integral += damping_integral(system.damping, trajectory.grid.node(n - 1),
                                   trajectory.grid.node(n));
    }
    const double value = invariant.value(trajectory.state(n));
    const double predicted = std::exp(-p * integral) * f0;
    out << n << ',' << fmt(trajectory.grid.node(n)) << ',' << fmt(value) << ','
        << fmt(predicted) << ',' << fmt(std::abs(value - predicted) / scale) << "\n";
  }
  return out.str();
}

double trajectory_max_norm(const Trajectory& trajectory) {
  double worst = 0.0;
  for (std::int64_t n = 0; n <= trajectory.grid.steps(); ++n) {
    worst = std::max(worst, trajectory.states.row(n).norm());
  }
  return worst;
}

struct RunOutputs {
  std::vector<std::string> files;
  std::vector<std::pair<std::string, double>> slopes;  // per convergence file
  double max_state_norm = 0.0;
  int exit_code = kExitOk;
  std::string failure;
};

std::string plot_script(const ExperimentConfig& cfg, const RunOutputs& outputs) {
  std::ostringstream out;
  out << "# gnuplot commands for the CSV files of this run\n";
  out << "set datafile separator ','\n";
  const bool convergence = cfg.experiment == ExperimentKind::strong_convergence ||
                           cfg.experiment == ExperimentKind::weak_convergence;
  if (convergence) {
    out << "set logscale xy\nset xlabel 'tau'\nset ylabel 'error'\n";
    out << "plot ";
    for (std::size_t i = 0; i < outputs.files.size(); ++i) {
      if (i > 0) out << ", \\\n     ";
      out << "'" << outputs.files[i] << "' using 1:2 with linespoints title '"
          << outputs.files[i] << "'";
    }
    out << "\n";
  } else {
    out << "set xlabel 't'\n";
    out << "plot ";
    for (std::size_t i = 0; i < outputs.files.size(); ++i) {
      if (i > 0) out << ", \\\n     ";
      out << "'" << outputs.files[i] << "' using 2:3 with lines title '" << outputs.files[i]
          << "'";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentConfig cfg = config;
  if (options.output_dir) cfg.output_dir = *options.output_dir;
  if (options.seed) cfg.seed = *options.seed;

  const auto start = std::chrono::steady_clock::now();
  RunOutputs outputs;
  PoissonSystem system;
  try {
    system = cfg.make_system();

    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    const SolverConfig solver = cfg.solver_config();
    MonteCarloOptions mc;
    mc.threads = options.threads;
    mc.sup_over_nodes = cfg.strong_error_sup;

    switch (cfg.experiment) {
      case ExperimentKind::trajectory:
      case ExperimentKind::conservation: {
        const bool conservation = cfg.experiment == ExperimentKind::conservation;
        if (conservation) {
          bool usable = false;
          for (const auto& invariant : system.invariants) {
            usable = usable || invariant.homogeneity_degree.has_value();
          }
          if (!usable) {
            throw ConfigError("model " + cfg.model +
                              " has no invariant with a homogeneity degree to audit");
          }
        }
        const double tau = cfg.tau_list.front();
        const TimeGrid grid(cfg.final_time,
                            static_cast<std::int64_t>(std::llround(cfg.final_time / tau)));
        const NoisePath noise = sample_noise(grid, system.noise_channels, cfg.seed, 0);
        const Vec y0 = to_vec(cfg.initial_value);
        for (Scheme scheme : cfg.schemes) {
          try {
            const Trajectory trajectory =
                integrate_path(system, scheme, grid, noise, y0, solver);
            outputs.max_state_norm =
                std::max(outputs.max_state_norm, trajectory_max_norm(trajectory));
            if (conservation) {
              std::size_t audited = 0;
              for (const auto& invariant : system.invariants) {
                if (!invariant.homogeneity_degree) continue;
                std::string name = "conservation_" + scheme_name(scheme);
                if (++audited > 1 || system.invariants.size() > 1) {
                  name += "_" + invariant.label;
                }
                name += ".csv";
                write_file(out_dir / name, conservation_csv(trajectory, invariant, system));
                outputs.files.push_back(name);
              }
            } else {
              const std::string name = "trajectory_" + scheme_name(scheme) + ".csv";
              write_file(out_dir / name, trajectory_csv(trajectory, grid.steps()));
              outputs.files.push_back(name);
            }
          } catch (const StepDivergedError& e) {
            outputs.exit_code = kExitPathFailure;
            outputs.failure = e.what();
          } catch (const PathDomainError& e) {
            outputs.exit_code = kExitPathFailure;
            outputs.failure = e.what();
          }
        }
        break;
      }
      case ExperimentKind::strong_convergence: {
        const Vec y0 = to_vec(cfg.initial_value);
        for (Scheme scheme : cfg.schemes) {
          const ErrorTable table =
              strong_error(system, scheme, cfg.tau_list, cfg.tau_ref, cfg.samples,
                           cfg.final_time, y0, cfg.seed, solver, mc);
          const std::string name = "strong_" + scheme_name(scheme) + ".csv";
          write_file(out_dir / name, convergence_csv(table));
          outputs.files.push_back(name);
          outputs.slopes.emplace_back(name, table.fitted_slope);
          outputs.max_state_norm = std::max(outputs.max_state_norm, table.max_state_norm);
          for (std::size_t l = 0; l < table.step_sizes.size(); ++l) {
            if (!table.level_valid(l)) outputs.exit_code = std::max(outputs.exit_code, kExitInvalidLevel);
          }
        }
        break;
      }
      case ExperimentKind::weak_convergence: {
        const Vec y0 = to_vec(cfg.initial_value);
        for (Scheme scheme : cfg.schemes) {
          for (const TestFunction& phi : cfg.test_functions) {
            const ErrorTable table =
                weak_error(system, scheme, cfg.tau_list, cfg.tau_ref, cfg.samples,
                           cfg.final_time, y0, phi, cfg.seed, solver, mc);
            const std::string name =
                "weak_" + scheme_name(scheme) + "_" + phi.id() + ".csv";
            write_file(out_dir / name, convergence_csv(table));
            outputs.files.push_back(name);
            outputs.slopes.emplace_back(name, table.fitted_slope);
            outputs.max_state_norm = std::max(outputs.max_state_norm, table.max_state_norm);
            for (std::size_t l = 0; l < table.step_sizes.size(); ++l) {
              if (!table.level_valid(l)) outputs.exit_code = std::max(outputs.exit_code, kExitInvalidLevel);
            }
          }
        }
        break;
      }
    }

    if (options.emit_plot_script && !outputs.files.empty()) {
      write_file(out_dir / "plots.gp", plot_script(cfg, outputs));
      outputs.files.push_back("plots.gp");
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream manifest;
    manifest << "# run manifest\n";
    manifest << "version = " << kVersion << "\n";
    manifest << "threads = " << resolve_thread_count(options.threads) << "\n";
    manifest << "wall_seconds = " << fmt(wall) << "\n";
    manifest << "max_state_norm = " << fmt(outputs.max_state_norm) << "\n";
    for (const auto& [file, slope] : outputs.slopes) {
      manifest << "fitted_slope " << file << " = " << fmt(slope) << "\n";
    }
    for (const std::string& file : outputs.files) {
      manifest << "output = " << file << "\n";
    }
    if (!outputs.failure.empty()) manifest << "failure = " << outputs.failure << "\n";
    manifest << "\n# configuration\n" << render_config(cfg);
    write_file(out_dir / "manifest.txt", manifest.str());
  } catch (const ConfigError& e) {
    if (!options.quiet) std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  if (!options.quiet) {
    for (const auto& [file, slope] : outputs.slopes) {
      std::cout << file << ": fitted slope " << fmt(slope) << "\n";
    }
    if (!outputs.failure.empty()) std::cerr << "run failed: " << outputs.failure << "\n";
  }
  return outputs.exit_code;
}

}  // namespace csde
