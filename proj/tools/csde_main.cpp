#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "csde/config.hpp"
#include "csde/errors.hpp"
#include "csde/models.hpp"
#include "csde/runner.hpp"
#include "csde/version.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream content;
  content << in.rdbuf();
  return content.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiment harness for conformal integrators of linearly damped "
               "stochastic Poisson systems"};
  app.set_version_flag("--version", std::string(csde::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  csde::RunOptions options;
  std::string output_dir;
  std::uint64_t seed_override = 0;

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "config file")->required();
  CLI::Option* out_opt = run->add_option("--output-dir", output_dir, "override output_dir");
  run->add_option("--threads", options.threads, "worker threads (0 = all cores)");
  CLI::Option* seed_opt = run->add_option("--seed", seed_override, "override the seed");
  run->add_flag("--plot-script", options.emit_plot_script,
                "also write gnuplot commands for the CSV outputs");

  CLI::App* validate = app.add_subcommand("validate", "parse and validate a config");
  validate->add_option("config", config_path, "config file")->required();

  CLI::App* list_models = app.add_subcommand("list-models", "print the built-in models");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_models->parsed()) {
      for (const std::string& name : csde::model_names()) {
        std::cout << name << "\n    " << csde::model_description(name) << "\n";
      }
      return 0;
    }
    const std::string text = read_file(config_path);
    if (validate->parsed()) {
      csde::parse_config(text);
      std::cout << "ok\n";
      return 0;
    }
    csde::ExperimentConfig config = csde::parse_config(text);
    if (*out_opt) options.output_dir = output_dir;
    if (*seed_opt) options.seed = seed_override;
    return csde::run_experiment(config, options);
  } catch (const csde::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return csde::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
