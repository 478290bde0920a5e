#include "csde/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "csde/errors.hpp"

namespace csde {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> parts;
  std::string current;
  std::stringstream stream(s);
  while (std::getline(stream, current, delim)) parts.push_back(trim(current));
  return parts;
}

double parse_plain_number(const std::string& token) {
  char* end = nullptr;
  const double value = std::strtod(token.c_str(), &end);
  if (end == nullptr || end == token.c_str() || *end != '\0') {
    throw ConfigError("malformed number '" + token + "'");
  }
  return value;
}

std::string format_number(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return std::string(buffer);
}

std::int64_t parse_integer(const std::string& token, const char* what) {
  const double value = parse_config_number(token);
  const double rounded = std::nearbyint(value);
  if (!(std::abs(value - rounded) <= 0.0)) {
    throw ConfigError(std::string(what) + " must be an integer, got '" + token + "'");
  }
  return static_cast<std::int64_t>(rounded);
}

std::vector<double> parse_vector(const std::string& value) {
  std::vector<double> out;
  for (const std::string& token : split(value, ',')) {
    if (token.empty()) throw ConfigError("empty entry in list '" + value + "'");
    out.push_back(parse_config_number(token));
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

// `A .. B` expands to the dyadic ladder A, A/2, ..., B.
std::vector<double> parse_tau_list(const std::string& value) {
  const auto dots = value.find("..");
  if (dots == std::string::npos) return parse_vector(value);
  const double first = parse_config_number(trim(value.substr(0, dots)));
  const double last = parse_config_number(trim(value.substr(dots + 2)));
  if (!(first > 0.0) || !(last > 0.0) || !(first > last)) {
    throw ConfigError("ladder '" + value + "' must run from a larger to a smaller step size");
  }
  std::vector<double> out;
  double tau = first;
  while (tau > last * (1.0 + 1e-12)) {
    out.push_back(tau);
    tau *= 0.5;  // exact in binary floating point
  }
  if (std::abs(tau - last) > 1e-12 * last) {
    throw ConfigError("ladder '" + value + "' endpoints are not a power-of-two apart");
  }
  out.push_back(tau);
  return out;
}

}  // namespace

double parse_config_number(const std::string& raw) {
  const std::string token = trim(raw);
  if (token.empty()) throw ConfigError("empty number");
  for (const char* fn : {"cos", "sin", "exp", "sqrt"}) {
    const std::string prefix = std::string(fn) + "(";
    if (token.rfind(prefix, 0) == 0 && token.back() == ')') {
      const double inner =
          parse_config_number(token.substr(prefix.size(), token.size() - prefix.size() - 1));
      if (std::string(fn) == "cos") return std::cos(inner);
      if (std::string(fn) == "sin") return std::sin(inner);
      if (std::string(fn) == "exp") return std::exp(inner);
      return std::sqrt(inner);
    }
  }
  const auto caret = token.find('^');
  if (caret != std::string::npos) {
    const double base = parse_plain_number(trim(token.substr(0, caret)));
    const double exponent = parse_plain_number(trim(token.substr(caret + 1)));
    return std::pow(base, exponent);
  }
  // A leading sign or exponent marker is part of a plain literal; any later
  // slash is a rational constant such as 2/3.
  const auto slash = token.find('/');
  if (slash != std::string::npos) {
    const double numerator = parse_plain_number(trim(token.substr(0, slash)));
    const double denominator = parse_plain_number(trim(token.substr(slash + 1)));
    if (denominator == 0.0) throw ConfigError("division by zero in '" + token + "'");
    return numerator / denominator;
  }
  return parse_plain_number(token);
}

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::trajectory:
      return "trajectory";
    case ExperimentKind::conservation:
      return "conservation";
    case ExperimentKind::strong_convergence:
      return "strong_convergence";
    case ExperimentKind::weak_convergence:
      return "weak_convergence";
  }
  throw std::logic_error("unknown experiment kind");
}

namespace {

ExperimentKind parse_experiment(const std::string& value) {
  if (value == "trajectory") return ExperimentKind::trajectory;
  if (value == "conservation") return ExperimentKind::conservation;
  if (value == "strong_convergence") return ExperimentKind::strong_convergence;
  if (value == "weak_convergence") return ExperimentKind::weak_convergence;
  throw ConfigError("unknown experiment '" + value + "'");
}

bool is_power_of_two_ratio(double coarse, double fine) {
  const double ratio = coarse / fine;
  const std::int64_t factor = static_cast<std::int64_t>(std::llround(ratio));
  if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9 * ratio) return false;
  return (factor & (factor - 1)) == 0;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, int> key_line;
  bool has_experiment = false, has_model = false, has_final_time = false,
       has_initial_value = false, has_tau = false, has_tau_list = false;

  std::istringstream stream(text);
  std::string raw_line;
  int line_number = 0;
  while (std::getline(stream, raw_line)) {
    ++line_number;
    std::string line = raw_line;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto equals = line.find('=');
    if (equals == std::string::npos) {
      throw ConfigError("expected 'key = value', got '" + trim(raw_line) + "'", line_number);
    }
    const std::string key = trim(line.substr(0, equals));
    const std::string value = trim(line.substr(equals + 1));
    if (key.empty()) throw ConfigError("missing key", line_number);
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_number);
    if (key_line.count(key) != 0) {
      throw ConfigError("duplicate key '" + key + "' (first set on line " +
                            std::to_string(key_line[key]) + ")",
                        line_number);
    }
    key_line[key] = line_number;

    try {
      if (key == "experiment") {
        cfg.experiment = parse_experiment(value);
        has_experiment = true;
      } else if (key == "model") {
        cfg.model = value;
        has_model = true;
      } else if (key.rfind("model.", 0) == 0) {
        const std::string param = key.substr(6);
        if (param.empty()) throw ConfigError("empty model parameter name");
        cfg.model_params[param] = parse_vector(value);
      } else if (key == "damping") {
        DampingFunction::parse(value);  // validate now, keep the label
        cfg.damping = value;
      } else if (key == "scheme" || key == "schemes") {
        cfg.schemes.clear();
        for (const std::string& name : split(value, ',')) {
          cfg.schemes.push_back(parse_scheme(name));
        }
      } else if (key == "T" || key == "final_time") {
        cfg.final_time = parse_config_number(value);
        has_final_time = true;
      } else if (key == "tau") {
        cfg.tau_list = {parse_config_number(value)};
        has_tau = true;
      } else if (key == "tau_list") {
        cfg.tau_list = parse_tau_list(value);
        has_tau_list = true;
      } else if (key == "tau_ref") {
        cfg.tau_ref = parse_config_number(value);
      } else if (key == "samples") {
        cfg.samples = parse_integer(value, "samples");
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_integer(value, "seed"));
      } else if (key == "truncation_k") {
        cfg.truncation_k = static_cast<int>(parse_integer(value, "truncation_k"));
      } else if (key == "fp_tolerance") {
        cfg.fp_tolerance = parse_config_number(value);
      } else if (key == "fp_max_iterations") {
        cfg.fp_max_iterations = static_cast<int>(parse_integer(value, "fp_max_iterations"));
      } else if (key == "quadrature_nodes") {
        cfg.quadrature_nodes = static_cast<int>(parse_integer(value, "quadrature_nodes"));
      } else if (key == "initial_value") {
        cfg.initial_value = parse_vector(value);
        has_initial_value = true;
      } else if (key == "test_functions") {
        cfg.test_functions.clear();
        for (const std::string& id : split(value, ',')) {
          cfg.test_functions.push_back(TestFunction::parse(id));
        }
      } else if (key == "output_dir") {
        cfg.output_dir = value;
      } else if (key == "strong_error_at") {
        if (value == "final") {
          cfg.strong_error_sup = false;
        } else if (value == "sup") {
          cfg.strong_error_sup = true;
        } else {
          throw ConfigError("strong_error_at must be 'final' or 'sup', got '" + value + "'");
        }
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      if (e.line > 0) throw;
      throw ConfigError(e.what(), line_number);
    }
  }

  auto line_of = [&](const std::string& key) {
    auto it = key_line.find(key);
    return it == key_line.end() ? -1 : it->second;
  };

  if (!has_experiment) throw ConfigError("missing required key 'experiment'");
  if (!has_model) throw ConfigError("missing required key 'model'");
  if (!has_final_time) throw ConfigError("missing required key 'T'");
  if (!has_initial_value) throw ConfigError("missing required key 'initial_value'");
  if (!(cfg.final_time > 0.0)) throw ConfigError("T must be positive", line_of("T"));
  if (has_tau && has_tau_list) {
    throw ConfigError("give either 'tau' or 'tau_list', not both", line_of("tau"));
  }

  const bool convergence = cfg.experiment == ExperimentKind::strong_convergence ||
                           cfg.experiment == ExperimentKind::weak_convergence;
  if (convergence) {
    if (cfg.tau_list.empty()) {
      throw ConfigError("convergence experiments need 'tau_list'");
    }
    if (!(cfg.tau_ref > 0.0)) {
      throw ConfigError("convergence experiments need 'tau_ref'", line_of("tau_ref"));
    }
    if (cfg.samples < 1) {
      throw ConfigError("convergence experiments need 'samples' >= 1", line_of("samples"));
    }
    std::sort(cfg.tau_list.begin(), cfg.tau_list.end(), std::greater<double>());
    for (double tau : cfg.tau_list) {
      if (!is_power_of_two_ratio(tau, cfg.tau_ref)) {
        throw ConfigError("step size " + format_number(tau) +
                              " is not a power-of-two multiple of tau_ref = " +
                              format_number(cfg.tau_ref),
                          line_of(has_tau_list ? "tau_list" : "tau"));
      }
    }
  } else {
    if (cfg.tau_list.size() != 1) {
      throw ConfigError("trajectory/conservation experiments need a single 'tau'",
                        line_of("tau_list"));
    }
  }
  for (double tau : cfg.tau_list) {
    const double ratio = cfg.final_time / tau;
    if (std::abs(ratio - std::nearbyint(ratio)) > 1e-9 * ratio) {
      throw ConfigError("step size " + format_number(tau) + " does not divide T",
                        line_of(has_tau ? "tau" : "tau_list"));
    }
  }
  if (cfg.experiment == ExperimentKind::weak_convergence && cfg.test_functions.empty()) {
    throw ConfigError("weak_convergence needs 'test_functions'");
  }
  if (!(cfg.fp_tolerance > 0.0)) {
    throw ConfigError("fp_tolerance must be positive", line_of("fp_tolerance"));
  }
  if (cfg.fp_max_iterations < 1) {
    throw ConfigError("fp_max_iterations must be >= 1", line_of("fp_max_iterations"));
  }
  if (cfg.quadrature_nodes < 2) {
    throw ConfigError("quadrature_nodes must be >= 2", line_of("quadrature_nodes"));
  }
  if (cfg.truncation_k < 0) {
    throw ConfigError("truncation_k must be >= 1", line_of("truncation_k"));
  }
  if (cfg.schemes.empty()) cfg.schemes = {Scheme::conformal_exp};

  // Building the model validates parameters and the initial-value dimension.
  PoissonSystem system;
  try {
    system = cfg.make_system();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), line_of("model"));
  }
  if (static_cast<int>(cfg.initial_value.size()) != system.dimension) {
    throw ConfigError("initial_value has " + std::to_string(cfg.initial_value.size()) +
                          " components, model " + cfg.model + " needs " +
                          std::to_string(system.dimension),
                      line_of("initial_value"));
  }
  for (const TestFunction& f : cfg.test_functions) {
    if (f.component > system.dimension) {
      throw ConfigError("test function " + f.id() + " exceeds the model dimension",
                        line_of("test_functions"));
    }
  }

  if (cfg.truncation_k == 0) {
    // k = 1 covers the multi-noise strong regime; single-noise strong runs and
    // all weak runs need k = 2 for their convergence rates.
    if (cfg.experiment == ExperimentKind::weak_convergence) {
      cfg.truncation_k = 2;
    } else if (cfg.experiment == ExperimentKind::strong_convergence) {
      cfg.truncation_k = system.noise_channels == 1 ? 2 : 1;
    } else {
      cfg.truncation_k = 1;
    }
  }
  return cfg;
}

PoissonSystem ExperimentConfig::make_system() const {
  return build_model(model, model_params, DampingFunction::parse(damping));
}

SolverConfig ExperimentConfig::solver_config() const {
  SolverConfig cfg;
  cfg.fp_tolerance = fp_tolerance;
  cfg.fp_max_iterations = fp_max_iterations;
  cfg.truncation = TruncationLevel{truncation_k};
  cfg.quadrature_nodes = quadrature_nodes;
  return cfg;
}

std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "experiment = " << experiment_name(cfg.experiment) << "\n";
  out << "model = " << cfg.model << "\n";
  for (const auto& [param, values] : cfg.model_params) {
    out << "model." << param << " = ";
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) out << ", ";
      out << format_number(values[i]);
    }
    out << "\n";
  }
  out << "damping = " << cfg.damping << "\n";
  out << "schemes = ";
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
    if (i > 0) out << ", ";
    out << scheme_name(cfg.schemes[i]);
  }
  out << "\n";
  out << "T = " << format_number(cfg.final_time) << "\n";
  if (cfg.experiment == ExperimentKind::trajectory ||
      cfg.experiment == ExperimentKind::conservation) {
    out << "tau = " << format_number(cfg.tau_list.front()) << "\n";
  } else {
    out << "tau_list = ";
    for (std::size_t i = 0; i < cfg.tau_list.size(); ++i) {
      if (i > 0) out << ", ";
      out << format_number(cfg.tau_list[i]);
    }
    out << "\n";
    out << "tau_ref = " << format_number(cfg.tau_ref) << "\n";
    out << "samples = " << cfg.samples << "\n";
  }
  out << "seed = " << cfg.seed << "\n";
  out << "truncation_k = " << cfg.truncation_k << "\n";
  out << "fp_tolerance = " << format_number(cfg.fp_tolerance) << "\n";
  out << "fp_max_iterations = " << cfg.fp_max_iterations << "\n";
  out << "quadrature_nodes = " << cfg.quadrature_nodes << "\n";
  out << "initial_value = ";
  for (std::size_t i = 0; i < cfg.initial_value.size(); ++i) {
    if (i > 0) out << ", ";
    out << format_number(cfg.initial_value[i]);
  }
  out << "\n";
  if (!cfg.test_functions.empty()) {
    out << "test_functions = ";
    for (std::size_t i = 0; i < cfg.test_functions.size(); ++i) {
      if (i > 0) out << ", ";
      out << cfg.test_functions[i].id();
    }
    out << "\n";
  }
  if (cfg.strong_error_sup) out << "strong_error_at = sup\n";
  out << "output_dir = " << cfg.output_dir << "\n";
  return out.str();
}

}  // namespace csde
