#include "csde/models.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <utility>

#include "csde/errors.hpp"

namespace csde {

namespace {

// sin(x)/x, continuous at 0; the stable kernel of the trigonometric
// two-point gradient formulas below.
double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

double get_scalar(const ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (it->second.size() != 1) {
    throw ConfigError("model parameter '" + key + "' must be a single number");
  }
  return it->second.front();
}

Eigen::Vector3d get_vec3(const ParamMap& params, const std::string& key,
                         const Eigen::Vector3d& fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (it->second.size() != 3) {
    throw ConfigError("model parameter '" + key + "' must have 3 components");
  }
  return Eigen::Vector3d(it->second[0], it->second[1], it->second[2]);
}

void reject_unknown_params(const ParamMap& params, const std::string& model,
                           std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : params) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown parameter '" + key + "' for model " + model);
    }
  }
}

Hamiltonian scaled(const Hamiltonian& h, double factor) {
  Hamiltonian out;
  out.preferred_mode = h.preferred_mode;
  out.domain = h.domain;
  auto value = h.value;
  out.value = [value, factor](const Vec& y) { return factor * value(y); };
  auto gradient = h.gradient;
  out.gradient = [gradient, factor](const Vec& y, Vec& g) {
    gradient(y, g);
    g *= factor;
  };
  if (h.closed_form_dg) {
    auto dg = h.closed_form_dg;
    out.closed_form_dg = [dg, factor](const Vec& z0, const Vec& z1, Vec& g) {
      dg(z0, z1, g);
      g *= factor;
    };
  }
  return out;
}

PoissonSystem build_pendulum(const ParamMap& params) {
  reject_unknown_params(params, "pendulum", {"c"});
  const double c = get_scalar(params, "c", 1.0);
  if (!(c > 0.0)) throw ConfigError("pendulum noise intensity c must be positive");

  PoissonSystem sys;
  sys.name = "pendulum";
  sys.dimension = 2;
  sys.noise_channels = 1;
  sys.single_noise_form = true;
  sys.noise_intensity = c;
  sys.structure_matrix = [](const Vec&, Mat& b) {
    b.resize(2, 2);
    b << 0.0, -1.0, 1.0, 0.0;
  };

  Hamiltonian h;
  h.value = [](const Vec& y) { return 0.5 * y[0] * y[0] - std::cos(y[1]); };
  h.gradient = [](const Vec& y, Vec& g) {
    g.resize(2);
    g[0] = y[0];
    g[1] = std::sin(y[1]);
  };
  h.closed_form_dg = [](const Vec& z0, const Vec& z1, Vec& g) {
    g.resize(2);
    g[0] = 0.5 * (z0[0] + z1[0]);
    g[1] = std::sin(0.5 * (z0[1] + z1[1])) * sinc(0.5 * (z1[1] - z0[1]));
  };
  h.preferred_mode = DGMode::closed_form_custom;
  sys.hamiltonians = {h, scaled(h, c)};

  sys.diffusion_jacobians = {[c](const Vec& y, Mat& j) {
    j.resize(2, 2);
    j << 0.0, -c * std::cos(y[1]), c, 0.0;
  }};
  return sys;
}

PoissonSystem build_rigid_body(const ParamMap& params) {
  reject_unknown_params(params, "rigid_body", {"inertia", "inertia_hat", "channels"});
  const Eigen::Vector3d inertia =
      get_vec3(params, "inertia", Eigen::Vector3d(2.0, 1.0, 2.0 / 3.0));
  const Eigen::Vector3d inertia_hat =
      get_vec3(params, "inertia_hat", Eigen::Vector3d(1.0, 2.0, 3.0));
  const int channels = static_cast<int>(get_scalar(params, "channels", 3.0));
  if (channels != 1 && channels != 3) {
    throw ConfigError("rigid_body channels must be 1 (W_1 only) or 3");
  }
  if ((inertia.array() <= 0.0).any() || (inertia_hat.array() <= 0.0).any()) {
    throw ConfigError("rigid_body moments of inertia must be positive");
  }

  PoissonSystem sys;
  sys.name = "rigid_body";
  sys.dimension = 3;
  sys.noise_channels = channels;
  sys.structure_matrix = [](const Vec& y, Mat& b) {
    b.resize(3, 3);
    b << 0.0, -y[2], y[1], y[2], 0.0, -y[0], -y[1], y[0], 0.0;
  };

  Hamiltonian h0;
  const Eigen::Vector3d inv_inertia = inertia.cwiseInverse();
  h0.value = [inv_inertia](const Vec& y) {
    return 0.5 * (inv_inertia[0] * y[0] * y[0] + inv_inertia[1] * y[1] * y[1] +
                  inv_inertia[2] * y[2] * y[2]);
  };
  h0.gradient = [inv_inertia](const Vec& y, Vec& g) {
    g.resize(3);
    g[0] = inv_inertia[0] * y[0];
    g[1] = inv_inertia[1] * y[1];
    g[2] = inv_inertia[2] * y[2];
  };
  h0.preferred_mode = DGMode::closed_form_quadratic;
  sys.hamiltonians.push_back(h0);

  for (int m = 1; m <= channels; ++m) {
    const int i = m - 1;
    const double inv_hat = 1.0 / inertia_hat[i];
    Hamiltonian hm;
    hm.value = [i, inv_hat](const Vec& y) { return 0.5 * inv_hat * y[i] * y[i]; };
    hm.gradient = [i, inv_hat](const Vec& y, Vec& g) {
      g.setZero(3);
      g[i] = inv_hat * y[i];
    };
    hm.preferred_mode = DGMode::closed_form_quadratic;
    sys.hamiltonians.push_back(hm);

    // f_m(y) = (y_i / Ihat_i) * column i of B(y).
    sys.diffusion_jacobians.push_back([i, inv_hat](const Vec& y, Mat& j) {
      j.setZero(3, 3);
      switch (i) {
        case 0:
          j(1, 0) = inv_hat * y[2];
          j(1, 2) = inv_hat * y[0];
          j(2, 0) = -inv_hat * y[1];
          j(2, 1) = -inv_hat * y[0];
          break;
        case 1:
          j(0, 1) = -inv_hat * y[2];
          j(0, 2) = -inv_hat * y[1];
          j(2, 0) = inv_hat * y[1];
          j(2, 1) = inv_hat * y[0];
          break;
        default:
          j(0, 1) = inv_hat * y[2];
          j(0, 2) = inv_hat * y[1];
          j(1, 0) = -inv_hat * y[2];
          j(1, 2) = -inv_hat * y[0];
          break;
      }
    });
  }

  InvariantSpec casimir;
  casimir.kind = InvariantSpec::Kind::casimir;
  casimir.label = "casimir";
  casimir.value = [](const Vec& y) { return 0.5 * y.squaredNorm(); };
  casimir.gradient = [](const Vec& y, Vec& g) { g = y; };
  casimir.homogeneity_degree = 2.0;
  casimir.quadratic_matrix = Mat::Identity(3, 3);
  casimir.positivity_floor = 0.5;
  sys.invariants.push_back(std::move(casimir));
  return sys;
}

PoissonSystem build_lotka_volterra(const ParamMap& params) {
  reject_unknown_params(params, "lotka_volterra", {"a", "b", "c", "noise_intensity"});
  const double a = get_scalar(params, "a", -1.0);
  const double b = get_scalar(params, "b", -2.0);
  const double c = get_scalar(params, "c", 1.0);
  const double nu = get_scalar(params, "noise_intensity", 1.0);
  if (!(nu > 0.0)) throw ConfigError("lotka_volterra noise_intensity must be positive");
  const double ab = a * b;

  PoissonSystem sys;
  sys.name = "lotka_volterra";
  sys.dimension = 3;
  sys.noise_channels = 1;
  sys.single_noise_form = true;
  sys.noise_intensity = nu;
  sys.domain = [](const Vec& y) { return y[0] > 0.0 && y[1] > 0.0 && y[2] > 0.0; };
  sys.structure_matrix = [a, b, c, ab](const Vec& y, Mat& bm) {
    const double scale = std::pow(y[0], 1.0 - ab) * std::pow(y[1], b + 1.0);
    const double d = ab * c;
    bm.resize(3, 3);
    bm << 0.0, scale * a * c, scale * c, -scale * a * c, 0.0, -scale * d, -scale * c,
        scale * d, 0.0;
  };

  Hamiltonian h;
  h.domain = sys.domain;
  h.value = [ab, b](const Vec& y) {
    return std::pow(y[0], ab) * std::pow(y[1], -b) * y[2];
  };
  h.gradient = [ab, b](const Vec& y, Vec& g) {
    const double p1 = std::pow(y[0], ab);
    const double p2 = std::pow(y[1], -b);
    g.resize(3);
    g[0] = ab * p1 / y[0] * p2 * y[2];
    g[1] = -b * p1 * p2 / y[1] * y[2];
    g[2] = p1 * p2;
  };
  h.preferred_mode = DGMode::gauss_legendre;
  sys.hamiltonians = {h, scaled(h, nu)};

  // f_1 = nu * B grad H; polynomial in y once the fractional powers cancel.
  sys.diffusion_jacobians = {[a, b, c, ab, nu](const Vec& y, Mat& j) {
    const double k = nu * c;
    j.resize(3, 3);
    j(0, 0) = k * (y[1] - ab * y[2]);
    j(0, 1) = k * y[0];
    j(0, 2) = -k * ab * y[0];
    j(1, 0) = -k * ab * y[1];
    j(1, 1) = -k * ab * (a * y[2] + y[0]);
    j(1, 2) = -k * ab * a * y[1];
    j(2, 0) = -k * ab * b * y[2];
    j(2, 1) = -k * ab * y[2];
    j(2, 2) = -k * ab * (y[1] + b * y[0]);
  }};

  InvariantSpec energy;
  energy.kind = InvariantSpec::Kind::hamiltonian;
  energy.label = "hamiltonian";
  energy.value = h.value;
  energy.gradient = h.gradient;
  energy.homogeneity_degree = ab - b + 1.0;
  energy.positivity_floor = 0.0;
  sys.invariants.push_back(std::move(energy));
  return sys;
}

PoissonSystem build_maxwell_bloch(const ParamMap& params) {
  reject_unknown_params(params, "maxwell_bloch", {});

  PoissonSystem sys;
  sys.name = "maxwell_bloch";
  sys.dimension = 3;
  sys.noise_channels = 1;
  sys.structure_matrix = [](const Vec& y, Mat& b) {
    b.resize(3, 3);
    b << 0.0, -y[2], y[1], y[2], 0.0, 0.0, -y[1], 0.0, 0.0;
  };

  Hamiltonian h0;
  h0.value = [](const Vec& y) { return 0.5 * y[0] * y[0] + y[2]; };
  h0.gradient = [](const Vec& y, Vec& g) {
    g.resize(3);
    g[0] = y[0];
    g[1] = 0.0;
    g[2] = 1.0;
  };
  h0.preferred_mode = DGMode::closed_form_quadratic;

  Hamiltonian h1;
  h1.value = [](const Vec& y) { return y[2]; };
  h1.gradient = [](const Vec&, Vec& g) {
    g.resize(3);
    g << 0.0, 0.0, 1.0;
  };
  h1.preferred_mode = DGMode::closed_form_quadratic;
  sys.hamiltonians = {h0, h1};

  sys.diffusion_jacobians = {[](const Vec&, Mat& j) {
    j.setZero(3, 3);
    j(0, 1) = 1.0;
  }};

  InvariantSpec casimir;
  casimir.kind = InvariantSpec::Kind::casimir;
  casimir.label = "casimir";
  casimir.value = [](const Vec& y) { return 0.5 * (y[1] * y[1] + y[2] * y[2]); };
  casimir.gradient = [](const Vec& y, Vec& g) {
    g.resize(3);
    g << 0.0, y[1], y[2];
  };
  casimir.homogeneity_degree = 2.0;
  Mat d = Mat::Zero(3, 3);
  d(1, 1) = 1.0;
  d(2, 2) = 1.0;
  casimir.quadratic_matrix = d;
  casimir.positivity_floor = 0.0;
  sys.invariants.push_back(std::move(casimir));
  return sys;
}

PoissonSystem build_sine_poisson(const ParamMap& params) {
  reject_unknown_params(params, "sine_poisson", {"c"});
  const double c = get_scalar(params, "c", 1.0);
  if (!(c > 0.0)) throw ConfigError("sine_poisson noise intensity c must be positive");

  PoissonSystem sys;
  sys.name = "sine_poisson";
  sys.dimension = 3;
  sys.noise_channels = 1;
  sys.single_noise_form = true;
  sys.noise_intensity = c;
  sys.structure_matrix = [](const Vec&, Mat& b) {
    b.resize(3, 3);
    b << 0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0;
  };

  Hamiltonian h;
  h.value = [](const Vec& y) { return std::sin(y[0]) + std::sin(y[1]) + std::sin(y[2]); };
  h.gradient = [](const Vec& y, Vec& g) {
    g.resize(3);
    g[0] = std::cos(y[0]);
    g[1] = std::cos(y[1]);
    g[2] = std::cos(y[2]);
  };
  h.closed_form_dg = [](const Vec& z0, const Vec& z1, Vec& g) {
    g.resize(3);
    for (int i = 0; i < 3; ++i) {
      g[i] = std::cos(0.5 * (z0[i] + z1[i])) * sinc(0.5 * (z1[i] - z0[i]));
    }
  };
  h.preferred_mode = DGMode::closed_form_custom;
  sys.hamiltonians = {h, scaled(h, c)};

  sys.diffusion_jacobians = {[c](const Vec& y, Mat& j) {
    const double s0 = c * std::sin(y[0]);
    const double s1 = c * std::sin(y[1]);
    const double s2 = c * std::sin(y[2]);
    j.resize(3, 3);
    j << 0.0, -s1, s2, s0, 0.0, -s2, -s0, s1, 0.0;
  }};

  InvariantSpec casimir;
  casimir.kind = InvariantSpec::Kind::casimir;
  casimir.label = "casimir";
  casimir.value = [](const Vec& y) {
    const double s = y[0] + y[1] + y[2];
    return 0.5 * s * s;
  };
  casimir.gradient = [](const Vec& y, Vec& g) {
    const double s = y[0] + y[1] + y[2];
    g.resize(3);
    g << s, s, s;
  };
  casimir.homogeneity_degree = 2.0;
  casimir.quadratic_matrix = Mat::Ones(3, 3);
  casimir.positivity_floor = 0.0;
  sys.invariants.push_back(std::move(casimir));
  return sys;
}

}  // namespace

DampingFunction DampingFunction::zero() { return constant(0.0); }

DampingFunction DampingFunction::constant(double value) {
  DampingFunction f;
  f.label = [value] {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return std::string(buffer);
  }();
  f.gamma = [value](double) { return value; };
  f.antiderivative = [value](double t) { return value * t; };
  return f;
}

DampingFunction DampingFunction::parse(const std::string& text) {
  DampingFunction f;
  f.label = text;
  if (text == "zero") {
    f.gamma = [](double) { return 0.0; };
    f.antiderivative = [](double) { return 0.0; };
    return f;
  }
  if (text == "half_cos_2t") {
    f.gamma = [](double t) { return 0.5 * std::cos(2.0 * t); };
    f.antiderivative = [](double t) { return 0.25 * std::sin(2.0 * t); };
    return f;
  }
  if (text == "sin_t") {
    f.gamma = [](double t) { return std::sin(t); };
    f.antiderivative = [](double t) { return -std::cos(t); };
    return f;
  }
  if (text == "t") {
    f.gamma = [](double t) { return t; };
    f.antiderivative = [](double t) { return 0.5 * t * t; };
    return f;
  }
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == nullptr || *end != '\0' || end == text.c_str()) {
    throw ConfigError("unknown damping function '" + text +
                      "' (expected a number or one of zero, half_cos_2t, sin_t, t)");
  }
  f.gamma = [value](double) { return value; };
  f.antiderivative = [value](double t) { return value * t; };
  return f;
}

void drift(const PoissonSystem& system, const Vec& y, Vec& out) {
  if (!system.in_domain(y)) {
    throw std::domain_error("state outside the admissible domain of " + system.name);
  }
  Mat b;
  Vec g;
  system.structure_matrix(y, b);
  system.hamiltonians[0].gradient(y, g);
  out.noalias() = b * g;
}

Vec drift(const PoissonSystem& system, const Vec& y) {
  Vec out(system.dimension);
  drift(system, y, out);
  return out;
}

void diffusion(const PoissonSystem& system, int channel, const Vec& y, Vec& out) {
  if (channel < 1 || channel > system.noise_channels) {
    throw std::invalid_argument("diffusion channel " + std::to_string(channel) +
                                " out of range 1.." + std::to_string(system.noise_channels));
  }
  if (!system.in_domain(y)) {
    throw std::domain_error("state outside the admissible domain of " + system.name);
  }
  Mat b;
  Vec g;
  system.structure_matrix(y, b);
  system.hamiltonians[static_cast<std::size_t>(channel)].gradient(y, g);
  out.noalias() = b * g;
}

Vec diffusion(const PoissonSystem& system, int channel, const Vec& y) {
  Vec out(system.dimension);
  diffusion(system, channel, y, out);
  return out;
}

void diffusion_jacobian_fd(const PoissonSystem& system, int channel, const Vec& y, Mat& out) {
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + y.norm());
  const int d = system.dimension;
  out.resize(d, d);
  Vec yp = y, ym = y, fp(d), fm(d);
  for (int j = 0; j < d; ++j) {
    yp[j] = y[j] + h;
    ym[j] = y[j] - h;
    diffusion(system, channel, yp, fp);
    diffusion(system, channel, ym, fm);
    out.col(j) = (fp - fm) / (2.0 * h);
    yp[j] = y[j];
    ym[j] = y[j];
  }
}

void ito_corrected_drift(const PoissonSystem& system, double t, const Vec& y, Vec& out) {
  drift(system, y, out);
  out -= system.damping.gamma(t) * y;
  const bool analytic =
      system.diffusion_jacobians.size() == static_cast<std::size_t>(system.noise_channels);
  Mat j;
  Vec f(system.dimension);
  for (int m = 1; m <= system.noise_channels; ++m) {
    diffusion(system, m, y, f);
    if (analytic) {
      system.diffusion_jacobians[static_cast<std::size_t>(m - 1)](y, j);
    } else {
      diffusion_jacobian_fd(system, m, y, j);
    }
    out.noalias() += 0.5 * (j * f);
  }
}

Vec ito_corrected_drift(const PoissonSystem& system, double t, const Vec& y) {
  Vec out(system.dimension);
  ito_corrected_drift(system, t, y, out);
  return out;
}

PoissonSystem build_model(const std::string& name, const ParamMap& params,
                          const DampingFunction& damping) {
  PoissonSystem sys;
  if (name == "pendulum") {
    sys = build_pendulum(params);
  } else if (name == "rigid_body") {
    sys = build_rigid_body(params);
  } else if (name == "lotka_volterra") {
    sys = build_lotka_volterra(params);
  } else if (name == "maxwell_bloch") {
    sys = build_maxwell_bloch(params);
  } else if (name == "sine_poisson") {
    sys = build_sine_poisson(params);
  } else {
    throw ConfigError("unknown model '" + name + "'");
  }
  sys.damping = damping;
  return sys;
}

std::vector<std::string> model_names() {
  return {"pendulum", "rigid_body", "lotka_volterra", "maxwell_bloch", "sine_poisson"};
}

std::string model_description(const std::string& name) {
  if (name == "pendulum")
    return "damped stochastic pendulum, d=2, one noise; params: c (intensity, default 1)";
  if (name == "rigid_body")
    return "damped free rigid body, d=3; params: inertia (3), inertia_hat (3), channels (1|3)";
  if (name == "lotka_volterra")
    return "damped stochastic Lotka-Volterra, d=3, one noise; params: a, b, c, noise_intensity";
  if (name == "maxwell_bloch")
    return "damped stochastic Maxwell-Bloch, d=3, one noise; no parameters";
  if (name == "sine_poisson")
    return "damped 3d Poisson system with constant structure matrix; params: c (intensity)";
  throw ConfigError("unknown model '" + name + "'");
}

}  // namespace csde
