#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csde/types.hpp"

namespace csde {

/// How a discrete gradient is evaluated for a given Hamiltonian.
enum class DGMode {
  closed_form_quadratic,  // gradient at the segment midpoint; exact for affine gradients
  closed_form_custom,     // model-supplied exact two-point formula
  gauss_legendre,         // fixed-order quadrature along the segment
};

/// A scalar Hamiltonian with its analytic gradient and, when available, an
/// exact two-point discrete gradient.
struct Hamiltonian {
  std::function<double(const Vec&)> value;
  std::function<void(const Vec&, Vec&)> gradient;
  /// Exact discrete gradient (z0, z1) -> vector; null when not available.
  std::function<void(const Vec&, const Vec&, Vec&)> closed_form_dg;
  DGMode preferred_mode = DGMode::gauss_legendre;
  /// Admissible set of the Hamiltonian (assumed convex); null = all of R^d.
  std::function<bool(const Vec&)> domain;
};

/// A conserved (or conformally damped) functional of a model, with the
/// metadata the conservation laws need.
struct InvariantSpec {
  enum class Kind { casimir, hamiltonian };
  Kind kind = Kind::casimir;
  std::string label;
  std::function<double(const Vec&)> value;
  std::function<void(const Vec&, Vec&)> gradient;
  /// Degree p with F(lambda y) = lambda^p F(y); drives the exp(-p int gamma) law.
  std::optional<double> homogeneity_degree;
  /// D when F(y) = 1/2 y^T D y.
  std::optional<Mat> quadratic_matrix;
  /// m(F) = min over the unit sphere, when positive and known.
  std::optional<double> positivity_floor;
};

/// Time-dependent damping coefficient gamma(t) with an optional analytic
/// antiderivative; `label` round-trips through config files.
struct DampingFunction {
  std::string label = "0";
  std::function<double(double)> gamma;
  std::function<double(double)> antiderivative;  // null -> quadrature fallback

  static DampingFunction zero();
  static DampingFunction constant(double value);
  /// Accepts a numeric constant or one of the named shapes
  /// half_cos_2t, sin_t, t, zero.
  static DampingFunction parse(const std::string& text);
};

/// A linearly damped stochastic Poisson system
///   dy = (B(y) grad H_0(y) - gamma(t) y) dt + sum_m B(y) grad H_m(y) o dW_m.
struct PoissonSystem {
  std::string name;
  int dimension = 0;
  int noise_channels = 0;  // M
  std::function<void(const Vec&, Mat&)> structure_matrix;
  std::vector<Hamiltonian> hamiltonians;  // H_0 .. H_M
  /// Analytic d/dy [B(y) grad H_m(y)] for m = 1..M; empty -> finite differences.
  std::vector<std::function<void(const Vec&, Mat&)>> diffusion_jacobians;
  DampingFunction damping;
  std::vector<InvariantSpec> invariants;
  /// True for the one-noise subclass with H_1 = c H_0 (noise intensity c).
  bool single_noise_form = false;
  double noise_intensity = 1.0;
  /// Admissible state set (assumed convex); null = all of R^d.
  std::function<bool(const Vec&)> domain;

  bool in_domain(const Vec& y) const { return !domain || domain(y); }
};

/// f_0(y) = B(y) grad H_0(y); the undamped drift field.
void drift(const PoissonSystem& system, const Vec& y, Vec& out);
Vec drift(const PoissonSystem& system, const Vec& y);

/// f_m(y) = B(y) grad H_m(y) for channel m in 1..M.
void diffusion(const PoissonSystem& system, int channel, const Vec& y, Vec& out);
Vec diffusion(const PoissonSystem& system, int channel, const Vec& y);

/// Ito-form drift g_0(t, y) = f_0(y) - gamma(t) y + 1/2 sum_m f_m'(y) f_m(y).
void ito_corrected_drift(const PoissonSystem& system, double t, const Vec& y, Vec& out);
Vec ito_corrected_drift(const PoissonSystem& system, double t, const Vec& y);

/// Central-difference Jacobian of the channel-m diffusion field, used when a
/// model does not ship analytic Jacobians.
void diffusion_jacobian_fd(const PoissonSystem& system, int channel, const Vec& y, Mat& out);

using ParamMap = std::map<std::string, std::vector<double>>;

/// Builds one of the named systems: pendulum, rigid_body, lotka_volterra,
/// maxwell_bloch, sine_poisson. Unknown names, unknown parameters, or
/// malformed parameter shapes raise ConfigError.
PoissonSystem build_model(const std::string& name, const ParamMap& params,
                          const DampingFunction& damping);

std::vector<std::string> model_names();

/// One-line parameter summary per model (for the CLI list-models command).
std::string model_description(const std::string& name);

}  // namespace csde
