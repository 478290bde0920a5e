#pragma once

#include <vector>

#include "csde/models.hpp"
#include "csde/types.hpp"

namespace csde {

/// Evaluation rule for the mean-value discrete gradient
///   dg(z0, z1) = int_0^1 grad H((1-eta) z0 + eta z1) d eta.
struct GradientRule {
  DGMode mode = DGMode::gauss_legendre;
  int quadrature_nodes = 16;

  static GradientRule for_hamiltonian(const Hamiltonian& h, int quadrature_nodes);
};

/// Gauss-Legendre nodes/weights on [0, 1]; cached per node count.
struct QuadratureTable {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const QuadratureTable& gauss_legendre_table(int nodes);

/// Mean-value discrete gradient of `h` between z0 and z1 under `rule`.
/// The segment must stay inside the Hamiltonian's domain.
void discrete_gradient(const Hamiltonian& h, const Vec& z0, const Vec& z1,
                       const GradientRule& rule, Vec& out, Vec& scratch);
Vec discrete_gradient(const Hamiltonian& h, const Vec& z0, const Vec& z1,
                      const GradientRule& rule);

/// |H(z1) - H(z0) - g^T (z1 - z0)| for g = discrete_gradient(h, z0, z1).
/// This is the defect in the identity all conservation results rest on.
double chain_residual(const Hamiltonian& h, const Vec& z0, const Vec& z1, const Vec& g);

}  // namespace csde
