#include "csde/discrete_gradient.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace csde {

namespace {

// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n, then mapped to
// [0, 1]. Nodes are accurate to machine precision for the orders used here.
QuadratureTable compute_gauss_legendre(int n) {
  QuadratureTable table;
  table.nodes.resize(static_cast<std::size_t>(n));
  table.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Chebyshev-based initial guess for the i-th root.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // Re-evaluate derivative at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map from [-1, 1] to [0, 1]; roots come out in descending order.
    table.nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 - x);
    table.weights[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
  }
  return table;
}

}  // namespace

const QuadratureTable& gauss_legendre_table(int nodes) {
  if (nodes < 2) {
    throw std::invalid_argument("Gauss-Legendre rule needs at least 2 nodes, got " +
                                std::to_string(nodes));
  }
  static std::mutex mutex;
  static std::map<int, QuadratureTable> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(nodes);
  if (it == cache.end()) it = cache.emplace(nodes, compute_gauss_legendre(nodes)).first;
  return it->second;
}

GradientRule GradientRule::for_hamiltonian(const Hamiltonian& h, int quadrature_nodes) {
  GradientRule rule;
  rule.quadrature_nodes = quadrature_nodes;
  rule.mode = h.preferred_mode;
  if (rule.mode == DGMode::closed_form_custom && !h.closed_form_dg) {
    rule.mode = DGMode::gauss_legendre;
  }
  return rule;
}

void discrete_gradient(const Hamiltonian& h, const Vec& z0, const Vec& z1,
                       const GradientRule& rule, Vec& out, Vec& scratch) {
  switch (rule.mode) {
    case DGMode::closed_form_quadratic: {
      scratch = 0.5 * (z0 + z1);
      if (h.domain && !h.domain(scratch)) {
        throw std::domain_error("discrete gradient: segment leaves the Hamiltonian domain");
      }
      h.gradient(scratch, out);
      return;
    }
    case DGMode::closed_form_custom: {
      if (!h.closed_form_dg) {
        throw std::invalid_argument(
            "discrete gradient: Hamiltonian has no closed-form rule");
      }
      h.closed_form_dg(z0, z1, out);
      return;
    }
    case DGMode::gauss_legendre: {
      // The admissible sets here are convex, so checking the endpoints covers
      // the interior quadrature points.
      if (h.domain && (!h.domain(z0) || !h.domain(z1))) {
        throw std::domain_error("discrete gradient: segment leaves the Hamiltonian domain");
      }
      const QuadratureTable& table = gauss_legendre_table(rule.quadrature_nodes);
      out.setZero(z0.size());
      Vec point(z0.size());
      for (std::size_t q = 0; q < table.nodes.size(); ++q) {
        const double eta = table.nodes[q];
        point = (1.0 - eta) * z0 + eta * z1;
        h.gradient(point, scratch);
        out += table.weights[q] * scratch;
      }
      return;
    }
  }
  throw std::logic_error("discrete gradient: unhandled rule mode");
}

Vec discrete_gradient(const Hamiltonian& h, const Vec& z0, const Vec& z1,
                      const GradientRule& rule) {
  Vec out(z0.size()), scratch(z0.size());
  discrete_gradient(h, z0, z1, rule, out, scratch);
  return out;
}

double chain_residual(const Hamiltonian& h, const Vec& z0, const Vec& z1, const Vec& g) {
  return std::abs(h.value(z1) - h.value(z0) - g.dot(z1 - z0));
}

}  // namespace csde
