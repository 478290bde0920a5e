#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "csde/types.hpp"

namespace csde::testing {

/// Adaptive Simpson quadrature; independent oracle for the discrete-gradient
/// integrals.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tolerance) {
  struct Impl {
    const std::function<double(double)>& f;
    double recurse(double a, double m, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) const {
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth > 50) throw std::runtime_error("adaptive Simpson did not converge");
      if (std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
      }
      return recurse(a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
             recurse(m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
  };
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Impl{f}.recurse(a, m, b, fa, fm, fb, whole, tolerance, 0);
}

/// Central-difference gradient at step h.
inline Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& y,
                            double h) {
  Vec g(y.size());
  Vec yp = y, ym = y;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    yp[i] = y[i] + h;
    ym[i] = y[i] - h;
    g[i] = (f(yp) - f(ym)) / (2.0 * h);
    yp[i] = y[i];
    ym[i] = y[i];
  }
  return g;
}

/// Least-squares slope of log2(y) against log2(x); test-side oracle.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("loglog_slope needs matched lists of >= 2 points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log2(x[i]);
    my += std::log2(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log2(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log2(y[i]) - my);
  }
  return sxy / sxx;
}

/// Uniform random vector with entries in [lo, hi].
inline Vec random_vec(std::mt19937_64& rng, int dim, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace csde::testing
