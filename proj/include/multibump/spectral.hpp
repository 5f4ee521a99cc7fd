#pragma once

#include <cmath>
#include <vector>

#include "multibump/ground_state.hpp"
#include "multibump/numerics.hpp"

namespace multibump {

/// Lowest eigenvalues of one spherical-harmonic block of the linearized
/// operator -Δ + 1 - p U^{p-1}, reduced to the radial line.
struct ModeSpectrum {
  int mode_l = 0;
  double spacing = 0.0;
  double domain_radius = 0.0;
  std::vector<double> lowest_eigenvalues;  // strictly ascending
  int negative_count = 0;                  // Sturm count of eigenvalues < 0
};

namespace detail {

// Symmetrized radial block: with v = s^{(N-1)/2} u the operator becomes
// -v'' + [1 - p U^{p-1} + c_l / s^2] v,  c_l = (N-1)(N-3)/4 + l(l+N-2).
struct ModeMatrix {
  std::vector<double> diag;
  double off = 0.0;  // constant off-diagonal -1/Δ²
  double spacing = 0.0;
};

inline ModeMatrix mode_matrix(const GroundStateProfile& f, int l, double R_D,
                              int n_grid) {
  const int N = f.dimension;
  const double p = f.exponent;
  const double d = R_D / n_grid;
  const double cl = 0.25 * (N - 1.0) * (N - 3.0) + l * (l + N - 2.0);
  ModeMatrix m;
  m.spacing = d;
  m.off = -1.0 / (d * d);
  m.diag.resize(n_grid - 1);
  for (int i = 1; i < n_grid; ++i) {
    const double s = i * d;
    m.diag[i - 1] = 2.0 / (d * d) + 1.0 -
                    p * std::pow(eval_U(f, s), p - 1.0) + cl / (s * s);
  }
  return m;
}

// number of eigenvalues strictly below lambda (LDL^T sign count)
inline int sturm_count(const ModeMatrix& m, double lambda) {
  const double b2 = m.off * m.off;
  int count = 0;
  double d = m.diag[0] - lambda;
  if (d < 0.0) ++count;
  for (std::size_t i = 1; i < m.diag.size(); ++i) {
    if (d == 0.0) d = 1e-300;
    d = (m.diag[i] - lambda) - b2 / d;
    if (d < 0.0) ++count;
  }
  return count;
}

inline double bisect_eigenvalue(const ModeMatrix& m, int index_1based,
                                double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(m, mid) >= index_1based) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Lowest `count` eigenvalues of the mode-l block, Dirichlet wall at R_D,
/// found by Sturm-sequence bisection. Deterministic.
inline ModeSpectrum mode_spectrum(const GroundStateProfile& f, int l,
                                  int count, double R_D = 25.0,
                                  int n_grid = 8000) {
  require(l >= 0, "mode_spectrum: l must be >= 0");
  require(count >= 1, "mode_spectrum: count must be >= 1");
  require(R_D >= 20.0, "mode_spectrum: R_D must be >= 20");
  require(n_grid >= 1000, "mode_spectrum: n_grid must be >= 1000");
  require(count <= n_grid - 1,
          "mode_spectrum: requested count exceeds matrix size");

  const auto m = detail::mode_matrix(f, l, R_D, n_grid);
  double lo = m.diag[0], hi = m.diag[0];
  for (const double a : m.diag) {
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  lo += 2.0 * m.off;  // off < 0: Gershgorin widening both ways
  hi -= 2.0 * m.off;

  ModeSpectrum out;
  out.mode_l = l;
  out.spacing = m.spacing;
  out.domain_radius = R_D;
  out.negative_count = detail::sturm_count(m, 0.0);
  for (int j = 1; j <= count; ++j) {
    out.lowest_eigenvalues.push_back(detail::bisect_eigenvalue(m, j, lo, hi));
  }
  return out;
}

/// Apply the discretized l-block to the sampled translation mode U'(s) and
/// return the relative discrete L² residual. Near zero for l = 1 (U' spans
/// the kernel there); order-2 in the spacing.
inline double kernel_eigenfunction_check(const GroundStateProfile& f,
                                         double R_D = 25.0, int n_grid = 8000,
                                         int l = 1) {
  require(R_D >= 20.0, "kernel_eigenfunction_check: R_D must be >= 20");
  require(n_grid >= 1000, "kernel_eigenfunction_check: n_grid must be >= 1000");
  const auto m = detail::mode_matrix(f, l, R_D, n_grid);
  const double nu = 0.5 * (f.dimension - 1);
  const double d = m.spacing;
  const int n = n_grid - 1;
  std::vector<double> v(n + 2);
  for (int i = 0; i <= n + 1; ++i) {
    const double s = i * d;
    v[i] = i == 0 ? 0.0 : std::pow(s, nu) * eval_dU(f, s);
  }
  KahanSum num, den;
  for (int i = 1; i <= n; ++i) {
    const double r = m.off * v[i - 1] + m.diag[i - 1] * v[i] + m.off * v[i + 1];
    num.add(r * r);
    den.add(v[i] * v[i]);
  }
  return std::sqrt(num.value() / den.value());
}

}  // namespace multibump
