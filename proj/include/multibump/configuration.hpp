#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "multibump/ground_state.hpp"
#include "multibump/numerics.hpp"

namespace multibump {

/// 2k bump centers on two stacked regular k-gons at heights ±rh. Centers
/// all sit on the sphere |x| = r. Immutable value type; field evaluation
/// and the sums below are pure.
struct DoublePolygonConfig {
  int k = 0;
  double radius = 0.0;  // r
  double height = 0.0;  // h, dimensionless in (0,1)
  int dim = 3;          // N
  bool lower_enabled = true;  // single-bump test hook drops the mirror ring
  std::vector<double> centers;  // (lower_enabled ? 2k : k) rows of dim

  int center_count() const { return lower_enabled ? 2 * k : k; }
  std::span<const double> center(int i) const {
    return {centers.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> upper(int j) const { return center(j); }
  std::span<const double> lower(int j) const { return center(k + j); }

  /// Degenerate one-bump configuration (upper ring only, k = 1);
  /// bypasses build_config validation deliberately — test/validation hook.
  static DoublePolygonConfig single_bump(double r, double h, int N);
};

inline double distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

namespace detail {

inline void fill_rings(DoublePolygonConfig& c) {
  const double rho = c.radius * std::sqrt(1.0 - c.height * c.height);
  const double z = c.radius * c.height;
  const int rings = c.lower_enabled ? 2 : 1;
  c.centers.assign(static_cast<std::size_t>(rings) * c.k * c.dim, 0.0);
  for (int ring = 0; ring < rings; ++ring) {
    for (int j = 0; j < c.k; ++j) {
      const double ang = 2.0 * std::numbers::pi * j / c.k;
      double* row = c.centers.data() +
                    (static_cast<std::size_t>(ring) * c.k + j) * c.dim;
      row[0] = rho * std::cos(ang);
      row[1] = rho * std::sin(ang);
      row[2] = ring == 0 ? z : -z;
    }
  }
}

}  // namespace detail

inline DoublePolygonConfig DoublePolygonConfig::single_bump(double r, double h,
                                                            int N) {
  DoublePolygonConfig c;
  c.k = 1;
  c.radius = r;
  c.height = h;
  c.dim = N;
  c.lower_enabled = false;
  detail::fill_rings(c);
  return c;
}

inline DoublePolygonConfig build_config(int k, double r, double h, int N) {
  require(k >= 2, "build_config: k must be >= 2");
  require(r > 0.0, "build_config: r must be positive");
  require(h > 0.0 && h < 1.0, "build_config: h must lie in (0,1)");
  require(N >= 3, "build_config: construction needs the y3 axis (N >= 3)");
  DoublePolygonConfig c;
  c.k = k;
  c.radius = r;
  c.height = h;
  c.dim = N;
  detail::fill_rings(c);
  return c;
}

/// Ansatz field W(y) = Σ_j U(|y - x̄_j|) + Σ_j U(|y - x̱_j|).
inline double eval_W(const DoublePolygonConfig& c, const GroundStateProfile& f,
                     std::span<const double> y) {
  require(static_cast<int>(y.size()) == c.dim, "eval_W: wrong point dimension");
  KahanSum acc;
  for (int i = 0; i < c.center_count(); ++i) {
    acc.add(eval_U(f, distance(y, c.center(i))));
  }
  return acc.value();
}

/// Membership of the fundamental half-cell: planar angle within π/k of the
/// first-center direction and y3 >= 0. Boundary points belong to the cell
/// (deterministic lower-index tie break); the planar origin counts as in.
inline bool in_cell(const DoublePolygonConfig& c, std::span<const double> y) {
  require(static_cast<int>(y.size()) == c.dim, "in_cell: wrong point dimension");
  if (y[2] < 0.0) return false;
  const double rho = std::hypot(y[0], y[1]);
  if (rho == 0.0) return true;
  return y[0] >= rho * std::cos(std::numbers::pi / c.k);
}

/// Exact interaction sums that the ring/mirror asymptotics approximate:
/// same = Σ_{i>=2} B1 e^{-|x̄_1 - x̄_i|}, cross = Σ_j B1 e^{-|x̱_j - x̄_1|}.
struct InteractionSums {
  double same_ring = 0.0;
  double cross_ring = 0.0;
};

inline InteractionSums interaction_sums(const DoublePolygonConfig& c,
                                        double B1) {
  require(B1 > 0.0, "interaction_sums: B1 must be positive");
  require(c.lower_enabled, "interaction_sums: needs both rings");
  KahanSum same, cross;
  const auto x0 = c.upper(0);
  for (int j = 1; j < c.k; ++j) {
    same.add(std::exp(-distance(x0, c.upper(j))));
  }
  for (int j = 0; j < c.k; ++j) {
    cross.add(std::exp(-distance(x0, c.lower(j))));
  }
  return {B1 * same.value(), B1 * cross.value()};
}

enum class TailBound {
  upper_ring_sum,  // Σ_{j>=2} U_{x̄_j}(y)   vs e^{-η√(1-h²)rπ/k} e^{-(1-η)|y-x̄_1|}
  lower_ring_sum,  // Σ_{j>=2} U_{x̱_j}(y)   vs the same envelope
  lower_mirror     // U_{x̱_1}(y)            vs e^{-ηhr} e^{-(1-η)|y-x̄_1|}
};

/// Worst observed ratio of the summed far-bump field to its exponential
/// envelope over the supplied sample points (points should lie in the
/// fundamental half-cell).
inline double tail_bound_check(const DoublePolygonConfig& c,
                               const GroundStateProfile& f, double eta,
                               std::span<const std::vector<double>> samples,
                               TailBound which) {
  require(eta > 0.0 && eta <= 1.0, "tail_bound_check: eta must be in (0,1]");
  require(c.lower_enabled, "tail_bound_check: needs both rings");
  const double ring_gap =
      std::sqrt(1.0 - c.height * c.height) * c.radius * std::numbers::pi / c.k;
  double worst = 0.0;
  for (const auto& pt : samples) {
    std::span<const double> y(pt);
    KahanSum num;
    switch (which) {
      case TailBound::upper_ring_sum:
        for (int j = 1; j < c.k; ++j) num.add(eval_U(f, distance(y, c.upper(j))));
        break;
      case TailBound::lower_ring_sum:
        for (int j = 1; j < c.k; ++j) num.add(eval_U(f, distance(y, c.lower(j))));
        break;
      case TailBound::lower_mirror:
        num.add(eval_U(f, distance(y, c.lower(0))));
        break;
    }
    const double gap =
        which == TailBound::lower_mirror ? c.height * c.radius : ring_gap;
    const double envelope = std::exp(-eta * gap) *
                            std::exp(-(1.0 - eta) * distance(y, c.upper(0)));
    worst = std::max(worst, num.value() / envelope);
  }
  return worst;
}

/// Admissible parameter set: r within ±β of (m/2π) k ln k and h within ±α
/// of π(m+2)/m divided by k.
struct ParameterBox {
  double r_lo = 0.0, r_hi = 0.0, h_lo = 0.0, h_hi = 0.0;

  static ParameterBox admissible(int k, double m, double alpha, double beta) {
    require(k >= 2, "ParameterBox: k >= 2");
    require(m > 1.0, "ParameterBox: m > 1");
    const double klogk = k * std::log(static_cast<double>(k));
    const double rc = m / (2.0 * std::numbers::pi);
    const double hc = std::numbers::pi * (m + 2.0) / m;
    ParameterBox b;
    b.r_lo = (rc - beta) * klogk;
    b.r_hi = (rc + beta) * klogk;
    b.h_lo = (hc - alpha) / k;
    b.h_hi = std::min((hc + alpha) / k, 0.98);  // h lives in (0,1)
    require(b.r_lo > 0.0 && b.h_lo > 0.0 && b.r_lo < b.r_hi && b.h_lo < b.h_hi,
            "ParameterBox: empty admissible set");
    return b;
  }

  // Default half-widths. The leading coefficients m/2π and π(m+2)/m are
  // approached only like lnln k / ln k, so desk-scale k needs wide margins:
  // 0.9 of the r-coefficient and 0.6 of the h-coefficient each way.
  static ParameterBox admissible_default(int k, double m) {
    return admissible(k, m, 0.6 * std::numbers::pi * (m + 2.0) / m,
                      0.9 * m / (2.0 * std::numbers::pi));
  }

  bool contains(double r, double h) const {
    return r >= r_lo && r <= r_hi && h >= h_lo && h <= h_hi;
  }
  double r_center() const { return 0.5 * (r_lo + r_hi); }
  double h_center() const { return 0.5 * (h_lo + h_hi); }

  ParameterBox inflated(double factor) const {
    ParameterBox b = *this;
    const double rc = r_center(), hc = h_center();
    b.r_lo = std::max(rc - factor * (rc - r_lo), 1e-6);
    b.r_hi = rc + factor * (r_hi - rc);
    b.h_lo = std::max(hc - factor * (hc - h_lo), 1e-12);
    b.h_hi = std::min(hc + factor * (h_hi - hc), 1.0 - 1e-12);
    return b;
  }
};

}  // namespace multibump
