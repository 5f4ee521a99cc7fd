#pragma once

#include <algorithm>
#include <cmath>

#include "multibump/ground_state.hpp"
#include "multibump/numerics.hpp"

namespace multibump {

/// Scalar constants of the reduced energy. A1 = a ∫U², A2 = (1 - 2/(p+1)) ∫U^{p+1},
/// B1 = ∫ U^p e^{-y_1}.
struct InteractionConstants {
  double A1 = 0.0;
  double A2 = 0.0;
  double B1 = 0.0;
  double quadrature_error_estimate = 0.0;  // max relative panel-error sum
};

/// ∫_{S^{N-1}} e^{-s ω·e1} dω. Equals |S^{N-1}| at s = 0.
inline double sphere_exp_moment(double s, int N) {
  require(N >= 1, "sphere_exp_moment: N >= 1");
  require(s >= 0.0, "sphere_exp_moment: s >= 0");
  if (N == 1) return 2.0 * std::cosh(s);
  const auto inner = integrate_adaptive(
      [&](double theta) {
        return std::exp(-s * std::cos(theta)) *
               std::pow(std::sin(theta), N - 2.0);
      },
      0.0, std::numbers::pi, 1e-11);
  return sphere_area(N - 1) * inner.value;
}

namespace detail {

inline QuadResult radial_moment_impl(const GroundStateProfile& f, double q) {
  const int N = f.dimension;
  const double rm = f.match_radius;
  auto core = integrate_adaptive(
      [&](double s) { return std::pow(eval_U(f, s), q) * std::pow(s, N - 1.0); },
      0.0, rm, 1e-10);
  // tail via the far-field law: ∫_R^∞ (C e^{-s} s^{-nu})^q s^{N-1} ds
  const double nu = 0.5 * (N - 1);
  const TailLaw law{N};
  const double cq = std::pow(f.tail_scale * law.series(rm)[0], q);
  const double a_gamma = N - q * nu;
  const double tail = cq * std::pow(q, -a_gamma) * upper_gamma(a_gamma, q * rm);
  return {sphere_area(N) * (core.value + tail),
          sphere_area(N) * core.error, core.evaluations};
}

}  // namespace detail

/// ∫_{R^N} U^q by reduction to the radial line; the tail beyond the match
/// radius is integrated analytically through the decay law.
inline double radial_moment(const GroundStateProfile& f, double q) {
  require(q >= 1.0, "radial_moment: q must be >= 1");
  return detail::radial_moment_impl(f, q).value;
}

/// ∫_{R^N} |∇U|²; companion moment for the energy identities.
inline double gradient_moment(const GroundStateProfile& f) {
  const int N = f.dimension;
  const double hi = f.match_radius + 20.0;
  auto core = integrate_adaptive(
      [&](double s) {
        const double d = eval_dU(f, s);
        return d * d * std::pow(s, N - 1.0);
      },
      0.0, hi, 1e-10);
  return sphere_area(N) * core.value;
}

/// B1 = ∫ U^p e^{-y_1}, computed through nested quadrature over the radius
/// and the sphere average. Works for all N >= 1.
inline double constant_B1(const GroundStateProfile& f) {
  const int N = f.dimension;
  const double p = f.exponent;
  const double hi = f.match_radius + 15.0;
  auto q = integrate_adaptive(
      [&](double s) {
        return std::pow(eval_U(f, s), p) * std::pow(s, N - 1.0) *
               sphere_exp_moment(s, N);
      },
      0.0, hi, 1e-10);
  return q.value;
}

/// N = 3 closed-form route: the sphere factor collapses to 4π sinh(s)/s,
/// so B1 = 4π ∫ U^p s sinh(s) ds. Cross-check for the generic path.
inline double constant_B1_closed3(const GroundStateProfile& f) {
  require(f.dimension == 3, "closed-form B1 route requires N = 3");
  const double p = f.exponent;
  const double hi = f.match_radius + 15.0;
  auto q = integrate_adaptive(
      [&](double s) {
        return std::pow(eval_U(f, s), p) * s * std::sinh(s);
      },
      0.0, hi, 1e-10);
  return 4.0 * std::numbers::pi * q.value;
}

/// Pair-interaction integral ∫ U(z)^p U(z - d e1) dz in bipolar coordinates
/// (s, t) = (|z|, |z - d e1|). The p-th power sits on the first factor only.
inline double pair_interaction(const GroundStateProfile& f, double d) {
  require(d >= 0.0, "pair_interaction: separation must be >= 0");
  const int N = f.dimension;
  const double p = f.exponent;
  if (d < 1e-12) return radial_moment(f, p + 1.0);

  if (N == 1) {
    const double hi = f.match_radius + 15.0;
    auto q = integrate_adaptive(
        [&](double z) {
          return std::pow(eval_U(f, std::abs(z)), p) *
                 eval_U(f, std::abs(z - d));
        },
        -hi, hi + d, 1e-9);
    return q.value;
  }
  require(N >= 3, "pair_interaction: bipolar reduction implemented for N >= 3");

  const double s_hi = std::min(d + 45.0, d + 3.0 * f.match_radius);
  auto outer = integrate_adaptive(
      [&](double s) {
        if (s <= 0.0) return 0.0;
        const double up = std::pow(eval_U(f, s), p);
        const double t_lo = std::abs(s - d);
        const double t_hi = std::min(s + d, t_lo + 45.0);
        if (t_hi <= t_lo) return 0.0;
        auto inner = integrate_adaptive(
            [&](double t) {
              const double z1 = (s * s - t * t + d * d) / (2.0 * d);
              const double rho2 = std::max(s * s - z1 * z1, 0.0);
              const double rho_pow =
                  N == 3 ? 1.0 : std::pow(rho2, 0.5 * (N - 3.0));
              return eval_U(f, t) * t * rho_pow;
            },
            t_lo, t_hi, 1e-9);
        return up * s * inner.value;
      },
      0.0, s_hi, 1e-8);
  return sphere_area(N - 1) / d * outer.value;
}

/// Interaction coefficient at separation d in the unit-tail normalization:
/// pair_interaction(d) · d^{(N-1)/2} / C. The far field of U carries the
/// algebraic factor C e^{-s} s^{-(N-1)/2}; dividing it out leaves the pure
/// exponential pairwise law with coefficient B1, which is the form the
/// attraction law is stated in. The ratio of this to B1 e^{-d} tends to 1.
inline double pair_coefficient(const GroundStateProfile& f, double d) {
  require(d > 0.0, "pair_coefficient: separation must be positive");
  return pair_interaction(f, d) * std::pow(d, 0.5 * (f.dimension - 1)) /
         f.tail_constant;
}

/// Assemble the reduced-energy constants from a profile and the potential
/// strength a.
inline InteractionConstants compute_constants(const GroundStateProfile& f,
                                              double a) {
  require(a >= 0.0, "compute_constants: a must be >= 0");
  InteractionConstants c;
  const auto m2 = detail::radial_moment_impl(f, 2.0);
  const auto mp1 = detail::radial_moment_impl(f, f.exponent + 1.0);
  c.A1 = a * m2.value;
  c.A2 = (1.0 - 2.0 / (f.exponent + 1.0)) * mp1.value;
  c.B1 = constant_B1(f);
  c.quadrature_error_estimate =
      std::max(m2.error / m2.value, mp1.error / mp1.value);
  return c;
}

}  // namespace multibump
