#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "multibump/configuration.hpp"
#include "multibump/interaction.hpp"
#include "multibump/potential.hpp"

namespace multibump {

/// Everything the reduced energy needs: the integral constants, the
/// potential decay exponent m and the bump count k.
struct ReducedModel {
  double A1 = 0.0;
  double A2 = 0.0;
  double B1 = 0.0;
  double m = 2.0;
  int k = 0;

  static ReducedModel make(const InteractionConstants& c, double m, int k) {
    require(m > 1.0, "ReducedModel: m must be > 1");
    require(k >= 2, "ReducedModel: k must be >= 2");
    require(c.B1 > 0.0, "ReducedModel: B1 must be positive");
    return {c.A1, c.A2, c.B1, m, k};
  }
};

/// Reduced energy per bump-pair group:
///   F1(r,h) = A1/r^m + A2 - 2 B1 e^{-2π√(1-h²) r/k} - B1 e^{-2rh}.
inline double F1(const ReducedModel& md, double r, double h) {
  require(r > 0.0 && h > 0.0 && h < 1.0, "F1: need r > 0, h in (0,1)");
  const double q = std::sqrt(1.0 - h * h);
  return md.A1 / std::pow(r, md.m) + md.A2 -
         2.0 * md.B1 * std::exp(-2.0 * std::numbers::pi * q * r / md.k) -
         md.B1 * std::exp(-2.0 * r * h);
}

/// Analytic partials (F1_r, F1_h).
inline std::array<double, 2> grad_F1(const ReducedModel& md, double r,
                                     double h) {
  require(r > 0.0 && h > 0.0 && h < 1.0, "grad_F1: need r > 0, h in (0,1)");
  const double pi = std::numbers::pi;
  const double q = std::sqrt(1.0 - h * h);
  const double H = std::exp(-2.0 * pi * q * r / md.k);
  const double G = std::exp(-2.0 * r * h);
  const double fr = -md.A1 * md.m / std::pow(r, md.m + 1.0) +
                    4.0 * md.B1 * pi * q * H / md.k + 2.0 * md.B1 * h * G;
  const double fh = -4.0 * md.B1 * pi * h * r / q * H / md.k +
                    2.0 * md.B1 * r * G;
  return {fr, fh};
}

struct Hessian {
  double rr = 0.0;
  double rh = 0.0;
  double hh = 0.0;
  double det() const { return rr * hh - rh * rh; }
};

/// Analytic second derivatives of F1.
inline Hessian hessian_F1(const ReducedModel& md, double r, double h) {
  const double pi = std::numbers::pi;
  const double q = std::sqrt(1.0 - h * h);
  const double H = std::exp(-2.0 * pi * q * r / md.k);
  const double G = std::exp(-2.0 * r * h);
  Hessian out;
  out.rr = md.A1 * md.m * (md.m + 1.0) / std::pow(r, md.m + 2.0) -
           8.0 * md.B1 * pi * pi * q * q / (md.k * md.k) * H -
           4.0 * md.B1 * h * h * G;
  out.rh = 4.0 * md.B1 * pi / md.k * H * (-h / q + 2.0 * pi * r * h / md.k) +
           2.0 * md.B1 * G * (1.0 - 2.0 * r * h);
  out.hh = -4.0 * md.B1 * pi * r / md.k * H *
               (1.0 / (q * q * q) + 2.0 * pi * r * h * h / (md.k * q * q)) -
           4.0 * md.B1 * r * r * G;
  return out;
}

/// Forward substitution (r,h) -> (H,G) = (e^{-2π√(1-h²)r/k}, e^{-2rh}).
inline std::pair<double, double> to_HG(int k, double r, double h) {
  const double q = std::sqrt(1.0 - h * h);
  return {std::exp(-2.0 * std::numbers::pi * q * r / k),
          std::exp(-2.0 * r * h)};
}

/// Inverse substitution: recover (r,h) from targets (H,G) in (0,1)² by the
/// one-dimensional fixed point h = π √(1-h²) ln G / (k ln H).
inline std::pair<double, double> from_HG(int k, double H, double G) {
  require(H > 0.0 && H < 1.0 && G > 0.0 && G < 1.0,
          "from_HG: targets must lie in (0,1)");
  const double lH = std::log(H), lG = std::log(G);
  double h = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double next =
        std::numbers::pi * std::sqrt(1.0 - h * h) * lG / (k * lH);
    if (!(next > 0.0 && next < 1.0)) {
      throw std::runtime_error("from_HG: iteration left (0,1)");
    }
    const double step = std::abs(next - h);
    h = next;
    if (step <= 1e-16 * std::max(h, 1e-12)) break;
  }
  const double r = -k * lH / (2.0 * std::numbers::pi * std::sqrt(1.0 - h * h));
  return {r, h};
}

/// Right-hand sides of the critical-point system in (H,G) form:
///   H* = A1 k m / r^{m+1} / (4 B1 π (√(1-h²)+h²/√(1-h²)))
///   G* = 2π h/(√(1-h²) k) · e^{-2π√(1-h²) r/k}
inline std::pair<double, double> critical_HG_targets(const ReducedModel& md,
                                                     double r, double h) {
  const double pi = std::numbers::pi;
  const double q = std::sqrt(1.0 - h * h);
  const double denom = 4.0 * md.B1 * pi * (q + h * h / q);
  const double Ht = md.A1 * md.k * md.m / std::pow(r, md.m + 1.0) / denom;
  const double Gt = 2.0 * pi * h / (q * md.k) * to_HG(md.k, r, h).first;
  return {Ht, Gt};
}

/// One application of the exact fixed-point map: push the current (r,h)
/// through the critical-system right-hand sides and invert the
/// substitution. Its fixed points are the zeros of grad_F1.
inline std::pair<double, double> fixed_point_map(const ReducedModel& md,
                                                 double r, double h) {
  const auto [Ht, Gt] = critical_HG_targets(md, r, h);
  require(Ht > 0.0 && Ht < 1.0 && Gt > 0.0 && Gt < 1.0,
          "fixed_point_map: right-hand sides left (0,1)");
  return from_HG(md.k, Ht, Gt);
}

/// Leading asymptotic form of the map; the exact map approaches it as k
/// grows. Exposed for the scaling checks.
inline std::pair<double, double> fixed_point_map_asymptotic(
    const ReducedModel& md, double r, double h) {
  require(r > 1.0 && h > 0.0, "asymptotic map: need r > 1, h > 0");
  const double lk = std::log(static_cast<double>(md.k));
  const double lr = std::log(r);
  const double denom = lk - (md.m + 1.0) * lr;
  require(std::abs(denom) > 1e-12,
          "asymptotic map: ln k - (m+1) ln r vanishes");
  const double r1 = md.k * ((md.m + 1.0) * lr - lk) / (2.0 * std::numbers::pi);
  const double h1 =
      std::numbers::pi * (std::log(h) - (md.m + 1.0) * lr) / (md.k * denom);
  return {r1, h1};
}

enum class CriticalKind { maximum, minimum, saddle, degenerate };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::saddle: return "saddle";
    default: return "degenerate";
  }
}

struct TraceStep {
  double r = 0.0;
  double h = 0.0;
  double contraction = 0.0;  // |step_n| / |step_{n-1}| in box-scaled norm
};

struct CriticalPointResult {
  double r_star = 0.0;
  double h_star = 0.0;
  double gradient_norm = 0.0;
  Hessian hess;
  CriticalKind kind = CriticalKind::degenerate;
  std::vector<TraceStep> trace;
  std::string solver;
  int iterations = 0;
};

enum class CriticalSolver { fixed_point, newton };

class SolverDivergence : public std::runtime_error {
 public:
  SolverDivergence(const std::string& msg, std::vector<TraceStep> tr)
      : std::runtime_error(msg), trace(std::move(tr)) {}
  std::vector<TraceStep> trace;
};

namespace detail {

inline CriticalKind classify(const Hessian& hs, double scale) {
  const double det = hs.det();
  if (std::abs(det) <= 1e-12 * scale * scale) return CriticalKind::degenerate;
  if (det < 0.0) return CriticalKind::saddle;
  return hs.rr < 0.0 ? CriticalKind::maximum : CriticalKind::minimum;
}

}  // namespace detail

/// Locate the interior critical point of F1 inside the admissible box,
/// starting from its center. Both solvers must land on the same point;
/// the fixed-point route follows the contraction-map construction, Newton
/// uses the analytic Hessian.
inline CriticalPointResult find_critical_point(
    const ReducedModel& md, CriticalSolver solver,
    const ParameterBox& box) {
  const double r_scale = box.r_center();
  const double h_scale = box.h_center();
  const auto big = box.inflated(2.0);

  double r = box.r_center(), h = box.h_center();
  CriticalPointResult out;
  out.solver = solver == CriticalSolver::fixed_point ? "fixed_point" : "newton";
  double prev_step = -1.0;

  const int max_iter = solver == CriticalSolver::fixed_point ? 300 : 80;
  for (int it = 0; it < max_iter; ++it) {
    double rn, hn;
    if (solver == CriticalSolver::fixed_point) {
      std::pair<double, double> mapped;
      try {
        mapped = fixed_point_map(md, r, h);
      } catch (const std::exception& e) {
        throw SolverDivergence(
            std::string("fixed-point iteration left the solvable region: ") +
                e.what(),
            out.trace);
      }
      // damping widens the basin at small k where the map is only
      // asymptotically contracting
      const double damp = it < 5 ? 0.5 : 1.0;
      rn = r + damp * (mapped.first - r);
      hn = h + damp * (mapped.second - h);
    } else {
      const auto g = grad_F1(md, r, h);
      const auto hs = hessian_F1(md, r, h);
      const double det = hs.det();
      if (std::abs(det) < 1e-300) {
        throw SolverDivergence("newton: singular Hessian", out.trace);
      }
      double dr = -(hs.hh * g[0] - hs.rh * g[1]) / det;
      double dh = -(-hs.rh * g[0] + hs.rr * g[1]) / det;
      const double gn = std::max(std::abs(g[0]), std::abs(g[1]));
      double lam = 1.0;
      for (int bt = 0; bt < 8; ++bt) {
        rn = r + lam * dr;
        hn = h + lam * dh;
        if (big.contains(rn, hn)) {
          const auto gt = grad_F1(md, rn, hn);
          if (std::max(std::abs(gt[0]), std::abs(gt[1])) <= 10.0 * gn) break;
        }
        lam *= 0.5;
      }
      rn = r + lam * dr;
      hn = h + lam * dh;
    }
    const double step =
        std::abs(rn - r) / r_scale + std::abs(hn - h) / h_scale;
    out.trace.push_back({rn, hn, prev_step > 0.0 ? step / prev_step : 0.0});
    prev_step = step;
    r = rn;
    h = hn;
    out.iterations = it + 1;
    if (!big.contains(r, h)) {
      throw SolverDivergence(
          "critical-point iterate left the doubled admissible box", out.trace);
    }
    if (step <= 2e-15) break;
  }

  out.r_star = r;
  out.h_star = h;
  const auto g = grad_F1(md, r, h);
  out.gradient_norm = std::max(std::abs(g[0]), std::abs(g[1]));
  out.hess = hessian_F1(md, r, h);
  out.kind = detail::classify(out.hess, std::abs(out.hess.rr) +
                                            std::abs(out.hess.hh) +
                                            std::abs(out.hess.rh));
  const double gscale =
      std::max(md.A1 / std::pow(r, md.m + 1.0), md.B1 / md.k);
  if (out.gradient_norm > 1e-12 * gscale) {
    throw SolverDivergence("critical point did not meet the gradient tolerance",
                           out.trace);
  }
  if (!box.contains(r, h)) {
    throw SolverDivergence("critical point landed outside the admissible box",
                           out.trace);
  }
  return out;
}

inline CriticalPointResult find_critical_point(const ReducedModel& md,
                                               CriticalSolver solver) {
  return find_critical_point(md, solver,
                             ParameterBox::admissible_default(md.k, md.m));
}

/// Scale factors of the two interaction exponentials at a critical point:
/// H k^m and G k^{m+2} stay bounded along the k-sweep, and G/H equals
/// 2πh/(√(1-h²)k) there exactly.
struct ScalingReport {
  double H_km = 0.0;
  double G_km2 = 0.0;
  double GH_identity = 0.0;  // G/H divided by 2πh/(√(1-h²)k); 1 at a zero
};

inline ScalingReport scaling_report(const CriticalPointResult& res,
                                    const ReducedModel& md) {
  const auto [H, G] = to_HG(md.k, res.r_star, res.h_star);
  ScalingReport rep;
  rep.H_km = H * std::pow(static_cast<double>(md.k), md.m);
  rep.G_km2 = G * std::pow(static_cast<double>(md.k), md.m + 2.0);
  const double q = std::sqrt(1.0 - res.h_star * res.h_star);
  rep.GH_identity =
      (G / H) / (2.0 * std::numbers::pi * res.h_star / (q * md.k));
  return rep;
}

/// The two computable ingredients of the forcing-size bound:
///   T1 = (∫ (V(|y + x̄1|) - 1)² U²)^{1/2}   (scales like 1/r^m)
///   T2 = Σ_{i>=2} e^{-min{p-1-τ,1}|x̄_i - x̄1|}
inline std::pair<double, double> lk_bound_terms(const DoublePolygonConfig& cfg,
                                                const GroundStateProfile& f,
                                                const PotentialModel& pot,
                                                double tau) {
  require(tau > 0.0 && tau < f.exponent - 1.0,
          "lk_bound_terms: tau must lie in (0, p-1)");
  require(cfg.dim == f.dimension, "lk_bound_terms: dimension mismatch");
  const int N = f.dimension;
  const double R = cfg.radius;
  const double hi = f.match_radius + 10.0;
  // angular average of (V-1)² about the shifted center
  auto outer = integrate_adaptive(
      [&](double s) {
        const double u = eval_U(f, s);
        if (u <= 0.0) return 0.0;
        auto inner = integrate_adaptive(
            [&](double theta) {
              const double w = std::sqrt(std::max(
                  s * s + R * R + 2.0 * s * R * std::cos(theta), 0.0));
              const double dv = pot(w) - 1.0;
              return dv * dv * std::pow(std::sin(theta), N - 2.0);
            },
            0.0, std::numbers::pi, 1e-10);
        return u * u * std::pow(s, N - 1.0) * inner.value;
      },
      0.0, hi, 1e-9);
  const double t1 = std::sqrt(sphere_area(N - 1) * outer.value);

  const double mu = std::min(f.exponent - 1.0 - tau, 1.0);
  KahanSum t2;
  for (int j = 1; j < cfg.k; ++j) {
    t2.add(std::exp(-mu * distance(cfg.upper(0), cfg.upper(j))));
  }
  return {t1, t2.value()};
}

}  // namespace multibump
