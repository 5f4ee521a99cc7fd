#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "multibump/numerics.hpp"

namespace multibump {

/// Tabulated radial bump U solving U'' + (N-1)/s U' - U + U^p = 0 with
/// U'(0) = 0, U > 0, U -> 0. Immutable once constructed; safe to read from
/// many threads.
struct GroundStateProfile {
  int dimension = 0;    // N
  double exponent = 0.0;  // p
  double tol = 0.0;
  std::vector<double> s;   // grid radii, s[0] = 0, nondecreasing
  std::vector<double> u;   // values, strictly positive
  std::vector<double> du;  // derivatives, du[0] = 0, negative beyond
  double match_radius = 0.0;   // serving switches to the far-field law here
  double tail_constant = 0.0;  // C with U(s) e^s s^{(N-1)/2} -> C
  double shoot_value = 0.0;    // U(0)
  double residual_norm = 0.0;  // max per-unit-length integrator defect

  // serving internals
  double tail_scale = 0.0;   // law coefficient matched at match_radius
  double uniform_h = 0.0;    // spacing of the uniform grid section
  double uniform_s0 = 0.0;   // first uniform node
  std::size_t uniform_i0 = 0;
};

struct GroundStateOptions {
  double match_radius = 25.0;
  double spacing = 1e-3;   // uniform grid spacing
  double far_margin = 6.0; // grid extends this far beyond match_radius
};

class ShootingBracketError : public std::runtime_error {
 public:
  ShootingBracketError(const std::string& msg, double lo, double hi)
      : std::runtime_error(msg + " [bracket " + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]"),
        bracket_lo(lo),
        bracket_hi(hi) {}
  double bracket_lo;
  double bracket_hi;
};

class ProfileCacheError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ShotOutcome { crossing, rebound, undecided };

namespace detail {

// Far-field shape phi(s) = e^{-s} s^{-(N-1)/2} S(s), where S is the
// modified-Bessel asymptotic series for index (N-2)/2, truncated at the
// first non-decreasing term. S == 1 exactly for N = 1 and N = 3.
struct TailLaw {
  int dim = 3;

  // returns {S, S'}
  std::array<double, 2> series(double s) const {
    const double fourmu2 = (dim - 2.0) * (dim - 2.0);
    double term = 1.0, sum = 1.0, dsum = 0.0;
    for (int n = 1; n <= 12; ++n) {
      const double num = fourmu2 - (2.0 * n - 1.0) * (2.0 * n - 1.0);
      if (num == 0.0) break;
      const double next = term * num / (8.0 * n * s);
      if (std::abs(next) >= std::abs(term)) break;  // past optimal truncation
      sum += next;
      dsum += -n * next / s;
      term = next;
      if (std::abs(next) < 1e-17 * std::abs(sum)) break;
    }
    return {sum, dsum};
  }

  double value(double s) const {
    const double nu = 0.5 * (dim - 1);
    return std::exp(-s) * std::pow(s, -nu) * series(s)[0];
  }

  // d/ds log phi
  double dlog(double s) const {
    const double nu = 0.5 * (dim - 1);
    const auto S = series(s);
    return -1.0 - nu / s + S[1] / S[0];
  }

  double deriv(double s) const { return value(s) * dlog(s); }
};

struct RadialRhs {
  int N;
  double p;
  std::array<double, 2> operator()(double s, const std::array<double, 2>& y) const {
    // u'' = u - u^p - (N-1)/s u'; negative u clamped in the power so a
    // crossing shot stays finite past the zero.
    const double up = y[0] > 0.0 ? pow_p(y[0], p) : 0.0;
    double d2 = y[0] - up;
    if (N > 1) d2 -= (N - 1) / s * y[1];
    return {y[1], d2};
  }
};

// RK4 substeps per grid interval. Near the origin the 1/s coefficient
// inflates the local truncation error like 1/s^3, so substep counts grow
// as s shrinks. The count depends on s only, never on the spacing, which
// keeps the grid residual scaling like h^4 under refinement.
inline int substeps(double s_left, double /*h*/) {
  const double n = std::ceil(std::pow(0.6 / std::max(s_left, 1e-4), 0.75));
  return n < 1.0 ? 1 : (n > 64.0 ? 64 : static_cast<int>(n));
}

// Series start near the origin: u = b + a2 s^2 + a4 s^4 + a6 s^6.
struct OriginSeries {
  double a0, a2, a4, a6;
  OriginSeries(int N, double p, double b) {
    a0 = b;
    const double bp = std::pow(b, p);
    a2 = (b - bp) / (2.0 * N);
    const double lin = 1.0 - p * std::pow(b, p - 1.0);
    a4 = lin * a2 / (4.0 * (N + 2.0));
    a6 = (lin * a4 - 0.5 * p * (p - 1.0) * std::pow(b, p - 2.0) * a2 * a2) /
         (6.0 * (N + 4.0));
  }
  double value(double s) const {
    const double s2 = s * s;
    return a0 + s2 * (a2 + s2 * (a4 + s2 * a6));
  }
  double deriv(double s) const {
    const double s2 = s * s;
    return s * (2.0 * a2 + s2 * (4.0 * a4 + s2 * 6.0 * a6));
  }
};

inline std::vector<double> make_grid(double spacing, double far_radius) {
  std::vector<double> g;
  g.push_back(0.0);
  double s = 1e-4;
  while (s < spacing) {  // geometric ramp away from the 1/s coefficient
    g.push_back(s);
    s *= 2.0;
  }
  g.push_back(s);
  double cur = s;
  while (cur < far_radius - 0.5 * spacing) {
    cur += spacing;
    g.push_back(cur);
  }
  return g;
}

struct ShotRecord {
  ShotOutcome outcome = ShotOutcome::undecided;
  std::size_t event_index = 0;  // node where the event fired
  std::vector<double> u, du;    // filled only when requested
};

// March RK4 node-to-node from the series start at grid[1]; stop at the
// first crossing (u <= 0) or rebound (u' >= 0 while u > 0).
inline ShotRecord shoot(int N, double p, double b,
                        const std::vector<double>& grid, bool record) {
  RadialRhs rhs{N, p};
  OriginSeries series(N, p, b);
  ShotRecord rec;
  if (record) {
    rec.u.assign(grid.size(), 0.0);
    rec.du.assign(grid.size(), 0.0);
    rec.u[0] = b;
    rec.du[0] = 0.0;
  }
  std::array<double, 2> y{series.value(grid[1]), series.deriv(grid[1])};
  if (record) {
    rec.u[1] = y[0];
    rec.du[1] = y[1];
  }
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double h = grid[i + 1] - grid[i];
    y = rk4_march(rhs, grid[i], y, h, substeps(grid[i], h));
    if (record) {
      rec.u[i + 1] = y[0];
      rec.du[i + 1] = y[1];
    }
    if (!(y[0] > 0.0)) {  // also catches NaN
      rec.outcome = ShotOutcome::crossing;
      rec.event_index = i + 1;
      return rec;
    }
    if (y[1] >= 0.0) {
      rec.outcome = ShotOutcome::rebound;
      rec.event_index = i + 1;
      return rec;
    }
  }
  rec.outcome = ShotOutcome::undecided;
  rec.event_index = grid.size() - 1;
  return rec;
}

}  // namespace detail

/// Classify a single shot with height U(0) = b: does it cross zero or
/// rebound before decaying? Exposed for the bracket-monotonicity checks.
inline ShotOutcome classify_shot(int N, double p, double b,
                                 double spacing = 1e-3,
                                 double far_radius = 31.0) {
  const auto grid = detail::make_grid(spacing, far_radius);
  return detail::shoot(N, p, b, grid, false).outcome;
}

namespace detail {

inline void check_params(int N, double p) {
  require(N >= 1, "solve_ground_state: N must be >= 1");
  require(p > 1.0, "solve_ground_state: p must be > 1");
  if (N >= 3) {
    require(p < (N + 2.0) / (N - 2.0),
            "solve_ground_state: supercritical exponent p >= (N+2)/(N-2)");
  }
}

// Relative least-squares fit of the tail constant against the law shape
// over grid nodes in [s_lo, s_hi].
inline double fit_constant(const std::vector<double>& s,
                           const std::vector<double>& u, const TailLaw& law,
                           double s_lo, double s_hi) {
  KahanSum acc;
  long n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < s_lo || s[i] > s_hi) continue;
    acc.add(u[i] / law.value(s[i]));
    ++n;
  }
  require(n > 0, "tail fit window contains no grid nodes");
  return acc.value() / n;
}

}  // namespace detail

/// Shooting + bisection solve of the radial ground-state ODE. The far
/// grid section is produced by integrating the decaying branch inward
/// from beyond the match radius, which keeps the stored trajectory clean
/// where outward shooting is contaminated by the growing mode.
inline GroundStateProfile solve_ground_state(
    int N, double p, double tol = 1e-10,
    const GroundStateOptions& opts = {}) {
  detail::check_params(N, p);
  require(tol > 0.0, "solve_ground_state: tol must be positive");
  require(opts.match_radius >= 10.0, "match_radius must be >= 10");
  require(opts.spacing > 0.0 && opts.spacing <= 0.05,
          "spacing must lie in (0, 0.05]");

  const double far_radius = opts.match_radius + opts.far_margin;
  const auto grid = detail::make_grid(opts.spacing, far_radius);
  detail::RadialRhs rhs{N, p};

  // --- bracket the shoot height ---------------------------------------
  double lo = 1.0 + 1e-6;
  if (detail::shoot(N, p, lo, grid, false).outcome != ShotOutcome::rebound) {
    throw ShootingBracketError("lower shot does not rebound", lo, lo);
  }
  double hi = 2.0;
  while (detail::shoot(N, p, hi, grid, false).outcome != ShotOutcome::crossing) {
    hi *= 2.0;
    if (hi > 1e8) throw ShootingBracketError("no crossing shot found", lo, hi);
  }

  // --- bisection to machine precision ----------------------------------
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket collapsed to ulp
    const auto out = detail::shoot(N, p, mid, grid, false).outcome;
    if (out == ShotOutcome::crossing) {
      hi = mid;
    } else if (out == ShotOutcome::rebound) {
      lo = mid;
    } else {
      throw ShootingBracketError("undecided shot inside bracket", lo, hi);
    }
  }
  const double b = 0.5 * (lo + hi);

  // --- outward fill and glue-point selection ---------------------------
  auto mid_rec = detail::shoot(N, p, b, grid, true);
  const auto lo_rec = detail::shoot(N, p, lo, grid, true);
  const auto hi_rec = detail::shoot(N, p, hi, grid, true);
  const std::size_t usable =
      std::min({mid_rec.event_index, lo_rec.event_index, hi_rec.event_index});

  // largest radius where the final bracket endpoints still agree
  std::size_t agree = 0;
  for (std::size_t i = 0; i < usable; ++i) {
    const double diff = std::abs(lo_rec.u[i] - hi_rec.u[i]);
    if (diff <= 1e-11 * std::abs(mid_rec.u[i])) agree = i;
  }
  const double s_agree = grid[agree];
  if (s_agree < 5.0) {
    throw ShootingBracketError("bracket trajectories diverge too early", lo, hi);
  }
  double s_glue = std::clamp(s_agree - 1.0, 4.0, opts.match_radius - 2.0);
  std::size_t glue_idx = 0;
  while (glue_idx + 1 < grid.size() && grid[glue_idx + 1] <= s_glue) ++glue_idx;
  if (grid[glue_idx] < 4.0 || glue_idx >= usable) {
    throw ShootingBracketError("shot too contaminated to reach glue radius",
                               lo, hi);
  }

  // --- inward fill of the decaying branch ------------------------------
  detail::TailLaw law{N};
  double c_seed = detail::fit_constant(
      grid, mid_rec.u, law, std::max(grid[glue_idx] - 2.0, 3.0), grid[glue_idx]);
  std::vector<double> in_u(grid.size(), 0.0), in_du(grid.size(), 0.0);
  for (int pass = 0; pass < 8; ++pass) {
    const double sf = grid.back();
    std::array<double, 2> y{c_seed * law.value(sf), c_seed * law.deriv(sf)};
    in_u.back() = y[0];
    in_du.back() = y[1];
    for (std::size_t i = grid.size() - 1; i > glue_idx; --i) {
      const double h = grid[i - 1] - grid[i];
      y = rk4_march(rhs, grid[i], y, h, detail::substeps(grid[i - 1], -h));
      in_u[i - 1] = y[0];
      in_du[i - 1] = y[1];
    }
    const double lambda = mid_rec.u[glue_idx] / in_u[glue_idx];
    c_seed *= lambda;
    if (std::abs(lambda - 1.0) < 1e-11) break;
  }

  GroundStateProfile prof;
  prof.dimension = N;
  prof.exponent = p;
  prof.tol = tol;
  prof.s = grid;
  prof.u.resize(grid.size());
  prof.du.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool outward = i <= glue_idx;
    prof.u[i] = outward ? mid_rec.u[i] : in_u[i];
    prof.du[i] = outward ? mid_rec.du[i] : in_du[i];
  }
  prof.shoot_value = b;

  // locate the uniform section for O(1) interval lookup
  prof.uniform_h = grid.back() - grid[grid.size() - 2];
  prof.uniform_i0 = 0;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    if (std::abs((grid[i + 1] - grid[i]) - prof.uniform_h) <
        1e-12 * prof.uniform_h) {
      prof.uniform_i0 = i;
      break;
    }
  }
  prof.uniform_s0 = grid[prof.uniform_i0];

  // pin the match radius to the nearest grid node
  std::size_t im = prof.uniform_i0 +
                   static_cast<std::size_t>(std::llround(
                       (opts.match_radius - prof.uniform_s0) / prof.uniform_h));
  im = std::min(im, grid.size() - 1);
  prof.match_radius = grid[im];
  prof.tail_scale = prof.u[im] / law.value(prof.match_radius);
  prof.tail_constant = detail::fit_constant(grid, prof.u, law,
                                            prof.match_radius - 2.0,
                                            prof.match_radius);

  // --- defect residual: re-integrate each interval 4x finer ------------
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double h = grid[i + 1] - grid[i];
    const auto fine = rk4_march(rhs, grid[i], {prof.u[i], prof.du[i]}, h,
                                4 * detail::substeps(grid[i], h));
    const double d = std::max(std::abs(fine[0] - prof.u[i + 1]),
                              std::abs(fine[1] - prof.du[i + 1]));
    worst = std::max(worst, d / h);
  }
  prof.residual_norm = worst;
  if (prof.residual_norm > tol) {
    throw std::runtime_error(
        "solve_ground_state: grid residual " +
        std::to_string(prof.residual_norm) +
        " exceeds tol; decrease spacing or loosen tol");
  }
  return prof;
}

namespace detail {

inline std::size_t locate(const GroundStateProfile& f, double s) {
  if (s >= f.uniform_s0) {
    const auto off = static_cast<std::size_t>((s - f.uniform_s0) / f.uniform_h);
    return std::min(f.uniform_i0 + off, f.s.size() - 2);
  }
  std::size_t i = 0;
  while (i + 2 < f.s.size() && f.s[i + 1] <= s) ++i;
  return i;
}

// Cubic Hermite of log U on the bracketing interval; positivity for free.
inline std::array<double, 2> eval_log_hermite(const GroundStateProfile& f,
                                              double s) {
  const std::size_t i = locate(f, s);
  const double s0 = f.s[i], s1 = f.s[i + 1], h = s1 - s0;
  const double t = (s - s0) / h;
  const double y0 = std::log(f.u[i]), y1 = std::log(f.u[i + 1]);
  const double m0 = f.du[i] / f.u[i] * h, m1 = f.du[i + 1] / f.u[i + 1] * h;
  const double t2 = t * t, t3 = t2 * t;
  const double H = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 +
                   (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
  const double dH = ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * m0 +
                     (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * m1) / h;
  return {H, dH};
}

}  // namespace detail

/// Serve U(s); interpolated on-grid, far-field law beyond match_radius.
inline double eval_U(const GroundStateProfile& f, double s) {
  require(s >= 0.0, "eval_U: s must be >= 0");
  if (s >= f.match_radius) {
    return f.tail_scale * detail::TailLaw{f.dimension}.value(s);
  }
  const auto H = detail::eval_log_hermite(f, s);
  double v = std::exp(H[0]);
  // monotone safeguard: U decreases, so clamp to the endpoint values
  const std::size_t i = detail::locate(f, s);
  if (i >= 1) v = std::clamp(v, f.u[i + 1], f.u[i]);
  return v;
}

/// Serve U'(s).
inline double eval_dU(const GroundStateProfile& f, double s) {
  require(s >= 0.0, "eval_dU: s must be >= 0");
  if (s >= f.match_radius) {
    return f.tail_scale * detail::TailLaw{f.dimension}.deriv(s);
  }
  const auto H = detail::eval_log_hermite(f, s);
  return H[1] * std::exp(H[0]);
}

/// Refit the decay constant over [s_hi - 2, s_hi]; exposed so stability
/// under a larger match radius can be probed directly.
inline double fit_tail_constant(const GroundStateProfile& f, double s_hi) {
  require(s_hi <= f.s.back() && s_hi > 4.0, "fit window outside grid");
  return detail::fit_constant(f.s, f.u, detail::TailLaw{f.dimension},
                              s_hi - 2.0, s_hi);
}

/// The constant C of the far-field law U(s) e^s s^{(N-1)/2} -> C.
/// Throws if the plateau has not been reached on the fit window.
inline double decay_constant(const GroundStateProfile& f) {
  const detail::TailLaw law{f.dimension};
  double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
  for (std::size_t i = 0; i < f.s.size(); ++i) {
    if (f.s[i] < f.match_radius - 4.0 || f.s[i] > f.match_radius) continue;
    const double c = f.u[i] / law.value(f.s[i]);
    mn = std::min(mn, c);
    mx = std::max(mx, c);
  }
  if (!(mx > 0.0) || (mx - mn) > 0.01 * mx) {
    throw std::runtime_error(
        "decay_constant: tail plateau not reached on the fit window");
  }
  return f.tail_constant;
}

// ---------------------------------------------------------------------
// Profile cache: versioned binary file of little-endian doubles.

namespace detail {

inline constexpr char kCacheMagic[8] = {'M', 'B', 'G', 'S', 'P', 'R', 'O', 'F'};
inline constexpr std::uint32_t kCacheVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "profile cache assumes a little-endian host");

template <class T>
inline void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
inline void get(std::ifstream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace detail

inline void save_profile(const GroundStateProfile& f,
                         const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ProfileCacheError("cannot open cache file for writing: " +
                                   path.string());
  os.write(detail::kCacheMagic, 8);
  detail::put(os, detail::kCacheVersion);
  detail::put(os, static_cast<std::int32_t>(f.dimension));
  detail::put(os, f.exponent);
  detail::put(os, f.tol);
  detail::put(os, f.match_radius);
  detail::put(os, static_cast<std::uint64_t>(f.s.size()));
  for (const auto* arr : {&f.s, &f.u, &f.du}) {
    os.write(reinterpret_cast<const char*>(arr->data()),
             static_cast<std::streamsize>(arr->size() * sizeof(double)));
  }
  if (!os) throw ProfileCacheError("short write to cache file: " + path.string());
}

inline GroundStateProfile load_profile(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ProfileCacheError("cannot open cache file: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kCacheMagic, 8) != 0) {
    throw ProfileCacheError("bad cache magic: " + path.string());
  }
  std::uint32_t version = 0;
  detail::get(is, version);
  if (version != detail::kCacheVersion) {
    throw ProfileCacheError("cache version mismatch in " + path.string());
  }
  GroundStateProfile f;
  std::int32_t dim = 0;
  detail::get(is, dim);
  f.dimension = dim;
  detail::get(is, f.exponent);
  detail::get(is, f.tol);
  detail::get(is, f.match_radius);
  std::uint64_t n = 0;
  detail::get(is, n);
  if (!is || n == 0 || n > (1u << 28)) {
    throw ProfileCacheError("corrupt cache header: " + path.string());
  }
  f.s.resize(n);
  f.u.resize(n);
  f.du.resize(n);
  for (auto* arr : {&f.s, &f.u, &f.du}) {
    is.read(reinterpret_cast<char*>(arr->data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!is) throw ProfileCacheError("short read from cache file: " + path.string());

  // derived serving state
  f.shoot_value = f.u[0];
  f.uniform_h = f.s[n - 1] - f.s[n - 2];
  f.uniform_i0 = 0;
  for (std::size_t i = 1; i + 1 < f.s.size(); ++i) {
    if (std::abs((f.s[i + 1] - f.s[i]) - f.uniform_h) < 1e-12 * f.uniform_h) {
      f.uniform_i0 = i;
      break;
    }
  }
  f.uniform_s0 = f.s[f.uniform_i0];
  const detail::TailLaw law{f.dimension};
  std::size_t im = f.uniform_i0 +
                   static_cast<std::size_t>(std::llround(
                       (f.match_radius - f.uniform_s0) / f.uniform_h));
  im = std::min(im, f.s.size() - 1);
  f.tail_scale = f.u[im] / law.value(f.match_radius);
  f.tail_constant = detail::fit_constant(f.s, f.u, law, f.match_radius - 2.0,
                                         f.match_radius);

  detail::RadialRhs rhs{f.dimension, f.exponent};
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < f.s.size(); ++i) {
    const double h = f.s[i + 1] - f.s[i];
    const auto fine = rk4_march(rhs, f.s[i], {f.u[i], f.du[i]}, h,
                                4 * detail::substeps(f.s[i], h));
    worst = std::max(worst, std::max(std::abs(fine[0] - f.u[i + 1]),
                                     std::abs(fine[1] - f.du[i + 1])) / h);
  }
  f.residual_norm = worst;
  return f;
}

inline std::string profile_cache_name(int N, double p, double tol) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "profile_N%d_p%.12g_tol%.3g.bin", N, p, tol);
  return buf;
}

/// Load the profile from the cache directory, solving and saving on miss.
inline GroundStateProfile cached_ground_state(
    int N, double p, double tol, const std::filesystem::path& cache_dir,
    const GroundStateOptions& opts = {}) {
  const auto path = cache_dir / profile_cache_name(N, p, tol);
  if (std::filesystem::exists(path)) {
    auto f = load_profile(path);
    if (f.dimension == N && f.exponent == p && f.tol == tol) return f;
  }
  auto f = solve_ground_state(N, p, tol, opts);
  std::filesystem::create_directories(cache_dir);
  save_profile(f, path);
  return f;
}

}  // namespace multibump
