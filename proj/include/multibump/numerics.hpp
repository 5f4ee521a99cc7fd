#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace multibump {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Neumaier-compensated accumulator. Used wherever sums may exceed ~1e6
/// terms so that results do not depend on how partial sums are grouped.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void operator+=(double x) noexcept { add(x); }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// |S^{n-1}|, the surface measure of the unit sphere in R^n. |S^0| = 2.
inline double sphere_area(int n) {
  require(n >= 1, "sphere_area: n must be >= 1");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// x^p with a fast path for small integer p (the nonlinearity is evaluated
/// millions of times during shooting and field quadrature).
inline double pow_p(double x, double p) {
  const int ip = static_cast<int>(p);
  if (static_cast<double>(ip) == p && ip >= 0 && ip <= 8) {
    double r = 1.0;
    for (int i = 0; i < ip; ++i) r *= x;
    return r;
  }
  return std::pow(x, p);
}

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // conservative estimate (sum of panel |K15-G7|)
  long evaluations = 0;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights (positive half).
inline constexpr std::array<double, 8> kGkNodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr std::array<double, 8> kGkWeights = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <class F>
inline void gk15(F&& f, double a, double b, double& k15, double& g7) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f0 = f(mid);
  k15 = kGkWeights[7] * f0;
  g7 = kGaussWeights[3] * f0;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGkNodes[i];
    const double fi = f(mid + dx) + f(mid - dx);
    k15 += kGkWeights[i] * fi;
    if (i % 2 == 1) g7 += kGaussWeights[i / 2] * fi;
  }
  k15 *= half;
  g7 *= half;
}

template <class F>
inline void adapt_rec(F&& f, double a, double b, double tol, int depth,
                      KahanSum& acc, double& err_acc, long& evals) {
  double k15, g7;
  gk15(f, a, b, k15, g7);
  evals += 15;
  const double err = std::abs(k15 - g7);
  if (err <= tol || depth >= 52) {
    acc.add(k15);
    err_acc += err;
    return;
  }
  const double mid = 0.5 * (a + b);
  adapt_rec(f, a, mid, 0.5 * tol, depth + 1, acc, err_acc, evals);
  adapt_rec(f, mid, b, 0.5 * tol, depth + 1, acc, err_acc, evals);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a,b]. Deterministic:
/// left-to-right recursion, fixed summation order.
template <class F>
inline QuadResult integrate_adaptive(F&& f, double a, double b,
                                     double rel_tol = 1e-10,
                                     double abs_tol = 0.0) {
  if (a == b) return {0.0, 0.0, 0};
  double k15, g7;
  detail::gk15(f, a, b, k15, g7);
  const double scale = std::max(std::abs(k15), abs_tol);
  const double tol = std::max(rel_tol * scale, abs_tol);
  KahanSum acc;
  double err = 0.0;
  long evals = 0;
  detail::adapt_rec(f, a, b, std::max(tol, 1e-305), 0, acc, err, evals);
  return {acc.value(), err, evals};
}

/// Upper incomplete gamma Gamma(a, x) via the Lentz continued fraction.
/// Valid for x > 0 reasonably larger than a; we only call it deep in
/// exponential tails (x >= 10).
inline double upper_gamma(double a, double x) {
  require(x > 0.0, "upper_gamma: x must be positive");
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / (b == 0.0 ? tiny : b);
  double h = d;
  for (int i = 1; i <= 400; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x)) * h;
}

/// One classical RK4 step for a 2-component first order system.
template <class F>
inline std::array<double, 2> rk4_step(F&& f, double s,
                                      const std::array<double, 2>& y,
                                      double h) {
  const auto k1 = f(s, y);
  const std::array<double, 2> y2{y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]};
  const auto k2 = f(s + 0.5 * h, y2);
  const std::array<double, 2> y3{y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]};
  const auto k3 = f(s + 0.5 * h, y3);
  const std::array<double, 2> y4{y[0] + h * k3[0], y[1] + h * k3[1]};
  const auto k4 = f(s + h, y4);
  return {y[0] + h / 6.0 * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
          y[1] + h / 6.0 * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])};
}

/// n equal RK4 substeps across [s, s+h].
template <class F>
inline std::array<double, 2> rk4_march(F&& f, double s,
                                       std::array<double, 2> y, double h,
                                       int n) {
  const double hs = h / n;
  for (int i = 0; i < n; ++i) {
    y = rk4_step(f, s + i * hs, y, hs);
  }
  return y;
}

}  // namespace multibump
