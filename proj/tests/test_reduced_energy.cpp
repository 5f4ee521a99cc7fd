#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "multibump/reduced_energy.hpp"

using namespace multibump;

namespace {

std::filesystem::path test_cache_dir() {
  if (const char* env = std::getenv("MULTIBUMP_CACHE_DIR")) return env;
  return std::filesystem::temp_directory_path() / "multibump-test-cache";
}

const GroundStateProfile& p33() {
  static GroundStateProfile f =
      cached_ground_state(3, 3.0, 1e-10, test_cache_dir());
  return f;
}

const InteractionConstants& consts() {
  static InteractionConstants c = compute_constants(p33(), 1.0);
  return c;
}

ReducedModel model(double m, int k) {
  return ReducedModel::make(consts(), m, k);
}

// five-point central differences, step scaled to the argument; the
// constant A2 is subtracted before differencing, and the h-step stays at
// 1e-4 h: smaller steps push exp(-2rh) argument rounding (ulp ~ r h eps)
// above the quotient
std::array<double, 2> fd_gradient(const ReducedModel& md, double r, double h) {
  auto f = [&](double rr, double hh) { return F1(md, rr, hh) - md.A2; };
  const double er = 1e-6 * r, eh = 1e-4 * h;
  auto dr = (8.0 * (f(r + er, h) - f(r - er, h)) -
             (f(r + 2 * er, h) - f(r - 2 * er, h))) /
            (12.0 * er);
  auto dh = (8.0 * (f(r, h + eh) - f(r, h - eh)) -
             (f(r, h + 2 * eh) - f(r, h - 2 * eh))) /
            (12.0 * eh);
  return {dr, dh};
}

}  // namespace

TEST_CASE("F1 limiting forms") {
  auto md = model(2.0, 16);

  // B1 = 0: interaction terms vanish
  auto md0 = md;
  md0.B1 = 1e-300;  // make() rejects 0; the limit is what matters
  const double nointer = md0.A1 / (20.0 * 20.0) + md0.A2;
  CHECK(F1(md0, 20.0, 0.3) == Catch::Approx(nointer).epsilon(1e-12));

  // A1 = 0 at fixed h: both exponentials decay, so F1 increases in r
  auto mda = md;
  mda.A1 = 0.0;
  double prev = F1(mda, 5.0, 0.3);
  for (double r : {8.0, 12.0, 20.0, 35.0}) {
    const double cur = F1(mda, r, 0.3);
    CHECK(cur > prev);
    prev = cur;
  }

  CHECK_THROWS_AS(F1(md, -1.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(F1(md, 10.0, 1.0), std::invalid_argument);
}

TEST_CASE("F1 value at the k=16 admissible center is pinned") {
  // regression fixture: N=3, p=3, m=2, a=1, k=16, box-center (r,h)
  auto md = model(2.0, 16);
  const double klnk = 16.0 * std::log(16.0);
  const double r = 2.0 / (2.0 * std::numbers::pi) * klnk;
  const double h = std::numbers::pi * 4.0 / 2.0 / 16.0;
  const double v = F1(md, r, h);
  CHECK(std::isfinite(v));
  CHECK(v == Catch::Approx(37.472960260476).epsilon(2e-7));
}

TEST_CASE("analytic gradient matches finite differences at random box points") {
  auto md = model(2.0, 32);
  const auto box = ParameterBox::admissible_default(32, 2.0);
  std::mt19937 rng(271828);  // fixed seed: deterministic sampling
  std::uniform_real_distribution<double> ur(box.r_lo, box.r_hi);
  std::uniform_real_distribution<double> uh(box.h_lo, box.h_hi);
  for (int i = 0; i < 20; ++i) {
    const double r = ur(rng), h = uh(rng);
    const auto g = grad_F1(md, r, h);
    const auto fd = fd_gradient(md, r, h);
    const double scale = std::max({std::abs(g[0]), std::abs(g[1]), 1e-300});
    CHECK(std::abs(g[0] - fd[0]) <= 1e-6 * scale);
    CHECK(std::abs(g[1] - fd[1]) <= 1e-6 * scale);
  }

  // B1 = 0 kills the h-derivative identically
  auto md0 = md;
  md0.B1 = 1e-300;
  CHECK(grad_F1(md0, 20.0, 0.25)[1] == Catch::Approx(0.0).margin(1e-290));
}

TEST_CASE("analytic Hessian matches finite differences of the gradient") {
  auto md = model(2.0, 64);
  const auto box = ParameterBox::admissible_default(64, 2.0);
  const double r = box.r_center() * 1.21, h = box.h_center() * 0.83;
  const auto hs = hessian_F1(md, r, h);
  const double er = 1e-5 * r, eh = 1e-5 * h;
  const double frr =
      (grad_F1(md, r + er, h)[0] - grad_F1(md, r - er, h)[0]) / (2 * er);
  const double frh =
      (grad_F1(md, r, h + eh)[0] - grad_F1(md, r, h - eh)[0]) / (2 * eh);
  const double fhr =
      (grad_F1(md, r + er, h)[1] - grad_F1(md, r - er, h)[1]) / (2 * er);
  const double fhh =
      (grad_F1(md, r, h + eh)[1] - grad_F1(md, r, h - eh)[1]) / (2 * eh);
  CHECK(hs.rr == Catch::Approx(frr).epsilon(1e-5));
  CHECK(hs.rh == Catch::Approx(frh).epsilon(1e-5));
  CHECK(hs.rh == Catch::Approx(fhr).epsilon(1e-5));
  CHECK(hs.hh == Catch::Approx(fhh).epsilon(1e-5));
}

TEST_CASE("substitution round trip (r,h) -> (H,G) -> (r,h)") {
  const int k = 128;
  for (double r : {200.0, 300.0, 420.0}) {
    for (double h : {0.01, 0.035, 0.08}) {
      const auto [H, G] = to_HG(k, r, h);
      const auto [r2, h2] = from_HG(k, H, G);
      CHECK(r2 == Catch::Approx(r).epsilon(1e-12));
      CHECK(h2 == Catch::Approx(h).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(from_HG(16, 1.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(from_HG(16, 0.5, -0.1), std::invalid_argument);
}

TEST_CASE("critical point: gradient zero is equivalent to the HG system") {
  auto md = model(2.0, 256);
  const auto res = find_critical_point(md, CriticalSolver::newton);
  // residual substitution of the quoted right-hand sides
  const auto [H, G] = to_HG(md.k, res.r_star, res.h_star);
  const auto [Ht, Gt] = critical_HG_targets(md, res.r_star, res.h_star);
  CHECK(H == Catch::Approx(Ht).epsilon(1e-10));
  CHECK(G == Catch::Approx(Gt).epsilon(1e-10));

  // the H-equation alone reproduces the combined stationarity equation
  const double q = std::sqrt(1.0 - res.h_star * res.h_star);
  const double combined =
      -md.A1 * md.m / std::pow(res.r_star, md.m + 1.0) +
      4.0 * md.B1 * std::numbers::pi * H / md.k *
          (q + res.h_star * res.h_star / q);
  CHECK(std::abs(combined) <=
        1e-10 * md.A1 * md.m / std::pow(res.r_star, md.m + 1.0));
}

TEST_CASE("fixed-point map: exact vs asymptotic form") {
  // deviation of the asymptotic map from the exact one shrinks with k
  double dev_small = 0.0, dev_large = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    const int k = pass == 0 ? 64 : 4096;
    auto md = model(2.0, k);
    const auto box = ParameterBox::admissible_default(k, md.m);
    const double r = box.r_center(), h = box.h_center();
    const auto ex = fixed_point_map(md, r, h);
    const auto as = fixed_point_map_asymptotic(md, r, h);
    const double dev = std::abs(as.first / ex.first - 1.0) +
                       std::abs(as.second / ex.second - 1.0);
    (pass == 0 ? dev_small : dev_large) = dev;
  }
  CHECK(dev_large < dev_small);
}

TEST_CASE("fixed-point map contracts near the solution, more strongly as k grows") {
  double prev_ratio = 2.0;
  for (int k : {64, 512, 4096}) {
    auto md = model(2.0, k);
    const auto res = find_critical_point(md, CriticalSolver::newton);
    const auto box = ParameterBox::admissible_default(k, md.m);
    const double dr = 0.02 * box.r_center(), dh = 0.02 * box.h_center();
    // sampled pairs around the fixed point, box-scaled displacement norm
    double worst = 0.0;
    const std::array<std::array<double, 2>, 3> offs{
        {{1.0, 0.7}, {-0.8, 0.4}, {0.5, -1.0}}};
    for (const auto& o : offs) {
      const double r1 = res.r_star + o[0] * dr, h1 = res.h_star + o[1] * dh;
      const auto m1 = fixed_point_map(md, r1, h1);
      const double num = std::abs(m1.first - res.r_star) / box.r_center() +
                         std::abs(m1.second - res.h_star) / box.h_center();
      const double den = std::abs(r1 - res.r_star) / box.r_center() +
                         std::abs(h1 - res.h_star) / box.h_center();
      worst = std::max(worst, num / den);
    }
    CHECK(worst < 1.0);
    CHECK(worst < prev_ratio);
    prev_ratio = worst;
  }
}

TEST_CASE("asymptotic map guards its logarithm domain") {
  auto md = model(2.0, 16);
  // ln k = (m+1) ln r at r = k^{1/(m+1)}
  const double bad_r = std::pow(16.0, 1.0 / 3.0);
  CHECK_THROWS(fixed_point_map_asymptotic(md, bad_r, 0.3));
}

TEST_CASE("fixed point of the map is a zero of the gradient") {
  auto md = model(2.0, 128);
  const auto fp = find_critical_point(md, CriticalSolver::fixed_point);
  const auto mapped = fixed_point_map(md, fp.r_star, fp.h_star);
  CHECK(mapped.first == Catch::Approx(fp.r_star).epsilon(1e-10));
  CHECK(mapped.second == Catch::Approx(fp.h_star).epsilon(1e-10));
}

TEST_CASE("solvers agree and find an interior maximum along the sweep") {
  for (int expo : {4, 7, 10, 12}) {
    const int k = 1 << expo;
    auto md = model(2.0, k);
    const auto fp = find_critical_point(md, CriticalSolver::fixed_point);
    const auto nw = find_critical_point(md, CriticalSolver::newton);
    CHECK(std::abs(fp.r_star - nw.r_star) <= 1e-10 * nw.r_star);
    CHECK(std::abs(fp.h_star - nw.h_star) <= 1e-10 * nw.h_star);
    CHECK(fp.kind == CriticalKind::maximum);
    CHECK(nw.kind == CriticalKind::maximum);
    CHECK(nw.hess.rr < 0.0);
    CHECK(nw.hess.hh < 0.0);
    CHECK(nw.hess.det() > 0.0);
    CHECK(!fp.trace.empty());
    const double gscale =
        std::max(md.A1 / std::pow(nw.r_star, md.m + 1.0), md.B1 / md.k);
    CHECK(nw.gradient_norm <= 1e-12 * gscale);

    // interior maximum dominates the corners of the admissible box
    const auto box = ParameterBox::admissible_default(k, md.m);
    const double fstar = F1(md, nw.r_star, nw.h_star);
    for (double r : {box.r_lo, box.r_hi}) {
      for (double h : {box.h_lo, box.h_hi}) {
        CHECK(fstar >= F1(md, r, h));
      }
    }
  }
}

TEST_CASE("critical-point scalings approach their leading coefficients monotonically") {
  for (double m : {1.5, 2.0, 3.0}) {
    double prev_r = 1e9, prev_h = 1e9;
    for (int expo = 4; expo <= 12; ++expo) {
      const int k = 1 << expo;
      auto md = model(m, k);
      const auto res = find_critical_point(md, CriticalSolver::newton);
      const double klnk = k * std::log(static_cast<double>(k));
      const double rdev =
          std::abs(res.r_star / klnk / (m / (2.0 * std::numbers::pi)) - 1.0);
      const double hdev = std::abs(
          res.h_star * k / (std::numbers::pi * (m + 2.0) / m) - 1.0);
      CHECK(rdev < prev_r);
      CHECK(hdev < prev_h);
      prev_r = rdev;
      prev_h = hdev;
    }
  }
}

TEST_CASE("scaling report: bounded products and the exact G/H identity") {
  std::vector<double> hkm, gkm2;
  for (int expo = 4; expo <= 12; ++expo) {
    const int k = 1 << expo;
    auto md = model(2.0, k);
    const auto res = find_critical_point(md, CriticalSolver::newton);
    const auto rep = scaling_report(res, md);
    hkm.push_back(rep.H_km);
    gkm2.push_back(rep.G_km2);
    CHECK(rep.GH_identity == Catch::Approx(1.0).epsilon(1e-9));
  }
  const auto [hmin, hmax] = std::minmax_element(hkm.begin(), hkm.end());
  const auto [gmin, gmax] = std::minmax_element(gkm2.begin(), gkm2.end());
  // bounded along the sweep; the products decay like 1/(ln k)^{m+1}, a
  // spread of ~14x over 2^4..2^12, so 30x is the sanity bound here
  CHECK(*hmax / *hmin < 30.0);
  CHECK(*gmax / *gmin < 30.0);
}

TEST_CASE("solver divergence reports a trace") {
  auto md = model(2.0, 16);
  md.A1 *= 50.0;  // push the root far outside the admissible box
  for (auto sv : {CriticalSolver::fixed_point, CriticalSolver::newton}) {
    try {
      find_critical_point(md, sv);
      FAIL("expected divergence");
    } catch (const SolverDivergence& e) {
      if (sv == CriticalSolver::newton) CHECK(!e.trace.empty());
    }
  }
}

TEST_CASE("forcing-term ingredients stay on their predicted scales") {
  const auto& f = p33();
  const PotentialModel pot = PotentialModel::make(1.0, 2.0);
  const double tau = 0.1;
  std::vector<double> t1r, t2e;
  for (int expo = 4; expo <= 9; ++expo) {
    const int k = 1 << expo;
    auto md = model(2.0, k);
    const auto res = find_critical_point(md, CriticalSolver::newton);
    const auto cfg = build_config(k, res.r_star, res.h_star, 3);
    const auto [t1, t2] = lk_bound_terms(cfg, f, pot, tau);
    CHECK(std::isfinite(t1));
    CHECK(std::isfinite(t2));
    const double mu = std::min(f.exponent - 1.0 - tau, 1.0);
    const double q = std::sqrt(1.0 - res.h_star * res.h_star);
    t1r.push_back(t1 * std::pow(res.r_star, md.m));
    t2e.push_back(t2 *
                  std::exp(mu * 2.0 * std::numbers::pi * q * res.r_star / k));
  }
  const auto [a, b] = std::minmax_element(t1r.begin(), t1r.end());
  CHECK(*b / *a <= 5.0);
  const auto [c, d] = std::minmax_element(t2e.begin(), t2e.end());
  CHECK(*d / *c <= 5.0);

  // a = 0 potential leaves no forcing from the trap
  const auto cfg8 = build_config(8, 10.4, 0.4, 3);
  const auto [t10, t20] =
      lk_bound_terms(cfg8, f, PotentialModel::make(0.0, 2.0), tau);
  CHECK(t10 == 0.0);
  CHECK(t20 > 0.0);
  CHECK_THROWS_AS(lk_bound_terms(cfg8, f, pot, 5.0), std::invalid_argument);
}
