#pragma once

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "multibump/field_energy.hpp"
#include "multibump/reduced_energy.hpp"
#include "multibump/spectral.hpp"

namespace multibump {

struct CheckResult {
  std::string id;
  std::string law;    // what the check validates, in plain words
  bool passed = false;
  std::string detail; // measured numbers; deterministic formatting
};

struct ValidateOptions {
  bool quick = false;
  std::filesystem::path cache_dir = ".multibump-cache";
};

namespace detail {

inline std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

class CheckBuilder {
 public:
  explicit CheckBuilder(std::string id, std::string law) {
    res_.id = std::move(id);
    res_.law = std::move(law);
    res_.passed = true;
  }
  void expect(bool ok, const std::string& what) {
    if (!ok) res_.passed = false;
    res_.detail += (ok ? "[ok] " : "[FAIL] ") + what + "; ";
  }
  void note(const std::string& what) { res_.detail += what + "; "; }
  CheckResult finish() { return res_; }

 private:
  CheckResult res_;
};

inline double now_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace detail

/// Criterion 1: the shooting solver against the 1D closed form, plus the
/// variational identities for three (N, p) pairs.
inline CheckResult check_ground_state_oracle(const ValidateOptions& opt) {
  detail::CheckBuilder c("criterion-1", "ground-state profile and decay law");
  auto t0 = std::chrono::steady_clock::now();
  const auto f13 = solve_ground_state(1, 3.0, 1e-10);
  const double t_solve = detail::now_seconds(t0);
  double worst = 0.0;
  for (double s = 0.0; s <= 20.0; s += 0.01) {
    worst = std::max(worst,
                     std::abs(eval_U(f13, s) - std::sqrt(2.0) / std::cosh(s)));
  }
  c.expect(worst <= 1e-8,
           detail::fmt("1D closed-form max error %.3g (<= 1e-8)", worst));
  c.expect(t_solve <= 1.0,
           detail::fmt("solve time %.3f s (<= 1 s)", t_solve));

  struct Pair {
    int N;
    double p;
  };
  std::vector<Pair> cases{{3, 2.0}, {3, 3.0}};
  if (!opt.quick) cases.push_back({4, 2.0});
  for (const auto& cs : cases) {
    auto t1 = std::chrono::steady_clock::now();
    const auto f = cached_ground_state(cs.N, cs.p, 1e-10, opt.cache_dir);
    const double ts = detail::now_seconds(t1);
    const double g2 = gradient_moment(f);
    const double m2 = radial_moment(f, 2.0);
    const double mp = radial_moment(f, cs.p + 1.0);
    const double nehari = std::abs(g2 + m2 - mp) / mp;
    const double poho = std::abs(0.5 * (cs.N - 2.0) * g2 + 0.5 * cs.N * m2 -
                                 cs.N / (cs.p + 1.0) * mp) /
                        (cs.N / (cs.p + 1.0) * mp);
    c.expect(nehari <= 1e-6, detail::fmt("N=%d p=%.3g variational identity %.3g",
                                         cs.N, cs.p, nehari));
    c.expect(poho <= 1e-6, detail::fmt("N=%d p=%.3g virial identity %.3g",
                                       cs.N, cs.p, poho));
    c.note(detail::fmt("N=%d p=%.3g profile %.3f s", cs.N, cs.p, ts));
  }
  return c.finish();
}

/// Criterion 2: kernel of the linearized operator sits exactly in the
/// translation block.
inline CheckResult check_nondegeneracy(const ValidateOptions& opt) {
  detail::CheckBuilder c("criterion-2",
                         "linearized-operator kernel (translation modes)");
  auto t0 = std::chrono::steady_clock::now();
  const auto f = cached_ground_state(3, 3.0, 1e-10, opt.cache_dir);
  const int n = opt.quick ? 4000 : 8000;
  const auto l1 = mode_spectrum(f, 1, 1, 25.0, n);
  c.expect(std::abs(l1.lowest_eigenvalues[0]) <= 1e-4,
           detail::fmt("translation block bottom eigenvalue %.3g (<= 1e-4)",
                       l1.lowest_eigenvalues[0]));
  const auto l1f = mode_spectrum(f, 1, 1, 25.0, 2 * n);
  const double ratio =
      std::abs(l1.lowest_eigenvalues[0]) / std::abs(l1f.lowest_eigenvalues[0]);
  c.expect(ratio >= 2.5 && ratio <= 6.5,
           detail::fmt("defect drops by %.2fx after halving the spacing",
                       ratio));
  const auto l0 = mode_spectrum(f, 0, 1, 25.0, n);
  c.expect(l0.negative_count == 1,
           detail::fmt("radial block negative count %d (== 1)",
                       l0.negative_count));
  const auto l2 = mode_spectrum(f, 2, 1, 25.0, n);
  c.expect(l2.negative_count == 0 && l2.lowest_eigenvalues[0] > 0.0,
           detail::fmt("mode-2 block bottom eigenvalue %.4g (> 0)",
                       l2.lowest_eigenvalues[0]));
  const double dt = detail::now_seconds(t0);
  c.expect(dt <= 10.0, detail::fmt("runtime %.2f s (<= 10 s)", dt));
  return c.finish();
}

/// Criterion 3: pairwise attraction law. The ratio compares the extracted
/// interaction coefficient (tail factor divided out) to B1 e^{-d}.
inline CheckResult check_pair_law(const ValidateOptions& opt) {
  detail::CheckBuilder c("criterion-3", "pairwise exponential attraction law");
  const auto f = cached_ground_state(3, 3.0, 1e-10, opt.cache_dir);
  const double b1 = constant_B1(f);
  const double b1c = constant_B1_closed3(f);
  c.expect(std::abs(b1 - b1c) <= 1e-8 * b1c,
           detail::fmt("B1 two routes: %.10g vs %.10g", b1, b1c));
  double prev = 1e9;
  bool monotone = true;
  double dev8 = 0.0, dev12 = 0.0;
  for (double d : {6.0, 8.0, 10.0, 12.0}) {
    const double ratio = pair_coefficient(f, d) / (b1 * std::exp(-d));
    const double dev = std::abs(ratio - 1.0);
    if (d == 8.0) dev8 = dev;
    if (d == 12.0) dev12 = dev;
    if (dev >= prev) monotone = false;
    prev = dev;
    c.note(detail::fmt("d=%.0f coefficient ratio %.5f", d, ratio));
  }
  c.expect(dev8 <= 0.25, detail::fmt("|ratio-1| at d=8: %.4g (<= 0.25)", dev8));
  c.expect(dev12 <= 0.10, detail::fmt("|ratio-1| at d=12: %.4g (<= 0.10)", dev12));
  c.expect(monotone, "deviation monotone decreasing over d = 6,8,10,12");
  return c.finish();
}

/// Criterion 4: exact double-polygon sums against the ring and mirror
/// leading terms at admissible-box centers.
inline CheckResult check_ring_sums(const ValidateOptions& opt) {
  detail::CheckBuilder c("criterion-4", "polygon interaction sums");
  const double m = 2.0;
  const double B1 = 34.0;  // sums are linear in B1; any positive value
  const int top = opt.quick ? 6 : 10;
  double prev_same = 1e9, prev_cross = 1e9;
  bool mono = true;
  double final_same = 0.0, final_cross = 0.0;
  for (int e = 4; e <= top; ++e) {
    const int k = 1 << e;
    const auto box = ParameterBox::admissible_default(k, m);
    const double r = box.r_center(), h = box.h_center();
    const auto cfg = build_config(k, r, h, 3);
    const auto sums = interaction_sums(cfg, B1);
    const double q = std::sqrt(1.0 - h * h);
    const double law_same =
        2.0 * B1 * std::exp(-2.0 * std::numbers::pi * q * r / k);
    const double law_cross = B1 * std::exp(-2.0 * r * h);
    const double ds = std::abs(sums.same_ring / law_same - 1.0);
    const double dc = std::abs(sums.cross_ring / law_cross - 1.0);
    if (ds >= prev_same || dc >= prev_cross) mono = false;
    prev_same = ds;
    prev_cross = dc;
    final_same = sums.same_ring / law_same;
    final_cross = sums.cross_ring / law_cross;
  }
  c.expect(mono, "deviations shrink monotonically along the k-sweep");
  const double band = opt.quick ? 0.3 : 0.1;
  c.expect(std::abs(final_same - 1.0) <= band,
           detail::fmt("ring-sum ratio at top k: %.4f", final_same));
  c.expect(std::abs(final_cross - 1.0) <= band,
           detail::fmt("mirror-sum ratio at top k: %.4f", final_cross));
  return c.finish();
}

/// Criterion 5: critical-point scalings across m and k, solver agreement,
/// Hessian type, and the boundedness of the two interaction scales.
inline CheckResult check_critical_scalings(const ValidateOptions& opt) {
  detail::CheckBuilder c("criterion-5", "critical-point scalings");
  auto t0 = std::chrono::steady_clock::now();
  const auto f = cached_ground_state(3, 3.0, 1e-10, opt.cache_dir);
  const auto consts = compute_constants(f, 1.0);
  const int top = opt.quick ? 6 : 12;
  for (double m : {1.5, 2.0, 3.0}) {
    std::vector<double> rdev, hdev, hkm, gkm2;
    bool all_max = true, solvers_agree = true;
    for (int e = 4; e <= top; ++e) {
      const int k = 1 << e;
      const auto md = ReducedModel::make(consts, m, k);
      const auto nw = find_critical_point(md, CriticalSolver::newton);
      const auto fp = find_critical_point(md, CriticalSolver::fixed_point);
      solvers_agree = solvers_agree &&
                      std::abs(fp.r_star - nw.r_star) <= 1e-10 * nw.r_star &&
                      std::abs(fp.h_star - nw.h_star) <= 1e-10 * nw.h_star;
      all_max = all_max && nw.kind == CriticalKind::maximum &&
                fp.kind == CriticalKind::maximum;
      const double klnk = k * std::log(static_cast<double>(k));
      rdev.push_back(std::abs(
          nw.r_star / klnk / (m / (2.0 * std::numbers::pi)) - 1.0));
      hdev.push_back(std::abs(
          nw.h_star * k / (std::numbers::pi * (m + 2.0) / m) - 1.0));
      const auto rep = scaling_report(nw, md);
      hkm.push_back(rep.H_km);
      gkm2.push_back(rep.G_km2);
    }
    c.expect(solvers_agree, detail::fmt("m=%.2g solvers agree to 1e-10", m));
    c.expect(all_max, detail::fmt("m=%.2g maximum at every k", m));
    bool mono = true;
    for (std::size_t i = std::max<std::size_t>(rdev.size(), 4) - 4;
         i + 1 < rdev.size(); ++i) {
      if (rdev[i + 1] >= rdev[i] || hdev[i + 1] >= hdev[i]) mono = false;
    }
    c.expect(mono, detail::fmt("m=%.2g monotone approach over the last "
                               "doublings", m));
    if (!opt.quick) {
      c.expect(rdev.back() <= 0.15,
               detail::fmt("m=%.2g radius-scale deviation at top k: %.3f "
                           "(<= 0.15)", m, rdev.back()));
      c.expect(hdev.back() <= 0.15,
               detail::fmt("m=%.2g height-scale deviation at top k: %.3f "
                           "(<= 0.15)", m, hdev.back()));
      const auto [hmin, hmax] = std::minmax_element(hkm.begin(), hkm.end());
      const auto [gmin, gmax] = std::minmax_element(gkm2.begin(), gkm2.end());
      c.expect(*hmax / *hmin < 10.0,
               detail::fmt("m=%.2g ring-scale spread %.2fx (< 10x)", m,
                           *hmax / *hmin));
      c.expect(*gmax / *gmin < 10.0,
               detail::fmt("m=%.2g mirror-scale spread %.2fx (< 10x)", m,
                           *gmax / *gmin));
    }
  }
  const double dt = detail::now_seconds(t0);
  c.expect(dt <= 5.0, detail::fmt("runtime %.2f s (<= 5 s)", dt));
  return c.finish();
}

/// Criterion 6: the field energy against the reduced expansion at the
/// k = 8 and k = 16 critical points.
inline CheckResult check_energy_expansion(const ValidateOptions& opt) {
  detail::CheckBuilder c("criterion-6", "energy expansion over the cell");
  auto t0 = std::chrono::steady_clock::now();
  const auto f = cached_ground_state(3, 3.0, 1e-10, opt.cache_dir);
  const auto consts = compute_constants(f, 1.0);
  const PotentialModel pot = PotentialModel::make(1.0, 2.0);
  const PotentialModel pot0 = PotentialModel::make(0.0, 2.0);
  const auto consts0 = compute_constants(f, 0.0);

  // single isolated bump with flat potential reduces to the (p+1)-moment
  {
    EnergyGridOptions o;
    o.panel = opt.quick ? 1.2 : 0.9;
    const auto sb = DoublePolygonConfig::single_bump(10.0, 0.3, 3);
    const auto rep = energy_numeric(sb, f, pot0, consts0, o);
    const double exact = (0.5 - 1.0 / (f.exponent + 1.0)) *
                         radial_moment(f, f.exponent + 1.0);
    const double rel = std::abs(rep.I_numeric / exact - 1.0);
    c.expect(rel <= (opt.quick ? 1e-4 : 1e-5),
             detail::fmt("single-bump energy, relative error %.3g", rel));
  }
  if (opt.quick) {
    c.note("quick mode: multi-bump energies skipped");
    return c.finish();
  }

  double prev_pair_dev = 0.0;
  for (int k : {8, 16}) {
    const auto md = ReducedModel::make(consts, 2.0, k);
    const auto box =
        k == 8 ? ParameterBox::admissible(
                     8, 2.0, 0.8 * std::numbers::pi * 2.0, 0.98 / std::numbers::pi)
               : ParameterBox::admissible_default(16, 2.0);
    const auto res = find_critical_point(md, CriticalSolver::fixed_point, box);
    const auto cfg = build_config(k, res.r_star, res.h_star, 3);
    EnergyGridOptions o;
    o.panel = k == 8 ? 0.7 : 0.55;
    const auto rep = energy_numeric(cfg, f, pot, consts, o);
    const auto gap = expansion_gap(rep, cfg, f);
    c.expect(gap.interaction_numeric < 0.0,
             detail::fmt("k=%d interaction part %.4g (negative)", k,
                         gap.interaction_numeric));
    const double factor = std::max(gap.ratio_to_pair_sum,
                                   1.0 / gap.ratio_to_pair_sum);
    c.expect(factor <= 2.0,
             detail::fmt("k=%d magnitude factor vs pair-sum prediction %.4f "
                         "(<= 2)", k, factor));
    c.note(detail::fmt("k=%d ratio to leading interaction terms %.4f",
                       k, gap.ratio_to_leading));
    if (k == 8) {
      prev_pair_dev = std::abs(gap.ratio_to_pair_sum - 1.0);
      // a = 0 run against 2k x single-bump energy plus pair terms
      const auto rep0 = energy_numeric(cfg, f, pot0, consts0, o);
      const double single = (0.5 - 1.0 / (f.exponent + 1.0)) *
                            radial_moment(f, f.exponent + 1.0);
      const double predicted =
          2.0 * k * single - k * pair_sum_prediction(cfg, f);
      const double rel = std::abs(rep0.I_numeric / predicted - 1.0);
      c.expect(rel <= 1e-4,
               detail::fmt("flat-potential energy identity, relative %.3g "
                           "(<= 1e-4)", rel));
      c.expect(rep0.I2 == 0.0, "flat potential: trap term identically zero");
    } else {
      c.expect(std::abs(gap.ratio_to_pair_sum - 1.0) < prev_pair_dev,
               detail::fmt("k=16 pair-sum deviation %.4g improves on k=8 "
                           "(%.4g)", std::abs(gap.ratio_to_pair_sum - 1.0),
                           prev_pair_dev));
    }
  }
  const double dt = detail::now_seconds(t0);
  c.expect(dt <= 180.0, detail::fmt("runtime %.1f s (<= 180 s)", dt));
  return c.finish();
}

/// Criterion 7: the two computable ingredients of the forcing-size bound
/// stay on their predicted scales over the m = 2 sweep.
inline CheckResult check_forcing_ingredients(const ValidateOptions& opt) {
  detail::CheckBuilder c("criterion-7", "forcing-term ingredients");
  const auto f = cached_ground_state(3, 3.0, 1e-10, opt.cache_dir);
  const auto consts = compute_constants(f, 1.0);
  const PotentialModel pot = PotentialModel::make(1.0, 2.0);
  const double tau = 0.1;
  const double mu = std::min(f.exponent - 1.0 - tau, 1.0);
  const int top = opt.quick ? 6 : 12;
  std::vector<double> t1r, t2e;
  for (int e = 4; e <= top; ++e) {
    const int k = 1 << e;
    const auto md = ReducedModel::make(consts, 2.0, k);
    const auto res = find_critical_point(md, CriticalSolver::newton);
    const auto cfg = build_config(k, res.r_star, res.h_star, 3);
    const auto [t1, t2] = lk_bound_terms(cfg, f, pot, tau);
    const double q = std::sqrt(1.0 - res.h_star * res.h_star);
    t1r.push_back(t1 * std::pow(res.r_star, md.m));
    t2e.push_back(
        t2 * std::exp(mu * 2.0 * std::numbers::pi * q * res.r_star / k));
  }
  const auto [a, b] = std::minmax_element(t1r.begin(), t1r.end());
  c.expect(*b / *a <= 5.0,
           detail::fmt("trap ingredient spread %.2fx (<= 5x)", *b / *a));
  const auto [d, e2] = std::minmax_element(t2e.begin(), t2e.end());
  c.expect(*e2 / *d <= 5.0,
           detail::fmt("neighbour-sum ingredient spread %.2fx (<= 5x)",
                       *e2 / *d));
  return c.finish();
}

/// Criterion 8: a representative slice of the pipeline re-run in-process
/// must serialize byte-identically.
inline CheckResult check_determinism(const ValidateOptions& opt) {
  detail::CheckBuilder c("criterion-8", "bytewise reproducibility");
  auto slice = [&]() {
    std::ostringstream os;
    const auto f = cached_ground_state(3, 3.0, 1e-10, opt.cache_dir);
    const auto consts = compute_constants(f, 1.0);
    os.precision(17);
    os << consts.A1 << "," << consts.A2 << "," << consts.B1 << "\n";
    os << pair_interaction(f, 7.5) << "\n";
    const auto md = ReducedModel::make(consts, 2.0, 64);
    const auto res = find_critical_point(md, CriticalSolver::newton);
    os << res.r_star << "," << res.h_star << "," << res.iterations << "\n";
    const auto spec = mode_spectrum(f, 1, 1, 25.0, 2000);
    os << spec.lowest_eigenvalues[0] << "\n";
    return os.str();
  };
  const std::string a = slice();
  const std::string b = slice();
  c.expect(a == b, "pipeline slice serializes identically across two runs");
  return c.finish();
}

inline std::vector<CheckResult> run_validation(const ValidateOptions& opt) {
  std::vector<CheckResult> out;
  out.push_back(check_ground_state_oracle(opt));
  out.push_back(check_nondegeneracy(opt));
  out.push_back(check_pair_law(opt));
  out.push_back(check_ring_sums(opt));
  out.push_back(check_critical_scalings(opt));
  out.push_back(check_energy_expansion(opt));
  out.push_back(check_forcing_ingredients(opt));
  out.push_back(check_determinism(opt));
  return out;
}

inline std::string render_report(const std::vector<CheckResult>& results) {
  std::ostringstream os;
  os << "validation report\n";
  os << "=================\n";
  int failed = 0;
  for (const auto& r : results) {
    os << (r.passed ? "PASS " : "FAIL ") << r.id << " | " << r.law << "\n";
    os << "     " << r.detail << "\n";
    failed += r.passed ? 0 : 1;
  }
  os << "-----------------\n";
  os << "checks: " << results.size() << "  failed: " << failed << "\n";
  return os.str();
}

}  // namespace multibump
