#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "multibump/validation.hpp"

namespace multibump {

// exit codes: 0 success, 1 validation failure, 2 usage, 3 cache, 4 output io
enum ExitCode {
  kOk = 0,
  kValidationFailure = 1,
  kUsageError = 2,
  kCacheError = 3,
  kIoError = 4
};

/// Everything a run needs; parsed from flags with an optional flat
/// key = value config file underneath (flags win).
struct RunConfig {
  std::string subcommand;
  int N = 3;
  double p = 3.0;
  double m = 2.0;
  double a = 1.0;
  double tol = 1e-10;
  std::vector<int> k_list;
  int k = 8;
  double r = 0.0;  // 0 means: use the admissible-box center
  double h = 0.0;
  std::string solver = "newton";
  int mode_l = 1;
  int count = 3;
  double RD = 25.0;
  int n_grid = 8000;
  std::vector<double> d_list{6.0, 8.0, 10.0, 12.0};
  double panel = 0.9;
  double margin = 19.0;
  bool sweep = false;
  bool quick = false;
  std::string cache_dir;  // empty: environment override, then default
  std::string output;     // empty: stdout
  std::string format = "csv";
  bool deterministic = true;  // seedless determinism; always on

  std::filesystem::path resolved_cache_dir() const {
    if (!cache_dir.empty()) return cache_dir;
    if (const char* env = std::getenv("MULTIBUMP_CACHE_DIR")) return env;
    return ".multibump-cache";
  }

  std::string to_kv_text() const;
  static RunConfig from_kv_text(const std::string& text);
};

inline std::string RunConfig::to_kv_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "# multibump run configuration\n";
  os << "subcommand = " << subcommand << "\n";
  os << "N = " << N << "\n";
  os << "p = " << p << "\n";
  os << "m = " << m << "\n";
  os << "a = " << a << "\n";
  os << "tol = " << tol << "\n";
  os << "k = " << k << "\n";
  os << "k_list =";
  for (int v : k_list) os << " " << v;
  os << "\n";
  os << "r = " << r << "\n";
  os << "h = " << h << "\n";
  os << "solver = " << solver << "\n";
  os << "mode_l = " << mode_l << "\n";
  os << "count = " << count << "\n";
  os << "RD = " << RD << "\n";
  os << "n_grid = " << n_grid << "\n";
  os << "d_list =";
  for (double v : d_list) os << " " << v;
  os << "\n";
  os << "panel = " << panel << "\n";
  os << "margin = " << margin << "\n";
  os << "sweep = " << (sweep ? 1 : 0) << "\n";
  os << "quick = " << (quick ? 1 : 0) << "\n";
  os << "cache_dir = " << cache_dir << "\n";
  os << "output = " << output << "\n";
  os << "format = " << format << "\n";
  return os.str();
}

inline RunConfig RunConfig::from_kv_text(const std::string& text) {
  RunConfig rc;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    std::istringstream vs(val);
    if (key == "subcommand") rc.subcommand = val;
    else if (key == "N") vs >> rc.N;
    else if (key == "p") vs >> rc.p;
    else if (key == "m") vs >> rc.m;
    else if (key == "a") vs >> rc.a;
    else if (key == "tol") vs >> rc.tol;
    else if (key == "k") vs >> rc.k;
    else if (key == "k_list") {
      rc.k_list.clear();
      int v;
      while (vs >> v) rc.k_list.push_back(v);
    } else if (key == "r") vs >> rc.r;
    else if (key == "h") vs >> rc.h;
    else if (key == "solver") rc.solver = val;
    else if (key == "mode_l") vs >> rc.mode_l;
    else if (key == "count") vs >> rc.count;
    else if (key == "RD") vs >> rc.RD;
    else if (key == "n_grid") vs >> rc.n_grid;
    else if (key == "d_list") {
      rc.d_list.clear();
      double v;
      while (vs >> v) rc.d_list.push_back(v);
    } else if (key == "panel") vs >> rc.panel;
    else if (key == "margin") vs >> rc.margin;
    else if (key == "sweep") { int v; vs >> v; rc.sweep = v != 0; }
    else if (key == "quick") { int v; vs >> v; rc.quick = v != 0; }
    else if (key == "cache_dir") rc.cache_dir = val;
    else if (key == "output") rc.output = val;
    else if (key == "format") rc.format = val;
  }
  return rc;
}

namespace cli_detail {

class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::trunc);
      if (!file_) {
        throw std::ios_base::failure("cannot open output path: " + path);
      }
      use_file_ = true;
    }
  }
  std::ostream& stream() { return use_file_ ? file_ : std::cout; }

 private:
  std::ofstream file_;
  bool use_file_ = false;
};

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace cli_detail

inline int run_ground(const RunConfig& rc) {
  const auto dir = rc.resolved_cache_dir();
  const auto f = cached_ground_state(rc.N, rc.p, rc.tol, dir);
  nlohmann::json j;
  j["N"] = f.dimension;
  j["p"] = f.exponent;
  j["tol"] = f.tol;
  j["shoot_value"] = f.shoot_value;
  j["tail_constant"] = f.tail_constant;
  j["residual_norm"] = f.residual_norm;
  j["match_radius"] = f.match_radius;
  j["grid_size"] = f.s.size();
  j["cache_file"] = (dir / profile_cache_name(rc.N, rc.p, rc.tol)).string();
  cli_detail::OutputTarget out(rc.output);
  out.stream() << j.dump(2) << "\n";
  return kOk;
}

inline int run_constants(const RunConfig& rc) {
  const auto f = cached_ground_state(rc.N, rc.p, rc.tol, rc.resolved_cache_dir());
  const auto c = compute_constants(f, rc.a);
  nlohmann::json j;
  j["A1"] = c.A1;
  j["A2"] = c.A2;
  j["B1"] = c.B1;
  j["a"] = rc.a;
  j["quadrature_error_estimate"] = c.quadrature_error_estimate;
  cli_detail::OutputTarget out(rc.output);
  out.stream() << j.dump(2) << "\n";
  return kOk;
}

inline int run_interaction(const RunConfig& rc) {
  const auto f = cached_ground_state(rc.N, rc.p, rc.tol, rc.resolved_cache_dir());
  const double b1 = constant_B1(f);
  cli_detail::OutputTarget out(rc.output);
  out.stream() << "d,integral,ratio_to_asymptotic\n";
  for (double d : rc.d_list) {
    const double v = pair_interaction(f, d);
    const double ratio =
        d > 0.0 ? pair_coefficient(f, d) / (b1 * std::exp(-d)) : 1.0;
    out.stream() << cli_detail::num(d) << "," << cli_detail::num(v) << ","
                 << cli_detail::num(ratio) << "\n";
  }
  return kOk;
}

inline int run_config_dump(const RunConfig& rc) {
  const auto box = ParameterBox::admissible_default(rc.k, rc.m);
  const double r = rc.r > 0.0 ? rc.r : box.r_center();
  const double h = rc.h > 0.0 ? rc.h : box.h_center();
  const auto cfg = build_config(rc.k, r, h, rc.N);
  cli_detail::OutputTarget out(rc.output);
  out.stream() << "ring,index";
  for (int d = 0; d < cfg.dim; ++d) out.stream() << ",y" << d + 1;
  out.stream() << ",dist_from_first\n";
  for (int i = 0; i < cfg.center_count(); ++i) {
    const bool upper = i < cfg.k;
    out.stream() << (upper ? "upper" : "lower") << "," << (i % cfg.k);
    for (int d = 0; d < cfg.dim; ++d) {
      out.stream() << "," << cli_detail::num(cfg.center(i)[d]);
    }
    out.stream() << "," << cli_detail::num(distance(cfg.center(0), cfg.center(i)))
                 << "\n";
  }
  return kOk;
}

inline int run_critical(const RunConfig& rc) {
  const auto f = cached_ground_state(rc.N, rc.p, rc.tol, rc.resolved_cache_dir());
  const auto consts = compute_constants(f, rc.a);
  const auto solver = rc.solver == "fixed_point" ? CriticalSolver::fixed_point
                                                 : CriticalSolver::newton;
  std::vector<int> ks = rc.k_list.empty() ? std::vector<int>{rc.k} : rc.k_list;
  cli_detail::OutputTarget out(rc.output);
  out.stream() << "k,r_star,h_star,r_over_klogk,k_h,F_rr,F_rh,F_hh,"
                  "classification,H_km,G_km2,iterations\n";
  for (int k : ks) {
    const auto md = ReducedModel::make(consts, rc.m, k);
    const auto res = find_critical_point(md, solver);
    const auto rep = scaling_report(res, md);
    const double klnk = k * std::log(static_cast<double>(k));
    out.stream() << k << "," << cli_detail::num(res.r_star) << ","
                 << cli_detail::num(res.h_star) << ","
                 << cli_detail::num(res.r_star / klnk) << ","
                 << cli_detail::num(res.h_star * k) << ","
                 << cli_detail::num(res.hess.rr) << ","
                 << cli_detail::num(res.hess.rh) << ","
                 << cli_detail::num(res.hess.hh) << ","
                 << to_string(res.kind) << "," << cli_detail::num(rep.H_km)
                 << "," << cli_detail::num(rep.G_km2) << "," << res.iterations
                 << "\n";
  }
  return kOk;
}

inline int run_energy(const RunConfig& rc) {
  const auto f = cached_ground_state(rc.N, rc.p, rc.tol, rc.resolved_cache_dir());
  const auto consts = compute_constants(f, rc.a);
  const auto pot = PotentialModel::make(rc.a, rc.m);
  EnergyGridOptions opts;
  opts.panel = rc.panel;
  opts.margin = rc.margin;

  auto energy_at = [&](int k) {
    const auto md = ReducedModel::make(consts, rc.m, k);
    ParameterBox box = ParameterBox::admissible_default(k, rc.m);
    if (k < 12) {
      box = ParameterBox::admissible(k, rc.m,
                                     0.8 * std::numbers::pi * (rc.m + 2.0) / rc.m,
                                     0.98 * rc.m / (2.0 * std::numbers::pi));
    }
    const auto res = find_critical_point(md, CriticalSolver::fixed_point, box);
    const double r = rc.r > 0.0 ? rc.r : res.r_star;
    const double h = rc.h > 0.0 ? rc.h : res.h_star;
    const auto cfg = build_config(k, r, h, 3);
    return std::make_pair(cfg, energy_numeric(cfg, f, pot, consts, opts));
  };

  cli_detail::OutputTarget out(rc.output);
  if (rc.sweep) {
    std::vector<int> ks = rc.k_list.empty() ? std::vector<int>{rc.k} : rc.k_list;
    out.stream() << "k,r,h,I_numeric,I1,I2,I3,I_expansion,term_A1,term_A2,"
                    "term_ring,term_mirror,error_estimate\n";
    for (int k : ks) {
      const auto [cfg, rep] = energy_at(k);
      out.stream() << k << "," << cli_detail::num(cfg.radius) << ","
                   << cli_detail::num(cfg.height) << ","
                   << cli_detail::num(rep.I_numeric) << ","
                   << cli_detail::num(rep.I1) << "," << cli_detail::num(rep.I2)
                   << "," << cli_detail::num(rep.I3) << ","
                   << cli_detail::num(rep.I_expansion) << ","
                   << cli_detail::num(rep.term_A1) << ","
                   << cli_detail::num(rep.term_A2) << ","
                   << cli_detail::num(rep.term_ring) << ","
                   << cli_detail::num(rep.term_mirror) << ","
                   << cli_detail::num(rep.quadrature_error_estimate) << "\n";
    }
  } else {
    const auto [cfg, rep] = energy_at(rc.k);
    const auto gap = expansion_gap(rep, cfg, f);
    nlohmann::json j;
    j["k"] = cfg.k;
    j["r"] = cfg.radius;
    j["h"] = cfg.height;
    j["I_numeric"] = rep.I_numeric;
    j["I1"] = rep.I1;
    j["I2"] = rep.I2;
    j["I3"] = rep.I3;
    j["I_expansion"] = rep.I_expansion;
    j["term_A1"] = rep.term_A1;
    j["term_A2"] = rep.term_A2;
    j["term_ring"] = rep.term_ring;
    j["term_mirror"] = rep.term_mirror;
    j["quadrature_error_estimate"] = rep.quadrature_error_estimate;
    j["residual_per_group"] = gap.residual_per_group;
    j["interaction_numeric"] = gap.interaction_numeric;
    j["ratio_to_leading"] = gap.ratio_to_leading;
    j["ratio_to_pair_sum"] = gap.ratio_to_pair_sum;
    out.stream() << j.dump(2) << "\n";
  }
  return kOk;
}

inline int run_spectrum(const RunConfig& rc) {
  const auto f = cached_ground_state(rc.N, rc.p, rc.tol, rc.resolved_cache_dir());
  cli_detail::OutputTarget out(rc.output);
  out.stream() << "l,index,eigenvalue,negative_count\n";
  for (int l = 0; l <= rc.mode_l; ++l) {
    const auto spec = mode_spectrum(f, l, rc.count, rc.RD, rc.n_grid);
    for (std::size_t i = 0; i < spec.lowest_eigenvalues.size(); ++i) {
      out.stream() << l << "," << i << ","
                   << cli_detail::num(spec.lowest_eigenvalues[i]) << ","
                   << spec.negative_count << "\n";
    }
  }
  return kOk;
}

inline int run_validate(const RunConfig& rc) {
  ValidateOptions opt;
  opt.quick = rc.quick;
  opt.cache_dir = rc.resolved_cache_dir();
  const auto results = run_validation(opt);
  const std::string report = render_report(results);
  const std::string path =
      rc.output.empty() ? "validate_report.txt" : rc.output;
  {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::ios_base::failure("cannot open output path: " + path);
    os << report;
  }
  std::cout << report;
  for (const auto& r : results) {
    if (!r.passed) return kValidationFailure;
  }
  return kOk;
}

/// Parse argv and dispatch. The config file (--config) is a flat
/// key = value file; command-line flags override it.
inline int run_cli(int argc, char** argv) {
  RunConfig rc;
  CLI::App app{"double-polygon multibump solutions: construction and "
               "validation tools"};
  app.set_config("--config", "", "flat key = value configuration file");
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--N", rc.N, "space dimension");
    sub->add_option("--p", rc.p, "nonlinearity exponent");
    sub->add_option("--m", rc.m, "potential decay exponent");
    sub->add_option("--a", rc.a, "potential strength");
    sub->add_option("--tol", rc.tol, "ground-state residual tolerance");
    sub->add_option("--cache-dir", rc.cache_dir, "profile cache directory");
    sub->add_option("--output", rc.output, "write the report to this path");
    sub->add_option("--format", rc.format, "csv | json where applicable");
  };

  auto* ground = app.add_subcommand("ground", "solve and cache a profile");
  add_common(ground);
  auto* constants = app.add_subcommand("constants", "reduced-energy constants");
  add_common(constants);
  auto* interaction =
      app.add_subcommand("interaction", "pair-interaction integrals");
  add_common(interaction);
  interaction->add_option("--d-list", rc.d_list, "separations")->delimiter(',');
  auto* config = app.add_subcommand("config", "dump a bump configuration");
  add_common(config);
  config->add_option("--k", rc.k, "polygon vertex count");
  config->add_option("--r", rc.r, "radius (default: admissible center)");
  config->add_option("--h", rc.h, "height (default: admissible center)");
  auto* critical = app.add_subcommand("critical", "reduced critical points");
  add_common(critical);
  critical->add_option("--k-list", rc.k_list, "bump counts")->delimiter(',');
  critical->add_option("--k", rc.k, "single bump count");
  critical->add_option("--solver", rc.solver, "newton | fixed_point");
  auto* energy = app.add_subcommand("energy", "field energy over the cell");
  add_common(energy);
  energy->add_option("--k", rc.k, "polygon vertex count");
  energy->add_option("--k-list", rc.k_list, "bump counts for --sweep")
      ->delimiter(',');
  energy->add_option("--r", rc.r, "radius (default: critical point)");
  energy->add_option("--h", rc.h, "height (default: critical point)");
  energy->add_option("--panel", rc.panel, "quadrature panel size");
  energy->add_option("--margin", rc.margin, "integration margin");
  energy->add_flag("--sweep", rc.sweep, "CSV rows per k");
  auto* spectrum = app.add_subcommand("spectrum", "mode eigenvalues");
  add_common(spectrum);
  spectrum->add_option("--l-max", rc.mode_l, "largest mode index");
  spectrum->add_option("--count", rc.count, "eigenvalues per mode");
  spectrum->add_option("--RD", rc.RD, "Dirichlet wall radius");
  spectrum->add_option("--n-grid", rc.n_grid, "grid intervals");
  auto* validate = app.add_subcommand("validate", "run the acceptance checks");
  add_common(validate);
  validate->add_flag("--quick", rc.quick, "reduced sizes, smoke profile");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (ground->parsed()) return run_ground(rc);
    if (constants->parsed()) return run_constants(rc);
    if (interaction->parsed()) return run_interaction(rc);
    if (config->parsed()) return run_config_dump(rc);
    if (critical->parsed()) return run_critical(rc);
    if (energy->parsed()) return run_energy(rc);
    if (spectrum->parsed()) return run_spectrum(rc);
    if (validate->parsed()) return run_validate(rc);
    std::cerr << "unknown subcommand\n";
    return kUsageError;
  } catch (const ProfileCacheError& e) {
    std::cerr << "cache error: " << e.what() << "\n";
    return kCacheError;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
}

}  // namespace multibump
