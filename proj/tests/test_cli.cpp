#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "multibump/cli.hpp"

using namespace multibump;

namespace {

namespace fs = std::filesystem;

std::string cli_binary() {
  if (const char* env = std::getenv("MULTIBUMP_CLI")) return env;
  return "";
}

std::string cache_dir_arg() {
  if (const char* env = std::getenv("MULTIBUMP_CACHE_DIR")) return env;
  return (fs::temp_directory_path() / "multibump-test-cache").string();
}

struct RunOutcome {
  int exit_code = -1;
  std::string stdout_text;
};

RunOutcome run(const std::string& args) {
  const std::string cmd = cli_binary() + " " + args + " 2>/dev/null";
  std::array<char, 4096> buf;
  RunOutcome out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::fgets(buf.data(), buf.size(), pipe)) out.stdout_text += buf.data();
  const int status = pclose(pipe);
  out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("run configuration round-trips through its flat text form") {
  RunConfig rc;
  rc.subcommand = "critical";
  rc.N = 3;
  rc.p = 2.5;
  rc.m = 1.75;
  rc.a = 0.25;
  rc.tol = 1e-9;
  rc.k = 12;
  rc.k_list = {16, 64, 256};
  rc.r = 31.5;
  rc.h = 0.125;
  rc.solver = "fixed_point";
  rc.d_list = {5.5, 7.25};
  rc.panel = 0.75;
  rc.margin = 17.0;
  rc.sweep = true;
  rc.quick = true;
  rc.cache_dir = "/tmp/somewhere";
  rc.output = "out.csv";
  rc.format = "json";
  const auto rt = RunConfig::from_kv_text(rc.to_kv_text());
  CHECK(rt.subcommand == rc.subcommand);
  CHECK(rt.N == rc.N);
  CHECK(rt.p == rc.p);
  CHECK(rt.m == rc.m);
  CHECK(rt.a == rc.a);
  CHECK(rt.tol == rc.tol);
  CHECK(rt.k == rc.k);
  CHECK(rt.k_list == rc.k_list);
  CHECK(rt.r == rc.r);
  CHECK(rt.h == rc.h);
  CHECK(rt.solver == rc.solver);
  CHECK(rt.d_list == rc.d_list);
  CHECK(rt.panel == rc.panel);
  CHECK(rt.margin == rc.margin);
  CHECK(rt.sweep == rc.sweep);
  CHECK(rt.quick == rc.quick);
  CHECK(rt.cache_dir == rc.cache_dir);
  CHECK(rt.output == rc.output);
  CHECK(rt.format == rc.format);
}

TEST_CASE("ground subcommand writes a byte-stable cache file", "[cli]") {
  if (cli_binary().empty()) {
    SKIP("MULTIBUMP_CLI not set");
  }
  const auto dir = fs::temp_directory_path() / "multibump-cli-ground";
  fs::remove_all(dir);
  const std::string args =
      "ground --N 1 --p 3 --cache-dir " + dir.string() + " --output " +
      (dir / "report.json").string();
  fs::create_directories(dir);
  const auto r1 = run(args);
  CHECK(r1.exit_code == 0);
  const auto cache = dir / profile_cache_name(1, 3.0, 1e-10);
  REQUIRE(fs::exists(cache));
  const auto bytes1 = read_file(cache);
  const auto r2 = run(args);
  CHECK(r2.exit_code == 0);
  CHECK(read_file(cache) == bytes1);
}

TEST_CASE("critical subcommand emits the pinned CSV columns", "[cli]") {
  if (cli_binary().empty()) {
    SKIP("MULTIBUMP_CLI not set");
  }
  const auto r = run("critical --m 2 --k-list 16,64,256 --cache-dir " +
                     cache_dir_arg());
  REQUIRE(r.exit_code == 0);
  std::istringstream is(r.stdout_text);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "k,r_star,h_star,r_over_klogk,k_h,F_rr,F_rh,F_hh,classification,"
        "H_km,G_km2,iterations");
  int rows = 0;
  double prev_ratio = 1e18;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++rows;
    // r/(k ln k) column decreases monotonically toward its limit
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');  // k
    std::getline(ls, cell, ',');  // r_star
    std::getline(ls, cell, ',');  // r_over_klogk
    std::getline(ls, cell, ',');
    const double ratio = std::stod(cell);
    CHECK(ratio < prev_ratio);
    prev_ratio = ratio;
    CHECK(line.find("maximum") != std::string::npos);
  }
  CHECK(rows == 3);
}

TEST_CASE("spectrum subcommand emits one row per mode and index", "[cli]") {
  if (cli_binary().empty()) {
    SKIP("MULTIBUMP_CLI not set");
  }
  const auto r = run("spectrum --l-max 2 --count 2 --n-grid 2000 --cache-dir " +
                     cache_dir_arg());
  REQUIRE(r.exit_code == 0);
  std::istringstream is(r.stdout_text);
  std::string line;
  std::getline(is, line);
  CHECK(line == "l,index,eigenvalue,negative_count");
  int rows = 0;
  while (std::getline(is, line)) rows += !line.empty();
  CHECK(rows == 6);  // l = 0,1,2 x 2 eigenvalues
}

TEST_CASE("interaction and constants subcommands", "[cli]") {
  if (cli_binary().empty()) {
    SKIP("MULTIBUMP_CLI not set");
  }
  const auto c = run("constants --N 3 --p 3 --a 1 --cache-dir " +
                     cache_dir_arg());
  REQUIRE(c.exit_code == 0);
  const auto j = nlohmann::json::parse(c.stdout_text);
  CHECK(j["A1"].get<double>() > 0.0);
  CHECK(j["B1"].get<double>() > 0.0);

  const auto r = run("interaction --d-list 0,8 --cache-dir " + cache_dir_arg());
  REQUIRE(r.exit_code == 0);
  CHECK(r.stdout_text.find("d,integral,ratio_to_asymptotic") == 0);
}

TEST_CASE("config subcommand dumps centers with distances", "[cli]") {
  if (cli_binary().empty()) {
    SKIP("MULTIBUMP_CLI not set");
  }
  const auto r = run("config --k 4 --r 10 --h 0.1");
  REQUIRE(r.exit_code == 0);
  std::istringstream is(r.stdout_text);
  std::string line;
  std::getline(is, line);
  CHECK(line == "ring,index,y1,y2,y3,dist_from_first");
  int rows = 0;
  bool found_mirror_distance = false;
  while (std::getline(is, line)) {
    rows += !line.empty();
    // |x̄_1 - x̱_1| = 2rh = 2
    if (line.rfind("lower,0,", 0) == 0 && line.find(",2") != std::string::npos) {
      found_mirror_distance = true;
    }
  }
  CHECK(rows == 8);
  CHECK(found_mirror_distance);
}

TEST_CASE("exit codes: usage, cache, output errors are distinct", "[cli]") {
  if (cli_binary().empty()) {
    SKIP("MULTIBUMP_CLI not set");
  }
  CHECK(run("frobnicate").exit_code == 2);          // unknown subcommand
  CHECK(run("ground --no-such-flag").exit_code == 2);

  // cache version mismatch
  const auto dir = fs::temp_directory_path() / "multibump-cli-badcache";
  fs::remove_all(dir);
  fs::create_directories(dir);
  run("ground --N 1 --p 3 --cache-dir " + dir.string());
  const auto cache = dir / profile_cache_name(1, 3.0, 1e-10);
  REQUIRE(fs::exists(cache));
  {
    std::fstream io(cache, std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(8);
    const std::uint32_t bad = 77;
    io.write(reinterpret_cast<const char*>(&bad), sizeof(bad));
  }
  CHECK(run("ground --N 1 --p 3 --cache-dir " + dir.string()).exit_code == 3);

  // unwritable output path
  CHECK(run("config --k 4 --r 10 --h 0.1 --output /nonexistent-dir/x.csv")
            .exit_code == 4);
}

TEST_CASE("quick validation is deterministic at the byte level", "[cli][validate]") {
  if (cli_binary().empty()) {
    SKIP("MULTIBUMP_CLI not set");
  }
  const auto dir = fs::temp_directory_path() / "multibump-cli-validate";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string base = "validate --quick --cache-dir " + cache_dir_arg();
  const auto r1 = run(base + " --output " + (dir / "rep1.txt").string());
  const auto r2 = run(base + " --output " + (dir / "rep2.txt").string());
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  const auto b1 = read_file(dir / "rep1.txt");
  const auto b2 = read_file(dir / "rep2.txt");
  REQUIRE(!b1.empty());
  CHECK(b1 == b2);
  CHECK(b1.find("criterion-8") != std::string::npos);
}
