#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "kerrbeam/app/commands.hpp"

using namespace kerrbeam;
using namespace kerrbeam::app;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("kerrbeam_test_app_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// small, fast beam run
const char* kTinyTwa = R"(
[run]
seed = 11
[grid]
n_points = 1024
[evolution]
t_final_s = 1.5e-3
observe_step_s = 0.5e-3
[ensemble]
n_traj = 6
[window]
z1_m = 5e-6
z2_m = 25e-6
)";

std::string manifest_without_times(const fs::path& dir) {
  std::istringstream in(slurp(dir / "manifest.txt"));
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("start_utc", 0) != 0 && line.rfind("end_utc", 0) != 0) out += line + '\n';
  return out;
}

CommandOptions quiet(unsigned threads = 1) {
  static std::ostringstream sink;
  CommandOptions opt;
  opt.threads = threads;
  opt.log = &sink;
  return opt;
}

}  // namespace

TEST_CASE("ini reader", "[app][config]") {
  const auto t = parse_ini_string(R"(
# comment
[raman]
k0_rad_per_m = 3e7   ; trailing comment
[run]
output_dir = "a b # c"
)",
                                  "cfg");
  REQUIRE(t.size() == 2);
  CHECK(t.at("raman.k0_rad_per_m").value == "3e7");
  CHECK(t.at("raman.k0_rad_per_m").origin == "cfg:4");
  CHECK(t.at("run.output_dir").value == "a b # c");

  CHECK_THROWS_WITH(parse_ini_string("[a]\nx = 1\nx = 2\n", "f"), Catch::Matchers::ContainsSubstring("f:3"));
  CHECK_THROWS_WITH(parse_ini_string("x = 1\n", "f"), Catch::Matchers::ContainsSubstring("before any [section]"));
  CHECK_THROWS_WITH(parse_ini_string("[a]\njunk\n", "f"), Catch::Matchers::ContainsSubstring("f:2"));
  CHECK_THROWS_AS(parse_ini_string("[a\n"), ConfigError);
}

TEST_CASE("configuration validation", "[app][config]") {
  SECTION("defaults are the reference beam") {
    const auto cfg = RunConfig::from_string("");
    const auto rb = twa::RamanConfig::rubidium();
    const auto c = cfg.raman();
    CHECK(c.k0 == rb.k0);
    CHECK(c.u22 == Approx(twa::RamanConfig::reduce_to_1d(5.77e-9, 1.44e-25, 1.2e-11)).epsilon(1e-14));
    CHECK(c.u11 == 0.0);
    CHECK(c.delta == Approx(c.resonant_delta()).epsilon(1e-14));
    const auto s = cfg.twa();
    CHECK(s.n_traj == 1000);
    CHECK(s.run.observe_times.size() == 60);
    CHECK(s.run.observe_times.back() == 15e-3);
    CHECK(s.run.solver.beam_frame_k == c.k0);
  }
  SECTION("unknown keys name the key and the line") {
    CHECK_THROWS_WITH(RunConfig::from_string("[raman]\n\nk0 = 2e7\n"),
                      Catch::Matchers::ContainsSubstring("<string>:3") &&
                          Catch::Matchers::ContainsSubstring("raman.k0") &&
                          Catch::Matchers::ContainsSubstring("raman.k0_rad_per_m"));
    CHECK_THROWS_AS(RunConfig::from_string("[nowhere]\nx = 1\n"), ConfigError);
  }
  SECTION("bad values") {
    CHECK_THROWS_WITH(RunConfig::from_string("[grid]\nz_min_m = -4e-5m\n"),
                      Catch::Matchers::ContainsSubstring("grid.z_min_m"));
    CHECK_THROWS_WITH(RunConfig::from_string("[grid]\nbeam_frame = moving\n"),
                      Catch::Matchers::ContainsSubstring("kick,lab"));
    CHECK_THROWS_AS(RunConfig::from_string("[ensemble]\nn_traj = -3\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_string("[ensemble]\nn_traj = 1\n").twa(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_string("[raman]\nmass_kg = 0\n").raman(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_string("[grid]\nn_points = 1000\n").grid(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_string("[single_mode]\natom_numbers = 1, 2\n").single_mode(), ConfigError);
  }
  SECTION("overrides and seed") {
    const auto cfg = RunConfig::from_string("[run]\nseed = 4\n", {"raman.rabi_rad_per_s = 20", "run.seed=9"}, 12);
    CHECK(cfg.raman().rabi == 20.0);
    CHECK(cfg.seed() == 12);
    CHECK_THROWS_WITH(RunConfig::from_string("", {"raman.rabi=20"}), Catch::Matchers::ContainsSubstring("--set"));
    CHECK_THROWS_AS(RunConfig::from_string("", {"rabi_rad_per_s=20"}), ConfigError);
  }
  SECTION("physical keys carry units") {
    const char* dimensionless[] = {"single_mode.atom_numbers", "raman.n_bec_atoms", "raman.u11_over_u22",
                                   "raman.u12_over_u22", "beam3d.n_atoms", "two_beam.ref_intensity_ratios",
                                   "two_beam.n_atoms", "two_beam.transmissivity", "convergence.tolerance"};
    const char* suffixes[] = {"_m", "_s", "_kg", "_m2", "_per_m", "_per_s", "_per_m3", "_m_per_s2"};
    for (const auto& e : kSchema) {
      if (e.kind != ValueKind::real && e.kind != ValueKind::real_list && e.kind != ValueKind::real_or_auto) continue;
      const std::string key = e.key;
      bool ok = std::find(std::begin(dimensionless), std::end(dimensionless), key) != std::end(dimensionless);
      for (const char* s : suffixes) ok = ok || key.ends_with(s);
      INFO(key);
      CHECK(ok);
    }
  }
  SECTION("the hash follows values, not formatting") {
    const auto a = RunConfig::from_string("[raman]\nk0_rad_per_m = 2e7\n");
    const auto b = RunConfig::from_string("# x\n[raman]\n  k0_rad_per_m=20000000 \n");
    const auto c = RunConfig::from_string("[raman]\nk0_rad_per_m = 2.1e7\n");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a) == config_hash(RunConfig::from_string("")));
  }
}

TEST_CASE("shipped configs parse", "[app][config]") {
  for (const char* name : {"reference.ini", "smoke.ini"}) {
    INFO(name);
    const auto cfg = RunConfig::from_file(std::string(KERRBEAM_SOURCE_DIR) + "/configs/" + name);
    CHECK_NOTHROW(cfg.twa());
    CHECK_NOTHROW(cfg.beam3d());
    CHECK_NOTHROW(cfg.two_beam());
    CHECK_NOTHROW(cfg.single_mode());
  }
  const auto ref = RunConfig::from_file(std::string(KERRBEAM_SOURCE_DIR) + "/configs/reference.ini");
  CHECK(config_hash(ref) == config_hash(RunConfig::from_string("[run]\noutput_dir = kerrbeam_out\n")));
}

TEST_CASE("schema document lists every key with its default", "[app][config]") {
  std::ifstream in(std::string(KERRBEAM_SOURCE_DIR) + "/docs/config.md");
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string doc = buf.str();
  for (const auto& e : kerrbeam::app::kSchema) {
    const std::string key = e.key;
    const auto dot = key.find('.');
    INFO(key);
    CHECK(doc.find("## [" + key.substr(0, dot) + "]") != std::string::npos);
    CHECK(doc.find("| `" + key.substr(dot + 1) + "` |") != std::string::npos);
    CHECK(doc.find("| `" + std::string(e.default_value) + "` |") != std::string::npos);
  }
}

TEST_CASE("csv round trip is exact", "[app][csv]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  CsvTable t({"a", "b", "c"});
  for (int i = 0; i < 500; ++i) t.add_row({std::ldexp(mant(rng), expo(rng)), mant(rng), 1.0 / 3.0 * i});
  t.add_row({std::numeric_limits<double>::infinity(), 0.0, -0.0});
  const auto back = parse_csv(t.str());
  REQUIRE(back.rows().size() == t.rows().size());
  for (std::size_t r = 0; r < t.rows().size(); ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(back.rows()[r][c] == t.rows()[r][c]);
  CHECK_THROWS_AS(t.add_row({1.0}), InvalidArgument);
  CHECK_THROWS_AS(parse_csv("a,b\n1,x\n"), InvalidArgument);
}

TEST_CASE("single-mode command", "[app][single]") {
  const auto dir = scratch("single");
  SECTION("chi = 0 gives unit variance everywhere") {
    const auto cfg = RunConfig::from_string("[single_mode]\natom_numbers = 1000\nchi_over_hbar_rad_per_s = 0\nn_times = 51\n");
    run_command("single-mode", cfg, dir, quiet());
    const auto csv = read_csv((dir / "single_mode_1.csv").string());
    REQUIRE(csv.rows().size() == 51);
    for (double v : csv.column_values("var_min")) CHECK(v == Approx(1.0).margin(1e-12));
  }
  SECTION("the four reference curves") {
    const auto cfg = RunConfig::from_string("[single_mode]\nn_times = 121\n");
    run_command("single-mode", cfg, dir, quiet());
    const auto m = read_csv((dir / "single_mode_minima.csv").string());
    const auto t = m.column_values("t_min_s");
    const auto v = m.column_values("var_min");
    CHECK(t[1] / t[0] == Approx(2.5).epsilon(0.1));
    CHECK(v[0] < v[2]);
    CHECK(fs::exists(dir / "single_mode_4.csv"));
  }
}

TEST_CASE("two-beam and beam3d commands", "[app][beam]") {
  const auto dir = scratch("beam");
  SECTION("chi = 0 gives a flat shot-noise sweep") {
    const auto cfg = RunConfig::from_string("[two_beam]\nchi_over_hbar_rad_per_s = 0\nn_phases = 37\n");
    run_command("two-beam", cfg, dir, quiet());
    const auto sweep = read_csv((dir / "two_beam_sweep.csv").string());
    CHECK(sweep.rows().size() == 4 * 37);
    for (double f : sweep.column_values("fano")) CHECK(f == Approx(1.0).margin(1e-10));
  }
  SECTION("default 3D beam row") {
    run_command("beam3d", RunConfig::from_string(""), dir, quiet());
    const auto row = read_csv((dir / "beam3d.csv").string());
    CHECK(row.column_values("var_sq")[0] == Approx(0.143).epsilon(0.25));
    CHECK(row.column_values("var_anti")[0] == Approx(7.11).epsilon(0.25));
    const auto trace = read_csv((dir / "beam3d_trace.csv").string());
    CHECK(trace.column_values("var_sq").front() == 1.0);
    // closed-form phase versus the tabulated schedule
    CHECK(trace.column_values("var_sq").back() == Approx(row.column_values("var_sq")[0]).epsilon(1e-7));
  }
}

TEST_CASE("twa command smoke run and determinism", "[app][twa]") {
  const auto cfg = RunConfig::from_string(kTinyTwa);
  const auto a = scratch("twa_a");
  const auto b = scratch("twa_b");
  const auto c = scratch("twa_c");
  run_command("twa", cfg, a, quiet(1));
  run_command("twa", cfg, b, quiet(1));
  run_command("twa", cfg, c, quiet(3));

  const auto q = read_csv((a / "quadrature.csv").string());
  CHECK(q.columns() == std::vector<std::string>{"t_s", "var_sq", "se_sq", "var_anti", "se_anti", "phi_opt_rad",
                                                "n_region"});
  CHECK(q.rows().size() == 3);
  for (const char* f : {"quadrature.csv", "analytic.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) == slurp(c / f));
  }
  CHECK(manifest_without_times(a) == manifest_without_times(c));
  CHECK(manifest_without_times(a).find("file = quadrature.csv") != std::string::npos);

  const auto other = scratch("twa_d");
  run_command("twa", RunConfig::from_string(kTinyTwa, {}, 12), other, quiet());
  CHECK(slurp(a / "quadrature.csv") != slurp(other / "quadrature.csv"));
}

TEST_CASE("analyze reproduces the in-run projections", "[app][twa]") {
  // snapshot keys go into the [evolution] section, just before [ensemble]
  std::string text = kTinyTwa;
  text.insert(text.find("[ensemble]"), "snapshot_times_s = 1e-3\nsnapshot_trajectories = 6\n");
  // a fixed local-oscillator density makes both paths use the same mode
  const auto cfg = RunConfig::from_string(text, {"window.lo_density_per_m = 3e7"});
  const auto run_dir = scratch("an_run");
  const auto an_dir = scratch("an_out");
  run_command("twa", cfg, run_dir, quiet());
  CHECK(fs::exists(run_dir / twa::snapshot_filename(5, 1e-3)));
  CommandOptions opt = quiet();
  opt.input_dir = run_dir.string();
  run_command("analyze", cfg, an_dir, opt);

  const auto live = read_csv((run_dir / "quadrature.csv").string());
  const auto offline = read_csv((an_dir / "analyzed_quadrature.csv").string());
  REQUIRE(offline.rows().size() == 1);
  const auto& row = offline.rows()[0];
  CHECK(row[0] == 1e-3);
  const auto& ref = live.rows()[1];
  for (std::size_t c = 1; c < row.size(); ++c) CHECK(row[c] == Approx(ref[c]).epsilon(1e-9).margin(1e-12));

  CHECK_THROWS_AS(run_command("analyze", cfg, scratch("an_empty"), quiet()), ConfigError);
}

#ifdef KERRBEAM_CLI_PATH
TEST_CASE("command line", "[app][cli]") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  const auto cfg = dir / "c.ini";
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(KERRBEAM_CLI_PATH) + " " + args + " 2> " + (dir / "err.txt").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  {
    std::ofstream(cfg) << "[raman]\nk0_radpm = 2e7\n";
  }
  CHECK(run("twa --config " + cfg.string() + " --out " + (dir / "o").string()) == 1);
  CHECK(slurp(dir / "err.txt").find("k0_radpm") != std::string::npos);
  CHECK(slurp(dir / "err.txt").find(":2") != std::string::npos);

  {
    std::ofstream(cfg) << "[two_beam]\nn_phases = 5\n";
  }
  CHECK(run("two-beam --config " + cfg.string() + " --set two_beam.ref_intensity_ratios=0.5 --out " +
            (dir / "o").string()) == 0);
  const auto csv = read_csv((dir / "o" / "two_beam.csv").string());
  CHECK(csv.rows().size() == 1);
  CHECK(slurp(dir / "o" / "manifest.txt").find("command = two-beam") != std::string::npos);

  CHECK(run("two-beam --config " + (dir / "missing.ini").string()) != 0);
  CHECK(run("nonsense --config " + cfg.string()) != 0);
}
#endif
