// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
//
//   kerrbeam_acceptance [criteria...] [--out DIR] [--threads N] [--skip-full] [--reuse]
//
// With no criteria given all nine run. Exit status is nonzero if any fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kerrbeam/app/commands.hpp"
#include "kerrbeam/beam_models.hpp"
#include "kerrbeam/single_mode.hpp"
#include "kerrbeam/twa/ensemble.hpp"
#include "kerrbeam/twa/solver.hpp"

#ifndef KERRBEAM_SOURCE_DIR
#define KERRBEAM_SOURCE_DIR "."
#endif

namespace fs = std::filesystem;
using namespace kerrbeam;
using app::RunConfig;
using cplx = std::complex<double>;

namespace {

constexpr double pi = std::numbers::pi;

// ---- tolerances -----------------------------------------------------------

constexpr double kOracleTol = 1e-8;
constexpr double kCancelTol = 1e-12;
constexpr double kMinTimeRatio = 2.5, kMinTimeRatioRel = 0.10;
constexpr double kMinVarTarget = 0.1, kMinVarFactor = 2.0;
constexpr std::size_t kVacuumTrajectories = 8000;  // se of a unit variance ~0.016
constexpr std::size_t kVacuumPoints = 1024;
constexpr double kVacuumTime = 0.5e-3;
constexpr double kVacuumTol = 0.05;
constexpr double kPlaneWaveTol = 1e-10;
constexpr double kRabiTol = 1e-6;
constexpr double kStrangRatio = 4.0, kStrangTol = 0.5;
constexpr double kDriftPerMs = 1e-6;
constexpr double kSigmas = 3.0;
constexpr double kEarlyTime = 9e-3;
constexpr double kSteadyFrom = 12e-3, kSteadyTo = 15e-3;
constexpr double kAntiRel = 0.30;
constexpr double kSqRatioLo = 0.3, kSqRatioHi = 0.8;
constexpr double kBeam3dSq = 0.143, kBeam3dAnti = 7.11, kBeam3dRel = 0.25;
constexpr double kFanoTarget = 0.17, kFanoRel = 0.30;
constexpr double kShotNoiseTol = 1e-10;

// wall-clock budgets in seconds
constexpr double kBudgetOracle = 10, kBudgetScaling = 60, kBudgetVacuum = 600, kBudgetSolver = 300;
constexpr double kBudgetSmoke = 900, kBudget3d = 60, kBudgetTwoBeam = 300;

// ---- reporting ------------------------------------------------------------

struct Outcome {
  bool pass = true;
  bool skipped = false;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    pass = pass && ok;
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

struct Clock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

void check_budget(Outcome& out, const Clock& clock, double budget, const std::string& label = "runtime") {
  const double s = clock.seconds();
  out.check(s < budget, label + " " + fmt(s, 3) + " s (budget " + fmt(budget) + " s)");
}

struct Context {
  fs::path out_dir;
  unsigned threads = 0;
  bool skip_full = false;
  bool reuse = false;  // criterion 6: assess existing ensemble outputs instead of rerunning
  std::ostream* log = &std::cerr;

  app::CommandOptions options() const {
    app::CommandOptions o;
    o.threads = threads;
    o.log = log;
    return o;
  }
  fs::path fresh(const std::string& name) const {
    const auto p = out_dir / name;
    fs::remove_all(p);
    return p;
  }
};

RunConfig shipped(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return RunConfig::from_file(std::string(KERRBEAM_SOURCE_DIR) + "/configs/" + name, overrides);
}

// ---- 1. closed form against the Fock oracle --------------------------------

Outcome closed_form_vs_oracle(const Context&) {
  Outcome out;
  Clock clock;
  double worst = 0.0;
  std::size_t n = 0;
  for (double alpha : {1.0, 3.0, 7.0, 10.0}) {
    const auto p = single_mode::KerrParams::from_rate(1.0, alpha);
    for (int i = 0; i < 50; ++i) {
      const double theta = 0.5 * i / 49.0;  // chi t / hbar with chi / hbar = 1
      for (int j = 0; j < 16; ++j) {
        const double phi = 2.0 * pi * j / 16.0;
        worst = std::max(worst, std::abs(single_mode::analytic_variance(p, theta, phi) -
                                         single_mode::fock_oracle_variance(p, theta, phi)));
        ++n;
      }
    }
  }
  out.check(worst <= kOracleTol,
            "max |closed form - Fock| = " + fmt(worst, 3) + " over " + std::to_string(n) + " points (tol 1e-8)");
  check_budget(out, clock, kBudgetOracle);
  return out;
}

// ---- 2. exact cancellation at t = 0 and chi = 0 ------------------------------

Outcome coherent_cancellation(const Context&) {
  Outcome out;
  double worst_t0 = 0.0, worst_chi0 = 0.0;
  for (int a = 0; a <= 80; ++a) {
    const double alpha = 0.5 * a;
    for (int j = 0; j < 32; ++j) {
      const double phi = 2.0 * pi * j / 32.0;
      const auto p = single_mode::KerrParams::from_rate(0.37, alpha);
      worst_t0 = std::max(worst_t0, std::abs(single_mode::analytic_variance(p, 0.0, phi) - 1.0));
      const auto f = single_mode::KerrParams::from_rate(0.0, alpha);
      for (double t : {0.1, 1.0, 17.0})
        worst_chi0 = std::max(worst_chi0, std::abs(single_mode::analytic_variance(f, t, phi) - 1.0));
    }
  }
  out.check(worst_t0 <= kCancelTol, "t = 0: max |V - 1| = " + fmt(worst_t0, 3));
  out.check(worst_chi0 <= kCancelTol, "chi = 0: max |V - 1| = " + fmt(worst_chi0, 3));
  return out;
}

// ---- 3. single-mode scalings -------------------------------------------------

Outcome single_mode_scalings(const Context&) {
  Outcome out;
  Clock clock;
  const auto strong = single_mode::time_of_minimum(single_mode::KerrParams::from_rate(0.1, std::sqrt(1000.0)));
  const auto weak = single_mode::time_of_minimum(single_mode::KerrParams::from_rate(0.04, std::sqrt(1000.0)));
  const auto fewer = single_mode::time_of_minimum(single_mode::KerrParams::from_rate(0.1, std::sqrt(500.0)));
  const double ratio = weak.t / strong.t;
  out.check(std::abs(ratio / kMinTimeRatio - 1.0) <= kMinTimeRatioRel,
            "t_min(chi 0.04) / t_min(chi 0.1) = " + fmt(ratio, 5) + " (2.5 +- 10%)");
  out.check(strong.variance <= kMinVarTarget * kMinVarFactor && strong.variance >= kMinVarTarget / kMinVarFactor,
            "minimum variance at 1000 atoms = " + fmt(strong.variance, 5) + " (0.1 within x2)");
  out.check(strong.variance < fewer.variance,
            "deeper than at 500 atoms (" + fmt(strong.variance, 5) + " < " + fmt(fewer.variance, 5) + ")");
  check_budget(out, clock, kBudgetScaling);
  return out;
}

// ---- 4. vacuum calibration of the Wigner ensemble ---------------------------

Outcome vacuum_calibration(const Context& ctx) {
  Outcome out;
  Clock clock;
  const auto cfg = shipped("reference.ini", {"raman.rabi_rad_per_s=0", "grid.n_points=" + std::to_string(kVacuumPoints),
                                             "evolution.t_final_s=" + fmt(kVacuumTime, 17)});
  auto s = cfg.twa();
  twa::TwaRun run = s.run;
  run.observe_times = {run.t_final};

  struct Window {
    quadrature::LocalOscillator lo;
    double rho;
  };
  std::mt19937_64 rng(20260611);
  std::uniform_real_distribution<double> start(run.grid.z_min() + 10e-6, run.grid.z_max() - 50e-6);
  std::uniform_real_distribution<double> length(10e-6, 40e-6), phase(0.0, 2.0 * pi), density(0.0, 1e8);
  std::vector<Window> windows;
  for (int w = 0; w < 5; ++w) {
    const double z1 = start(rng), len = length(rng), phi = phase(rng), rho = density(rng);
    windows.push_back({quadrature::build_local_oscillator(run.config, run.grid, rho, z1, z1 + len, phi), rho});
  }

  using Record = std::vector<cplx>;
  twa::EnsembleSpec spec{kVacuumTrajectories, 5150};
  auto make_worker = [&] {
    return [&, prop = std::make_shared<twa::Propagator>(run.config, run.grid, run.solver)](std::size_t index) {
      Record rec;
      twa::run_trajectory(*prop, run, spec.master_seed, index, [&](std::size_t, const twa::TrajectoryState& st) {
        for (const auto& w : windows) rec.push_back(quadrature::project(st, run.grid, w.lo, st.t));
      });
      return rec;
    };
  };
  const auto result = twa::run_ensemble<Record>(spec, ctx.threads, make_worker);
  out.check(result.failures.empty(), std::to_string(result.completed()) + " of " +
                                         std::to_string(kVacuumTrajectories) + " trajectories on " +
                                         std::to_string(kVacuumPoints) + " points, Rabi coupling off");
  for (std::size_t w = 0; w < windows.size(); ++w) {
    std::vector<cplx> b;
    for (const auto& r : result.records)
      if (r) b.push_back((*r)[w]);
    // the oscillator phase is already inside b, so read the quadrature at 0
    const auto v = quadrature::quadrature_variance(b, 0.0);
    const auto& lo = windows[w].lo;
    out.check(std::abs(v.variance - 1.0) <= kVacuumTol,
              "window [" + fmt(lo.z1 * 1e6, 4) + ", " + fmt(lo.z2 * 1e6, 4) + "] um, phase " + fmt(lo.phi, 3) +
                  ", rho " + fmt(windows[w].rho, 3) + "/m: variance " + fmt(v.variance, 4) + " +- " +
                  fmt(v.standard_error, 2));
  }
  check_budget(out, clock, kBudgetVacuum);
  return out;
}

// ---- 5. solver properties ------------------------------------------------------

twa::RamanConfig free_config() {
  twa::RamanConfig c;
  c.omega_trap = 0.0;
  c.rabi = 0.0;
  c.k0 = 0.0;
  c.delta = 0.0;
  return c;
}

double field_distance(const twa::Field& a, const twa::Field& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::norm(a[i] - b[i]);
  return std::sqrt(sum);
}

Outcome solver_properties(const Context&) {
  Outcome out;
  Clock clock;
  {
    twa::Grid1D g(0.0, 50e-6, 256);
    const auto c = free_config();
    twa::Propagator prop(c, g, twa::SolverOptions{7.0 * g.dk()});
    auto s = prop.make_state();
    const double q = 11.0 * g.dk();
    for (std::size_t i = 0; i < g.size(); ++i) s.psi2[i] = std::polar(1.0, (q - 7.0 * g.dk()) * g.z(i));
    const double dt = 2e-6;
    for (int n = 0; n < 500; ++n) prop.step(s, dt);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const cplx expected = std::polar(1.0, q * g.z(i) - hbar * q * q * s.t / (2.0 * c.mass));
      worst = std::max(worst, std::abs(s.physical_psi2(g, i) - expected));
    }
    out.check(worst <= kPlaneWaveTol, "plane wave after 500 steps: max error " + fmt(worst, 3));
  }
  {
    twa::Grid1D g(0.0, 40e-6, 64);
    auto c = free_config();
    c.rabi = 50.0;
    c.k0 = 8.0 * g.dk();
    double worst = 0.0;
    for (double detuning : {0.0, 30.0, -70.0}) {
      c.delta = c.resonant_delta() + detuning;
      twa::Propagator prop(c, g, twa::SolverOptions{0.0});
      auto s = prop.make_state();
      for (auto& v : s.psi1) v = 1.0;
      const double wr = std::sqrt(c.rabi * c.rabi + 0.25 * detuning * detuning);
      for (double frac : {0.37, 0.81, 1.5}) {
        prop.evolve(s, frac * pi / wr, 1e-6);
        double n2 = 0.0;
        for (const auto& v : s.psi2) n2 += std::norm(v);
        n2 /= static_cast<double>(g.size());
        worst = std::max(worst, std::abs(n2 - c.rabi * c.rabi / (wr * wr) * std::pow(std::sin(wr * s.t), 2)));
      }
    }
    out.check(worst <= kRabiTol, "two-level Rabi population: max error " + fmt(worst, 3));
  }
  {
    twa::Grid1D g(-30e-6, 30e-6, 256);
    twa::RamanConfig c;
    c.k0 = 40.0 * g.dk();
    c.delta = c.resonant_delta();
    c.rabi = 2000.0;
    c.u11 = twa::RamanConfig::reduce_to_1d(rb87::scattering_length, c.mass, c.area);
    c.u22 = c.u11;
    c.u12 = c.u11;
    c.n_bec = 2e4;
    auto run = [&](double dt) {
      twa::Propagator prop(c, g);
      auto s = twa::mean_field_initial_state(g, c);
      for (std::size_t i = 0; i < g.size(); ++i) s.psi1[i] *= std::polar(1.0, 3.0 * g.dk() * g.z(i));
      prop.evolve(s, 2e-3, dt);
      return s;
    };
    const auto a = run(1e-5), b = run(5e-6), d = run(2.5e-6);
    const double ratio = (field_distance(a.psi1, b.psi1) + field_distance(a.psi2, b.psi2)) /
                         (field_distance(b.psi1, d.psi1) + field_distance(b.psi2, d.psi2));
    out.check(std::abs(ratio - kStrangRatio) <= kStrangTol, "step-halving error ratio " + fmt(ratio, 4));
  }
  {
    const auto s = shipped("reference.ini").twa();
    twa::Propagator prop(s.run.config, s.run.grid, s.run.solver);
    auto rng = twa::trajectory_stream(3, 0);
    auto st = twa::initial_state(s.run.grid, s.run.config, &rng, s.run.solver.beam_frame_k);
    const double span = 2e-3;
    const auto report = prop.evolve(st, span, s.run.dt);
    const double per_ms = std::abs(report.relative_drift()) / (span * 1e3);
    out.check(per_ms <= kDriftPerMs, "number drift on the reference grid " + fmt(per_ms, 3) + " per ms");
  }
  check_budget(out, clock, kBudgetSolver);
  return out;
}

// ---- 6. beam ensemble -----------------------------------------------------------

struct BeamAssessment {
  bool early = false, steady = false, product = false, anti = false, sq = false;
};

BeamAssessment assess_beam(const fs::path& dir, Outcome& out, const std::string& tag) {
  const auto q = app::read_csv((dir / "quadrature.csv").string());
  const auto a = app::read_csv((dir / "analytic.csv").string());
  const auto t = q.column_values("t_s");
  const auto vs = q.column_values("var_sq"), ss = q.column_values("se_sq");
  const auto va = q.column_values("var_anti"), sa = q.column_values("se_anti");
  const auto at = a.column_values("t_s"), avs = a.column_values("var_sq"), ava = a.column_values("var_anti");

  BeamAssessment r;
  double worst_early = 0.0;
  r.early = true;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] > kEarlyTime) continue;
    const double dev = std::max(std::abs(vs[i] - 1.0) / ss[i], std::abs(va[i] - 1.0) / sa[i]);
    worst_early = std::max(worst_early, dev);
    r.early = r.early && dev <= kSigmas;
  }
  // steady state: plain time average; the mean of the standard errors bounds
  // the error of the mean for correlated samples
  double msq = 0, mse_sq = 0, man = 0, mse_an = 0, amsq = 0, aman = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < kSteadyFrom - 1e-12 || t[i] > kSteadyTo + 1e-12) continue;
    msq += vs[i], mse_sq += ss[i], man += va[i], mse_an += sa[i];
    ++n;
  }
  for (std::size_t i = 0; i < at.size(); ++i) {
    if (at[i] < kSteadyFrom - 1e-12 || at[i] > kSteadyTo + 1e-12) continue;
    amsq += avs[i], aman += ava[i];
  }
  if (n == 0) {
    out.check(false, tag + ": no observation times in the steady-state interval");
    return r;
  }
  const double nd = static_cast<double>(n);
  msq /= nd, mse_sq /= nd, man /= nd, mse_an /= nd, amsq /= nd, aman /= nd;
  r.steady = msq + kSigmas * mse_sq < 1.0 && man - kSigmas * mse_an > 1.0;
  const double prod = msq * man;
  const double se_prod = std::hypot(man * mse_sq, msq * mse_an);
  r.product = prod >= 1.0 - kSigmas * se_prod;
  r.anti = std::abs(aman / man - 1.0) <= kAntiRel;
  r.sq = amsq >= kSqRatioLo * msq && amsq <= kSqRatioHi * msq;

  out.note(tag + ": early times (<= 9 ms) worst deviation from 1 is " + fmt(worst_early, 3) + " se");
  out.note(tag + ": steady state over " + std::to_string(n) + " times: var_sq " + fmt(msq) + " +- " + fmt(mse_sq, 2) +
           ", var_anti " + fmt(man) + " +- " + fmt(mse_an, 2) + ", product " + fmt(prod) + " +- " +
           fmt(se_prod, 2));
  out.note(tag + ": analytic var_sq " + fmt(amsq) + " (ratio " + fmt(amsq / msq, 3) + "), var_anti " + fmt(aman) +
           " (" + fmt(100.0 * (aman / man - 1.0), 3) + "%)");
  return r;
}

Outcome beam_ensemble(const Context& ctx) {
  Outcome out;
  {
    Clock clock;
    const bool reused = ctx.reuse && fs::exists(ctx.out_dir / "beam_smoke" / "quadrature.csv");
    const auto dir = reused ? ctx.out_dir / "beam_smoke" : ctx.fresh("beam_smoke");
    if (!reused) app::run_command("twa", shipped("smoke.ini"), dir, ctx.options());
    const auto r = assess_beam(dir, out, "smoke");
    out.check(r.steady, "smoke: steady-state squeezing and antisqueezing by >= 3 se");
    out.check(r.product, "smoke: uncertainty product >= 1 - 3 se");
    if (reused)
      out.note("smoke: existing outputs reassessed, runtime not measured");
    else
      check_budget(out, clock, kBudgetSmoke, "smoke runtime");
  }
  if (ctx.skip_full) {
    out.skipped = true;
    out.note("full 1000-trajectory ensemble not run (disabled at configure time)");
    return out;
  }
  Clock clock;
  const bool reused = ctx.reuse && fs::exists(ctx.out_dir / "beam_reference" / "quadrature.csv");
  const auto dir = reused ? ctx.out_dir / "beam_reference" : ctx.fresh("beam_reference");
  if (!reused) app::run_command("twa", shipped("reference.ini"), dir, ctx.options());
  const auto r = assess_beam(dir, out, "full");
  out.check(r.early, "full: both variances equal 1 within 3 se up to 9 ms");
  out.check(r.steady, "full: steady-state squeezing and antisqueezing by >= 3 se");
  out.check(r.product, "full: uncertainty product >= 1 - 3 se");
  out.check(r.anti, "full: analytic var_anti within 30% of the ensemble");
  out.check(r.sq, "full: analytic var_sq between 0.3 and 0.8 of the ensemble");
  out.note(reused ? "full: existing outputs reassessed" : "full: " + fmt(clock.seconds(), 4) + " s");
  return out;
}

// ---- 7. falling 3D beam ---------------------------------------------------------

Outcome falling_beam(const Context& ctx) {
  Outcome out;
  Clock clock;
  const auto dir = ctx.fresh("beam3d");
  app::run_command("beam3d", shipped("reference.ini"), dir, ctx.options());
  const auto row = app::read_csv((dir / "beam3d.csv").string());
  const double sq = row.column_values("var_sq").at(0), an = row.column_values("var_anti").at(0);
  out.check(std::abs(sq / kBeam3dSq - 1.0) <= kBeam3dRel, "var_sq " + fmt(sq, 5) + " (0.143 +- 25%)");
  out.check(std::abs(an / kBeam3dAnti - 1.0) <= kBeam3dRel, "var_anti " + fmt(an, 5) + " (7.11 +- 25%)");
  check_budget(out, clock, kBudget3d);
  return out;
}

// ---- 8. two-beam intensity squeezing ---------------------------------------------

Outcome two_beam(const Context& ctx) {
  Outcome out;
  Clock clock;
  const auto dir = ctx.fresh("two_beam");
  app::run_command("two-beam", shipped("reference.ini"), dir, ctx.options());
  const auto tab = app::read_csv((dir / "two_beam.csv").string());
  const auto ratios = tab.column_values("ref_intensity_ratio"), fano = tab.column_values("fano");
  bool found = false;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    out.check(fano[i] < 1.0, "r = " + fmt(ratios[i]) + ": optimised Fano " + fmt(fano[i], 5) + " < 1");
    if (ratios[i] == 0.5) {
      found = true;
      out.check(std::abs(fano[i] / kFanoTarget - 1.0) <= kFanoRel, "r = 0.5: Fano within 30% of 0.17");
    }
  }
  if (!found) out.check(false, "r = 0.5 missing from the ratio list");

  const auto flat_dir = ctx.fresh("two_beam_chi0");
  app::run_command("two-beam", shipped("reference.ini", {"two_beam.chi_over_hbar_rad_per_s=0"}), flat_dir,
                   ctx.options());
  double worst = 0.0;
  for (const char* name : {"two_beam.csv", "two_beam_sweep.csv"})
    for (double f : app::read_csv((flat_dir / name).string()).column_values("fano"))
      worst = std::max(worst, std::abs(f - 1.0));
  out.check(worst <= kShotNoiseTol, "chi = 0: max |Fano - 1| = " + fmt(worst, 3) + " over all phases");
  check_budget(out, clock, kBudgetTwoBeam);
  return out;
}

// ---- 9. determinism ------------------------------------------------------------

std::map<std::string, std::string> emitted_files(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name == "manifest.txt") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    files[name] = buf.str();
  }
  return files;
}

Outcome determinism(const Context& ctx) {
  Outcome out;
  const auto cfg = shipped("reference.ini", {"ensemble.n_traj=6", "evolution.t_final_s=2e-3",
                                             "evolution.observe_step_s=0.5e-3", "evolution.snapshot_times_s=1e-3",
                                             "evolution.snapshot_trajectories=2"});
  auto run = [&](const std::string& name, unsigned threads) {
    const auto dir = ctx.fresh(name);
    auto opt = ctx.options();
    opt.threads = threads;
    app::run_command("twa", cfg, dir, opt);
    return emitted_files(dir);
  };
  const auto a = run("determinism_a", 1);
  const auto b = run("determinism_b", 1);
  const auto c = run("determinism_c", 3);
  std::size_t csvs = 0;
  for (const auto& [name, _] : a)
    if (name.ends_with(".csv")) ++csvs;
  out.check(csvs >= 2 && a == b, "repeat run: " + std::to_string(a.size()) + " files (" + std::to_string(csvs) +
                                     " csv) byte-identical");
  out.check(a == c, "1 thread versus 3 threads: byte-identical");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"kerrbeam acceptance suite"};
  std::vector<int> selected;
  std::string out_dir = "acceptance_out";
  Context ctx;
  bool quiet = false;
  cli.add_option("criteria", selected, "criteria to run (default: all)")->check(CLI::Range(1, 9));
  cli.add_option("--out", out_dir, "scratch directory for command outputs");
  cli.add_option("--threads", ctx.threads, "worker threads, 0 = all cores");
  cli.add_flag("--skip-full", ctx.skip_full, "criterion 6: smoke variant only");
  cli.add_flag("--reuse", ctx.reuse, "criterion 6: reassess ensemble outputs already in --out");
  cli.add_flag("--quiet", quiet, "suppress progress logs");
  CLI11_PARSE(cli, argc, argv);

  ctx.out_dir = out_dir;
  fs::create_directories(ctx.out_dir);
  std::ofstream null_log;
  if (quiet) ctx.log = &null_log;
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::map<int, std::pair<std::string, std::function<Outcome(const Context&)>>> criteria = {
      {1, {"closed form versus Fock oracle", closed_form_vs_oracle}},
      {2, {"coherent cancellation at t = 0 and chi = 0", coherent_cancellation}},
      {3, {"single-mode time and depth scalings", single_mode_scalings}},
      {4, {"Wigner vacuum calibration", vacuum_calibration}},
      {5, {"solver correctness properties", solver_properties}},
      {6, {"beam ensemble squeezing", beam_ensemble}},
      {7, {"falling-beam prediction", falling_beam}},
      {8, {"two-beam intensity squeezing", two_beam}},
      {9, {"determinism", determinism}},
  };

  int failed = 0;
  for (int id : selected) {
    const auto& [title, fn] = criteria.at(id);
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const char* status = !o.pass ? "FAIL" : o.skipped ? "PARTIAL" : "PASS";
    std::cout << "criterion " << id << ' ' << status << "  " << title << '\n';
    for (const auto& d : o.details) std::cout << "    " << d << '\n';
    std::cout.flush();
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
