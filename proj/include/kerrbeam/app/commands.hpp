#pragma once

// The studies behind the kerrbeam subcommands. Each command reads a RunConfig,
// writes its CSV (and snapshot) files through an OutputDir and returns a short
// status. Progress goes to the supplied stream; results only go to files.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "kerrbeam/app/csv.hpp"
#include "kerrbeam/app/manifest.hpp"
#include "kerrbeam/app/run_config.hpp"
#include "kerrbeam/beam_models.hpp"
#include "kerrbeam/quadrature.hpp"
#include "kerrbeam/single_mode.hpp"
#include "kerrbeam/twa/ensemble.hpp"
#include "kerrbeam/twa/snapshot.hpp"
#include "kerrbeam/twa/solver.hpp"

namespace kerrbeam::app {

using cplx = std::complex<double>;

struct CommandOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  std::ostream* log = &std::cerr;
  std::string input_dir;  // analyze: where the snapshots are; empty = output dir
};

struct CommandStatus {
  bool validated = true;  // false: artifacts written but a configured check failed
  std::string summary;
};

inline std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a(cfg.canonical()); }

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  if (n > 1) out.back() = b;
  return out;
}

// ---------------------------------------------------------------------------
// single-mode

inline CommandStatus cmd_single_mode(const RunConfig& cfg, OutputDir& out, const CommandOptions& opt = {}) {
  const auto s = cfg.single_mode();
  const auto times = linspace(0.0, s.t_max, s.n_times);
  CsvTable minima({"curve", "n_atoms", "chi_over_hbar_rad_per_s", "t_min_s", "var_min", "phi_opt_rad", "var_anti"});
  for (std::size_t c = 0; c < s.curves.size(); ++c) {
    const auto params = single_mode::KerrParams::from_rate(s.curves[c].chi_over_hbar, std::sqrt(s.curves[c].n_atoms));
    const auto trace = single_mode::min_variance_trace(params, times);
    CsvTable csv({"t_s", "var_min", "phi_opt_rad", "var_anti"});
    for (const auto& p : trace) csv.add_row({p.squeezed.t, p.squeezed.variance, p.squeezed.phi, p.var_anti});
    out.write("single_mode_" + std::to_string(c + 1) + ".csv", csv.str());

    const auto m = single_mode::time_of_minimum(params);
    const double anti =
        m.t > 0.0 ? single_mode::kerr_variance(params.alpha, m.theta, m.phi + 0.5 * std::numbers::pi) : 1.0;
    minima.add_row({static_cast<double>(c + 1), s.curves[c].n_atoms, s.curves[c].chi_over_hbar, m.t, m.variance,
                    m.phi, anti});
    *opt.log << "single-mode curve " << c + 1 << ": N = " << s.curves[c].n_atoms
             << ", chi/hbar = " << s.curves[c].chi_over_hbar << " rad/s, minimum " << m.variance << " at "
             << m.t << " s\n";
  }
  out.write("single_mode_minima.csv", minima.str());
  return {true, std::to_string(s.curves.size()) + " traces"};
}

// ---------------------------------------------------------------------------
// twa

/// Noise-free run of the same model: window density and atom number at the
/// requested times.
struct MeanFieldWindow {
  std::vector<double> rho;      // atoms per metre in the window
  std::vector<double> n_atoms;  // atoms in the window
  double number_drift = 0.0;
};

inline MeanFieldWindow mean_field_window(const twa::TwaRun& run, double z1, double z2) {
  twa::Propagator prop(run.config, run.grid, run.solver);
  auto s = twa::mean_field_initial_state(run.grid, run.config, run.solver.beam_frame_k);
  const auto [first, last] = run.grid.window(z1, z2);
  const double length = static_cast<double>(last - first) * run.grid.dz();
  MeanFieldWindow w;
  const auto report = prop.evolve(s, run.t_final, run.dt, run.observe_times,
                                  [&](std::size_t, const twa::TrajectoryState& st) {
                                    double sum = 0.0;
                                    for (std::size_t i = first; i < last; ++i) sum += std::norm(st.psi2[i]);
                                    w.n_atoms.push_back(sum * run.grid.dz());
                                    w.rho.push_back(w.n_atoms.back() / length);
                                  });
  w.number_drift = report.number_start > 0.0 ? std::abs(report.number_end / report.number_start - 1.0) : 0.0;
  return w;
}

struct TwaRecord {
  std::vector<cplx> b;
  std::vector<double> n_region;
  std::vector<twa::TrajectoryState> snapshots;
  double number_drift = 0.0;
};

struct TwaOutcome {
  quadrature::QuadratureSeries series;
  std::vector<double> observe_times;
  MeanFieldWindow mean_field;
  std::vector<quadrature::LocalOscillator> oscillators;
  std::size_t completed = 0;
  std::vector<twa::TrajectoryFailure> failures;
};

/// Runs the ensemble and reduces it to the quadrature series. Snapshot states
/// are handed to on_snapshot(trajectory, state) in trajectory order.
template <class OnSnapshot>
TwaOutcome run_twa(const TwaSettings& s, std::uint64_t seed, unsigned threads, std::ostream& log,
                   OnSnapshot&& on_snapshot) {
  TwaOutcome outcome;
  outcome.observe_times = s.run.observe_times;

  // merged, sorted evolve stops: observations and snapshots
  std::vector<double> stops = s.run.observe_times;
  if (s.snapshot_trajectories > 0) stops.insert(stops.end(), s.snapshot_times.begin(), s.snapshot_times.end());
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  auto index_of = [&](const std::vector<double>& v, double t) -> std::optional<std::size_t> {
    auto it = std::lower_bound(v.begin(), v.end(), t);
    if (it != v.end() && *it == t) return static_cast<std::size_t>(it - v.begin());
    return std::nullopt;
  };
  std::vector<std::optional<std::size_t>> obs_slot(stops.size());
  std::vector<bool> snap_stop(stops.size(), false);
  for (std::size_t k = 0; k < stops.size(); ++k) {
    obs_slot[k] = index_of(s.run.observe_times, stops[k]);
    snap_stop[k] = s.snapshot_trajectories > 0 && index_of(s.snapshot_times, stops[k]).has_value();
  }

  log << "mean-field reference run\n";
  twa::TwaRun run = s.run;
  outcome.mean_field = mean_field_window(run, s.window.z1, s.window.z2);
  for (std::size_t j = 0; j < run.observe_times.size(); ++j) {
    const double rho = s.window.lo_density.value_or(outcome.mean_field.rho[j]);
    outcome.oscillators.push_back(
        quadrature::build_local_oscillator(run.config, run.grid, rho, s.window.z1, s.window.z2));
  }
  run.observe_times = stops;

  twa::EnsembleSpec spec{s.n_traj, seed};
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  const std::size_t n_obs = outcome.observe_times.size();
  const auto t0 = std::chrono::steady_clock::now();
  auto make_worker = [&] {
    return [&, prop = std::make_shared<twa::Propagator>(run.config, run.grid, run.solver)](std::size_t index) {
      TwaRecord rec;
      rec.b.reserve(n_obs);
      rec.n_region.reserve(n_obs);
      const bool keep = index < s.snapshot_trajectories;
      const auto report = twa::run_trajectory(*prop, run, seed, index, [&](std::size_t k, const twa::TrajectoryState& st) {
        if (obs_slot[k]) {
          const auto& lo = outcome.oscillators[*obs_slot[k]];
          rec.b.push_back(quadrature::project(st, run.grid, lo, st.t));
          rec.n_region.push_back(quadrature::atoms_in_region(st, run.grid, lo).atoms);
        }
        if (keep && snap_stop[k]) rec.snapshots.push_back(st);
      });
      rec.number_drift = std::abs(report.relative_drift());
      const std::size_t d = ++done;
      if (d % std::max<std::size_t>(1, s.n_traj / 10) == 0 || d == s.n_traj) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard<std::mutex> lock(log_mutex);
        log << "  " << d << " / " << s.n_traj << " trajectories (" << static_cast<long>(secs) << " s)\n";
      }
      return rec;
    };
  };
  log << "ensemble of " << s.n_traj << " trajectories on " << twa::resolve_threads(threads) << " thread(s)\n";
  auto result = twa::run_ensemble<TwaRecord>(spec, threads, make_worker);
  outcome.failures = result.failures;
  outcome.completed = result.completed();
  for (const auto& f : result.failures) log << "trajectory " << f.index << " failed: " << f.message << '\n';

  double worst_drift = 0.0;
  for (std::size_t j = 0; j < n_obs; ++j) {
    quadrature::TimeSamples samples;
    samples.t = outcome.observe_times[j];
    for (const auto& r : result.records) {
      if (!r) continue;
      samples.b.push_back(r->b[j]);
      samples.n_region.push_back(r->n_region[j]);
    }
    outcome.series.push_back(quadrature::summarize(samples));
  }
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = result.records[i];
    if (!r) continue;
    worst_drift = std::max(worst_drift, r->number_drift);
    for (const auto& st : r->snapshots) on_snapshot(i, st);
  }
  log << "largest relative number drift " << worst_drift << '\n';
  return outcome;
}

inline CsvTable analytic_series(const TwaSettings& s, const TwaOutcome& outcome) {
  CsvTable csv({"t_s", "var_sq", "var_anti", "phi_opt_rad", "n_atoms"});
  for (std::size_t j = 0; j < outcome.observe_times.size(); ++j) {
    const double n = outcome.mean_field.n_atoms[j];
    quadrature::AnalyticPrediction p;
    if (n > 0.0) p = quadrature::integrated_analytic_prediction(s.run.config, outcome.oscillators[j], n, s.window.ages);
    csv.add_row({outcome.observe_times[j], p.var_sq, p.var_anti, p.phi, n});
  }
  return csv;
}

inline std::string quadrature_csv(const quadrature::QuadratureSeries& series) {
  std::ostringstream s;
  quadrature::write_csv(s, series);
  return s.str();
}

inline CommandStatus cmd_twa(const RunConfig& cfg, OutputDir& out, const CommandOptions& opt = {}) {
  const auto s = cfg.twa();
  const std::uint64_t hash = config_hash(cfg);
  std::vector<std::string> snapshot_names;
  auto outcome = run_twa(s, cfg.seed(), opt.threads, *opt.log, [&](std::size_t traj, const twa::TrajectoryState& st) {
    const std::string name = twa::snapshot_filename(traj, st.t);
    twa::write_snapshot(out.path() / name, st, s.run.grid, hash);
    snapshot_names.push_back(name);
  });
  for (const auto& name : snapshot_names) out.record_existing(name);
  out.write("quadrature.csv", quadrature_csv(outcome.series));
  out.write("analytic.csv", analytic_series(s, outcome).str());
  if (!outcome.failures.empty()) {
    CsvTable failed({"trajectory"});
    for (const auto& f : outcome.failures) failed.add_row({static_cast<double>(f.index)});
    out.write("failures.csv", failed.str());
  }
  std::ostringstream sum;
  sum << outcome.completed << " of " << s.n_traj << " trajectories, " << outcome.series.size() << " observation times";
  return {true, sum.str()};
}

// ---------------------------------------------------------------------------
// analyze

inline CommandStatus cmd_analyze(const RunConfig& cfg, OutputDir& out, const CommandOptions& opt = {}) {
  const auto s = cfg.twa();
  const std::filesystem::path in_dir = opt.input_dir.empty() ? out.path() : std::filesystem::path(opt.input_dir);
  if (!std::filesystem::is_directory(in_dir)) throw ConfigError("analyze: no such directory '" + in_dir.string() + "'");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(in_dir))
    if (e.is_regular_file() && e.path().extension() == ".fld") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("analyze: no .fld snapshots in '" + in_dir.string() + "'");

  const std::uint64_t hash = config_hash(cfg);
  std::map<double, std::vector<twa::TrajectoryState>> by_time;
  bool warned = false;
  for (const auto& f : files) {
    const auto snap = twa::read_snapshot(f);
    if (snap.header.n_points != s.run.grid.size() || snap.header.z_min != s.run.grid.z_min() ||
        snap.header.z_max != s.run.grid.z_max())
      throw ConfigError("analyze: snapshot " + f.filename().string() + " was written on a different grid");
    if (snap.header.config_hash != hash && !warned) {
      *opt.log << "warning: snapshots were written with config hash " << hex64(snap.header.config_hash)
               << ", analysing with " << hex64(hash) << '\n';
      warned = true;
    }
    twa::TrajectoryState st(snap.header.n_points, 0.0);
    std::copy(snap.psi1.begin(), snap.psi1.end(), st.psi1.begin());
    std::copy(snap.psi2.begin(), snap.psi2.end(), st.psi2.begin());
    st.t = snap.header.t;
    by_time[snap.header.t].push_back(std::move(st));
  }

  quadrature::QuadratureSeries series;
  const double vac = 0.5 / s.run.grid.dz();
  for (const auto& [t, states] : by_time) {
    if (states.size() < 2) {
      *opt.log << "skipping t = " << t << " s: only " << states.size() << " snapshot\n";
      continue;
    }
    double rho = 0.0;
    if (s.window.lo_density) {
      rho = *s.window.lo_density;
    } else {
      // ensemble-mean Wigner-corrected density over the window
      const auto [first, last] = s.run.grid.window(s.window.z1, s.window.z2);
      double sum = 0.0;
      for (const auto& st : states)
        for (std::size_t i = first; i < last; ++i) sum += std::norm(st.psi2[i]) - vac;
      rho = std::max(0.0, sum * s.run.grid.dz() / static_cast<double>(states.size()) /
                              (static_cast<double>(last - first) * s.run.grid.dz()));
    }
    const auto lo = quadrature::build_local_oscillator(s.run.config, s.run.grid, rho, s.window.z1, s.window.z2);
    quadrature::TimeSamples samples;
    samples.t = t;
    for (const auto& st : states) {
      samples.b.push_back(quadrature::project(st, s.run.grid, lo, t));
      samples.n_region.push_back(quadrature::atoms_in_region(st, s.run.grid, lo).atoms);
    }
    series.push_back(quadrature::summarize(samples));
  }
  if (series.empty()) throw InsufficientSamples("analyze: no time with at least 2 snapshots");
  out.write("analyzed_quadrature.csv", quadrature_csv(series));
  return {true, std::to_string(files.size()) + " snapshots at " + std::to_string(series.size()) + " times"};
}

// ---------------------------------------------------------------------------
// beam3d

inline CommandStatus cmd_beam3d(const RunConfig& cfg, OutputDir& out, const CommandOptions& opt = {}) {
  const auto s = cfg.beam3d();
  const auto p = beam_models::fall_prediction(s.model, s.n_atoms, s.depth);
  CsvTable summary({"depth_m", "arrival_time_s", "n_atoms", "area_m2", "theta", "n_theta", "var_sq", "var_anti",
                    "phi_opt_rad"});
  summary.add_row({p.depth, p.age, p.n_mode, s.model.area, p.theta, p.n_mode * p.theta, p.var_sq, p.var_anti, p.phi});
  out.write("beam3d.csv", summary.str());

  CsvTable trace({"t_s", "depth_m", "density_per_m3", "theta", "var_sq", "var_anti", "phi_opt_rad"});
  const double alpha = std::sqrt(s.n_atoms);
  for (double t : linspace(0.0, p.age, s.n_times)) {
    const double theta = beam_models::falling_accumulated_phase(s.model, s.n_atoms, t);
    const auto point = single_mode::trace_point_for_theta(alpha, theta, t);
    const double var_sq = t > 0.0 ? point.squeezed.variance : 1.0;
    const double anti = t > 0.0 ? point.var_anti : 1.0;
    trace.add_row({t, beam_models::depth_at_time(s.model, t), beam_models::density_at_time(s.model, t), theta, var_sq,
                   anti, t > 0.0 ? point.squeezed.phi : 0.0});
  }
  out.write("beam3d_trace.csv", trace.str());
  *opt.log << "3D beam at " << p.depth << " m: var_sq = " << p.var_sq << ", var_anti = " << p.var_anti << '\n';
  std::ostringstream sum;
  sum << "var_sq " << p.var_sq << ", var_anti " << p.var_anti;
  return {true, sum.str()};
}

// ---------------------------------------------------------------------------
// two-beam

inline CommandStatus cmd_two_beam(const RunConfig& cfg, OutputDir& out, const CommandOptions& opt = {}) {
  const auto s = cfg.two_beam();
  CsvTable summary({"ref_intensity_ratio", "transmissivity", "mix_phase_rad", "fano", "mean_intensity"});
  CsvTable sweep({"ref_intensity_ratio", "mix_phase_rad", "fano"});
  for (double r : s.ratios) {
    beam_models::TwoBeamConfig tb;
    tb.alpha_main = std::sqrt(s.n_atoms);
    tb.alpha_ref = std::sqrt(r * s.n_atoms);
    tb.chi = s.chi;
    tb.t = s.age;
    tb.reference_chi = s.reference_chi;
    if (s.transmissivity) tb.transmissivity = *s.transmissivity;
    const auto best = beam_models::phase_optimized_fano(tb, !s.transmissivity.has_value());
    summary.add_row({r, best.transmissivity, best.mix_phase, best.fano, best.mean_intensity});
    tb.transmissivity = best.transmissivity;
    const auto moments = beam_models::two_beam_moments(tb);
    for (double phase : linspace(0.0, 2.0 * std::numbers::pi, s.n_phases))
      sweep.add_row({r, phase, beam_models::mixing::port_noise(moments, tb.transmissivity, phase).fano});
    *opt.log << "r = " << r << ": Fano " << best.fano << " at T = " << best.transmissivity << '\n';
  }
  out.write("two_beam.csv", summary.str());
  out.write("two_beam_sweep.csv", sweep.str());
  return {true, std::to_string(s.ratios.size()) + " intensity ratios"};
}

// ---------------------------------------------------------------------------
// convergence

struct ConvergenceRow {
  std::string observable;
  std::string refinement;
  double coarse = 0.0;
  double fine = 0.0;

  double relative_change() const {
    const double scale = std::max(std::abs(coarse), std::abs(fine));
    return scale > 0.0 ? std::abs(fine - coarse) / scale : 0.0;
  }
};

inline CommandStatus cmd_convergence(const RunConfig& cfg, OutputDir& out, const CommandOptions& opt = {}) {
  const auto base = cfg.twa();
  const auto conv = cfg.convergence();
  std::ostream& log = *opt.log;
  std::vector<ConvergenceRow> rows;

  // dt against dt/2 with the same noise realisations
  auto ensemble_at = [&](double dt) {
    TwaSettings s = base;
    s.run.dt = dt;
    s.n_traj = conv.n_traj;
    s.snapshot_trajectories = 0;
    s.run.observe_times = {s.run.t_final};
    log << "dt = " << dt << " s\n";
    return run_twa(s, cfg.seed(), opt.threads, log, [](std::size_t, const twa::TrajectoryState&) {});
  };
  const auto coarse = ensemble_at(base.run.dt);
  const auto fine = ensemble_at(0.5 * base.run.dt);
  rows.push_back({"var_sq", "dt", coarse.series.back().var_sq, fine.series.back().var_sq});
  rows.push_back({"var_anti", "dt", coarse.series.back().var_anti, fine.series.back().var_anti});
  rows.push_back({"window_atoms", "dt", coarse.series.back().n_region, fine.series.back().n_region});

  // dz against dz/2, noise free
  auto mean_field_at = [&](std::size_t n_points) {
    twa::TwaRun run = base.run;
    run.grid = twa::Grid1D(base.run.grid.z_min(), base.run.grid.z_max(), n_points);
    run.observe_times = {run.t_final};
    log << "mean field with " << n_points << " points\n";
    const auto w = mean_field_window(run, base.window.z1, base.window.z2);
    const auto lo = quadrature::build_local_oscillator(run.config, run.grid, w.rho.back(), base.window.z1, base.window.z2);
    const auto p = quadrature::integrated_analytic_prediction(run.config, lo, std::max(w.n_atoms.back(), 1e-300),
                                                              base.window.ages);
    return std::pair{w, p};
  };
  const auto [mf_c, an_c] = mean_field_at(base.run.grid.size());
  const auto [mf_f, an_f] = mean_field_at(2 * base.run.grid.size());
  rows.push_back({"window_atoms_mean_field", "dz", mf_c.n_atoms.back(), mf_f.n_atoms.back()});
  rows.push_back({"analytic_var_sq", "dz", an_c.var_sq, an_f.var_sq});
  rows.push_back({"analytic_var_anti", "dz", an_c.var_anti, an_f.var_anti});

  std::ostringstream report;
  report << "observable,refinement,coarse,fine,relative_change,tolerance,pass\n";
  bool all_pass = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const bool pass = r.relative_change() <= conv.tolerance;
    all_pass = all_pass && pass;
    report << r.observable << ',' << r.refinement << ',' << format_number(r.coarse) << ',' << format_number(r.fine)
           << ',' << format_number(r.relative_change()) << ',' << format_number(conv.tolerance) << ','
           << (pass ? "pass" : "fail") << '\n';
    log << r.observable << " (" << r.refinement << "): " << r.coarse << " -> " << r.fine << ", change "
        << r.relative_change() << (pass ? " ok" : " FAIL") << '\n';
  }
  out.write("convergence.csv", report.str());
  return {all_pass, all_pass ? "all observables within tolerance" : "some observables exceed the tolerance"};
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"single-mode", "twa", "analyze", "beam3d", "two-beam", "convergence"};
  return names;
}

/// Runs one command into out_dir and writes manifest.txt last.
inline CommandStatus run_command(const std::string& name, const RunConfig& cfg, const std::filesystem::path& out_dir,
                                 const CommandOptions& opt = {}) {
  OutputDir out(out_dir);
  RunManifest manifest;
  manifest.command = name;
  manifest.config_hash = hex64(config_hash(cfg));
  manifest.seed = cfg.seed();
  manifest.start = std::chrono::system_clock::now();
  CommandStatus status;
  if (name == "single-mode") status = cmd_single_mode(cfg, out, opt);
  else if (name == "twa") status = cmd_twa(cfg, out, opt);
  else if (name == "analyze") status = cmd_analyze(cfg, out, opt);
  else if (name == "beam3d") status = cmd_beam3d(cfg, out, opt);
  else if (name == "two-beam") status = cmd_two_beam(cfg, out, opt);
  else if (name == "convergence") status = cmd_convergence(cfg, out, opt);
  else throw ConfigError("unknown command '" + name + "'");
  manifest.end = std::chrono::system_clock::now();
  manifest.files = out.files();
  std::ofstream m(out.path() / "manifest.txt", std::ios::binary | std::ios::trunc);
  m << manifest.text();
  if (!m) throw Error("failed to write manifest.txt");
  return status;
}

}  // namespace kerrbeam::app
