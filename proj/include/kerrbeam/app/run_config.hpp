#pragma once

// Typed run configuration. Every accepted key is listed in kSchema; anything
// else in a config file is rejected with its location. Physical quantities
// carry their unit in the key name.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kerrbeam/app/ini.hpp"
#include "kerrbeam/beam_models.hpp"
#include "kerrbeam/error.hpp"
#include "kerrbeam/quadrature.hpp"
#include "kerrbeam/twa/ensemble.hpp"
#include "kerrbeam/twa/raman_config.hpp"
#include "kerrbeam/units.hpp"

namespace kerrbeam::app {

enum class ValueKind { real, count, text, real_list, real_or_auto };

struct SchemaEntry {
  const char* key;
  ValueKind kind;
  const char* default_value;
  const char* choices;  // comma separated, for text values; empty = free text
  const char* doc;
};

// clang-format off
inline constexpr SchemaEntry kSchema[] = {
  {"run.seed", ValueKind::count, "1", "", "master seed; trajectory i uses the stream (seed, i)"},
  {"run.output_dir", ValueKind::text, "kerrbeam_out", "", "default output directory (--out wins)"},

  {"single_mode.atom_numbers", ValueKind::real_list, "1000, 1000, 500, 500", "", "N = alpha^2 for each curve"},
  {"single_mode.chi_over_hbar_rad_per_s", ValueKind::real_list, "0.1, 0.04, 0.1, 0.04", "", "chi / hbar for each curve"},
  {"single_mode.t_max_s", ValueKind::real, "0.12", "", "end of the time axis"},
  {"single_mode.n_times", ValueKind::count, "1201", "", "time samples including t = 0"},

  {"raman.scattering_length_m", ValueKind::real, "5.77e-9", "", "s-wave scattering length"},
  {"raman.mass_kg", ValueKind::real, "1.44e-25", "", "atomic mass"},
  {"raman.k0_rad_per_m", ValueKind::real, "2e7", "", "Raman momentum kick"},
  {"raman.rabi_rad_per_s", ValueKind::real, "50", "", "two-photon Rabi frequency"},
  {"raman.trap_omega_rad_per_s", ValueKind::real, "80", "", "trap frequency of the condensate"},
  {"raman.n_bec_atoms", ValueKind::real, "5e5", "", "condensate atom number"},
  {"raman.area_m2", ValueKind::real, "1.2e-11", "", "transverse area for the 1D reduction"},
  {"raman.u11_over_u22", ValueKind::real, "0", "", "condensate self-interaction relative to U22"},
  {"raman.u12_over_u22", ValueKind::real, "0", "", "cross interaction relative to U22"},
  {"raman.detuning_rad_per_s", ValueKind::real_or_auto, "auto", "", "two-photon detuning; auto = hbar k0^2 / 2m"},
  {"raman.light_shift_1_rad_per_s", ValueKind::real, "0", "", "light shift of the trapped state"},
  {"raman.light_shift_2_rad_per_s", ValueKind::real, "0", "", "light shift of the beam state"},

  {"grid.z_min_m", ValueKind::real, "-40e-6", "", "left edge of the box"},
  {"grid.z_max_m", ValueKind::real, "260e-6", "", "right edge of the box (beam side)"},
  {"grid.n_points", ValueKind::count, "2048", "", "grid points, a power of two"},
  {"grid.beam_frame", ValueKind::text, "kick", "kick,lab", "store the beam field relative to e^{i k0 z} (kick) or not (lab)"},
  {"grid.absorber_width_m", ValueKind::real, "0", "", "width of the edge absorber, 0 disables it"},
  {"grid.absorber_strength_per_s", ValueKind::real, "0", "", "peak absorption rate"},

  {"evolution.t_final_s", ValueKind::real, "15e-3", "", "simulated time"},
  {"evolution.dt_s", ValueKind::real, "1e-6", "", "split-step size"},
  {"evolution.observe_step_s", ValueKind::real, "0.25e-3", "", "spacing of quadrature observations, from t = 0"},
  {"evolution.snapshot_times_s", ValueKind::real_list, "", "", "times at which field snapshots are written"},
  {"evolution.snapshot_trajectories", ValueKind::count, "0", "", "snapshots are written for trajectories 0 .. n-1"},

  {"ensemble.n_traj", ValueKind::count, "1000", "", "number of Wigner trajectories"},

  {"window.z1_m", ValueKind::real, "130e-6", "", "start of the analysis window"},
  {"window.z2_m", ValueKind::real, "150e-6", "", "end of the analysis window"},
  {"window.lo_density_per_m", ValueKind::real_or_auto, "auto", "", "beam density for k_L and omega_L; auto = mean-field run"},
  {"window.analytic_ages", ValueKind::text, "optimum_average", "optimum_average,common_phase,midpoint", "age handling of the single-mode prediction"},

  {"beam3d.rho0_per_m3", ValueKind::real, "3e18", "", "beam density at the outcoupling point"},
  {"beam3d.k0_rad_per_m", ValueKind::real, "3.2e7", "", "initial beam wavenumber"},
  {"beam3d.depth_m", ValueKind::real, "0.01", "", "depth of the measurement region"},
  {"beam3d.region_length_m", ValueKind::real, "25e-6", "", "length of the measurement region"},
  {"beam3d.n_atoms", ValueKind::real, "1100", "", "atoms in the measurement region"},
  {"beam3d.area_m2", ValueKind::real_or_auto, "auto", "", "beam area; auto = solved from n_atoms in the region"},
  {"beam3d.g_m_per_s2", ValueKind::real, "9.81", "", "gravitational acceleration"},
  {"beam3d.kinematics", ValueKind::text, "exact", "exact,free_fall,depth_formula", "how time maps to depth"},
  {"beam3d.n_times", ValueKind::count, "401", "", "samples of the trace down to the region"},

  {"two_beam.ref_intensity_ratios", ValueKind::real_list, "0.25, 0.3, 0.4, 0.5", "", "reference / main intensity"},
  {"two_beam.n_atoms", ValueKind::real, "1230", "", "atoms in the main mode"},
  {"two_beam.chi_over_hbar_rad_per_s", ValueKind::real_or_auto, "auto", "", "auto = U22 / window length"},
  {"two_beam.age_s", ValueKind::real_or_auto, "auto", "", "interaction time; auto = window centre / kick velocity"},
  {"two_beam.transmissivity", ValueKind::real_or_auto, "auto", "", "splitter transmissivity; auto = optimised"},
  {"two_beam.reference_chi", ValueKind::text, "equal", "equal,scaled", "reference beam nonlinearity"},
  {"two_beam.n_phases", ValueKind::count, "361", "", "mixing phases in the sweep"},

  {"convergence.n_traj", ValueKind::count, "16", "", "trajectories for the dt comparison"},
  {"convergence.tolerance", ValueKind::real, "0.01", "", "largest accepted relative change"},
};
// clang-format on

inline const SchemaEntry* find_schema(std::string_view key) {
  for (const auto& e : kSchema)
    if (key == e.key) return &e;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Value parsing

inline double parse_real(std::string_view text, const std::string& key, const std::string& origin) {
  text = trim(text);
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw ConfigError(origin + ": '" + key + "' expects a number, got '" + std::string(text) + "'");
  return v;
}

inline std::uint64_t parse_count(std::string_view text, const std::string& key, const std::string& origin) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || text.empty())
    throw ConfigError(origin + ": '" + key + "' expects a non-negative integer, got '" + std::string(text) + "'");
  return v;
}

inline std::vector<double> parse_list(std::string_view text, const std::string& key, const std::string& origin) {
  std::vector<double> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.push_back(parse_real(text.substr(start, comma - start), key, origin));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_real_or_auto(std::string_view text, const std::string& key,
                                                const std::string& origin) {
  if (trim(text) == "auto") return std::nullopt;
  return parse_real(text, key, origin);
}

/// A parsed table with every schema key present (defaults filled in) and
/// every entry checked against its kind.
class ResolvedTable {
 public:
  explicit ResolvedTable(const IniTable& raw) {
    for (const auto& [key, entry] : raw) {
      const SchemaEntry* s = find_schema(key);
      if (s == nullptr) throw ConfigError(entry.origin + ": unknown key '" + key + "'" + suggestion(key));
    }
    for (const auto& s : kSchema) {
      auto it = raw.find(s.key);
      IniEntry e = it != raw.end() ? it->second : IniEntry{s.default_value, "default"};
      check(s, e);
      values_.emplace(s.key, std::move(e));
    }
  }

  const IniEntry& entry(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("internal: key '" + key + "' is not in the schema");
    return it->second;
  }
  const std::string& text(const std::string& key) const { return entry(key).value; }
  double real(const std::string& key) const { return parse_real(text(key), key, entry(key).origin); }
  std::uint64_t count(const std::string& key) const { return parse_count(text(key), key, entry(key).origin); }
  std::vector<double> list(const std::string& key) const { return parse_list(text(key), key, entry(key).origin); }
  std::optional<double> real_or_auto(const std::string& key) const {
    return parse_real_or_auto(text(key), key, entry(key).origin);
  }

  /// "section.key = value" lines in schema order; the basis of the config hash.
  std::string canonical() const {
    std::string out;
    for (const auto& s : kSchema) {
      out += s.key;
      out += " = ";
      out += canonical_value(s);
      out += '\n';
    }
    return out;
  }

  const std::string& origin(const std::string& key) const { return entry(key).origin; }

 private:
  static std::string suggestion(const std::string& key) {
    const auto dot = key.find('.');
    const std::string name = key.substr(dot + 1);
    for (const auto& s : kSchema) {
      const std::string_view known(s.key);
      const auto kname = known.substr(known.find('.') + 1);
      if (kname.starts_with(name) || name.starts_with(kname)) return " (did you mean '" + std::string(s.key) + "'?)";
    }
    return "";
  }

  static void check(const SchemaEntry& s, const IniEntry& e) {
    switch (s.kind) {
      case ValueKind::real:
        parse_real(e.value, s.key, e.origin);
        break;
      case ValueKind::count:
        parse_count(e.value, s.key, e.origin);
        break;
      case ValueKind::real_list:
        parse_list(e.value, s.key, e.origin);
        break;
      case ValueKind::real_or_auto:
        parse_real_or_auto(e.value, s.key, e.origin);
        break;
      case ValueKind::text: {
        const std::string_view choices(s.choices);
        if (choices.empty()) break;
        std::size_t start = 0;
        for (;;) {
          const auto comma = choices.find(',', start);
          if (choices.substr(start, comma - start) == e.value) return;
          if (comma == std::string_view::npos) break;
          start = comma + 1;
        }
        throw ConfigError(e.origin + ": '" + s.key + "' must be one of {" + std::string(choices) + "}, got '" +
                          e.value + "'");
      }
    }
  }

  std::string canonical_value(const SchemaEntry& s) const {
    const IniEntry& e = values_.at(s.key);
    switch (s.kind) {
      case ValueKind::real:
        return quadrature::format_number(parse_real(e.value, s.key, e.origin));
      case ValueKind::count:
        return std::to_string(parse_count(e.value, s.key, e.origin));
      case ValueKind::real_list: {
        std::string out;
        for (double v : parse_list(e.value, s.key, e.origin)) {
          if (!out.empty()) out += ", ";
          out += quadrature::format_number(v);
        }
        return out;
      }
      case ValueKind::real_or_auto: {
        const auto v = parse_real_or_auto(e.value, s.key, e.origin);
        return v ? quadrature::format_number(*v) : "auto";
      }
      case ValueKind::text:
        return e.value;
    }
    return e.value;
  }

  std::map<std::string, IniEntry> values_;
};

// ---------------------------------------------------------------------------
// Typed views

struct SingleModeCurve {
  double n_atoms = 0.0;
  double chi_over_hbar = 0.0;  // rad/s
};

struct SingleModeSettings {
  std::vector<SingleModeCurve> curves;
  double t_max = 0.12;
  std::size_t n_times = 1201;
};

struct WindowSettings {
  double z1 = 130e-6;
  double z2 = 150e-6;
  std::optional<double> lo_density;  // empty: from a mean-field run
  quadrature::AgeHandling ages = quadrature::AgeHandling::optimum_average;
};

struct TwaSettings {
  twa::TwaRun run;
  std::size_t n_traj = 1000;
  double observe_step = 0.25e-3;
  std::vector<double> snapshot_times;
  std::size_t snapshot_trajectories = 0;
  WindowSettings window;
};

struct Beam3dSettings {
  beam_models::FallModel model;
  double depth = 0.01;
  double region_length = 25e-6;
  double n_atoms = 1100.0;
  std::size_t n_times = 401;
};

struct TwoBeamSettings {
  std::vector<double> ratios;
  double n_atoms = 1230.0;
  double chi = 0.0;  // J
  double age = 0.0;  // s
  std::optional<double> transmissivity;  // empty: optimised
  beam_models::ReferenceChi reference_chi = beam_models::ReferenceChi::equal;
  std::size_t n_phases = 361;
};

struct ConvergenceSettings {
  std::size_t n_traj = 16;
  double tolerance = 0.01;
};

/// Observation times k * step for k = 1, 2, ... up to t_final (inclusive
/// within rounding), plus t_final itself if the step does not divide it.
inline std::vector<double> observation_times(double step, double t_final) {
  detail::require(step > 0.0 && t_final > 0.0, "observation step and t_final must be > 0");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor(t_final / step * (1.0 + 1e-12)));
  for (std::size_t k = 1; k <= n; ++k) out.push_back(std::min(t_final, static_cast<double>(k) * step));
  if (out.empty() || t_final - out.back() > 1e-9 * step) out.push_back(t_final);
  return out;
}

class RunConfig {
 public:
  explicit RunConfig(const IniTable& raw) : table_(raw) {}

  static RunConfig from_file(const std::string& path, const std::vector<std::string>& overrides = {},
                             std::optional<std::uint64_t> seed = std::nullopt) {
    IniTable raw = parse_ini_file(path);
    return with_overrides(std::move(raw), overrides, seed);
  }

  static RunConfig from_string(const std::string& text, const std::vector<std::string>& overrides = {},
                               std::optional<std::uint64_t> seed = std::nullopt) {
    IniTable raw = parse_ini_string(text);
    return with_overrides(std::move(raw), overrides, seed);
  }

  const ResolvedTable& table() const { return table_; }
  std::string canonical() const { return table_.canonical(); }

  std::uint64_t seed() const { return table_.count("run.seed"); }
  std::string output_dir() const { return table_.text("run.output_dir"); }

  SingleModeSettings single_mode() const {
    SingleModeSettings s;
    const auto n = table_.list("single_mode.atom_numbers");
    const auto chi = table_.list("single_mode.chi_over_hbar_rad_per_s");
    if (n.size() != chi.size() || n.empty())
      throw ConfigError(table_.origin("single_mode.chi_over_hbar_rad_per_s") +
                        ": single_mode.atom_numbers and single_mode.chi_over_hbar_rad_per_s need the same, "
                        "nonzero number of entries");
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (n[i] < 0.0) throw ConfigError(table_.origin("single_mode.atom_numbers") + ": atom numbers must be >= 0");
      s.curves.push_back({n[i], chi[i]});
    }
    s.t_max = positive("single_mode.t_max_s");
    s.n_times = static_cast<std::size_t>(table_.count("single_mode.n_times"));
    if (s.n_times < 2) throw ConfigError(table_.origin("single_mode.n_times") + ": single_mode.n_times must be >= 2");
    return s;
  }

  twa::RamanConfig raman() const {
    twa::RamanConfig c;
    c.mass = positive("raman.mass_kg");
    c.k0 = positive("raman.k0_rad_per_m");
    c.rabi = table_.real("raman.rabi_rad_per_s");
    c.omega_trap = positive("raman.trap_omega_rad_per_s");
    c.n_bec = positive("raman.n_bec_atoms");
    c.area = positive("raman.area_m2");
    c.u22 = twa::RamanConfig::reduce_to_1d(table_.real("raman.scattering_length_m"), c.mass, c.area);
    c.u11 = table_.real("raman.u11_over_u22") * c.u22;
    c.u12 = table_.real("raman.u12_over_u22") * c.u22;
    c.delta = table_.real_or_auto("raman.detuning_rad_per_s").value_or(c.resonant_delta());
    c.light_shift_1 = table_.real("raman.light_shift_1_rad_per_s");
    c.light_shift_2 = table_.real("raman.light_shift_2_rad_per_s");
    c.validate();
    return c;
  }

  twa::Grid1D grid() const {
    const auto n = table_.count("grid.n_points");
    const double lo = table_.real("grid.z_min_m");
    const double hi = table_.real("grid.z_max_m");
    try {
      return twa::Grid1D(lo, hi, static_cast<std::size_t>(n));
    } catch (const InvalidArgument& e) {
      throw ConfigError(table_.origin("grid.n_points") + ": " + e.what());
    }
  }

  WindowSettings window() const {
    WindowSettings w;
    w.z1 = table_.real("window.z1_m");
    w.z2 = table_.real("window.z2_m");
    if (!(w.z2 > w.z1)) throw ConfigError(table_.origin("window.z2_m") + ": window.z2_m must exceed window.z1_m");
    w.lo_density = table_.real_or_auto("window.lo_density_per_m");
    if (w.lo_density && *w.lo_density < 0.0)
      throw ConfigError(table_.origin("window.lo_density_per_m") + ": window.lo_density_per_m must be >= 0");
    const auto& ages = table_.text("window.analytic_ages");
    w.ages = ages == "common_phase" ? quadrature::AgeHandling::common_phase
             : ages == "midpoint"   ? quadrature::AgeHandling::midpoint
                                    : quadrature::AgeHandling::optimum_average;
    return w;
  }

  TwaSettings twa() const {
    TwaSettings s;
    s.run.config = raman();
    s.run.grid = grid();
    s.run.solver.beam_frame_k = table_.text("grid.beam_frame") == "kick" ? s.run.config.k0 : 0.0;
    s.run.solver.absorber.width = table_.real("grid.absorber_width_m");
    s.run.solver.absorber.strength = table_.real("grid.absorber_strength_per_s");
    s.run.t_final = positive("evolution.t_final_s");
    s.run.dt = positive("evolution.dt_s");
    s.observe_step = positive("evolution.observe_step_s");
    s.run.observe_times = observation_times(s.observe_step, s.run.t_final);
    s.snapshot_times = table_.list("evolution.snapshot_times_s");
    std::sort(s.snapshot_times.begin(), s.snapshot_times.end());
    for (double t : s.snapshot_times)
      if (t < 0.0 || t > s.run.t_final)
        throw ConfigError(table_.origin("evolution.snapshot_times_s") + ": snapshot times must lie in [0, t_final]");
    s.snapshot_trajectories = static_cast<std::size_t>(table_.count("evolution.snapshot_trajectories"));
    s.n_traj = static_cast<std::size_t>(table_.count("ensemble.n_traj"));
    if (s.n_traj < 2) throw ConfigError(table_.origin("ensemble.n_traj") + ": ensemble.n_traj must be >= 2");
    s.window = window();
    if (s.window.z1 < s.run.grid.z_min() || s.window.z2 > s.run.grid.z_max())
      throw ConfigError(table_.origin("window.z1_m") + ": the analysis window must lie inside the grid");
    return s;
  }

  Beam3dSettings beam3d() const {
    Beam3dSettings s;
    s.model.rho0 = positive("beam3d.rho0_per_m3");
    s.model.k0 = positive("beam3d.k0_rad_per_m");
    s.model.mass = positive("raman.mass_kg");
    s.model.g = table_.real("beam3d.g_m_per_s2");
    s.model.u22_3d = contact_coupling_3d(table_.real("raman.scattering_length_m"), s.model.mass);
    s.depth = positive("beam3d.depth_m");
    s.region_length = positive("beam3d.region_length_m");
    s.n_atoms = positive("beam3d.n_atoms");
    const auto& kin = table_.text("beam3d.kinematics");
    s.model.kinematics = kin == "free_fall"       ? beam_models::FallKinematics::free_fall
                         : kin == "depth_formula" ? beam_models::FallKinematics::depth_formula
                                                  : beam_models::FallKinematics::exact;
    const auto area = table_.real_or_auto("beam3d.area_m2");
    s.model.area = area ? *area : beam_models::back_solved_area(s.model, s.n_atoms, s.depth, s.region_length);
    s.n_times = static_cast<std::size_t>(table_.count("beam3d.n_times"));
    if (s.n_times < 2) throw ConfigError(table_.origin("beam3d.n_times") + ": beam3d.n_times must be >= 2");
    s.model.validate();
    return s;
  }

  TwoBeamSettings two_beam() const {
    TwoBeamSettings s;
    s.ratios = table_.list("two_beam.ref_intensity_ratios");
    if (s.ratios.empty())
      throw ConfigError(table_.origin("two_beam.ref_intensity_ratios") + ": need at least one intensity ratio");
    for (double r : s.ratios)
      if (r < 0.0 || r > 1.0)
        throw ConfigError(table_.origin("two_beam.ref_intensity_ratios") + ": intensity ratios must lie in [0, 1]");
    s.n_atoms = positive("two_beam.n_atoms");
    const auto c = raman();
    const auto w = window();
    s.chi = table_.real_or_auto("two_beam.chi_over_hbar_rad_per_s").value_or(c.u22 / (w.z2 - w.z1) / hbar) * hbar;
    s.age = table_.real_or_auto("two_beam.age_s").value_or(0.5 * (w.z1 + w.z2) / c.kick_velocity());
    s.transmissivity = table_.real_or_auto("two_beam.transmissivity");
    if (s.transmissivity && (*s.transmissivity < 0.0 || *s.transmissivity > 1.0))
      throw ConfigError(table_.origin("two_beam.transmissivity") + ": transmissivity must lie in [0, 1]");
    s.reference_chi = table_.text("two_beam.reference_chi") == "scaled" ? beam_models::ReferenceChi::scaled_by_intensity
                                                                          : beam_models::ReferenceChi::equal;
    s.n_phases = static_cast<std::size_t>(table_.count("two_beam.n_phases"));
    if (s.n_phases < 2) throw ConfigError(table_.origin("two_beam.n_phases") + ": two_beam.n_phases must be >= 2");
    return s;
  }

  ConvergenceSettings convergence() const {
    ConvergenceSettings s;
    s.n_traj = static_cast<std::size_t>(table_.count("convergence.n_traj"));
    if (s.n_traj < 2) throw ConfigError(table_.origin("convergence.n_traj") + ": convergence.n_traj must be >= 2");
    s.tolerance = positive("convergence.tolerance");
    return s;
  }

 private:
  static RunConfig with_overrides(IniTable raw, const std::vector<std::string>& overrides,
                                  std::optional<std::uint64_t> seed) {
    for (const auto& o : overrides) apply_override(raw, o);
    if (seed) raw["run.seed"] = IniEntry{std::to_string(*seed), "--seed"};
    return RunConfig(raw);
  }

  double positive(const std::string& key) const {
    const double v = table_.real(key);
    if (!(v > 0.0)) throw ConfigError(table_.origin(key) + ": '" + key + "' must be > 0");
    return v;
  }

  ResolvedTable table_;
};

}  // namespace kerrbeam::app
