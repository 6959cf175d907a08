#pragma once

// Beam-scale estimators: dilution of a falling 3D beam and the resulting
// time-dependent Kerr coefficient, and intensity noise after interfering two
// Kerr-evolved beams.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "kerrbeam/error.hpp"
#include "kerrbeam/fock.hpp"
#include "kerrbeam/single_mode.hpp"
#include "kerrbeam/units.hpp"

namespace kerrbeam::beam_models {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Falling beam

/// How depth and atom age are related.
///   exact: z(t) = v0 t + g t^2 / 2, density rho0 v0 / (v0 + g t)
///   free_fall: z(t) = g t^2 / 2, same density as exact
///   depth_formula: z(t) = v0 t + g t^2 / 2 inserted into density_at_depth
enum class FallKinematics { exact, free_fall, depth_formula };

struct FallModel {
  double rho0 = 3e18;  // m^-3
  double k0 = 3.2e7;   // rad/m
  double mass = rb87::mass;
  double g = g_earth;
  double area = 0.0;  // m^2; 0 selects reference_area()
  double u22_3d = contact_coupling_3d(rb87::scattering_length, rb87::mass);
  FallKinematics kinematics = FallKinematics::exact;

  double kick_velocity() const { return hbar * k0 / mass; }

  void validate() const {
    const double values[] = {rho0, k0, mass, g, area, u22_3d};
    for (double v : values) detail::require(std::isfinite(v), "FallModel: parameters must be finite");
    detail::require(rho0 > 0.0 && k0 > 0.0 && mass > 0.0, "FallModel: rho0, k0 and mass must be > 0");
    detail::require(g >= 0.0 && area >= 0.0 && u22_3d >= 0.0, "FallModel: g, area and U22 must be >= 0");
  }
};

/// rho = rho0 / (1 + m sqrt(2 g z) / (hbar k0)).
inline double density_at_depth(const FallModel& model, double z) {
  model.validate();
  detail::require(std::isfinite(z) && z >= 0.0, "density_at_depth: depth must be >= 0");
  return model.rho0 / (1.0 + model.mass * std::sqrt(2.0 * model.g * z) / (hbar * model.k0));
}

/// Reference region: 25 um of beam 1 cm below the condensate holding 1100 atoms.
inline constexpr double kReferenceDepth = 0.01;
inline constexpr double kReferenceExtent = 25e-6;
inline constexpr double kReferenceAtoms = 1100.0;

/// Cross-section that puts n_atoms in `extent` of beam at `depth`.
inline double back_solved_area(const FallModel& model, double n_atoms, double depth, double extent) {
  detail::require(n_atoms > 0.0 && extent > 0.0, "back_solved_area: atoms and extent must be > 0");
  return n_atoms / (density_at_depth(model, depth) * extent);
}

inline double reference_area(const FallModel& model) {
  return back_solved_area(model, kReferenceAtoms, kReferenceDepth, kReferenceExtent);
}

inline double effective_area(const FallModel& model) { return model.area > 0.0 ? model.area : reference_area(model); }

inline double atoms_in_fall_region(const FallModel& model, double z_center, double extent) {
  detail::require(std::isfinite(extent) && extent >= 0.0, "atoms_in_fall_region: extent must be >= 0");
  return density_at_depth(model, z_center) * effective_area(model) * extent;
}

inline double depth_at_time(const FallModel& model, double t) {
  detail::require(std::isfinite(t) && t >= 0.0, "depth_at_time: t must be >= 0");
  const double fall = 0.5 * model.g * t * t;
  return model.kinematics == FallKinematics::free_fall ? fall : model.kick_velocity() * t + fall;
}

/// Age at which the beam reaches `depth`.
inline double arrival_time(const FallModel& model, double depth) {
  model.validate();
  detail::require(std::isfinite(depth) && depth >= 0.0, "arrival_time: depth must be >= 0");
  const double v0 = model.kick_velocity();
  if (model.kinematics == FallKinematics::free_fall) {
    detail::require(model.g > 0.0, "arrival_time: free fall needs g > 0");
    return std::sqrt(2.0 * depth / model.g);
  }
  if (model.g == 0.0) return depth / v0;
  // positive root of g t^2 / 2 + v0 t - depth, written to avoid cancellation
  return 2.0 * depth / (v0 + std::sqrt(v0 * v0 + 2.0 * model.g * depth));
}

inline double density_at_time(const FallModel& model, double t) {
  detail::require(std::isfinite(t) && t >= 0.0, "density_at_time: t must be >= 0");
  if (model.kinematics == FallKinematics::depth_formula) return density_at_depth(model, depth_at_time(model, t));
  model.validate();
  return model.rho0 / (1.0 + model.g * t / model.kick_velocity());
}

/// chi(t) = U22 rho(t) / N_mode, so N_mode chi / hbar is the local mean-field rate.
inline double falling_chi(const FallModel& model, double n_mode, double t) {
  detail::require(std::isfinite(n_mode) && n_mode > 0.0, "falling_chi: mode occupation must be > 0");
  return model.u22_3d * density_at_time(model, t) / n_mode;
}

/// Tabulated chi on [0, t_end], sampled uniformly in log(1 + g t / v0) so the
/// early fast decay is resolved.
inline single_mode::ChiSchedule falling_chi_schedule(const FallModel& model, double n_mode, double t_end,
                                                     std::size_t intervals = 20000) {
  detail::require(std::isfinite(t_end) && t_end > 0.0, "falling_chi_schedule: t_end must be > 0");
  detail::require(intervals >= 1, "falling_chi_schedule: need at least one interval");
  const double tau = model.g > 0.0 ? model.kick_velocity() / model.g : 0.0;
  single_mode::ChiTabulated tab;
  tab.times.resize(intervals + 1);
  tab.chi_values.resize(intervals + 1);
  const double u_end = tau > 0.0 ? std::log1p(t_end / tau) : 0.0;
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(intervals);
    double t = tau > 0.0 ? tau * std::expm1(u_end * f) : t_end * f;
    if (k == intervals) t = t_end;
    tab.times[k] = t;
    tab.chi_values[k] = falling_chi(model, n_mode, t);
  }
  tab.times[0] = 0.0;
  return single_mode::ChiSchedule(std::move(tab));
}

/// Closed form of (1/hbar) int_0^t chi for the exact and free-fall density.
inline double falling_accumulated_phase(const FallModel& model, double n_mode, double t) {
  detail::require(model.kinematics != FallKinematics::depth_formula,
                  "falling_accumulated_phase: no closed form for the depth-formula kinematics");
  detail::require(std::isfinite(t) && t >= 0.0, "falling_accumulated_phase: t must be >= 0");
  const double rate0 = model.u22_3d * model.rho0 / (n_mode * hbar);
  if (model.g == 0.0) return rate0 * t;
  const double tau = model.kick_velocity() / model.g;
  return rate0 * tau * std::log1p(t / tau);
}

struct FallPrediction {
  double depth = 0.0;
  double age = 0.0;
  double n_mode = 0.0;
  double theta = 0.0;  // accumulated Kerr phase
  double phi = 0.0;
  double var_sq = 1.0;
  double var_anti = 1.0;
};

/// Single-mode prediction for atoms that have fallen to `depth`, with the
/// accumulated phase of the falling chi schedule.
inline FallPrediction fall_prediction(const FallModel& model, double n_mode, double depth) {
  FallPrediction out;
  out.depth = depth;
  out.n_mode = n_mode;
  out.age = arrival_time(model, depth);
  if (out.age == 0.0) return out;
  const auto schedule = falling_chi_schedule(model, n_mode, out.age);
  const auto point = single_mode::accumulated_phase_optimum(schedule, std::sqrt(n_mode), out.age);
  out.theta = schedule.accumulated_phase(out.age);
  out.phi = point.squeezed.phi;
  out.var_sq = point.squeezed.variance;
  out.var_anti = point.var_anti;
  return out;
}

// ---------------------------------------------------------------------------
// Two-beam interference

// The Fano factor is var(I)/<I> with var(I) a difference of numbers ~<I>^2,
// so moments and their combination are carried in long double.
using wide = long double;
using wide_cplx = std::complex<wide>;

/// <a^dag^p a^q> for p, q in 0..2.
struct ModeMoments {
  std::array<std::array<wide_cplx, 3>, 3> m{};
  bool coherent = false;  // central moments vanish exactly

  wide_cplx operator()(unsigned p, unsigned q) const { return m[p][q]; }
};

inline ModeMoments kerr_moments(double alpha, double theta) {
  ModeMoments out;
  if (theta == 0.0) {
    for (unsigned p = 0; p < 3; ++p)
      for (unsigned q = 0; q < 3; ++q) out.m[p][q] = std::pow(static_cast<wide>(alpha), static_cast<int>(p + q));
    out.coherent = true;
    return out;
  }
  const auto c0 = fock::coherent_amplitudes<wide>(alpha, fock::default_cutoff(alpha));
  const auto c = fock::kerr_evolve<wide>(c0, theta);
  for (unsigned p = 0; p < 3; ++p)
    for (unsigned q = 0; q < 3; ++q) out.m[p][q] = fock::normal_moment(c, p, q);
  return out;
}

/// Kerr coefficient of the reference beam.
enum class ReferenceChi {
  equal,                // same chi as the main beam
  scaled_by_intensity,  // chi * r (weaker beam, lower density)
};

struct TwoBeamConfig {
  double alpha_main = 0.0;
  double alpha_ref = 0.0;
  double chi = 0.0;  // J
  double t = 0.0;    // s
  double mix_phase = 0.0;
  double transmissivity = 0.5;
  ReferenceChi reference_chi = ReferenceChi::equal;

  double intensity_ratio() const { return alpha_main > 0.0 ? (alpha_ref * alpha_ref) / (alpha_main * alpha_main) : 0.0; }

  void validate() const {
    const double values[] = {alpha_main, alpha_ref, chi, t, mix_phase, transmissivity};
    for (double v : values) detail::require(std::isfinite(v), "TwoBeamConfig: parameters must be finite");
    detail::require(alpha_main > 0.0 && alpha_ref >= 0.0, "TwoBeamConfig: need alpha_main > 0 and alpha_ref >= 0");
    detail::require(alpha_ref <= alpha_main, "TwoBeamConfig: the reference must be the weaker beam (r <= 1)");
    detail::require(t >= 0.0, "TwoBeamConfig: t must be >= 0");
    detail::require(transmissivity >= 0.0 && transmissivity <= 1.0, "TwoBeamConfig: transmissivity must lie in [0, 1]");
  }

  double reference_theta() const {
    const double theta = chi * t / hbar;
    return reference_chi == ReferenceChi::equal ? theta : theta * intensity_ratio();
  }
};

struct IntensityNoise {
  double fano = 1.0;
  double mean_intensity = 0.0;  // port c
  double mean_other_port = 0.0;
};

struct TwoBeamMoments {
  ModeMoments main;
  ModeMoments ref;
};

inline TwoBeamMoments two_beam_moments(const TwoBeamConfig& cfg) {
  cfg.validate();
  return {kerr_moments(cfg.alpha_main, cfg.chi * cfg.t / hbar), kerr_moments(cfg.alpha_ref, cfg.reference_theta())};
}

namespace mixing {

inline wide_cplx ipow(wide_cplx z, unsigned k) {
  wide_cplx r(1);
  for (unsigned i = 0; i < k; ++i) r *= z;
  return r;
}

/// <c^dag^n c^n> for c = x a + y b with a, b independent, n = 1 or 2.
inline wide port_factorial_moment(const TwoBeamMoments& mom, wide_cplx x, wide_cplx y, unsigned n) {
  static constexpr wide binom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
  wide_cplx sum(0);
  for (unsigned i = 0; i <= n; ++i) {
    for (unsigned j = 0; j <= n; ++j) {
      const wide_cplx coeff = binom[n][i] * binom[n][j] * ipow(std::conj(x), i) * ipow(std::conj(y), n - i) *
                              ipow(x, j) * ipow(y, n - j);
      sum += coeff * mom.main(i, j) * mom.ref(n - i, n - j);
    }
  }
  return sum.real();
}

/// Moments of a - <a> from the raw normally ordered moments.
inline ModeMoments central(const ModeMoments& raw) {
  static constexpr wide binom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
  ModeMoments out;
  if (raw.coherent) {
    out.m[0][0] = 1;
    out.coherent = true;
    return out;
  }
  const wide_cplx m = raw(0, 1);
  for (unsigned p = 0; p < 3; ++p)
    for (unsigned q = 0; q < 3; ++q) {
      wide_cplx sum(0);
      for (unsigned j = 0; j <= p; ++j)
        for (unsigned k = 0; k <= q; ++k)
          sum += binom[p][j] * binom[q][k] * ipow(-std::conj(m), p - j) * ipow(-m, q - k) * raw(j, k);
      out.m[p][q] = sum;
    }
  out.m[0][1] = out.m[1][0] = 0;
  return out;
}

inline wide_cplx port_central_moment(const TwoBeamMoments& c, wide_cplx x, wide_cplx y, unsigned p, unsigned q) {
  static constexpr wide binom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
  wide_cplx sum(0);
  for (unsigned i = 0; i <= p; ++i)
    for (unsigned j = 0; j <= q; ++j)
      sum += binom[p][i] * binom[q][j] * ipow(std::conj(x), i) * ipow(std::conj(y), p - i) * ipow(x, j) *
             ipow(y, q - j) * c.main(i, j) * c.ref(p - i, q - j);
  return sum;
}

inline IntensityNoise port_noise(const TwoBeamMoments& mom, double transmissivity, double mix_phase) {
  const wide tr = std::sqrt(static_cast<wide>(transmissivity));
  const wide rf = std::sqrt(1 - static_cast<wide>(transmissivity));
  const wide_cplx e = std::polar(wide(1), static_cast<wide>(mix_phase));
  // c = sqrt(T) a + e^{i phase} sqrt(1 - T) b,  d = sqrt(1 - T) a - e^{i phase} sqrt(T) b
  const wide_cplx xc = tr, yc = e * rf;
  const wide_cplx xd = rf, yd = -e * tr;
  // Written with c = g + f, <f> = 0, so a coherent input gives exactly var = |g|^2
  // instead of a difference of two large numbers near a dark port.
  const TwoBeamMoments cm{central(mom.main), central(mom.ref)};
  const wide_cplx g = xc * mom.main(0, 1) + yc * mom.ref(0, 1);
  const wide g2 = std::norm(g);
  const wide nf = port_central_moment(cm, xc, yc, 1, 1).real();
  const wide_cplx ff = port_central_moment(cm, xc, yc, 0, 2);
  const wide_cplx fdff = port_central_moment(cm, xc, yc, 1, 2);
  const wide ffff = port_central_moment(cm, xc, yc, 2, 2).real();
  const wide n1 = g2 + nf;
  const wide var = g2 * (1 + 2 * nf) + 2 * (std::conj(g) * std::conj(g) * ff).real() +
                   4 * (std::conj(g) * fdff).real() + ffff + nf - nf * nf;
  IntensityNoise out;
  out.mean_intensity = static_cast<double>(n1);
  const wide_cplx gd = xd * mom.main(0, 1) + yd * mom.ref(0, 1);
  out.mean_other_port = static_cast<double>(std::norm(gd) + port_central_moment(cm, xd, yd, 1, 1).real());
  out.fano = n1 > 0 ? static_cast<double>(var / n1) : 1.0;
  return out;
}

}  // namespace mixing

/// Intensity noise in output port c. Each beam starts coherent and evolves
/// under its own Kerr term; the two are independent before the splitter.
inline IntensityNoise two_beam_intensity_noise(const TwoBeamConfig& cfg) {
  return mixing::port_noise(two_beam_moments(cfg), cfg.transmissivity, cfg.mix_phase);
}

struct FanoOptimum {
  double mix_phase = 0.0;  // in [0, 2 pi)
  double transmissivity = 0.5;
  double fano = 1.0;
  double mean_intensity = 0.0;
};

inline constexpr std::size_t kMixPhaseGrid = 720;
inline constexpr double kMixPhaseTolerance = 1e-9;

namespace mixing {

/// Minimum over the mixing phase for fixed moments and transmissivity.
inline FanoOptimum optimise_phase(const TwoBeamMoments& mom, double transmissivity) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto fano = [&](double phase) { return port_noise(mom, transmissivity, phase).fano; };
  const double step = two_pi / static_cast<double>(kMixPhaseGrid);
  std::size_t best = 0;
  double best_val = fano(0.0), worst_val = best_val;
  for (std::size_t k = 1; k < kMixPhaseGrid; ++k) {
    const double v = fano(step * static_cast<double>(k));
    if (v < best_val) {
      best_val = v;
      best = k;
    }
    worst_val = std::max(worst_val, v);
  }
  FanoOptimum out;
  out.transmissivity = transmissivity;
  // flat within roundoff of the moments: no preferred phase
  if (worst_val - best_val <= 1e-11 * std::max(1.0, std::abs(worst_val))) {
    out.mix_phase = 0.0;
  } else {
    const double centre = step * static_cast<double>(best);
    const auto opt = single_mode::search::golden_section(fano, centre - step, centre + step, kMixPhaseTolerance);
    out.mix_phase = std::fmod(opt.phi + two_pi, two_pi);
  }
  const auto noise = port_noise(mom, transmissivity, out.mix_phase);
  out.fano = noise.fano;
  out.mean_intensity = noise.mean_intensity;
  return out;
}

}  // namespace mixing

/// Minimises the port-c Fano factor over the mixing phase; with
/// optimise_transmissivity the splitter ratio is optimised as well (grid over
/// (0, 1), then golden refinement).
inline FanoOptimum phase_optimized_fano(const TwoBeamConfig& cfg, bool optimise_transmissivity = false) {
  const TwoBeamMoments mom = two_beam_moments(cfg);
  if (!optimise_transmissivity) return mixing::optimise_phase(mom, cfg.transmissivity);

  constexpr std::size_t grid = 99;
  FanoOptimum best;
  best.fano = std::numeric_limits<double>::infinity();
  std::size_t best_k = 1;
  for (std::size_t k = 1; k <= grid; ++k) {
    const auto opt = mixing::optimise_phase(mom, static_cast<double>(k) / (grid + 1));
    if (opt.fano < best.fano) {
      best = opt;
      best_k = k;
    }
  }
  const double h = 1.0 / (grid + 1);
  const double lo = static_cast<double>(best_k) * h - h;
  const double hi = static_cast<double>(best_k) * h + h;
  auto by_t = [&](double tr) { return mixing::optimise_phase(mom, tr).fano; };
  const auto refined = single_mode::search::golden_section(by_t, std::max(lo, 1e-9), std::min(hi, 1.0 - 1e-9), 1e-7);
  const auto opt = mixing::optimise_phase(mom, refined.phi);
  return opt.fano < best.fano ? opt : best;
}

}  // namespace kerrbeam::beam_models
