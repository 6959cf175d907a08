#pragma once

// Symmetric split-step integrator for the truncated-Wigner equations of a
// Raman atom laser (trapped field psi1, beam field psi2):
//
//   i hbar d(psi1)/dt = [ -hbar^2/2m d_z^2 + m w^2 z^2 / 2 - hbar ls1
//                         + U11 (|psi1|^2 - 1/dz) + U12 (|psi2|^2 - 1/(2dz)) ] psi1
//                       - hbar Omega e^{-i k0 z} psi2
//   i hbar d(psi2)/dt = [ -hbar^2/2m d_z^2 - hbar ls2 - hbar delta
//                         + U22 (|psi2|^2 - 1/dz) + U12 (|psi1|^2 - 1/(2dz)) ] psi2
//                       - hbar Omega e^{+i k0 z} psi1
//
// z points along the kick, so outcoupled atoms carry momentum +hbar k0. The
// 1/dz terms remove the mean field of the Wigner vacuum. There is no noise
// during evolution; it enters only through the initial state.
//
// One step is H(dt/2) K(dt) H(dt/2), where K is the exact kinetic
// propagator in Fourier space and H(h) = P(h/2) C(h) P(h/2): P applies the
// local potential and mean-field phases with densities frozen, C is the exact
// 2x2 unitary of the Raman coupling.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "kerrbeam/error.hpp"
#include "kerrbeam/twa/fftw.hpp"
#include "kerrbeam/twa/grid.hpp"
#include "kerrbeam/twa/raman_config.hpp"
#include "kerrbeam/twa/state.hpp"
#include "kerrbeam/units.hpp"

namespace kerrbeam::twa {

/// Imaginary-potential absorber: damping rate strength * (depth/width)^2 inside
/// layers of the given width at both ends of the box. Disabled when width == 0.
struct Absorber {
  double width = 0.0;     // m
  double strength = 0.0;  // 1/s

  bool enabled() const { return width > 0.0 && strength > 0.0; }
};

struct SolverOptions {
  double beam_frame_k = 0.0;  // rad/m; see TrajectoryState
  Absorber absorber;
  std::size_t finite_check_interval = 64;
};

struct EvolveReport {
  std::size_t steps = 0;
  double number_start = 0.0;
  double number_end = 0.0;

  double relative_drift() const {
    return number_start == 0.0 ? std::abs(number_end) : std::abs(number_end - number_start) / std::abs(number_start);
  }
};

/// Largest kinetic phase per step allowed by the step guard.
inline constexpr double kMaxKineticPhase = std::numbers::pi / 4.0;

namespace kernel {

/// Plain complex product; operator* goes through the C99 Annex G NaN recovery.
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// exp(i x); a short Taylor series for the small mean-field phases, libm otherwise.
inline cplx unit_phase(double x) {
  if (std::abs(x) < 0.05) {
    const double x2 = x * x;
    constexpr double c2 = -1.0 / 2, c4 = 1.0 / 24, c6 = -1.0 / 720, c8 = 1.0 / 40320;
    constexpr double s3 = -1.0 / 6, s5 = 1.0 / 120, s7 = -1.0 / 5040, s9 = 1.0 / 362880;
    const double c = 1.0 + x2 * (c2 + x2 * (c4 + x2 * (c6 + x2 * c8)));
    const double s = x * (1.0 + x2 * (s3 + x2 * (s5 + x2 * (s7 + x2 * s9))));
    return {c, s};
  }
  return std::polar(1.0, x);
}

}  // namespace kernel

class Propagator {
 public:
  Propagator(const RamanConfig& config, const Grid1D& grid, SolverOptions options = {})
      : config_(config), grid_(grid), options_(options), plan_(grid.size()) {
    config_.validate();
    detail::require(std::isfinite(options_.beam_frame_k), "SolverOptions: beam_frame_k must be finite");
    const double kick = std::abs(config_.k0 - options_.beam_frame_k);
    if (grid_.k_max() < 2.5 * kick) {
      std::ostringstream msg;
      msg << "grid k_max = " << grid_.k_max() << " rad/m does not resolve the kick (need >= 2.5 * " << kick << ")";
      throw GridResolution(msg.str());
    }
    const std::size_t n = grid_.size();
    coupling_phase_.assign(n, cplx{1.0, 0.0});
    if (kick != 0.0) {
      for (std::size_t i = 0; i < n; ++i)
        coupling_phase_[i] = std::polar(1.0, -(config_.k0 - options_.beam_frame_k) * grid_.z(i));
    }
    damping_rate_.assign(n, 0.0);
    if (options_.absorber.enabled()) {
      const double w = options_.absorber.width;
      for (std::size_t i = 0; i < n; ++i) {
        const double depth = std::max(grid_.z_min() + w - grid_.z(i), grid_.z(i) - (grid_.z_max() - w));
        if (depth > 0.0) damping_rate_[i] = options_.absorber.strength * (depth / w) * (depth / w);
      }
    }
  }

  const RamanConfig& config() const { return config_; }
  const Grid1D& grid() const { return grid_; }
  const SolverOptions& options() const { return options_; }

  /// Largest kinetic phase hbar k^2 dt / 2m over both fields' spectral grids.
  double kinetic_phase(double dt) const {
    const double kmax1 = grid_.k_max();
    const double kmax2 = grid_.k_max() + std::abs(options_.beam_frame_k);
    const double kmax = std::max(kmax1, kmax2);
    return hbar * kmax * kmax * dt / (2.0 * config_.mass);
  }

  TrajectoryState make_state() const { return TrajectoryState(grid_.size(), options_.beam_frame_k); }

  void step(TrajectoryState& s, double dt) {
    check_state(s);
    detail::require(std::isfinite(dt) && dt > 0.0, "step: dt must be > 0");
    if (kinetic_phase(dt) > kMaxKineticPhase) {
      std::ostringstream msg;
      msg << "step: dt = " << dt << " s gives kinetic phase " << kinetic_phase(dt) << " > pi/4 at k_max";
      throw InvalidArgument(msg.str());
    }
    const Tables& tab = tables_for(dt);
    position_half_step(s, tab);
    kinetic_step(s, tab);
    position_half_step(s, tab);
    s.t += dt;
  }

  /// Advances to t_final with fixed dt, shortening the last step of each
  /// segment so every observe time is hit exactly. on_observe(index, state) is
  /// called once per observe time, in order.
  template <class Observer>
  EvolveReport evolve(TrajectoryState& s, double t_final, double dt, std::span<const double> observe_times,
                      Observer&& on_observe) {
    check_state(s);
    detail::require(std::isfinite(t_final) && t_final >= s.t, "evolve: t_final must be >= state time");
    detail::require(std::isfinite(dt) && dt > 0.0, "evolve: dt must be > 0");
    for (std::size_t i = 0; i < observe_times.size(); ++i) {
      detail::require(observe_times[i] >= s.t && observe_times[i] <= t_final,
                      "evolve: observe times must lie in [t, t_final]");
      if (i > 0) detail::require(observe_times[i] >= observe_times[i - 1], "evolve: observe times must be sorted");
    }
    EvolveReport report;
    report.number_start = corrected_number(s, grid_);

    std::size_t since_check = 0;
    auto advance_to = [&](double target) {
      const double t0 = s.t;
      const double span = target - t0;
      if (span <= 1e-9 * dt) {
        s.t = std::max(s.t, target);
        return;
      }
      const auto full = static_cast<std::size_t>(std::floor(span / dt * (1.0 + 1e-12)));
      for (std::size_t k = 0; k < full; ++k) {
        step(s, dt);
        s.t = t0 + static_cast<double>(k + 1) * dt;
        ++report.steps;
        if (++since_check >= options_.finite_check_interval) {
          since_check = 0;
          check_finite(s);
        }
      }
      const double rest = target - s.t;
      if (rest > 1e-9 * dt) {
        step(s, rest);
        ++report.steps;
      }
      s.t = target;
    };

    for (std::size_t i = 0; i < observe_times.size(); ++i) {
      advance_to(observe_times[i]);
      check_finite(s);
      on_observe(i, static_cast<const TrajectoryState&>(s));
    }
    advance_to(t_final);
    check_finite(s);
    report.number_end = corrected_number(s, grid_);
    return report;
  }

  EvolveReport evolve(TrajectoryState& s, double t_final, double dt) {
    return evolve(s, t_final, dt, std::span<const double>{}, [](std::size_t, const TrajectoryState&) {});
  }

 private:
  struct Tables {
    double dt = 0.0;
    std::vector<cplx> kinetic1, kinetic2;  // include the 1/n FFT normalisation
    std::vector<cplx> static1, static2;    // quarter-step potential phases
    std::vector<double> damping;           // quarter-step absorber factors
    double cos_c = 1.0, sin_c = 0.0;       // half-step coupling rotation
  };

  void check_state(const TrajectoryState& s) const {
    detail::require(s.psi1.size() == grid_.size() && s.psi2.size() == grid_.size(),
                    "trajectory state does not match the grid");
    detail::require(s.beam_frame_k == options_.beam_frame_k, "trajectory state uses a different beam frame");
  }

  void check_finite(const TrajectoryState& s) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sum += std::norm(s.psi1[i]) + std::norm(s.psi2[i]);
    if (!std::isfinite(sum)) {
      std::ostringstream msg;
      msg << "non-finite field amplitude at t = " << s.t << " s";
      throw StepFailure(msg.str());
    }
  }

  const Tables& tables_for(double dt) {
    for (auto& slot : cache_)
      if (slot && std::abs(slot->dt - dt) <= 1e-9 * dt) return *slot;
    // slot 0 keeps the first (nominal) step size, slot 1 cycles through odd ones
    auto& slot = cache_[0] ? cache_[1] : cache_[0];
    slot = build_tables(dt);
    return *slot;
  }

  Tables build_tables(double dt) const {
    const std::size_t n = grid_.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double m = config_.mass;
    const double q = options_.beam_frame_k;
    Tables t;
    t.dt = dt;
    t.kinetic1.resize(n);
    t.kinetic2.resize(n);
    t.static1.resize(n);
    t.static2.resize(n);
    t.damping.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double k = grid_.k(i);
      t.kinetic1[i] = std::polar(inv_n, -hbar * k * k * dt / (2.0 * m));
      t.kinetic2[i] = std::polar(inv_n, -hbar * (k + q) * (k + q) * dt / (2.0 * m));
      const double z = grid_.z(i);
      const double v1 = 0.5 * m * config_.omega_trap * config_.omega_trap * z * z / hbar - config_.light_shift_1;
      const double v2 = -config_.light_shift_2 - config_.delta;
      t.static1[i] = std::polar(1.0, -v1 * 0.25 * dt);
      t.static2[i] = std::polar(1.0, -v2 * 0.25 * dt);
      if (damping_rate_[i] > 0.0) t.damping[i] = std::exp(-damping_rate_[i] * 0.25 * dt);
    }
    t.cos_c = std::cos(config_.rabi * 0.5 * dt);
    t.sin_c = std::sin(config_.rabi * 0.5 * dt);
    return t;
  }

  // P(dt/4): potential and mean-field phases with densities frozen
  template <bool Dyn1, bool Dyn2, bool Damp>
  void quarter_phase_at(std::size_t i, cplx& a, cplx& b, const Tables& tab, double scale, double inv_dz) const {
    const double n1 = std::norm(a);
    const double n2 = std::norm(b);
    cplx f1 = tab.static1[i];
    cplx f2 = tab.static2[i];
    if constexpr (Dyn1)
      f1 = kernel::mul(f1, kernel::unit_phase(scale * (config_.u11 * (n1 - inv_dz) + config_.u12 * (n2 - 0.5 * inv_dz))));
    if constexpr (Dyn2)
      f2 = kernel::mul(f2, kernel::unit_phase(scale * (config_.u22 * (n2 - inv_dz) + config_.u12 * (n1 - 0.5 * inv_dz))));
    if constexpr (Damp) {
      f1 *= tab.damping[i];
      f2 *= tab.damping[i];
    }
    a = kernel::mul(a, f1);
    b = kernel::mul(b, f2);
  }

  // P(dt/4) C(dt/2) P(dt/4), all local, in one sweep. C is the exact 2x2
  // unitary of the Raman coupling.
  template <bool Dyn1, bool Dyn2, bool Damp>
  void position_sweep(TrajectoryState& s, const Tables& tab) const {
    const double inv_dz = 1.0 / grid_.dz();
    const double scale = -0.25 * tab.dt / hbar;
    const cplx is{0.0, tab.sin_c};
    const double c = tab.cos_c;
    const std::size_t n = grid_.size();
    for (std::size_t i = 0; i < n; ++i) {
      cplx a = s.psi1[i];
      cplx b = s.psi2[i];
      quarter_phase_at<Dyn1, Dyn2, Damp>(i, a, b, tab, scale, inv_dz);
      const cplx e = coupling_phase_[i];
      const cplx a0 = a;
      a = c * a0 + kernel::mul(is, kernel::mul(e, b));
      b = c * b + kernel::mul(is, kernel::mul(std::conj(e), a0));
      quarter_phase_at<Dyn1, Dyn2, Damp>(i, a, b, tab, scale, inv_dz);
      s.psi1[i] = a;
      s.psi2[i] = b;
    }
  }

  void position_half_step(TrajectoryState& s, const Tables& tab) const {
    const bool dyn1 = config_.u11 != 0.0 || config_.u12 != 0.0;
    const bool dyn2 = config_.u22 != 0.0 || config_.u12 != 0.0;
    const bool damp = options_.absorber.enabled();
    if (damp)
      position_sweep<true, true, true>(s, tab);
    else if (dyn1)
      position_sweep<true, true, false>(s, tab);
    else if (dyn2)
      position_sweep<false, true, false>(s, tab);
    else
      position_sweep<false, false, false>(s, tab);
  }

  void kinetic_step(TrajectoryState& s, const Tables& tab) const {
    plan_.forward(s.psi1);
    for (std::size_t i = 0; i < grid_.size(); ++i) s.psi1[i] = kernel::mul(s.psi1[i], tab.kinetic1[i]);
    plan_.backward(s.psi1);
    plan_.forward(s.psi2);
    for (std::size_t i = 0; i < grid_.size(); ++i) s.psi2[i] = kernel::mul(s.psi2[i], tab.kinetic2[i]);
    plan_.backward(s.psi2);
  }

  RamanConfig config_;
  Grid1D grid_;
  SolverOptions options_;
  FftPlan plan_;
  std::vector<cplx> coupling_phase_;
  std::vector<double> damping_rate_;
  std::optional<Tables> cache_[2];
};

/// One Strang step with a throwaway propagator. Prefer Propagator for loops.
inline TrajectoryState step(TrajectoryState state, const RamanConfig& config, const Grid1D& grid, double dt,
                            SolverOptions options = {}) {
  options.beam_frame_k = state.beam_frame_k;
  Propagator prop(config, grid, options);
  prop.step(state, dt);
  return state;
}

}  // namespace kerrbeam::twa
