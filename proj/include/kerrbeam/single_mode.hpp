#pragma once

// Single-mode Kerr squeezing of an initially coherent state.
//
// H = hbar omega a^dag a + (chi/2) a^dag a^dag a a. Quadratures are
// X^phi = e^{i phi} a + e^{-i phi} a^dag with phi measured in the frame
// rotating at omega, so omega never enters the variance. Everything depends
// on time only through the accumulated Kerr phase theta = chi t / hbar; a
// time-dependent chi(t) is handled by replacing theta with
// (1/hbar) int_0^t chi(t') dt', which is exact because the Kerr Hamiltonian
// commutes with itself at different times.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iterator>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kerrbeam/error.hpp"
#include "kerrbeam/fock.hpp"
#include "kerrbeam/units.hpp"

namespace kerrbeam::single_mode {

struct KerrParams {
  double chi = 0.0;    // J
  double omega = 0.0;  // rad/s
  double alpha = 0.0;  // real coherent amplitude, N = alpha^2

  /// Builds params from chi/hbar in rad/s, i.e. "chi = 0.1 hbar" is from_rate(0.1, ...).
  static KerrParams from_rate(double chi_over_hbar, double alpha, double omega = 0.0) {
    return KerrParams{chi_over_hbar * hbar, omega, alpha};
  }

  double chi_rate() const { return chi / hbar; }
  double mean_number() const { return alpha * alpha; }

  void validate() const {
    detail::require(std::isfinite(chi) && std::isfinite(omega), "chi and omega must be finite");
    detail::require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be finite and >= 0");
  }
};

struct QuadratureSample {
  double t = 0.0;
  double phi = 0.0;
  double variance = 1.0;
};

struct PhaseOptimum {
  double phi = 0.0;
  double variance = 1.0;
};

struct TracePoint {
  QuadratureSample squeezed;  // at the optimal phase
  double var_anti = 1.0;      // at phi + pi/2
};

/// Quadrature variance after accumulated Kerr phase theta.
///
/// 1 + 2N + 2N e^{-2N sin^2 theta} cos(theta + N sin 2theta - 2phi)
///   - 4N e^{-4N sin^2(theta/2)} cos^2(phi - N sin theta)
///
/// The last term is expanded with 2cos^2 x = 1 + cos 2x so that the coherent
/// limits (theta = 0 or N = 0) cancel exactly in floating point.
inline double kerr_variance(double alpha, double theta, double phi) {
  detail::require(std::isfinite(alpha) && std::isfinite(theta) && std::isfinite(phi),
                  "kerr_variance: non-finite input");
  detail::require(alpha >= 0.0, "kerr_variance: alpha must be >= 0");
  const double n = alpha * alpha;
  if (n == 0.0) return 1.0;
  const double s1 = std::sin(theta);
  const double sh = std::sin(0.5 * theta);
  const double e1 = std::exp(-2.0 * n * s1 * s1);
  const double arg2 = -4.0 * n * sh * sh;
  const double e2 = std::exp(arg2);
  const double one_minus_e2 = -std::expm1(arg2);
  const double c1 = std::cos(theta + n * std::sin(2.0 * theta) - 2.0 * phi);
  const double c2 = std::cos(2.0 * (phi - n * s1));
  return 1.0 + 2.0 * n * (one_minus_e2 + e1 * c1 - e2 * c2);
}

inline double analytic_variance(const KerrParams& params, double t, double phi) {
  params.validate();
  detail::require(std::isfinite(t) && std::isfinite(phi), "analytic_variance: non-finite input");
  detail::require(t >= 0.0, "analytic_variance: t must be >= 0");
  return kerr_variance(params.alpha, params.chi * t / hbar, phi);
}

/// Brute-force Fock-basis variance. n_max = 0 selects the default cutoff.
inline double fock_oracle_variance(const KerrParams& params, double t, double phi, std::size_t n_max = 0) {
  params.validate();
  detail::require(std::isfinite(t) && std::isfinite(phi), "fock_oracle_variance: non-finite input");
  detail::require(t >= 0.0, "fock_oracle_variance: t must be >= 0");
  if (n_max == 0) n_max = fock::default_cutoff(params.alpha);
  const auto c0 = fock::coherent_amplitudes(params.alpha, n_max);
  const double omega_t = params.omega * t;
  const auto c = fock::kerr_evolve(c0, params.chi * t / hbar, omega_t);

  // back to the frame rotating at omega
  const std::complex<double> a1 = fock::normal_moment(c, 0, 1) * std::polar(1.0, omega_t);
  const std::complex<double> a2 = fock::normal_moment(c, 0, 2) * std::polar(1.0, 2.0 * omega_t);
  const double n = fock::normal_moment(c, 1, 1).real();

  const double mean_x = 2.0 * (std::polar(1.0, phi) * a1).real();
  const double mean_x2 = 2.0 * (std::polar(1.0, 2.0 * phi) * a2).real() + 2.0 * n + 1.0;
  return mean_x2 - mean_x * mean_x;
}

namespace search {

inline constexpr std::size_t kPhaseGrid = 720;
inline constexpr double kPhaseTolerance = 1e-9;

/// Golden-section minimisation of f on [lo, hi] until the bracket is narrower than tol.
template <class F>
PhaseOptimum golden_section(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? PhaseOptimum{x1, f1} : PhaseOptimum{x2, f2};
}

/// Grid-then-golden minimisation over phi in [0, 2pi) of a pi-periodic function.
/// A flat landscape returns phi = 0; the result is reduced to [0, pi).
template <class F>
PhaseOptimum minimise_over_phase(F&& f) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double step = two_pi / static_cast<double>(kPhaseGrid);
  std::size_t best = 0;
  double best_val = f(0.0);
  double worst_val = best_val;
  for (std::size_t k = 1; k < kPhaseGrid; ++k) {
    const double v = f(step * static_cast<double>(k));
    if (v < best_val) {
      best_val = v;
      best = k;
    }
    worst_val = std::max(worst_val, v);
  }
  if (worst_val - best_val <= 1e-13 * std::max(1.0, std::abs(worst_val))) return {0.0, f(0.0)};

  const double centre = step * static_cast<double>(best);
  PhaseOptimum opt = golden_section(f, centre - step, centre + step, kPhaseTolerance);
  opt.phi = std::fmod(opt.phi, std::numbers::pi);
  if (opt.phi < 0.0) opt.phi += std::numbers::pi;
  return opt;
}

}  // namespace search

/// Optimal phase after accumulated Kerr phase theta.
inline PhaseOptimum optimal_phase_for_theta(double alpha, double theta) {
  return search::minimise_over_phase([&](double phi) { return kerr_variance(alpha, theta, phi); });
}

inline PhaseOptimum optimal_phase(const KerrParams& params, double t) {
  params.validate();
  detail::require(std::isfinite(t) && t >= 0.0, "optimal_phase: t must be finite and >= 0");
  if (t == 0.0) return {0.0, 1.0};
  return optimal_phase_for_theta(params.alpha, params.chi * t / hbar);
}

inline TracePoint trace_point_for_theta(double alpha, double theta, double t) {
  const PhaseOptimum opt = optimal_phase_for_theta(alpha, theta);
  return TracePoint{{t, opt.phi, opt.variance},
                    kerr_variance(alpha, theta, opt.phi + 0.5 * std::numbers::pi)};
}

inline std::vector<TracePoint> min_variance_trace(const KerrParams& params, std::span<const double> t_grid) {
  params.validate();
  detail::require(!t_grid.empty(), "min_variance_trace: empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    detail::require(t_grid[i] >= t_grid[i - 1], "min_variance_trace: time grid must be nondecreasing");
  std::vector<TracePoint> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    detail::require(std::isfinite(t) && t >= 0.0, "min_variance_trace: times must be >= 0");
    if (t == 0.0) {
      out.push_back({{0.0, 0.0, 1.0}, 1.0});
      continue;
    }
    out.push_back(trace_point_for_theta(params.alpha, params.chi * t / hbar, t));
  }
  return out;
}

struct KerrMinimum {
  double theta = 0.0;  // accumulated phase at the best squeezing
  double t = 0.0;
  double phi = 0.0;
  double variance = 1.0;
};

/// Global minimum over one half revival, theta in (0, pi], of the
/// phase-optimised variance. Scan on a log grid then golden refinement.
inline KerrMinimum best_squeezing_phase(double alpha) {
  const double n = alpha * alpha;
  if (n == 0.0) return {};
  constexpr std::size_t kScan = 2000;
  const double lo = 1e-3 / std::max(1.0, n);
  const double hi = std::numbers::pi;
  const double ratio = std::log(hi / lo) / static_cast<double>(kScan - 1);
  auto theta_at = [&](std::size_t i) { return lo * std::exp(ratio * static_cast<double>(i)); };
  auto var_at = [&](double theta) { return optimal_phase_for_theta(alpha, theta).variance; };

  std::size_t best = 0;
  double best_val = var_at(theta_at(0));
  for (std::size_t i = 1; i < kScan; ++i) {
    const double v = var_at(theta_at(i));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = theta_at(best == 0 ? 0 : best - 1);
  const double b = theta_at(std::min(best + 1, kScan - 1));
  const PhaseOptimum refined = search::golden_section(var_at, a, b, 1e-12 * b);
  const PhaseOptimum at = optimal_phase_for_theta(alpha, refined.phi);
  return {refined.phi, 0.0, at.phi, at.variance};
}

/// Time and depth of the best squeezing; chi = 0 has no minimum and returns t = 0, variance 1.
inline KerrMinimum time_of_minimum(const KerrParams& params) {
  params.validate();
  if (params.chi == 0.0 || params.alpha == 0.0) return {};
  KerrMinimum m = best_squeezing_phase(params.alpha);
  m.t = m.theta / std::abs(params.chi_rate());
  return m;
}

// ---------------------------------------------------------------------------
// Time-dependent chi

struct ChiConstant {
  double chi = 0.0;  // J
};

struct ChiTabulated {
  std::vector<double> times;       // s, strictly increasing, times[0] == 0
  std::vector<double> chi_values;  // J, >= 0, linearly interpolated
};

class ChiSchedule {
 public:
  using Constant = ChiConstant;
  using Tabulated = ChiTabulated;

  ChiSchedule(Constant c) : data_(c) {  // NOLINT(google-explicit-constructor)
    detail::require(std::isfinite(c.chi) && c.chi >= 0.0, "ChiSchedule: chi must be finite and >= 0");
  }

  ChiSchedule(Tabulated tab) {  // NOLINT(google-explicit-constructor)
    detail::require(tab.times.size() >= 2 && tab.times.size() == tab.chi_values.size(),
                    "ChiSchedule: need >= 2 matching samples");
    detail::require(tab.times.front() == 0.0, "ChiSchedule: tabulation must start at t = 0");
    for (std::size_t i = 0; i < tab.times.size(); ++i) {
      detail::require(std::isfinite(tab.chi_values[i]) && tab.chi_values[i] >= 0.0,
                      "ChiSchedule: chi values must be finite and >= 0");
      if (i > 0) detail::require(tab.times[i] > tab.times[i - 1], "ChiSchedule: times must increase");
    }
    cumulative_.assign(tab.times.size(), 0.0);
    for (std::size_t i = 1; i < tab.times.size(); ++i)
      cumulative_[i] = cumulative_[i - 1] +
                       0.5 * (tab.chi_values[i] + tab.chi_values[i - 1]) * (tab.times[i] - tab.times[i - 1]);
    data_ = std::move(tab);
  }

  double end_time() const {
    if (const auto* tab = std::get_if<Tabulated>(&data_)) return tab->times.back();
    return std::numeric_limits<double>::infinity();
  }

  double chi_at(double t) const {
    check_domain(t);
    if (const auto* c = std::get_if<Constant>(&data_)) return c->chi;
    const auto& tab = std::get<Tabulated>(data_);
    const std::size_t i = segment(tab, t);
    const double w = (t - tab.times[i]) / (tab.times[i + 1] - tab.times[i]);
    return (1.0 - w) * tab.chi_values[i] + w * tab.chi_values[i + 1];
  }

  /// Theta(t) = (1/hbar) int_0^t chi, exact for the piecewise-linear interpolant.
  double accumulated_phase(double t) const {
    check_domain(t);
    if (const auto* c = std::get_if<Constant>(&data_)) return c->chi * t / hbar;
    const auto& tab = std::get<Tabulated>(data_);
    const std::size_t i = segment(tab, t);
    const double dt = t - tab.times[i];
    const double chi_t = chi_at(t);
    return (cumulative_[i] + 0.5 * (tab.chi_values[i] + chi_t) * dt) / hbar;
  }

 private:
  void check_domain(double t) const {
    detail::require(std::isfinite(t), "ChiSchedule: non-finite time");
    if (t < 0.0 || t > end_time())
      throw ScheduleDomain("ChiSchedule queried at t=" + std::to_string(t) + " outside [0, " +
                           std::to_string(end_time()) + "]");
  }

  static std::size_t segment(const Tabulated& tab, double t) {
    const auto it = std::upper_bound(tab.times.begin(), tab.times.end(), t);
    const auto idx = static_cast<std::size_t>(std::distance(tab.times.begin(), it));
    return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, tab.times.size() - 2);
  }

  std::variant<Constant, Tabulated> data_;
  std::vector<double> cumulative_;
};

inline double accumulated_phase_variance(const ChiSchedule& schedule, double alpha, double t, double phi) {
  detail::require(std::isfinite(t) && t >= 0.0, "accumulated_phase_variance: t must be >= 0");
  return kerr_variance(alpha, schedule.accumulated_phase(t), phi);
}

/// Squeezed and antisqueezed variance for a schedule at time t, phase optimised.
inline TracePoint accumulated_phase_optimum(const ChiSchedule& schedule, double alpha, double t) {
  const double theta = schedule.accumulated_phase(t);
  if (theta == 0.0) return {{t, 0.0, 1.0}, 1.0};
  return trace_point_for_theta(alpha, theta, t);
}

/// Smallest s >= 1 such that the best squeezing with chi/s is reached no
/// earlier than t_experiment. Bisection on s; the minimum's location scales as s/chi.
inline double required_suppression(const KerrParams& params, double t_experiment) {
  params.validate();
  detail::require(std::isfinite(t_experiment) && t_experiment > 0.0, "required_suppression: t_experiment must be > 0");
  if (params.chi == 0.0 || params.alpha == 0.0) return 1.0;
  const double theta_min = best_squeezing_phase(params.alpha).theta;
  const double rate = std::abs(params.chi_rate());
  auto reached_late_enough = [&](double s) { return theta_min * s / rate >= t_experiment; };
  if (reached_late_enough(1.0)) return 1.0;

  double lo = 1.0;
  double hi = 2.0;
  while (!reached_late_enough(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    (reached_late_enough(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace kerrbeam::single_mode
