#pragma once

// Homodyne-style analysis of TWA ensembles: a plane-wave local oscillator on a
// window [z1, z2), projection of the beam field onto it, quadrature variances
// from the Wigner samples, and the spatially integrated single-mode model.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kerrbeam/error.hpp"
#include "kerrbeam/single_mode.hpp"
#include "kerrbeam/twa/grid.hpp"
#include "kerrbeam/twa/raman_config.hpp"
#include "kerrbeam/twa/state.hpp"
#include "kerrbeam/units.hpp"

namespace kerrbeam::quadrature {

using cplx = std::complex<double>;
using twa::Grid1D;
using twa::RamanConfig;
using twa::TrajectoryState;

/// L(z, t) = exp(i(k_L z - omega_L t + phi)) / sqrt(window length) on [z1, z2).
///
/// The window is the set of grid points first..last-1 and the amplitude uses
/// the discrete length (last-first)*dz, so sum |L|^2 dz = 1 exactly.
/// frame_omega is the rotation of the simulated beam field relative to the
/// lab (delta + light_shift_2); project() removes it.
struct LocalOscillator {
  double z1 = 0.0;
  double z2 = 0.0;
  double k_l = 0.0;
  double omega_l = 0.0;
  double phi = 0.0;
  double frame_omega = 0.0;
  std::size_t first = 0;
  std::size_t last = 0;
  double dz = 0.0;

  std::size_t points() const { return last - first; }
  double length() const { return static_cast<double>(points()) * dz; }
  double amplitude() const { return 1.0 / std::sqrt(length()); }
};

/// k_L = k0 - U22 rho m / (k0 hbar^2),  omega_L = hbar k_L^2 / 2m + U22 rho / hbar.
inline LocalOscillator build_local_oscillator(const RamanConfig& config, const Grid1D& grid, double rho, double z1,
                                              double z2, double phi = 0.0) {
  detail::require(std::isfinite(rho) && rho >= 0.0, "local oscillator: beam density must be >= 0");
  detail::require(std::isfinite(z1) && std::isfinite(z2) && z2 > z1, "local oscillator: need z2 > z1");
  detail::require(config.k0 > 0.0, "local oscillator: k0 must be > 0");
  if (z1 < grid.z_min() || z2 > grid.z_max())
    throw InvalidArgument("local oscillator window lies outside the grid");
  LocalOscillator lo;
  lo.z1 = z1;
  lo.z2 = z2;
  lo.phi = phi;
  lo.dz = grid.dz();
  std::tie(lo.first, lo.last) = grid.window(z1, z2);
  if (lo.last <= lo.first) throw InvalidArgument("local oscillator window contains no grid points");
  lo.k_l = config.k0 - config.u22 * rho * config.mass / (config.k0 * hbar * hbar);
  lo.omega_l = hbar * lo.k_l * lo.k_l / (2.0 * config.mass) + config.u22 * rho / hbar;
  lo.frame_omega = config.delta + config.light_shift_2;
  return lo;
}

/// b = sum_j conj(L(z_j, t)) psi2(z_j) dz over the window, using the lab-frame
/// beam field and the oscillator's time dependence at time t.
inline cplx project(const TrajectoryState& s, const Grid1D& grid, const LocalOscillator& lo, double t) {
  detail::require(lo.last <= s.size() && lo.dz == grid.dz(), "project: local oscillator does not match the grid");
  const double dk = lo.k_l - s.beam_frame_k;
  cplx sum{0.0, 0.0};
  for (std::size_t i = lo.first; i < lo.last; ++i) sum += std::polar(1.0, -dk * grid.z(i)) * s.psi2[i];
  const double time_phase = (lo.omega_l - lo.frame_omega) * t - lo.phi;
  return std::polar(lo.amplitude() * lo.dz, time_phase) * sum;
}

struct RegionCount {
  double atoms = 0.0;     // sum (|psi2|^2 - 1/(2dz)) dz over the window
  double weighted = 0.0;  // sum |L|^2 (|psi2|^2 - 1/(2dz)) dz
};

inline RegionCount atoms_in_region(const TrajectoryState& s, const Grid1D& grid, const LocalOscillator& lo) {
  detail::require(lo.last <= s.size(), "atoms_in_region: local oscillator does not match the grid");
  const double vac = 0.5 / grid.dz();
  double sum = 0.0;
  for (std::size_t i = lo.first; i < lo.last; ++i) sum += std::norm(s.psi2[i]) - vac;
  RegionCount out;
  out.atoms = sum * grid.dz();
  out.weighted = out.atoms / lo.length();
  return out;
}

// ---------------------------------------------------------------------------
// Ensemble statistics

struct VarianceEstimate {
  double variance = 0.0;
  double standard_error = 0.0;
};

/// X_i = e^{i phi} b_i + c.c.; unbiased sample variance with a jackknife
/// standard error. Symmetric ordering needs no commutator correction, so the
/// vacuum gives 1 in expectation.
inline VarianceEstimate quadrature_variance(std::span<const cplx> b, double phi) {
  const std::size_t n = b.size();
  if (n < 2) throw InsufficientSamples("quadrature variance needs at least 2 samples, got " + std::to_string(n));
  const cplx rot = std::polar(1.0, phi);
  std::vector<double> x(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 2.0 * (rot * b[i]).real();
    mean += x[i];
  }
  mean /= static_cast<double>(n);
  double s1 = 0.0, s2 = 0.0;
  for (double& v : x) {
    v -= mean;
    s1 += v;
    s2 += v * v;
  }
  const double nd = static_cast<double>(n);
  VarianceEstimate est;
  est.variance = (s2 - s1 * s1 / nd) / (nd - 1.0);
  if (n < 3) {
    est.standard_error = std::numeric_limits<double>::infinity();
    return est;
  }
  // leave-one-out variances from the running sums
  const double m = nd - 1.0;
  double jk_mean = 0.0;
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a1 = s1 - x[i];
    const double a2 = s2 - x[i] * x[i];
    loo[i] = (a2 - a1 * a1 / m) / (m - 1.0);
    jk_mean += loo[i];
  }
  jk_mean /= nd;
  double acc = 0.0;
  for (double v : loo) acc += (v - jk_mean) * (v - jk_mean);
  est.standard_error = std::sqrt((nd - 1.0) / nd * acc);
  return est;
}

struct QuadratureOptimum {
  double phi = 0.0;  // in [0, pi)
  VarianceEstimate squeezed;
  VarianceEstimate antisqueezed;
};

/// var(X^phi) = 4 (cos^2 phi Cxx - 2 sin phi cos phi Cxy + sin^2 phi Cyy) for the
/// sample covariance C of (Re b, Im b); the minimum lies along the eigenvector
/// of the smaller eigenvalue. Degenerate clouds return phi = 0.
inline QuadratureOptimum optimal_quadrature(std::span<const cplx> b) {
  const std::size_t n = b.size();
  if (n < 2) throw InsufficientSamples("optimal quadrature needs at least 2 samples, got " + std::to_string(n));
  cplx mean{0.0, 0.0};
  for (const cplx& v : b) mean += v;
  mean /= static_cast<double>(n);
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (const cplx& v : b) {
    const cplx d = v - mean;
    cxx += d.real() * d.real();
    cyy += d.imag() * d.imag();
    cxy += d.real() * d.imag();
  }
  // var = M + A cos 2phi + B sin 2phi
  const double a = 2.0 * (cxx - cyy);
  const double bb = -4.0 * cxy;
  const double amp = std::hypot(a, bb);
  QuadratureOptimum out;
  if (amp > 1e-14 * (cxx + cyy)) {
    double phi = 0.5 * std::atan2(-bb, -a);
    if (phi < 0.0) phi += std::numbers::pi;
    if (phi >= std::numbers::pi) phi -= std::numbers::pi;
    out.phi = phi;
  }
  out.squeezed = quadrature_variance(b, out.phi);
  out.antisqueezed = quadrature_variance(b, out.phi + 0.5 * std::numbers::pi);
  return out;
}

/// Wavenumber from the phase gradient of the ensemble-mean lab-frame beam field
/// over the window: arg(sum conj(psi_j) psi_{j+1}) / dz.
inline double mean_phase_gradient(std::span<const TrajectoryState> ensemble, const Grid1D& grid,
                                  const LocalOscillator& lo) {
  detail::require(!ensemble.empty(), "mean_phase_gradient: empty ensemble");
  detail::require(lo.points() >= 2, "mean_phase_gradient: window needs two points");
  std::vector<cplx> mean(lo.points(), cplx{0.0, 0.0});
  for (const auto& s : ensemble)
    for (std::size_t i = lo.first; i < lo.last; ++i) mean[i - lo.first] += s.physical_psi2(grid, i);
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j + 1 < mean.size(); ++j) acc += std::conj(mean[j]) * mean[j + 1];
  return std::arg(acc) / grid.dz();
}

// ---------------------------------------------------------------------------
// Integrated single-mode prediction

enum class AgeHandling {
  optimum_average,  // optimise phi at each atom age in [z1/v, z2/v], then average
  common_phase,     // average the variance over ages at the one phi minimising the average
  midpoint,         // evaluate at the age of the window centre
};

struct AnalyticPrediction {
  double var_sq = 1.0;
  double var_anti = 1.0;
  double phi = 0.0;  // optimum (at the window centre for optimum_average)
  double chi = 0.0;  // J
  double alpha = 0.0;
  double age_min = 0.0;
  double age_max = 0.0;
};

inline constexpr std::size_t kAgeIntervals = 2000;

namespace sinusoid {

/// A function M + A cos 2phi + B sin 2phi, known from its values at 0, pi/4, pi/2.
struct Fit {
  double mid = 0.0;
  double amp = 0.0;
  double phi_min = 0.0;  // in [0, pi); 0 when flat

  double min() const { return mid - amp; }
  double max() const { return mid + amp; }
};

inline Fit from_samples(double v0, double v45, double v90) {
  Fit f;
  f.mid = 0.5 * (v0 + v90);
  const double a = 0.5 * (v0 - v90);
  const double b = v45 - f.mid;
  f.amp = std::hypot(a, b);
  if (f.amp > 1e-14 * std::abs(f.mid)) {
    f.phi_min = 0.5 * std::atan2(-b, -a);
    if (f.phi_min < 0.0) f.phi_min += std::numbers::pi;
  }
  return f;
}

template <class F>
Fit fit(F&& f) {
  return from_samples(f(0.0), f(0.25 * std::numbers::pi), f(0.5 * std::numbers::pi));
}

}  // namespace sinusoid

/// chi = U22 sum |L|^4 dz, alpha = sqrt(N), atom age z/v with v = hbar k_L / m
/// measured from the trap centre. The single-mode variance is a sinusoid in
/// 2 phi at every age, which gives the phase optimum in closed form.
inline AnalyticPrediction integrated_analytic_prediction(const RamanConfig& config, const LocalOscillator& lo,
                                                         double n_atoms,
                                                         AgeHandling ages = AgeHandling::optimum_average) {
  detail::require(std::isfinite(n_atoms) && n_atoms > 0.0, "integrated prediction: N must be > 0");
  detail::require(lo.k_l > 0.0, "integrated prediction: local oscillator wavenumber must be > 0");
  AnalyticPrediction out;
  out.alpha = std::sqrt(n_atoms);
  out.chi = config.u22 / lo.length();
  const double v = hbar * lo.k_l / config.mass;
  out.age_min = lo.z1 / v;
  out.age_max = lo.z2 / v;
  detail::require(out.age_min >= 0.0, "integrated prediction: window must lie on the beam side of the trap");
  if (out.chi == 0.0) return out;

  const double rate = out.chi / hbar;
  auto at_age = [&](double age) {
    return sinusoid::fit([&](double phi) { return single_mode::kerr_variance(out.alpha, rate * age, phi); });
  };
  const double centre = 0.5 * (out.age_min + out.age_max);
  const double span = out.age_max - out.age_min;
  if (ages == AgeHandling::midpoint || span <= 0.0) {
    const auto f = at_age(centre);
    out.var_sq = f.min();
    out.var_anti = f.max();
    out.phi = f.phi_min;
    return out;
  }

  // composite Simpson over the age interval
  const std::size_t n = kAgeIntervals;
  const double h = span / static_cast<double>(n);
  auto simpson = [&](auto&& g) {
    double sum = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      sum += w * g(out.age_min + h * static_cast<double>(k));
    }
    return sum * h / 3.0 / span;
  };

  if (ages == AgeHandling::common_phase) {
    // the average of sinusoids in 2 phi is again one
    const auto f = sinusoid::fit([&](double phi) {
      return simpson([&](double age) { return single_mode::kerr_variance(out.alpha, rate * age, phi); });
    });
    out.var_sq = f.min();
    out.var_anti = f.max();
    out.phi = f.phi_min;
    return out;
  }

  out.var_sq = simpson([&](double age) { return at_age(age).min(); });
  out.var_anti = simpson([&](double age) { return at_age(age).max(); });
  out.phi = at_age(centre).phi_min;
  return out;
}

// ---------------------------------------------------------------------------
// Time series

struct QuadraturePoint {
  double t = 0.0;
  double var_sq = 0.0;
  double se_sq = 0.0;
  double var_anti = 0.0;
  double se_anti = 0.0;
  double phi_opt = 0.0;
  double n_region = 0.0;
};

using QuadratureSeries = std::vector<QuadraturePoint>;

/// Ensemble samples at one observation time: one projection and one region
/// count per trajectory.
struct TimeSamples {
  double t = 0.0;
  std::vector<cplx> b;
  std::vector<double> n_region;
};

inline QuadraturePoint summarize(const TimeSamples& samples) {
  const QuadratureOptimum opt = optimal_quadrature(samples.b);
  QuadraturePoint p;
  p.t = samples.t;
  p.var_sq = opt.squeezed.variance;
  p.se_sq = opt.squeezed.standard_error;
  p.var_anti = opt.antisqueezed.variance;
  p.se_anti = opt.antisqueezed.standard_error;
  p.phi_opt = opt.phi;
  double n = 0.0;
  for (double v : samples.n_region) n += v;
  p.n_region = samples.n_region.empty() ? 0.0 : n / static_cast<double>(samples.n_region.size());
  return p;
}

/// 17 significant digits, independent of locale.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline constexpr const char* kCsvHeader = "t_s,var_sq,se_sq,var_anti,se_anti,phi_opt_rad,n_region";

inline void write_csv(std::ostream& out, const QuadratureSeries& series) {
  out << kCsvHeader << '\n';
  for (const auto& p : series) {
    out << format_number(p.t) << ',' << format_number(p.var_sq) << ',' << format_number(p.se_sq) << ','
        << format_number(p.var_anti) << ',' << format_number(p.se_anti) << ',' << format_number(p.phi_opt) << ','
        << format_number(p.n_region) << '\n';
  }
}

}  // namespace kerrbeam::quadrature
