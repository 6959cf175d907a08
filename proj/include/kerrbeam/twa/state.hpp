#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kerrbeam/error.hpp"
#include "kerrbeam/twa/fftw.hpp"
#include "kerrbeam/twa/grid.hpp"
#include "kerrbeam/twa/raman_config.hpp"

namespace kerrbeam::twa {

/// One Wigner trajectory: c-number fields on the grid (units m^-1/2).
///
/// The beam field may be stored in a frame moving with wavenumber
/// beam_frame_k: the physical field is psi2(z) = exp(i beam_frame_k z) * stored(z).
/// With beam_frame_k = k0 the kicked beam is slowly varying on the grid.
struct TrajectoryState {
  Field psi1;
  Field psi2;
  double t = 0.0;
  double beam_frame_k = 0.0;

  TrajectoryState() = default;
  explicit TrajectoryState(std::size_t n, double frame_k = 0.0) : psi1(n), psi2(n), beam_frame_k(frame_k) {}

  std::size_t size() const { return psi1.size(); }

  cplx physical_psi2(const Grid1D& grid, std::size_t i) const {
    if (beam_frame_k == 0.0) return psi2[i];
    return std::polar(1.0, beam_frame_k * grid.z(i)) * psi2[i];
  }
};

enum class FieldSelector { trapped, beam };

/// Wigner-corrected total atom number sum(|psi1|^2 + |psi2|^2 - 1/dz) dz.
inline double corrected_number(const TrajectoryState& s, const Grid1D& grid) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) sum += std::norm(s.psi1[i]) + std::norm(s.psi2[i]);
  return sum * grid.dz() - static_cast<double>(s.size());
}

/// Wigner-corrected occupation of one field, sum(|psi|^2 - 1/(2dz)) dz.
inline double corrected_number(const TrajectoryState& s, FieldSelector which, const Grid1D& grid) {
  const Field& f = which == FieldSelector::trapped ? s.psi1 : s.psi2;
  double sum = 0.0;
  for (const cplx& v : f) sum += std::norm(v);
  return sum * grid.dz() - 0.5 * static_cast<double>(f.size());
}

/// Pointwise |psi|^2 - 1/(2dz); its ensemble mean is the physical density (m^-1).
inline std::vector<double> density(const TrajectoryState& s, FieldSelector which, const Grid1D& grid) {
  const Field& f = which == FieldSelector::trapped ? s.psi1 : s.psi2;
  const double vac = 0.5 / grid.dz();
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::norm(f[i]) - vac;
  return out;
}

// ---------------------------------------------------------------------------
// Random streams

struct EnsembleSpec {
  std::size_t n_traj = 2;
  std::uint64_t master_seed = 1;

  void validate() const { detail::require(n_traj >= 2, "EnsembleSpec: need at least 2 trajectories"); }
};

/// Counter-based stream derivation: trajectory i of a run depends only on (master_seed, i).
inline std::mt19937_64 trajectory_stream(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x6b657272u};
  return std::mt19937_64(seq);
}

/// Adds Wigner vacuum noise: complex Gaussian with <|eta|^2> = 1/(2dz) per point,
/// real and imaginary parts independent with variance 1/(4dz).
template <class Rng>
void add_vacuum_noise(Field& f, const Grid1D& grid, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.25 / grid.dz()));
  for (cplx& v : f) {
    const double re = normal(rng);
    const double im = normal(rng);
    v += cplx(re, im);
  }
}

/// Grid points across 2 sigma of the trap ground state required by initial_state.
inline constexpr double kMinPointsAcrossGroundState = 16.0;

/// Normalised harmonic-oscillator ground state sampled on the grid.
/// Discretely normalised so sum |phi0|^2 dz = 1 exactly.
inline std::vector<double> ground_state(const Grid1D& grid, const RamanConfig& config) {
  detail::require(config.omega_trap > 0.0, "ground state needs a trap frequency > 0");
  const double sigma = config.oscillator_length();
  if (2.0 * sigma / grid.dz() < kMinPointsAcrossGroundState)
    throw GridResolution("trap ground state (2 sigma = " + std::to_string(2.0 * sigma) + " m) spans fewer than " +
                         std::to_string(kMinPointsAcrossGroundState) + " grid points");
  if (grid.z_min() > -6.0 * sigma || grid.z_max() < 6.0 * sigma)
    throw GridResolution("grid does not contain the trap ground state (need [-6 sigma, 6 sigma])");
  std::vector<double> phi(grid.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.z(i) / sigma;
    phi[i] = std::exp(-0.5 * x * x);
    norm += phi[i] * phi[i];
  }
  const double scale = 1.0 / std::sqrt(norm * grid.dz());
  for (double& v : phi) v *= scale;
  return phi;
}

/// psi1 = sqrt(N) phi0 + eta1, psi2 = eta2. Passing nullptr for rng gives the
/// noise-free (mean-field) initial condition.
template <class Rng>
TrajectoryState initial_state(const Grid1D& grid, const RamanConfig& config, Rng* rng, double beam_frame_k = 0.0) {
  config.validate();
  const auto phi0 = ground_state(grid, config);
  TrajectoryState s(grid.size(), beam_frame_k);
  const double amp = std::sqrt(config.n_bec);
  for (std::size_t i = 0; i < grid.size(); ++i) s.psi1[i] = amp * phi0[i];
  if (rng != nullptr) {
    add_vacuum_noise(s.psi1, grid, *rng);
    add_vacuum_noise(s.psi2, grid, *rng);
  }
  return s;
}

inline TrajectoryState mean_field_initial_state(const Grid1D& grid, const RamanConfig& config,
                                                double beam_frame_k = 0.0) {
  return initial_state<std::mt19937_64>(grid, config, nullptr, beam_frame_k);
}

}  // namespace kerrbeam::twa
