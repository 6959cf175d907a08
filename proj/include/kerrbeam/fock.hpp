#pragma once

// Truncated Fock-basis representation of Kerr-evolved coherent states.
// Used as the brute-force reference for the closed-form variance and for
// the normally ordered moments of the two-beam interference model.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <vector>

#include "kerrbeam/error.hpp"

namespace kerrbeam::fock {

using cplx = std::complex<double>;

/// Cutoff rule n_max = ceil(N + 10 alpha + 20): the Poisson tail beyond it is < 1e-12.
inline std::size_t default_cutoff(double alpha) {
  return static_cast<std::size_t>(std::ceil(alpha * alpha + 10.0 * alpha + 20.0));
}

inline constexpr double kNormTolerance = 1e-12;

/// Fock amplitudes of the coherent state |alpha> (alpha real, >= 0) for n = 0..n_max.
/// Computed by a log-space recurrence so large alpha neither overflows nor underflows.
/// Real = long double buys the extra digits needed when large moments cancel.
template <class Real = double>
std::vector<Real> coherent_amplitudes(Real alpha, std::size_t n_max) {
  detail::require(std::isfinite(alpha) && alpha >= 0, "coherent amplitude must be finite and >= 0");
  std::vector<Real> c(n_max + 1, Real(0));
  if (alpha == 0) {
    c[0] = 1;
    return c;
  }
  const Real log_alpha = std::log(alpha);
  // accumulate log(c_n / c_0) and add -alpha^2/2 only at the end, so the
  // running sum stays small near the peak of the distribution
  Real log_ratio = 0;
  const Real log_c0 = -alpha * alpha / 2;
  Real norm = 0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    if (n > 0) log_ratio += log_alpha - std::log(static_cast<Real>(n)) / 2;
    c[n] = std::exp(log_ratio + log_c0);
    norm += c[n] * c[n];
  }
  if (norm < 1 - static_cast<Real>(kNormTolerance)) {
    std::ostringstream msg;
    msg << "Fock truncation at n_max=" << n_max << " keeps norm " << norm << " for alpha=" << alpha;
    throw TruncationLoss(msg.str());
  }
  return c;
}

/// Applies exp[-i (n omega t + theta n(n-1)/2)] to each amplitude,
/// where theta = chi t / hbar is the accumulated Kerr phase.
template <class Real>
std::vector<std::complex<Real>> kerr_evolve(const std::vector<Real>& c0, Real theta, Real omega_t = 0) {
  std::vector<std::complex<Real>> c(c0.size());
  for (std::size_t n = 0; n < c0.size(); ++n) {
    const Real nd = static_cast<Real>(n);
    const Real pairs = nd * (nd - 1) / 2;
    c[n] = std::polar(c0[n], -(nd * omega_t + theta * pairs));
  }
  return c;
}

/// Normally ordered moment <a^dag^p a^q> of a truncated Fock state.
template <class Real>
std::complex<Real> normal_moment(const std::vector<std::complex<Real>>& c, unsigned p, unsigned q) {
  using C = std::complex<Real>;
  if (c.empty()) return C(0);
  const std::size_t shift = std::max(p, q);
  if (c.size() <= shift) return C(0);
  C sum(0);
  for (std::size_t n = 0; n + shift < c.size(); ++n) {
    const Real nd = static_cast<Real>(n);
    // sqrt((n+p)!/n!) sqrt((n+q)!/n!)
    Real f = 1;
    for (unsigned j = 1; j <= p; ++j) f *= nd + static_cast<Real>(j);
    for (unsigned j = 1; j <= q; ++j) f *= nd + static_cast<Real>(j);
    sum += std::conj(c[n + p]) * c[n + q] * std::sqrt(f);
  }
  return sum;
}

}  // namespace kerrbeam::fock
