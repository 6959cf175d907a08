#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "kerrbeam/error.hpp"

namespace kerrbeam::twa {

/// Periodic 1D grid. dz plays the role of the cell volume in the Wigner
/// vacuum terms; k_values are in FFT order (0, 1, ..., n/2-1, -n/2, ..., -1) * 2pi/L.
class Grid1D {
 public:
  Grid1D(double z_min, double z_max, std::size_t n_points) : z_min_(z_min), z_max_(z_max), n_(n_points) {
    detail::require(std::isfinite(z_min) && std::isfinite(z_max) && z_max > z_min, "Grid1D: need z_max > z_min");
    detail::require(n_points >= 4 && (n_points & (n_points - 1)) == 0, "Grid1D: n_points must be a power of two");
    dz_ = (z_max - z_min) / static_cast<double>(n_points);
    z_.resize(n_);
    k_.resize(n_);
    const double dk = 2.0 * std::numbers::pi / (z_max - z_min);
    for (std::size_t i = 0; i < n_; ++i) {
      z_[i] = z_min + dz_ * static_cast<double>(i);
      const auto signed_i = static_cast<long long>(i);
      k_[i] = dk * static_cast<double>(i < n_ / 2 ? signed_i : signed_i - static_cast<long long>(n_));
    }
  }

  std::size_t size() const { return n_; }
  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }
  double length() const { return z_max_ - z_min_; }
  double dz() const { return dz_; }
  double k_max() const { return std::numbers::pi / dz_; }
  double dk() const { return 2.0 * std::numbers::pi / length(); }

  double z(std::size_t i) const { return z_[i]; }
  double k(std::size_t i) const { return k_[i]; }
  std::span<const double> z_values() const { return z_; }
  std::span<const double> k_values() const { return k_; }

  /// Index range [first, last) of grid points with z1 <= z < z2.
  std::pair<std::size_t, std::size_t> window(double z1, double z2) const {
    auto first = static_cast<std::size_t>(std::ceil((z1 - z_min_) / dz_ - 1e-9));
    auto last = static_cast<std::size_t>(std::ceil((z2 - z_min_) / dz_ - 1e-9));
    first = std::min(first, n_);
    last = std::min(last, n_);
    return {first, last};
  }

  bool contains(double z) const { return z >= z_min_ && z <= z_max_; }

 private:
  double z_min_;
  double z_max_;
  std::size_t n_;
  double dz_;
  std::vector<double> z_;
  std::vector<double> k_;
};

}  // namespace kerrbeam::twa
