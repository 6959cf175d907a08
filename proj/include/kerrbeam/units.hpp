#pragma once

// Physical constants (SI). hbar is the CODATA 2018 exact value.

namespace kerrbeam {

inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double g_earth = 9.81;          // m s^-2

/// Contact interaction 4 pi hbar^2 a / m in three dimensions (J m^3).
constexpr double contact_coupling_3d(double scattering_length, double mass) {
  constexpr double four_pi = 12.566370614359172;
  return four_pi * hbar * hbar * scattering_length / mass;
}

namespace rb87 {
inline constexpr double scattering_length = 5.77e-9;  // m
inline constexpr double mass = 1.44e-25;              // kg
}  // namespace rb87

}  // namespace kerrbeam
