#pragma once

#include <cmath>

#include "kerrbeam/error.hpp"
#include "kerrbeam/units.hpp"

namespace kerrbeam::twa {

/// Physical parameters of the two-field Raman atom-laser model.
///
/// Field 1 is the trapped condensate, field 2 the untrapped beam. Interaction
/// strengths are 1D-reduced (J m). Light shifts are in rad/s and enter the
/// potentials as -hbar * shift. The beam is kicked towards +z.
struct RamanConfig {
  double mass = rb87::mass;
  double omega_trap = 80.0;  // rad/s
  double rabi = 50.0;        // two-photon Rabi frequency, rad/s
  double k0 = 2e7;           // rad/m
  double delta = 0.0;        // two-photon detuning, rad/s
  double u11 = 0.0;
  double u12 = 0.0;
  double u22 = 0.0;
  double light_shift_1 = 0.0;
  double light_shift_2 = 0.0;
  double n_bec = 5e5;
  double area = 1.2e-11;  // m^2

  /// Detuning that makes outcoupling into momentum k0 resonant: hbar k0^2 / 2m.
  double resonant_delta() const { return hbar * k0 * k0 / (2.0 * mass); }
  double kick_velocity() const { return hbar * k0 / mass; }
  double oscillator_length() const { return std::sqrt(hbar / (mass * omega_trap)); }

  static double reduce_to_1d(double scattering_length, double mass, double area) {
    return contact_coupling_3d(scattering_length, mass) / area;
  }

  /// Rb Raman atom laser: a = 5.77 nm, m = 1.44e-25 kg, k0 = 2e7 /m,
  /// Omega = 50 rad/s, omega = 80 rad/s, 5e5 atoms, area 1.2e-11 m^2, U11 = 0.
  static RamanConfig rubidium() {
    RamanConfig c;
    c.u22 = reduce_to_1d(rb87::scattering_length, c.mass, c.area);
    c.u12 = 0.0;
    c.u11 = 0.0;
    c.delta = c.resonant_delta();
    return c;
  }

  void validate() const {
    const double values[] = {mass, omega_trap, rabi, k0, delta, u11, u12, u22, light_shift_1, light_shift_2, n_bec, area};
    for (double v : values) detail::require(std::isfinite(v), "RamanConfig: all parameters must be finite");
    detail::require(mass > 0.0, "RamanConfig: mass must be > 0");
    detail::require(omega_trap >= 0.0, "RamanConfig: trap frequency must be >= 0");
    detail::require(n_bec > 0.0, "RamanConfig: condensate atom number must be > 0");
    detail::require(area > 0.0, "RamanConfig: area must be > 0");
  }
};

}  // namespace kerrbeam::twa
