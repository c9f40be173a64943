#pragma once

#include <cmath>

#include "moscap/errors.hpp"

namespace moscap {

/// Physical constants in semiconductor (cm, F, V) units.
///
/// The vacuum permittivity is 8.85e-14 F/cm, the value commonly tabulated for
/// the parallel-plate oxide formula. Relative permittivities multiply it.
struct PhysicalConstants {
  double elementary_charge = 1.602176634e-19;   // C
  double vacuum_permittivity = 8.85e-14;        // F/cm
  double boltzmann = 1.380649e-23;              // J/K
  double temperature = 300.0;                   // K
  double thermal_voltage = 1.380649e-23 * 300.0 / 1.602176634e-19;  // kT/q, V
  double intrinsic_carrier_concentration = 1.0e10;  // cm^-3
  double silicon_relative_permittivity = 11.7;
  double oxide_relative_permittivity = 3.9;

  /// Same constants at another temperature; kT/q is recomputed, n_i is held.
  PhysicalConstants at_temperature(double kelvin) const {
    require(kelvin > 0.0 && std::isfinite(kelvin), "temperature must be positive");
    PhysicalConstants c = *this;
    c.temperature = kelvin;
    c.thermal_voltage = boltzmann * kelvin / elementary_charge;
    return c;
  }

  double silicon_permittivity() const {
    return silicon_relative_permittivity * vacuum_permittivity;
  }

  bool valid() const {
    return elementary_charge > 0 && vacuum_permittivity > 0 && boltzmann > 0 &&
           temperature > 0 && thermal_voltage > 0 &&
           intrinsic_carrier_concentration > 0 &&
           silicon_relative_permittivity > 0 && oxide_relative_permittivity > 0;
  }
};

namespace units {

inline constexpr double nm = 1e-7;  // cm
inline constexpr double um = 1e-4;  // cm
inline constexpr double pF = 1e-12; // F

inline constexpr double from_nm(double v) { return v * nm; }
inline constexpr double to_nm(double cm) { return cm / nm; }
inline constexpr double from_um(double v) { return v * um; }
inline constexpr double to_um(double cm) { return cm / um; }
inline constexpr double from_pF(double v) { return v * pF; }
inline constexpr double to_pF(double farad) { return farad / pF; }

}  // namespace units

}  // namespace moscap
