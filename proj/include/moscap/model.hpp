#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "moscap/constants.hpp"
#include "moscap/errors.hpp"
#include "moscap/types.hpp"

namespace moscap {

// ---------------------------------------------------------------------------
// Oxide and series capacitance
// ---------------------------------------------------------------------------

/// Parallel-plate oxide capacitance, eps0 * eps_r * A / t_ox, in farads.
inline double oxide_capacitance(const OxideSpec& oxide,
                                const PhysicalConstants& c = {}) {
  oxide.validate();
  return c.vacuum_permittivity * oxide.relative_permittivity * oxide.area /
         oxide.thickness;
}

/// Oxide capacitance per unit area, F/cm^2.
inline double oxide_capacitance_per_area(const OxideSpec& oxide,
                                         const PhysicalConstants& c = {}) {
  oxide.validate();
  return c.vacuum_permittivity * oxide.relative_permittivity / oxide.thickness;
}

inline double oxide_capacitance(const DeviceStack& stack) {
  return oxide_capacitance(stack.oxide, stack.constants);
}

inline double series_capacitance(double c1, double c2) {
  require(c1 > 0.0 && c2 > 0.0, "series capacitance requires positive inputs");
  if (std::isinf(c1)) return c2;
  if (std::isinf(c2)) return c1;
  return c1 * c2 / (c1 + c2);
}

// ---------------------------------------------------------------------------
// Electrostatics of the MOS stack
// ---------------------------------------------------------------------------

namespace detail {

inline void require_mos(const DeviceStack& stack, const char* op) {
  stack.validate();
  if (stack.kind != StackKind::mos)
    throw Error(ErrorKind::unsupported_operation,
                std::string(op) + " is undefined for a metal-insulator-metal stack");
}

// Whether mobile minority carriers can follow the bias (equilibrium) or not
// (deep depletion).
enum class ChargeModel { equilibrium, deep_depletion };

// Gate charge per area as a function of the normalized surface potential u
// (u = psi_s for p-type, u = -psi_s for n-type). Increasing in u.
//
//   u < 0           accumulation, Boltzmann majority-carrier term
//   0 <= u <= 2phi  depletion approximation, sqrt(2 q eps N u)
//   u > 2phi        depletion plus an exponential inversion term (equilibrium)
//                   or the bare depletion charge (deep depletion)
struct ChargeTerms {
  double q;
  double eps_si;
  double doping;
  double vt;
  double two_phi;

  double gate_charge(double u, ChargeModel model) const {
    if (u < 0.0) {
      const double x = -u / vt;
      const double f = std::expm1(x) - x;
      return -std::sqrt(2.0 * q * eps_si * doping * vt * f);
    }
    double s = u;
    if (model == ChargeModel::equilibrium && u > two_phi) {
      const double v = (u - two_phi) / vt;
      s += vt * (std::expm1(v) - v);
    }
    return std::sqrt(2.0 * q * eps_si * doping * s);
  }

  // d(gate_charge)/du in the inversion branch (u > 2phi, equilibrium).
  double inversion_slope(double u) const {
    const double v = (u - two_phi) / vt;
    if (v > 600.0) return std::numeric_limits<double>::infinity();
    const double s = u + vt * (std::expm1(v) - v);
    return q * eps_si * doping * std::exp(v) / std::sqrt(2.0 * q * eps_si * doping * s);
  }
};

inline ChargeTerms charge_terms(const DeviceStack& stack) {
  const auto& c = stack.constants;
  const double n = stack.substrate->doping;
  return {c.elementary_charge, c.silicon_permittivity(), n, c.thermal_voltage,
          2.0 * c.thermal_voltage * std::log(n / c.intrinsic_carrier_concentration)};
}

}  // namespace detail

inline double flat_band_voltage(const DeviceStack& stack) {
  detail::require_mos(stack, "flat_band_voltage");
  return stack.workfunction_difference -
         stack.fixed_oxide_charge / oxide_capacitance_per_area(stack.oxide, stack.constants);
}

/// Bulk potential phi_F = (kT/q) ln(N/n_i), reported as a positive magnitude.
inline double bulk_potential(const DeviceStack& stack) {
  detail::require_mos(stack, "bulk_potential");
  const auto& c = stack.constants;
  return c.thermal_voltage * std::log(stack.substrate->doping / c.intrinsic_carrier_concentration);
}

/// Body factor gamma = sqrt(2 q eps_Si N) / C_ox', in V^1/2.
inline double body_factor(const DeviceStack& stack) {
  detail::require_mos(stack, "body_factor");
  const auto& c = stack.constants;
  return std::sqrt(2.0 * c.elementary_charge * c.silicon_permittivity() *
                   stack.substrate->doping) /
         oxide_capacitance_per_area(stack.oxide, c);
}

struct SurfacePotentialOptions {
  double tolerance = 1e-9;  // V, on the gate-voltage balance
  int max_iterations = 200;
  bool deep_depletion = false;
};

/// Solves V_g = V_fb + psi_s + Q_gate(psi_s)/C_ox' for psi_s by bisection.
///
/// The initial bracket is +/-(2 phi_F + 1 V) in the normalized frame. If it
/// does not contain the root it is widened once to +/-(|V_g - V_fb| + 2 phi_F
/// + 1 V), which always suffices because |psi_s| <= |V_g - V_fb|.
inline double surface_potential(const DeviceStack& stack, double gate_bias,
                                const SurfacePotentialOptions& opt = {}) {
  detail::require_mos(stack, "surface_potential");
  require(std::isfinite(gate_bias), "gate bias must be finite");
  const auto terms = detail::charge_terms(stack);
  const auto model =
      opt.deep_depletion ? detail::ChargeModel::deep_depletion : detail::ChargeModel::equilibrium;
  const double cox = oxide_capacitance_per_area(stack.oxide, stack.constants);
  const double sign = polarity_sign(stack.substrate->polarity);
  const double target = sign * (gate_bias - flat_band_voltage(stack));

  auto balance = [&](double u) { return u + terms.gate_charge(u, model) / cox - target; };

  double half = terms.two_phi + 1.0;
  double lo = -half;
  double hi = half;
  if (!(balance(lo) <= 0.0 && balance(hi) >= 0.0)) {
    half = std::abs(target) + terms.two_phi + 1.0;
    lo = -half;
    hi = half;
    if (!(balance(lo) <= 0.0 && balance(hi) >= 0.0))
      throw BracketError("surface potential: root not bracketed", sign * lo, sign * hi);
  }

  double u = 0.5 * (lo + hi);
  double r = balance(u);
  for (int it = 0; it < opt.max_iterations && r != 0.0; ++it) {
    if (r < 0.0) lo = u; else hi = u;
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    u = mid;
    r = balance(u);
  }
  if (!(std::abs(r) < opt.tolerance))
    throw BracketError("surface potential: bisection did not reach tolerance", sign * lo,
                       sign * hi);
  return sign * u;
}

/// Gate charge per unit area, C_ox' (V_g - V_fb - psi_s), in C/cm^2.
inline double gate_charge_per_area(const DeviceStack& stack, double gate_bias,
                                   const SurfacePotentialOptions& opt = {}) {
  const double psi = surface_potential(stack, gate_bias, opt);
  return oxide_capacitance_per_area(stack.oxide, stack.constants) *
         (gate_bias - flat_band_voltage(stack) - psi);
}

/// W_dmax = sqrt(2 eps_Si (2 phi_F) / (q N)), in cm.
inline double max_depletion_width(const DeviceStack& stack) {
  const double two_phi = 2.0 * bulk_potential(stack);
  const auto& c = stack.constants;
  return std::sqrt(2.0 * c.silicon_permittivity() * two_phi /
                   (c.elementary_charge * stack.substrate->doping));
}

/// Depletion width for a surface potential in depletion or inversion.
/// The width is clamped at W_dmax unless `clamp` is false (deep depletion).
inline double depletion_width(const DeviceStack& stack, double surface_potential,
                              bool clamp = true) {
  detail::require_mos(stack, "depletion_width");
  const double u = polarity_sign(stack.substrate->polarity) * surface_potential;
  if (u < 0.0)
    throw Error(ErrorKind::regime, "accumulation has no depletion width");
  const auto& c = stack.constants;
  const double w = std::sqrt(2.0 * c.silicon_permittivity() * u /
                             (c.elementary_charge * stack.substrate->doping));
  return clamp ? std::min(w, max_depletion_width(stack)) : w;
}

/// eps_Si A / W. At zero surface potential the width vanishes and this is
/// +infinity; series_capacitance then returns C_ox.
inline double depletion_capacitance(const DeviceStack& stack, double surface_potential,
                                    bool clamp = true) {
  const double w = depletion_width(stack, surface_potential, clamp);
  if (w == 0.0) return std::numeric_limits<double>::infinity();
  return stack.constants.silicon_permittivity() * stack.oxide.area / w;
}

inline double threshold_voltage(const DeviceStack& stack) {
  detail::require_mos(stack, "threshold_voltage");
  const double two_phi = 2.0 * bulk_potential(stack);
  return flat_band_voltage(stack) +
         polarity_sign(stack.substrate->polarity) *
             (two_phi + body_factor(stack) * std::sqrt(two_phi));
}

/// High-frequency minimum capacitance, series(C_ox, eps_Si A / W_dmax).
inline double c_min(const DeviceStack& stack) {
  detail::require_mos(stack, "c_min");
  return series_capacitance(oxide_capacitance(stack),
                            stack.constants.silicon_permittivity() * stack.oxide.area /
                                max_depletion_width(stack));
}

// ---------------------------------------------------------------------------
// C-V curves
// ---------------------------------------------------------------------------

/// Small-signal capacitance at one bias.
///
/// Accumulation returns C_ox. Depletion (0 <= psi_s <= 2 phi_F, closed)
/// returns series(C_ox, C_d). Beyond 2 phi_F: high frequency holds C_min,
/// low frequency follows the inversion-charge slope back toward C_ox, and
/// deep depletion keeps the unclamped depletion formula.
inline double capacitance_at(const DeviceStack& stack, double gate_bias, Regime regime) {
  stack.validate();
  const double cox = oxide_capacitance(stack);
  if (stack.kind == StackKind::metal_insulator_metal) return cox;
  require(regime != Regime::raw_measurement,
          "model regime must be low-frequency, high-frequency or deep-depletion");

  SurfacePotentialOptions opt;
  opt.deep_depletion = regime == Regime::deep_depletion;
  const double psi = surface_potential(stack, gate_bias, opt);
  const auto terms = detail::charge_terms(stack);
  const double u = polarity_sign(stack.substrate->polarity) * psi;
  const double area = stack.oxide.area;

  if (u <= 0.0) return cox;
  if (u <= terms.two_phi || regime == Regime::deep_depletion)
    return series_capacitance(cox, depletion_capacitance(stack, psi, false));
  if (regime == Regime::high_frequency) return c_min(stack);
  const double slope = terms.inversion_slope(u);
  if (!std::isfinite(slope)) return cox;
  return series_capacitance(cox, slope * area);
}

inline CVCurve cv_curve(const DeviceStack& stack, std::span<const double> biases,
                        Regime regime) {
  stack.validate();
  require(regime != Regime::raw_measurement,
          "model regime must be low-frequency, high-frequency or deep-depletion");
  CVCurve curve;
  curve.regime = regime;
  curve.points.reserve(biases.size());
  for (double v : biases) {
    try {
      curve.points.push_back({v, capacitance_at(stack, v, regime)});
    } catch (const BracketError& e) {
      throw BracketError(std::string(e.what()) + " at bias " + std::to_string(v) + " V",
                         e.lower(), e.upper());
    }
  }
  curve.validate();
  return curve;
}

inline std::vector<double> sweep_biases(const SweepPlan& plan) {
  plan.validate();
  std::vector<double> v(plan.point_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = plan.bias_at(i);
  return v;
}

inline CVCurve cv_curve(const DeviceStack& stack, const SweepPlan& plan) {
  const auto biases = sweep_biases(plan);
  return cv_curve(stack, biases, plan.regime);
}

}  // namespace moscap
