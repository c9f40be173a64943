#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moscap/constants.hpp"
#include "moscap/errors.hpp"

namespace moscap {

enum class Polarity { n_type, p_type };
enum class StackKind { mos, metal_insulator_metal };
enum class Regime { low_frequency, high_frequency, deep_depletion, raw_measurement };

inline const char* to_string(Polarity p) {
  return p == Polarity::p_type ? "p" : "n";
}

inline const char* to_string(StackKind k) {
  return k == StackKind::mos ? "mos" : "mim";
}

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::low_frequency: return "lf";
    case Regime::high_frequency: return "hf";
    case Regime::deep_depletion: return "dd";
    case Regime::raw_measurement: return "raw";
  }
  return "?";
}

inline std::optional<Regime> parse_regime(std::string_view s) {
  if (s == "lf" || s == "low-frequency") return Regime::low_frequency;
  if (s == "hf" || s == "high-frequency") return Regime::high_frequency;
  if (s == "dd" || s == "deep-depletion") return Regime::deep_depletion;
  if (s == "raw" || s == "raw-measurement") return Regime::raw_measurement;
  return std::nullopt;
}

// +1 for p-type, -1 for n-type. Multiplying a bias or surface potential by
// this maps an n-type device onto the equivalent p-type problem.
inline double polarity_sign(Polarity p) { return p == Polarity::p_type ? 1.0 : -1.0; }

struct OxideSpec {
  double thickness = 0.0;  // cm
  double area = 0.0;       // cm^2
  double relative_permittivity = 3.9;

  static OxideSpec from_nm(double thickness_nm, double area_cm2,
                           double relative_permittivity = 3.9) {
    return {units::from_nm(thickness_nm), area_cm2, relative_permittivity};
  }

  double thickness_nm() const { return units::to_nm(thickness); }

  void validate() const {
    require(std::isfinite(thickness) && thickness > 0.0,
            "oxide thickness must be positive");
    require(std::isfinite(area) && area > 0.0, "oxide area must be positive");
    require(std::isfinite(relative_permittivity) && relative_permittivity >= 1.0,
            "oxide relative permittivity must be >= 1");
  }
};

struct SubstrateSpec {
  Polarity polarity = Polarity::p_type;
  double doping = 1e16;  // cm^-3

  void validate(const PhysicalConstants& c) const {
    require(std::isfinite(doping) && doping > c.intrinsic_carrier_concentration,
            "substrate doping must exceed the intrinsic carrier concentration");
  }
};

inline constexpr double default_workfunction_difference = -0.9;  // V, Al gate

/// One capacitor: a MOS diode or a metal-oxide-metal plate pair.
struct DeviceStack {
  StackKind kind = StackKind::mos;
  OxideSpec oxide;
  std::optional<SubstrateSpec> substrate;
  double workfunction_difference = default_workfunction_difference;  // V
  double fixed_oxide_charge = 0.0;                                   // C/cm^2
  PhysicalConstants constants;

  static DeviceStack mos(OxideSpec oxide, SubstrateSpec substrate,
                         double workfunction_difference = default_workfunction_difference,
                         double fixed_oxide_charge = 0.0) {
    DeviceStack s;
    s.kind = StackKind::mos;
    s.oxide = oxide;
    s.substrate = substrate;
    s.workfunction_difference = workfunction_difference;
    s.fixed_oxide_charge = fixed_oxide_charge;
    return s;
  }

  static DeviceStack metal_insulator_metal(OxideSpec oxide) {
    DeviceStack s;
    s.kind = StackKind::metal_insulator_metal;
    s.oxide = oxide;
    s.workfunction_difference = 0.0;
    return s;
  }

  void validate() const {
    oxide.validate();
    require(constants.valid(), "physical constants must be positive");
    require(std::isfinite(workfunction_difference),
            "work-function difference must be finite");
    require(std::isfinite(fixed_oxide_charge), "fixed oxide charge must be finite");
    if (kind == StackKind::metal_insulator_metal) {
      require(!substrate.has_value(),
              "metal-insulator-metal stack cannot carry a substrate");
    } else {
      require(substrate.has_value(), "MOS stack requires a substrate");
      substrate->validate(constants);
    }
  }
};

struct CVPoint {
  double bias = 0.0;         // V
  double capacitance = 0.0;  // F

  friend bool operator==(const CVPoint&, const CVPoint&) = default;
};

struct CVCurve {
  std::vector<CVPoint> points;
  Regime regime = Regime::raw_measurement;
  // Leading points flagged as instrument settling; fits skip them.
  std::size_t settle_count = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      require(std::isfinite(p.bias), "point " + std::to_string(i) + ": bias not finite");
      require(std::isfinite(p.capacitance) && p.capacitance > 0.0,
              "point " + std::to_string(i) + ": capacitance must be positive");
      if (i > 0)
        require(p.bias > points[i - 1].bias,
                "point " + std::to_string(i) + ": bias not strictly increasing");
    }
    require(settle_count <= points.size(), "settle count exceeds point count");
  }

  double min_capacitance() const {
    require(!points.empty(), "empty curve");
    double m = points.front().capacitance;
    for (const auto& p : points) m = std::min(m, p.capacitance);
    return m;
  }

  double max_capacitance() const {
    require(!points.empty(), "empty curve");
    double m = points.front().capacitance;
    for (const auto& p : points) m = std::max(m, p.capacitance);
    return m;
  }
};

/// Instrument-style bias sweep.
struct SweepPlan {
  double start = -5.0;  // V
  double stop = 5.0;    // V
  double step = 0.1;    // V
  Regime regime = Regime::high_frequency;
  double noise_sigma = 0.0;  // F
  std::uint64_t seed = 0;
  std::size_t settle_discard = 0;

  void validate() const {
    require(std::isfinite(start) && std::isfinite(stop) && std::isfinite(step),
            "sweep bounds must be finite");
    require(step > 0.0, "sweep step must be positive");
    require(start < stop, "sweep start must be below stop");
    require(std::isfinite(noise_sigma) && noise_sigma >= 0.0,
            "noise sigma must be non-negative");
    require(point_count() >= 1 && point_count() <= 10'000'000,
            "sweep point count out of range");
  }

  // floor((stop - start)/step) + 1, with a relative guard so that 10/0.1
  // counts 101 points rather than 100 after rounding.
  std::size_t point_count() const {
    const double span = (stop - start) / step;
    return static_cast<std::size_t>(std::floor(span * (1.0 + 1e-12) + 1e-9)) + 1;
  }

  double bias_at(std::size_t i) const { return start + static_cast<double>(i) * step; }
};

}  // namespace moscap
