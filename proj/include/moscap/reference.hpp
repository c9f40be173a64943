#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "moscap/errors.hpp"
#include "moscap/extraction.hpp"
#include "moscap/model.hpp"
#include "moscap/sweep.hpp"
#include "moscap/types.hpp"

namespace moscap {

struct ThicknessEntry {
  double thickness_nm;
  double capacitance_pF;
};

/// A published oxide-thickness series and the stack calibrated to it.
///
/// The device area was never reported, so it is recovered from the headline
/// capacitance at the 500 nm calibration thickness.
struct ReferenceSeries {
  std::string name;
  std::string description;
  double headline_pF = 0.0;
  double calibration_thickness_nm = 500.0;
  std::vector<ThicknessEntry> table;
  DeviceStack stack;
  CVCurve curve;  // -5 V to +5 V, 0.1 V steps, high frequency
};

inline const std::vector<std::string>& reference_names() {
  static const std::vector<std::string> names{"al_p_plus", "al_n_plus", "metal1_metal2"};
  return names;
}

inline ReferenceSeries reference_curves(std::string_view name) {
  ReferenceSeries s;
  s.name = std::string(name);
  // Heavily doped diffusions: ~1e19 cm^-3 at the surface.
  constexpr double degenerate_doping = 1e19;
  if (name == "al_p_plus") {
    s.description = "Al gate over p+ diffusion, SiO2 dielectric";
    s.headline_pF = 28.62;
    s.table = {{150.0, 140.0}, {300.0, 47.0}, {500.0, 28.2}};
  } else if (name == "al_n_plus") {
    s.description = "Al gate over n+ diffusion, SiO2 dielectric";
    s.headline_pF = 29.55;
    s.table = {{150.0, 140.0}, {300.0, 47.0}, {500.0, 28.2}};
  } else if (name == "metal1_metal2") {
    s.description = "metal 1 to metal 2 plate capacitor, SiO2 dielectric";
    s.headline_pF = 16.0;
    s.table = {{150.0, 82.0}, {300.0, 27.0}, {500.0, 16.0}};
  } else {
    throw Error(ErrorKind::not_found, "unknown reference series '" + std::string(name) + "'");
  }

  const double area = extract_area(units::from_pF(s.headline_pF), s.calibration_thickness_nm);
  const auto oxide = OxideSpec::from_nm(s.calibration_thickness_nm, area);
  if (name == "metal1_metal2") {
    s.stack = DeviceStack::metal_insulator_metal(oxide);
  } else {
    const auto polarity = name == "al_p_plus" ? Polarity::p_type : Polarity::n_type;
    s.stack = DeviceStack::mos(oxide, {polarity, degenerate_doping});
  }
  SweepPlan plan;  // -5 V .. +5 V, 0.1 V, high frequency
  s.curve = cv_curve(s.stack, plan);
  return s;
}

struct ComparisonRow {
  std::string name;
  double thickness_nm;
  double paper_pF;
  double model_pF;
  double deviation;  // |published - model| / published
};

/// Model prediction at each tabulated thickness with the calibrated area.
inline std::vector<ComparisonRow> compare_reference(const ReferenceSeries& s) {
  std::vector<ComparisonRow> rows;
  for (const auto& e : s.table) {
    OxideSpec oxide = s.stack.oxide;
    oxide.thickness = units::from_nm(e.thickness_nm);
    const double model = units::to_pF(oxide_capacitance(oxide, s.stack.constants));
    rows.push_back({s.name, e.thickness_nm, e.capacitance_pF, model,
                    std::abs(e.capacitance_pF - model) / e.capacitance_pF});
  }
  return rows;
}

}  // namespace moscap
