#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "moscap/constants.hpp"
#include "moscap/errors.hpp"
#include "moscap/model.hpp"
#include "moscap/types.hpp"

namespace moscap {

struct ProfilePoint {
  double depth = 0.0;          // um
  double concentration = 0.0;  // cm^-3
};

struct DopingProfile {
  std::vector<ProfilePoint> points;

  std::size_t size() const { return points.size(); }

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      require(std::isfinite(points[i].depth), "profile depth must be finite");
      require(std::isfinite(points[i].concentration) && points[i].concentration > 0.0,
              "profile concentration must be positive");
      if (i > 0)
        require(points[i].depth > points[i - 1].depth,
                "profile depths must be strictly increasing");
    }
  }
};

/// Onset, minimum and end of the junction feature on a profile plot, in um.
struct ThreePointMarkers {
  double onset = 0.0;
  double minimum = 0.0;
  double end = 0.0;

  void validate() const {
    require(std::isfinite(onset) && std::isfinite(minimum) && std::isfinite(end),
            "markers must be finite");
    require(onset <= minimum && minimum <= end, "markers must satisfy onset <= minimum <= end");
  }
};

// ---------------------------------------------------------------------------
// Oxide capacitance and geometry
// ---------------------------------------------------------------------------

/// Accumulation plateau: median of the 10% of samples deepest into
/// accumulation (lowest bias for p-type, highest for n-type).
inline double extract_oxide_capacitance(const CVCurve& curve, Polarity polarity) {
  curve.validate();
  if (curve.size() < 5)
    throw Error(ErrorKind::no_plateau, "plateau extraction needs at least 5 points");
  const std::size_t n = curve.size();
  const std::size_t k = std::max<std::size_t>(1, (n + 9) / 10);
  std::vector<double> c;
  c.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t idx = polarity == Polarity::p_type ? i : n - 1 - i;
    c.push_back(curve.points[idx].capacitance);
  }
  std::sort(c.begin(), c.end());
  const double median = k % 2 ? c[k / 2] : 0.5 * (c[k / 2 - 1] + c[k / 2]);
  const double spread = (c.back() - c.front()) / median;
  if (spread > 0.05)
    throw Error(ErrorKind::no_plateau,
                "accumulation samples spread " + std::to_string(spread * 100.0) +
                    "% exceeds 5%");
  return median;
}

/// t_ox = eps0 eps_r A / C, in nanometers.
inline double extract_tox(double c_ox, double area, double relative_permittivity = 3.9,
                          const PhysicalConstants& c = {}) {
  require(c_ox > 0.0 && area > 0.0 && relative_permittivity > 0.0,
          "extract_tox requires positive inputs");
  return units::to_nm(c.vacuum_permittivity * relative_permittivity * area / c_ox);
}

/// A = C t_ox / (eps0 eps_r), in cm^2. Thickness in nanometers.
inline double extract_area(double c_ox, double thickness_nm, double relative_permittivity = 3.9,
                           const PhysicalConstants& c = {}) {
  require(c_ox > 0.0 && thickness_nm > 0.0 && relative_permittivity > 0.0,
          "extract_area requires positive inputs");
  return c_ox * units::from_nm(thickness_nm) / (c.vacuum_permittivity * relative_permittivity);
}

// ---------------------------------------------------------------------------
// Substrate doping
// ---------------------------------------------------------------------------

/// Solves C_min = series(C_ox, eps_Si A / W_dmax(N)) for N by bisection on
/// log10 N over [1e13, 1e19].
inline double extract_doping_maxmin(double c_ox, double c_min_measured, double area,
                                    const PhysicalConstants& c = {}) {
  require(c_ox > 0.0 && c_min_measured > 0.0 && area > 0.0,
          "extract_doping_maxmin requires positive inputs");
  if (c_min_measured >= c_ox)
    throw Error(ErrorKind::invalid_input, "C_min must be strictly below C_ox");

  const double eps = c.silicon_permittivity();
  auto predicted = [&](double log_n) {
    const double n = std::pow(10.0, log_n);
    const double two_phi = 2.0 * c.thermal_voltage * std::log(n / c.intrinsic_carrier_concentration);
    const double w = std::sqrt(2.0 * eps * two_phi / (c.elementary_charge * n));
    return series_capacitance(c_ox, eps * area / w);
  };

  double lo = 13.0;
  double hi = 19.0;
  if (predicted(lo) > c_min_measured || predicted(hi) < c_min_measured)
    throw Error(ErrorKind::out_of_range,
                "C_min/C_ox ratio implies doping outside [1e13, 1e19] cm^-3");
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (predicted(mid) < c_min_measured) lo = mid; else hi = mid;
  }
  return std::pow(10.0, 0.5 * (lo + hi));
}

/// 1/C^2 profiling: N = 2 / (q eps_Si A^2 |d(1/C^2)/dV|) at interior points,
/// central differences, depth W = eps_Si A / C.
///
/// With `oxide_capacitance` given, the oxide's series contribution is removed
/// from the depth, W = eps_Si A (1/C - 1/C_ox), which is the physical
/// depletion depth of a MOS capacitor.
inline DopingProfile doping_profile_from_cv(const CVCurve& curve, double area,
                                            std::optional<double> oxide_capacitance = {},
                                            const PhysicalConstants& c = {}) {
  curve.validate();
  require(area > 0.0, "profile requires positive area");
  require(curve.size() >= 3, "profile requires at least 3 points for central differences");
  if (oxide_capacitance) require(*oxide_capacitance > 0.0, "oxide capacitance must be positive");

  const auto& pts = curve.points;
  const bool decreasing = pts[1].capacitance < pts[0].capacitance;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double d = pts[i + 1].capacitance - pts[i].capacitance;
    if (d == 0.0 || (d < 0.0) != decreasing)
      throw Error(ErrorKind::profile_undefined,
                  "capacitance not strictly monotone on [" + std::to_string(pts[i].bias) + ", " +
                      std::to_string(pts[i + 1].bias) + "] V");
  }

  const double eps = c.silicon_permittivity();
  DopingProfile profile;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double inv_prev = 1.0 / (pts[i - 1].capacitance * pts[i - 1].capacitance);
    const double inv_next = 1.0 / (pts[i + 1].capacitance * pts[i + 1].capacitance);
    const double slope = (inv_next - inv_prev) / (pts[i + 1].bias - pts[i - 1].bias);
    const double n = 2.0 / (c.elementary_charge * eps * area * area * std::abs(slope));
    double w = eps * area / pts[i].capacitance;
    if (oxide_capacitance) {
      w -= eps * area / *oxide_capacitance;
      if (w <= 0.0)
        throw Error(ErrorKind::profile_undefined,
                    "capacitance at " + std::to_string(pts[i].bias) +
                        " V is not below the oxide capacitance");
    }
    profile.points.push_back({units::to_um(w), n});
  }
  // Deeper depletion means smaller C; emit shallow-to-deep.
  if (!decreasing) std::reverse(profile.points.begin(), profile.points.end());
  profile.validate();
  return profile;
}

// ---------------------------------------------------------------------------
// Junction depth
// ---------------------------------------------------------------------------

/// Junction depth as the span between the onset and end markers.
inline double junction_depth(const ThreePointMarkers& m) {
  m.validate();
  return m.end - m.onset;
}

/// Locates the three markers on a diffused-junction profile.
///
/// The minimum is the lowest concentration. Onset and end bound the
/// contiguous run around it where |d log10 N / dx| stays at or above 10% of
/// its peak over the profile.
inline ThreePointMarkers detect_markers(const DopingProfile& profile) {
  profile.validate();
  const auto& p = profile.points;
  require(p.size() >= 3, "marker detection needs at least 3 profile points");

  const std::size_t n = p.size();
  std::vector<double> slope(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    slope[i] = std::abs((std::log10(p[b].concentration) - std::log10(p[a].concentration)) /
                        (p[b].depth - p[a].depth));
  }
  const double peak = *std::max_element(slope.begin(), slope.end());
  require(peak > 0.0, "profile is flat; no junction feature");
  const double threshold = 0.1 * peak;

  const auto min_it = std::min_element(p.begin(), p.end(), [](const auto& a, const auto& b) {
    return a.concentration < b.concentration;
  });
  const std::size_t imin = static_cast<std::size_t>(min_it - p.begin());

  std::size_t lo = imin;
  while (lo > 0 && slope[lo - 1] >= threshold) --lo;
  std::size_t hi = imin;
  while (hi + 1 < n && slope[hi + 1] >= threshold) ++hi;
  return {p[lo].depth, p[imin].depth, p[hi].depth};
}

}  // namespace moscap
