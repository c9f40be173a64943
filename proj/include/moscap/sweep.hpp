#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "moscap/errors.hpp"
#include "moscap/model.hpp"
#include "moscap/types.hpp"

namespace moscap {

/// SplitMix64. Written out so any implementation reproduces the stream:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on the open interval (0, 1): ((next() >> 11) + 0.5) * 2^-53.
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller, cosine branch only; two uniforms per draw.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// Runs a virtual bias sweep: model curve plus seeded Gaussian noise.
/// The result is tagged raw-measurement.
inline CVCurve simulate_sweep(const DeviceStack& stack, const SweepPlan& plan) {
  plan.validate();
  CVCurve curve = cv_curve(stack, plan);
  if (plan.noise_sigma > 0.0) {
    SplitMix64 rng(plan.seed);
    for (auto& p : curve.points) {
      p.capacitance += plan.noise_sigma * rng.normal();
      if (!(p.capacitance > 0.0))
        throw Error(ErrorKind::invalid_input,
                    "noise drove capacitance non-positive at " + std::to_string(p.bias) + " V");
    }
  }
  curve.regime = Regime::raw_measurement;
  curve.settle_count = std::min(plan.settle_discard, curve.size());
  return curve;
}

}  // namespace moscap
