#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moscap/errors.hpp"
#include "moscap/model.hpp"
#include "moscap/types.hpp"

namespace moscap {

enum class FitParameter { t_ox, doping, flat_band, area };

inline const char* to_string(FitParameter p) {
  switch (p) {
    case FitParameter::t_ox: return "t_ox";
    case FitParameter::doping: return "doping";
    case FitParameter::flat_band: return "flat_band";
    case FitParameter::area: return "area";
  }
  return "?";
}

inline std::optional<FitParameter> parse_fit_parameter(std::string_view s) {
  if (s == "t_ox" || s == "tox") return FitParameter::t_ox;
  if (s == "doping" || s == "N") return FitParameter::doping;
  if (s == "flat_band" || s == "vfb" || s == "V_fb") return FitParameter::flat_band;
  if (s == "area") return FitParameter::area;
  return std::nullopt;
}

struct ExtractionResult {
  double t_ox = 0.0;             // nm
  double area = 0.0;             // cm^2
  double substrate_doping = 0.0; // cm^-3, 0 for metal-insulator-metal
  double flat_band = 0.0;        // V
  double residual_rms = 0.0;     // F
  int iterations = 0;
  bool converged = false;
  // RMS residual after the initial evaluation and after every accepted step.
  std::vector<double> residual_history;
  DeviceStack stack;
};

/// Raised when the fit cannot make progress; carries the best parameters seen.
class FitError : public Error {
 public:
  FitError(ErrorKind kind, const std::string& what, ExtractionResult best)
      : Error(kind, what), best_(std::move(best)) {}

  const ExtractionResult& best() const noexcept { return best_; }

 private:
  ExtractionResult best_;
};

struct FitOptions {
  Regime regime = Regime::high_frequency;
  int max_iterations = 100;
  double relative_improvement = 1e-8;
  double jacobian_step = 1e-4;
  double initial_damping = 1e-3;
};

namespace detail {

// Internal coordinates: t_ox in nm, log10 N, V_fb in V, area in cm^2.
struct ParameterBounds {
  double lo;
  double hi;
};

inline ParameterBounds bounds_of(FitParameter p) {
  switch (p) {
    case FitParameter::t_ox: return {1.0, 1.0e4};
    case FitParameter::doping: return {13.0, 20.0};
    case FitParameter::flat_band: return {-10.0, 10.0};
    case FitParameter::area: return {1e-10, 1e2};
  }
  return {-1e300, 1e300};
}

// Lower limit on the Jacobian step scale, so V_fb near zero still moves.
inline double step_floor(FitParameter p) {
  return p == FitParameter::flat_band ? 1.0 : 0.0;
}

class FitProblem {
 public:
  FitProblem(const CVCurve& measured, const DeviceStack& initial,
             std::vector<FitParameter> free, const FitOptions& opt)
      : initial_(initial), free_(std::move(free)), opt_(opt) {
    for (std::size_t i = measured.settle_count; i < measured.size(); ++i) {
      bias_.push_back(measured.points[i].bias);
      measured_pf_.push_back(units::to_pF(measured.points[i].capacitance));
    }
  }

  std::size_t data_count() const { return bias_.size(); }
  const std::vector<FitParameter>& free() const { return free_; }

  Eigen::VectorXd initial_vector() const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t j = 0; j < free_.size(); ++j) {
      const auto idx = static_cast<Eigen::Index>(j);
      switch (free_[j]) {
        case FitParameter::t_ox: x[idx] = initial_.oxide.thickness_nm(); break;
        case FitParameter::doping: x[idx] = std::log10(initial_.substrate->doping); break;
        case FitParameter::flat_band: x[idx] = flat_band_voltage(initial_); break;
        case FitParameter::area: x[idx] = initial_.oxide.area; break;
      }
    }
    return project(x);
  }

  Eigen::VectorXd project(Eigen::VectorXd x) const {
    for (std::size_t j = 0; j < free_.size(); ++j) {
      const auto b = bounds_of(free_[j]);
      const auto idx = static_cast<Eigen::Index>(j);
      x[idx] = std::clamp(x[idx], b.lo, b.hi);
    }
    return x;
  }

  DeviceStack stack_for(const Eigen::VectorXd& x) const {
    DeviceStack s = initial_;
    std::optional<double> flat_band;
    for (std::size_t j = 0; j < free_.size(); ++j) {
      const double v = x[static_cast<Eigen::Index>(j)];
      switch (free_[j]) {
        case FitParameter::t_ox: s.oxide.thickness = units::from_nm(v); break;
        case FitParameter::doping: s.substrate->doping = std::pow(10.0, v); break;
        case FitParameter::flat_band: flat_band = v; break;
        case FitParameter::area: s.oxide.area = v; break;
      }
    }
    // V_fb = dphi - Q_f / C_ox'; hold V_fb at the fitted value as t_ox moves.
    if (flat_band)
      s.workfunction_difference =
          *flat_band + s.fixed_oxide_charge / oxide_capacitance_per_area(s.oxide, s.constants);
    return s;
  }

  // Residuals in pF; empty optional when the model cannot be evaluated.
  std::optional<Eigen::VectorXd> residuals(const Eigen::VectorXd& x) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(bias_.size()));
    try {
      const DeviceStack s = stack_for(x);
      for (std::size_t i = 0; i < bias_.size(); ++i) {
        const double c = capacitance_at(s, bias_[i], opt_.regime);
        r[static_cast<Eigen::Index>(i)] = units::to_pF(c) - measured_pf_[i];
      }
    } catch (const Error&) {
      return std::nullopt;
    }
    if (!r.allFinite()) return std::nullopt;
    return r;
  }

  // Forward differences with relative step; steps backward at an upper bound.
  std::optional<Eigen::MatrixXd> jacobian(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& r0) const {
    const auto m = static_cast<Eigen::Index>(free_.size());
    Eigen::MatrixXd jac(r0.size(), m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto p = free_[static_cast<std::size_t>(j)];
      double h = opt_.jacobian_step * std::max(std::abs(x[j]), step_floor(p));
      if (x[j] + h > bounds_of(p).hi) h = -h;
      Eigen::VectorXd xp = x;
      xp[j] += h;
      const auto rp = residuals(xp);
      if (!rp) return std::nullopt;
      jac.col(j) = (*rp - r0) / h;
    }
    return jac;
  }

  ExtractionResult result(const Eigen::VectorXd& x, double rms_pf) const {
    ExtractionResult out;
    out.stack = stack_for(x);
    out.t_ox = out.stack.oxide.thickness_nm();
    out.area = out.stack.oxide.area;
    if (out.stack.kind == StackKind::mos) {
      out.substrate_doping = out.stack.substrate->doping;
      out.flat_band = flat_band_voltage(out.stack);
    }
    out.residual_rms = units::from_pF(rms_pf);
    return out;
  }

 private:
  DeviceStack initial_;
  std::vector<FitParameter> free_;
  FitOptions opt_;
  std::vector<double> bias_;
  std::vector<double> measured_pf_;
};

inline double rms(const Eigen::VectorXd& r) {
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

// Names parameters whose Jacobian columns vanish or are collinear.
inline std::string indistinguishable(const Eigen::MatrixXd& jac,
                                     const std::vector<FitParameter>& free) {
  std::vector<bool> flagged(free.size(), false);
  const auto m = jac.cols();
  for (Eigen::Index a = 0; a < m; ++a) {
    const double na = jac.col(a).norm();
    if (na == 0.0) flagged[static_cast<std::size_t>(a)] = true;
    for (Eigen::Index b = a + 1; b < m; ++b) {
      const double nb = jac.col(b).norm();
      if (na == 0.0 || nb == 0.0) continue;
      const double corr = std::abs(jac.col(a).dot(jac.col(b))) / (na * nb);
      if (corr > 1.0 - 1e-9) {
        flagged[static_cast<std::size_t>(a)] = true;
        flagged[static_cast<std::size_t>(b)] = true;
      }
    }
  }
  std::string names;
  for (std::size_t j = 0; j < free.size(); ++j)
    if (flagged[j]) names += (names.empty() ? "" : ", ") + std::string(to_string(free[j]));
  if (names.empty())
    for (std::size_t j = 0; j < free.size(); ++j)
      names += (j ? ", " : "") + std::string(to_string(free[j]));
  return names;
}

}  // namespace detail

/// Least-squares fit of the forward model to a measured curve.
///
/// Levenberg-Marquardt damped Gauss-Newton over the free parameters, with a
/// forward-difference Jacobian. Doping is fitted as log10 N, the others
/// linearly; every trial point is projected into the parameter bounds.
/// Stops when an accepted step improves the RMS residual by less than the
/// relative threshold, when no damping level yields a decrease, or at the
/// iteration limit (converged = false).
inline ExtractionResult fit_cv(const CVCurve& measured, const DeviceStack& initial,
                               std::vector<FitParameter> free, const FitOptions& opt = {}) {
  measured.validate();
  initial.validate();
  require(opt.regime != Regime::raw_measurement, "fit regime must be a model regime");
  std::sort(free.begin(), free.end());
  free.erase(std::unique(free.begin(), free.end()), free.end());
  if (initial.kind == StackKind::metal_insulator_metal)
    for (auto p : free)
      if (p == FitParameter::doping || p == FitParameter::flat_band)
        throw Error(ErrorKind::unsupported_operation,
                    std::string("cannot fit ") + to_string(p) +
                        " on a metal-insulator-metal stack");

  detail::FitProblem problem(measured, initial, free, opt);
  require(problem.data_count() >= std::max<std::size_t>(1, 2 * free.size()),
          "fit needs at least twice as many data points as free parameters");

  Eigen::VectorXd x = problem.initial_vector();
  auto r = problem.residuals(x);
  if (!r)
    throw FitError(ErrorKind::convergence, "model cannot be evaluated at the initial stack",
                   problem.result(x, std::numeric_limits<double>::infinity()));
  double current = detail::rms(*r);
  std::vector<double> history{units::from_pF(current)};

  auto finish = [&](int iterations, bool converged) {
    ExtractionResult out = problem.result(x, current);
    out.iterations = iterations;
    out.converged = converged;
    out.residual_history = history;
    return out;
  };

  if (free.empty() || current == 0.0) return finish(0, true);

  double lambda = opt.initial_damping;
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    const auto jac = problem.jacobian(x, *r);
    if (!jac)
      throw FitError(ErrorKind::convergence, "model cannot be evaluated near the current point",
                     finish(iter, false));

    const Eigen::MatrixXd normal = jac->transpose() * *jac;
    const Eigen::VectorXd gradient = jac->transpose() * *r;
    {
      // Rank test on the column-normalized Jacobian.
      Eigen::VectorXd norms = jac->colwise().norm().transpose();
      Eigen::MatrixXd scaled = *jac;
      bool zero_column = false;
      for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        if (norms[j] == 0.0) zero_column = true; else scaled.col(j) /= norms[j];
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
      qr.setThreshold(1e-10);
      if (zero_column || qr.rank() < scaled.cols())
        throw FitError(ErrorKind::rank_deficiency,
                       "singular normal equations; indistinguishable parameters: " +
                           detail::indistinguishable(*jac, free),
                       finish(iter, false));
    }

    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += lambda * normal.diagonal();
      const Eigen::VectorXd delta = damped.ldlt().solve(-gradient);
      const Eigen::VectorXd trial_x = problem.project(x + delta);
      const auto trial_r = problem.residuals(trial_x);
      const double trial = trial_r ? detail::rms(*trial_r) : std::numeric_limits<double>::infinity();
      if (trial < current) {
        const double improvement = (current - trial) / current;
        x = trial_x;
        r = trial_r;
        current = trial;
        history.push_back(units::from_pF(current));
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (improvement < opt.relative_improvement || current == 0.0) return finish(iter, true);
        break;
      }
      lambda *= 10.0;
    }
    // No damping level reduces the residual: a local minimum.
    if (!accepted) return finish(iter, true);
  }
  return finish(opt.max_iterations, false);
}

}  // namespace moscap
