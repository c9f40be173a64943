// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "moscap/moscap.hpp"

using namespace moscap;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

// Runs a shell command, returning its stdout and exit status.
std::pair<std::string, int> shell(const std::string& cmd) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {"", -1};
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  const int rc = pclose(p);
  return {out, WIFEXITED(rc) ? WEXITSTATUS(rc) : -1};
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome thickness_series_al_p() {
  const auto t0 = Clock::now();
  constexpr int reps = 1000;
  double c300 = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double area = extract_area(28.62e-12, 500.0);
    c300 = oxide_capacitance(OxideSpec::from_nm(300.0, area), {});
  }
  const double per_call = seconds_since(t0) / reps;
  const double pf = units::to_pF(c300);
  const bool ok = std::abs(pf - 47.7) < 0.05 && rel(pf, 47.0) <= 0.03 && per_call < 1e-3;
  return {ok, fmt("C(300 nm) = %.2f pF vs 47 pF (%.2f%%), %.2e s per evaluation", pf,
                  100 * rel(pf, 47.0), per_call)};
}

Outcome thickness_series_mim() {
  const double area = extract_area(16e-12, 500.0);
  const auto s = DeviceStack::metal_insulator_metal(OxideSpec::from_nm(300.0, area));
  const double pf = units::to_pF(capacitance_at(s, 0.0, Regime::high_frequency));
  const bool ok = std::abs(pf - 26.7) < 0.05 && rel(pf, 27.0) <= 0.03;
  return {ok, fmt("C(300 nm) = %.2f pF vs 27 pF (%.2f%%)", pf, 100 * rel(pf, 27.0))};
}

Outcome reference_inconsistency() {
  bool ok = true;
  std::ostringstream d;
  for (const char* name : {"al_p_plus", "metal1_metal2"}) {
    for (const auto& row : compare_reference(reference_curves(name))) {
      const bool row_ok = row.thickness_nm == 150.0 ? row.deviation > 0.30 : row.deviation <= 0.03;
      ok = ok && row_ok;
      d << name << '@' << row.thickness_nm << "nm " << fmt("%.1f%%", 100 * row.deviation)
        << (row_ok ? "" : "!") << ' ';
    }
  }
  auto text = d.str();
  if (!text.empty()) text.pop_back();
  return {ok, text};
}

Outcome junction_depth_cli() {
  const auto [out, rc] = shell(std::string(MOSCAP_CLI_PATH) + " extract junction 0.65 1.25 1.45");
  const bool ok = rc == 0 && out == "0.8 um\n" && std::stod(out) == 0.80;
  std::string shown = out;
  if (!shown.empty() && shown.back() == '\n') shown.pop_back();
  return {ok, "output '" + shown + "', exit " + std::to_string(rc)};
}

Outcome regime_envelope() {
  std::size_t stacks = 0, failures = 0;
  double worst_plateau = 0.0;
  for (double tox : {100.0, 200.0, 400.0, 800.0}) {
    for (double n : {1e14, 1e15, 1e16, 1e17, 1e18}) {
      for (Polarity pol : {Polarity::p_type, Polarity::n_type}) {
        const auto s = DeviceStack::mos(OxideSpec::from_nm(tox, 1e-3), {pol, n});
        const double vfb = flat_band_voltage(s);
        const double vt = threshold_voltage(s);
        // Sweep from accumulation through strong inversion.
        const double lo = std::min(vfb, vt) - 5.0, hi = std::max(vfb, vt) + 5.0;
        SweepPlan plan{lo, hi, (hi - lo) / 1000.0};
        const auto curve = cv_curve(s, plan);
        const double cox = oxide_capacitance(s), cmin = c_min(s);
        bool ok = curve.size() == 1001;
        for (const auto& p : curve.points)
          ok = ok && p.capacitance >= cmin * (1 - 1e-12) && p.capacitance <= cox * (1 + 1e-12);
        const auto& acc = pol == Polarity::p_type ? curve.points.front() : curve.points.back();
        const double plateau = rel(acc.capacitance, cox);
        worst_plateau = std::max(worst_plateau, plateau);
        ok = ok && plateau <= 0.005;
        ++stacks;
        if (!ok) ++failures;
      }
    }
  }
  return {failures == 0, std::to_string(stacks) + " stacks x 1001 points, " +
                             std::to_string(failures) + " violations, worst plateau gap " +
                             fmt("%.2e", worst_plateau)};
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t points = 0;
  for (double tox : {50.0, 500.0}) {
    for (double n : {1e15, 1e16, 1e17}) {
      for (Polarity pol : {Polarity::p_type, Polarity::n_type}) {
        const auto s = DeviceStack::mos(OxideSpec::from_nm(tox, 4.146e-3), {pol, n});
        const double vfb = flat_band_voltage(s), vt = threshold_voltage(s);
        const double h = 1e-4;
        // Interior of the depletion interval, endpoints excluded.
        for (int i = 0; i < 201; ++i) {
          const double vg = vfb + (vt - vfb) * (i + 1) / 202.0;
          const double dq =
              (gate_charge_per_area(s, vg + h) - gate_charge_per_area(s, vg - h)) / (2 * h);
          const double c = capacitance_at(s, vg, Regime::high_frequency);
          worst = std::max(worst, rel(c, std::abs(dq) * s.oxide.area));
          ++points;
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-3 && t < 1.0, std::to_string(points) + " points, worst " +
                                        fmt("%.2e relative, %.3f s", worst, t)};
}

Outcome extraction_round_trip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20261017);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int failures = 0;
  double worst_t = 0.0, worst_n = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double tox = 100.0 + 700.0 * u(rng);
    const double n = std::pow(10.0, 14.0 + 4.0 * u(rng));
    const Polarity pol = u(rng) < 0.5 ? Polarity::p_type : Polarity::n_type;
    const auto truth = DeviceStack::mos(OxideSpec::from_nm(tox, 1e-3), {pol, n});
    const double vfb = flat_band_voltage(truth), vt = threshold_voltage(truth);
    const double lo = std::min(vfb, vt) - 5.0, hi = std::max(vfb, vt) + 5.0;
    const auto curve = simulate_sweep(truth, SweepPlan{lo, hi, (hi - lo) / 400.0});

    auto guess = truth;
    guess.oxide.thickness *= 0.8 + 0.4 * u(rng);
    guess.substrate->doping *= std::pow(10.0, u(rng) - 0.5);
    bool ok = true;
    try {
      const auto r = fit_cv(curve, guess, {FitParameter::t_ox, FitParameter::doping});
      worst_t = std::max(worst_t, rel(r.t_ox, tox));
      worst_n = std::max(worst_n, rel(r.substrate_doping, n));
      ok = r.converged && rel(r.t_ox, tox) <= 0.005 && rel(r.substrate_doping, n) <= 0.01;
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok) ++failures;
  }
  const double t = seconds_since(t0);
  return {failures == 0 && t < 30.0,
          std::to_string(failures) + "/50 failed, worst t_ox " +
              fmt("%.1e, worst N %.1e, %.2f s", worst_t, worst_n, t)};
}

Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "moscap_acceptance";
  fs::create_directories(dir);
  io::write_file_atomic(dir / "stack.cfg",
                        "kind = mos\nt_ox = 50 nm\narea = 1e-3 cm2\npolarity = p\n"
                        "doping = 5e15 per_cm3\n");
  const std::string bin = MOSCAP_CLI_PATH;
  const std::string sweep = bin + " sweep " + (dir / "stack.cfg").string() +
                            " --noise 0.05pF --seed 1234";
  const auto a = shell(sweep);
  const auto b = shell(sweep + " -o " + (dir / "cv.csv").string());
  const std::string from_file = io::read_file(dir / "cv.csv");
  const std::string plot = bin + " plot " + (dir / "cv.csv").string() + " -l noisy -t sweep";
  const auto p1 = shell(plot);
  const auto p2 = shell(plot);
  fs::remove_all(dir);
  const bool csv_ok = a.second == 0 && b.second == 0 && !a.first.empty() && a.first == from_file;
  const bool svg_ok = p1.second == 0 && !p1.first.empty() && p1.first == p2.first;
  return {csv_ok && svg_ok, std::string("CSV ") + (csv_ok ? "identical" : "differs") + " (" +
                                std::to_string(a.first.size()) + " bytes), SVG " +
                                (svg_ok ? "identical" : "differs") + " (" +
                                std::to_string(p1.first.size()) + " bytes)"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"Al/p+ thickness series at 300 nm", thickness_series_al_p},
      {"metal1-metal2 series at 300 nm", thickness_series_mim},
      {"reference report flags 150 nm data", reference_inconsistency},
      {"junction depth via CLI", junction_depth_cli},
      {"high-frequency regime envelope", regime_envelope},
      {"dQ/dV oracle equivalence", oracle_equivalence},
      {"fit round trip on 50 random stacks", extraction_round_trip},
      {"sweep and plot determinism", determinism},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
