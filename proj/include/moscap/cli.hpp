#pragma once

#include <unistd.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "moscap/errors.hpp"
#include "moscap/extraction.hpp"
#include "moscap/fit.hpp"
#include "moscap/io.hpp"
#include "moscap/model.hpp"
#include "moscap/reference.hpp"
#include "moscap/svg.hpp"
#include "moscap/sweep.hpp"
#include "moscap/types.hpp"

namespace moscap::cli {

enum ExitCode : int {
  success = 0,
  usage_error = 1,
  non_convergence = 2,
  invalid_physical_input = 3,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::not_found:
      return usage_error;
    case ErrorKind::convergence:
    case ErrorKind::rank_deficiency:
      return non_convergence;
    default:
      return invalid_physical_input;
  }
}

namespace detail {

struct Streams {
  std::ostream& out;
  std::ostream& err;
  bool color;

  void error(const std::string& msg) const {
    if (color) err << "\x1b[31merror:\x1b[0m " << msg << '\n';
    else err << "error: " << msg << '\n';
  }
  void warn(const std::string& msg) const {
    if (color) err << "\x1b[33mwarning:\x1b[0m " << msg << '\n';
    else err << "warning: " << msg << '\n';
  }
};

// Data goes to --out when given, otherwise to standard output.
inline void emit(const Streams& s, const std::string& out_path, const std::string& data) {
  if (out_path.empty()) s.out << data;
  else io::write_file_atomic(out_path, data);
}

inline std::string farads(double c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e F (%.2f pF)", c, units::to_pF(c));
  return buf;
}

inline std::string volts(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g V", v);
  return buf;
}

inline io::ParsedStack load_stack(const std::string& path) {
  const auto text = io::read_file(path);
  try {
    return io::parse_stack_config(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

inline CVCurve load_curve(const std::string& path) {
  const auto text = io::read_file(path);
  try {
    return io::parse_cv_csv(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

inline Polarity parse_polarity(const std::string& s) {
  if (s == "p") return Polarity::p_type;
  if (s == "n") return Polarity::n_type;
  throw Error(ErrorKind::parse, "polarity must be 'p' or 'n'");
}

inline std::vector<FitParameter> parse_free_list(const std::string& list) {
  std::vector<FitParameter> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto name = io::trim(item);
    if (name.empty()) continue;
    const auto p = parse_fit_parameter(name);
    if (!p)
      throw Error(ErrorKind::parse, "unknown free parameter '" + std::string(name) +
                                        "' (expected t_ox, doping, flat_band, area)");
    out.push_back(*p);
  }
  return out;
}

inline void print_stack_summary(const Streams& s, const DeviceStack& stack) {
  // Built whole so a failure leaves stdout untouched.
  std::ostringstream o;
  o << "kind = " << to_string(stack.kind) << '\n';
  o << "C_ox = " << farads(oxide_capacitance(stack)) << '\n';
  if (stack.kind == StackKind::mos) {
    o << "V_fb = " << volts(flat_band_voltage(stack)) << '\n';
    o << "V_T = " << volts(threshold_voltage(stack)) << '\n';
    o << "C_min = " << farads(c_min(stack)) << '\n';
    o << "phi_F = " << volts(bulk_potential(stack)) << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g V^0.5", body_factor(stack));
    o << "gamma = " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.4g um", units::to_um(max_depletion_width(stack)));
    o << "W_dmax = " << buf << '\n';
  }
  s.out << o.str();
}

inline std::string reference_report(const std::vector<ReferenceSeries>& series) {
  std::string out = "series,thickness_nm,paper_pF,model_pF,deviation_pct\n";
  char buf[160];
  for (const auto& s : series) {
    for (const auto& row : compare_reference(s)) {
      std::snprintf(buf, sizeof buf, "%s,%.0f,%.2f,%.2f,%.1f\n", row.name.c_str(),
                    row.thickness_nm, row.paper_pF, row.model_pF, row.deviation * 100.0);
      out += buf;
    }
  }
  return out;
}

}  // namespace detail

/// Runs one command line. Data goes to `out`, diagnostics to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
               bool allow_color = false) {
  const bool color = allow_color && std::getenv("MOSCAP_NO_COLOR") == nullptr;
  const detail::Streams streams{out, err, color};

  CLI::App app{"MOS capacitor C-V modeling, virtual sweeps and parameter extraction", "moscap"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Echo applied defaults and fit progress");

  // model
  auto* model = app.add_subcommand("model", "Print C_ox, V_fb, V_T and C_min for a stack file");
  std::string model_stack;
  model->add_option("stack", model_stack, "Stack config file")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Simulate a bias sweep and write C-V CSV");
  std::string sweep_stack, sweep_out, sweep_regime = "hf", sweep_noise = "0";
  SweepPlan plan;
  sweep->add_option("stack", sweep_stack, "Stack config file")->required();
  sweep->add_option("--start", plan.start, "Start bias (V)")->capture_default_str();
  sweep->add_option("--stop", plan.stop, "Stop bias (V)")->capture_default_str();
  sweep->add_option("--step", plan.step, "Bias step (V)")->capture_default_str();
  sweep->add_option("--regime", sweep_regime, "hf, lf or dd")->capture_default_str();
  sweep->add_option("--noise", sweep_noise, "Noise sigma, e.g. 0.05pF (bare number: F)")
      ->capture_default_str();
  sweep->add_option("--seed", plan.seed, "Noise seed")->capture_default_str();
  sweep->add_option("--settle", plan.settle_discard, "Leading points flagged as settling");
  sweep->add_option("-o,--out", sweep_out, "Output CSV file (default: stdout)");

  // extract
  auto* extract = app.add_subcommand("extract", "Recover parameters from C-V data or markers");
  extract->require_subcommand(1);
  extract->fallthrough();
  std::string ex_csv, ex_cox, ex_cmin, ex_area, ex_tox, ex_polarity = "p", ex_out, ex_profile;
  double ex_eps_r = 3.9;
  std::vector<double> ex_markers;

  auto* ex_cox_cmd = extract->add_subcommand("cox", "Accumulation-plateau oxide capacitance");
  ex_cox_cmd->add_option("csv", ex_csv, "C-V CSV file")->required();
  ex_cox_cmd->add_option("--polarity", ex_polarity, "Substrate polarity, p or n");

  auto* ex_tox_cmd = extract->add_subcommand("tox", "Oxide thickness from C_ox and area");
  ex_tox_cmd->add_option("--cox", ex_cox, "Oxide capacitance, e.g. 28.62pF")->required();
  ex_tox_cmd->add_option("--area", ex_area, "Area, e.g. 4.146e-3cm2 (bare: cm2)")->required();
  ex_tox_cmd->add_option("--epsilon-r", ex_eps_r, "Oxide relative permittivity");

  auto* ex_area_cmd = extract->add_subcommand("area", "Area from C_ox and thickness");
  ex_area_cmd->add_option("--cox", ex_cox, "Oxide capacitance")->required();
  ex_area_cmd->add_option("--tox", ex_tox, "Oxide thickness, e.g. 500nm (bare: nm)")->required();
  ex_area_cmd->add_option("--epsilon-r", ex_eps_r, "Oxide relative permittivity");

  auto* ex_doping_cmd = extract->add_subcommand("doping", "Substrate doping from C_max/C_min");
  ex_doping_cmd->add_option("--cox", ex_cox, "Oxide capacitance");
  ex_doping_cmd->add_option("--cmin", ex_cmin, "Minimum capacitance");
  ex_doping_cmd->add_option("--csv", ex_csv, "High-frequency C-V CSV instead of --cox/--cmin");
  ex_doping_cmd->add_option("--polarity", ex_polarity, "Substrate polarity, p or n");
  ex_doping_cmd->add_option("--area", ex_area, "Area (bare: cm2)")->required();

  auto* ex_profile_cmd = extract->add_subcommand("profile", "1/C^2 doping profile as CSV");
  ex_profile_cmd->add_option("csv", ex_csv, "Depletion-regime C-V CSV")->required();
  ex_profile_cmd->add_option("--area", ex_area, "Area (bare: cm2)")->required();
  ex_profile_cmd->add_option("--cox", ex_cox, "Subtract the oxide's series contribution");
  ex_profile_cmd->add_option("-o,--out", ex_out, "Output CSV file (default: stdout)");

  auto* ex_junction_cmd =
      extract->add_subcommand("junction", "Junction depth from onset/minimum/end markers (um)");
  ex_junction_cmd->add_option("markers", ex_markers, "x1 x2 x3 in um")->expected(3);
  ex_junction_cmd->add_option("--profile", ex_profile, "Detect markers on a profile CSV");

  // fit
  auto* fit = app.add_subcommand("fit", "Least-squares fit of a stack to a C-V CSV");
  std::string fit_csv, fit_stack, fit_free = "t_ox,doping", fit_regime = "hf", fit_out;
  int fit_max_iter = 100;
  fit->add_option("csv", fit_csv, "Measured C-V CSV")->required();
  fit->add_option("--stack", fit_stack, "Initial stack config")->required();
  fit->add_option("--free", fit_free, "Comma list of t_ox, doping, flat_band, area")
      ->capture_default_str();
  fit->add_option("--regime", fit_regime, "Model regime: hf, lf or dd")->capture_default_str();
  fit->add_option("--max-iter", fit_max_iter, "Iteration limit")->capture_default_str();
  fit->add_option("-o,--out", fit_out, "Result file (default: stdout)");

  // plot
  auto* plot = app.add_subcommand("plot", "Render C-V CSV files to SVG");
  std::vector<std::string> plot_csv, plot_labels;
  std::string plot_out, plot_title;
  plot->add_option("csv", plot_csv, "C-V CSV files")->required();
  plot->add_option("-l,--label", plot_labels, "Series label, once per file");
  plot->add_option("-t,--title", plot_title, "Plot title");
  plot->add_option("-o,--out", plot_out, "Output SVG file (default: stdout)");

  // reference
  auto* reference = app.add_subcommand("reference", "Published thickness series vs. the model");
  std::string ref_name;
  bool ref_curve = false, ref_stack = false;
  reference->add_option("name", ref_name, "al_p_plus, al_n_plus or metal1_metal2");
  reference->add_flag("--curve", ref_curve, "Emit the calibrated stack's C-V CSV instead");
  reference->add_flag("--stack", ref_stack, "Emit the calibrated stack config instead");

  std::vector<std::string> argv_store{"moscap"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return success;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return success;
  } catch (const CLI::ParseError& e) {
    streams.error(e.what());
    err << app.help();
    return usage_error;
  }

  try {
    if (model->parsed()) {
      const auto parsed = detail::load_stack(model_stack);
      if (verbose)
        for (const auto& d : parsed.defaults_applied) err << "default: " << d << '\n';
      detail::print_stack_summary(streams, parsed.stack);
      return success;
    }

    if (sweep->parsed()) {
      const auto parsed = detail::load_stack(sweep_stack);
      if (verbose)
        for (const auto& d : parsed.defaults_applied) err << "default: " << d << '\n';
      const auto regime = parse_regime(sweep_regime);
      if (!regime || *regime == Regime::raw_measurement)
        throw Error(ErrorKind::parse, "--regime must be hf, lf or dd");
      plan.regime = *regime;
      plan.noise_sigma = io::parse_quantity(sweep_noise, io::Dimension::capacitance, "F");
      const auto curve = simulate_sweep(parsed.stack, plan);
      detail::emit(streams, sweep_out, io::write_cv_csv(curve));
      return success;
    }

    if (extract->parsed()) {
      if (ex_cox_cmd->parsed()) {
        const double c = extract_oxide_capacitance(detail::load_curve(ex_csv),
                                                   detail::parse_polarity(ex_polarity));
        out << "C_ox = " << detail::farads(c) << '\n';
        return success;
      }
      if (ex_tox_cmd->parsed()) {
        const double c = io::parse_quantity(ex_cox, io::Dimension::capacitance, "F");
        const double a = io::parse_quantity(ex_area, io::Dimension::area, "cm2");
        const double t = extract_tox(c, a, ex_eps_r);
        out << "t_ox = " << io::format_general(t) << " nm\n";
        return success;
      }
      if (ex_area_cmd->parsed()) {
        const double c = io::parse_quantity(ex_cox, io::Dimension::capacitance, "F");
        const double t = io::parse_quantity(ex_tox, io::Dimension::length, "nm");
        const double a = extract_area(c, units::to_nm(t), ex_eps_r);
        out << "area = " << io::format_sci(a) << " cm2\n";
        return success;
      }
      if (ex_doping_cmd->parsed()) {
        const double a = io::parse_quantity(ex_area, io::Dimension::area, "cm2");
        double cox = 0.0, cmin = 0.0;
        if (!ex_csv.empty()) {
          const auto curve = detail::load_curve(ex_csv);
          cox = extract_oxide_capacitance(curve, detail::parse_polarity(ex_polarity));
          cmin = curve.min_capacitance();
        } else {
          if (ex_cox.empty() || ex_cmin.empty())
            throw Error(ErrorKind::parse, "extract doping needs --csv or both --cox and --cmin");
          cox = io::parse_quantity(ex_cox, io::Dimension::capacitance, "F");
          cmin = io::parse_quantity(ex_cmin, io::Dimension::capacitance, "F");
        }
        const double n = extract_doping_maxmin(cox, cmin, a);
        out << "doping = " << io::format_sci(n) << " per_cm3\n";
        return success;
      }
      if (ex_profile_cmd->parsed()) {
        const double a = io::parse_quantity(ex_area, io::Dimension::area, "cm2");
        std::optional<double> cox;
        if (!ex_cox.empty()) cox = io::parse_quantity(ex_cox, io::Dimension::capacitance, "F");
        const auto profile = doping_profile_from_cv(detail::load_curve(ex_csv), a, cox);
        detail::emit(streams, ex_out, io::write_profile_csv(profile));
        return success;
      }
      if (ex_junction_cmd->parsed()) {
        ThreePointMarkers m;
        if (!ex_profile.empty()) {
          if (!ex_markers.empty())
            throw Error(ErrorKind::parse, "give either three markers or --profile, not both");
          const auto text = io::read_file(ex_profile);
          m = detect_markers(io::parse_profile_csv(text));
          if (verbose)
            err << "markers: onset " << io::format_general(m.onset) << " um, minimum "
                << io::format_general(m.minimum) << " um, end " << io::format_general(m.end)
                << " um\n";
        } else {
          if (ex_markers.size() != 3)
            throw Error(ErrorKind::parse, "extract junction needs three markers x1 x2 x3");
          m = {ex_markers[0], ex_markers[1], ex_markers[2]};
        }
        const double depth = junction_depth(m);
        out << io::format_general(depth) << " um\n";
        return success;
      }
    }

    if (fit->parsed()) {
      const auto parsed = detail::load_stack(fit_stack);
      const auto curve = detail::load_curve(fit_csv);
      FitOptions opt;
      const auto regime = parse_regime(fit_regime);
      if (!regime || *regime == Regime::raw_measurement)
        throw Error(ErrorKind::parse, "--regime must be hf, lf or dd");
      opt.regime = *regime;
      opt.max_iterations = fit_max_iter;
      const auto result = fit_cv(curve, parsed.stack, detail::parse_free_list(fit_free), opt);
      if (verbose) {
        for (std::size_t i = 0; i < result.residual_history.size(); ++i)
          err << "step " << i << ": rms " << io::format_sci(result.residual_history[i]) << " F\n";
      }
      detail::emit(streams, fit_out, io::write_extraction_result(result));
      if (!result.converged) {
        streams.warn("fit did not converge within " + std::to_string(fit_max_iter) +
                     " iterations");
        return non_convergence;
      }
      return success;
    }

    if (plot->parsed()) {
      std::vector<CVCurve> curves;
      for (const auto& path : plot_csv) curves.push_back(detail::load_curve(path));
      std::vector<std::string> labels = plot_labels;
      for (std::size_t i = labels.size(); i < plot_csv.size(); ++i) labels.push_back(plot_csv[i]);
      svg::PlotOptions opt;
      opt.title = plot_title;
      detail::emit(streams, plot_out, svg::render_svg_plot(curves, {}, labels, opt));
      return success;
    }

    if (reference->parsed()) {
      std::vector<ReferenceSeries> series;
      if (ref_name.empty()) {
        if (ref_curve || ref_stack)
          throw Error(ErrorKind::parse, "--curve and --stack need a series name");
        for (const auto& n : reference_names()) series.push_back(reference_curves(n));
      } else {
        series.push_back(reference_curves(ref_name));
      }
      if (ref_curve) out << io::write_cv_csv(series.front().curve);
      else if (ref_stack) out << io::write_stack_config(series.front().stack);
      else out << detail::reference_report(series);
      return success;
    }
  } catch (const Error& e) {
    streams.error(e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    streams.error(e.what());
    return invalid_physical_input;
  }

  err << app.help();
  return usage_error;
}

inline int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr, isatty(STDERR_FILENO) != 0);
}

}  // namespace moscap::cli
