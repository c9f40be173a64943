#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "moscap/constants.hpp"
#include "moscap/errors.hpp"
#include "moscap/extraction.hpp"
#include "moscap/fit.hpp"
#include "moscap/types.hpp"

namespace moscap::io {

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Canonical number form: scientific notation, 9 significant digits.
inline std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

inline std::string format_general(double v, int digits = 6) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

/// Parses the whole of `s` as a double; no leading '+', no trailing text.
inline std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::parse, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a sibling temporary file and rename, so readers never see a
/// partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::parse, "cannot write '" + tmp.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorKind::parse, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::parse, "cannot rename into '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------------------
// Quantities with unit suffixes
// ---------------------------------------------------------------------------

enum class Dimension { length, area, capacitance, voltage, concentration, charge_density,
                       temperature, dimensionless };

struct UnitSuffix {
  std::string_view suffix;
  double scale;  // to canonical cm / cm^2 / F / V / cm^-3 / C cm^-2 / K
};

inline std::vector<UnitSuffix> suffixes_for(Dimension d) {
  switch (d) {
    case Dimension::length: return {{"nm", units::nm}, {"um", units::um}, {"cm", 1.0}};
    case Dimension::area: return {{"cm2", 1.0}, {"um2", 1e-8}};
    case Dimension::capacitance: return {{"pF", units::pF}, {"F", 1.0}};
    case Dimension::voltage: return {{"V", 1.0}};
    case Dimension::concentration: return {{"per_cm3", 1.0}};
    case Dimension::charge_density: return {{"C_per_cm2", 1.0}};
    case Dimension::temperature: return {{"K", 1.0}};
    case Dimension::dimensionless: return {};
  }
  return {};
}

/// Parses "500 nm", "500nm" or, when `bare_unit` names a suffix, a bare
/// number in that unit. Returns the value in canonical units.
inline double parse_quantity(std::string_view text, Dimension d,
                             std::optional<std::string_view> bare_unit = {}) {
  text = trim(text);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || text.empty())
    throw Error(ErrorKind::parse, "'" + std::string(text) + "' is not a number");
  if (!std::isfinite(value)) throw Error(ErrorKind::out_of_range, "value must be finite");
  auto unit_part = trim(text.substr(static_cast<std::size_t>(res.ptr - text.data())));

  const auto allowed = suffixes_for(d);
  if (unit_part.empty()) {
    if (d == Dimension::dimensionless) return value;
    if (!bare_unit) {
      std::string list;
      for (const auto& u : allowed) list += (list.empty() ? "" : ", ") + std::string(u.suffix);
      throw Error(ErrorKind::parse, "missing unit suffix; expected one of: " + list);
    }
    unit_part = *bare_unit;
  }
  for (const auto& u : allowed)
    if (u.suffix == unit_part) return value * u.scale;
  std::string list;
  for (const auto& u : allowed) list += (list.empty() ? "" : ", ") + std::string(u.suffix);
  throw Error(ErrorKind::parse, "unknown unit suffix '" + std::string(unit_part) + "'" +
                                    (list.empty() ? "" : "; expected one of: " + list));
}

// ---------------------------------------------------------------------------
// C-V CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view cv_csv_header = "voltage_V,capacitance_F";

inline std::string write_cv_csv(const CVCurve& curve) {
  curve.validate();
  std::string out(cv_csv_header);
  out += '\n';
  for (const auto& p : curve.points) {
    out += format_sci(p.bias);
    out += ',';
    out += format_sci(p.capacitance);
    out += '\n';
  }
  return out;
}

namespace detail {

// Splits a two-column CSV into rows after checking the header. Returns
// (line number, cells) pairs.
inline std::vector<std::pair<std::size_t, std::pair<std::string_view, std::string_view>>>
two_column_rows(std::string_view text, std::string_view header) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != header)
    throw ParseError("expected header '" + std::string(header) + "'", 1);
  std::vector<std::pair<std::size_t, std::pair<std::string_view, std::string_view>>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    const auto row = lines[i];
    if (row.empty() && i + 1 == lines.size()) break;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos) throw ParseError("expected 2 columns", line);
    const auto second = row.substr(comma + 1);
    if (second.find(',') != std::string_view::npos) throw ParseError("expected 2 columns", line);
    rows.push_back({line, {row.substr(0, comma), second}});
  }
  return rows;
}

}  // namespace detail

inline CVCurve parse_cv_csv(std::string_view text) {
  CVCurve curve;
  curve.regime = Regime::raw_measurement;
  for (const auto& [line, cells] : detail::two_column_rows(text, cv_csv_header)) {
    const auto v = parse_number(cells.first);
    if (!v || !std::isfinite(*v)) throw ParseError("voltage is not a finite number", line, 1);
    const auto c = parse_number(cells.second);
    if (!c || !std::isfinite(*c)) throw ParseError("capacitance is not a finite number", line, 2);
    if (*c <= 0.0) throw ParseError("capacitance must be positive", line, 2);
    if (!curve.points.empty()) {
      if (*v == curve.points.back().bias) throw ParseError("duplicate voltage", line, 1);
      if (*v < curve.points.back().bias) throw ParseError("voltage not increasing", line, 1);
    }
    curve.points.push_back({*v, *c});
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Doping-profile CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view profile_csv_header = "depth_um,concentration_per_cm3";

inline std::string write_profile_csv(const DopingProfile& profile) {
  profile.validate();
  std::string out(profile_csv_header);
  out += '\n';
  for (const auto& p : profile.points) out += format_sci(p.depth) + ',' + format_sci(p.concentration) + '\n';
  return out;
}

inline DopingProfile parse_profile_csv(std::string_view text) {
  DopingProfile profile;
  for (const auto& [line, cells] : detail::two_column_rows(text, profile_csv_header)) {
    const auto x = parse_number(cells.first);
    if (!x || !std::isfinite(*x)) throw ParseError("depth is not a finite number", line, 1);
    const auto n = parse_number(cells.second);
    if (!n || !std::isfinite(*n)) throw ParseError("concentration is not a finite number", line, 2);
    if (*n <= 0.0) throw ParseError("concentration must be positive", line, 2);
    if (!profile.points.empty() && *x <= profile.points.back().depth)
      throw ParseError("depth not strictly increasing", line, 1);
    profile.points.push_back({*x, *n});
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Stack configuration
// ---------------------------------------------------------------------------

struct ParsedStack {
  DeviceStack stack;
  // "key = value" for every optional key filled from its default.
  std::vector<std::string> defaults_applied;
};

namespace detail {

struct KeyValue {
  std::size_t line;
  std::string value;
};

// Comment-stripped key/value pairs; duplicates are an error.
inline std::map<std::string, KeyValue, std::less<>> key_values(std::string_view text) {
  std::map<std::string, KeyValue, std::less<>> kv;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    auto row = lines[i];
    if (const auto hash = row.find('#'); hash != std::string_view::npos) row = row.substr(0, hash);
    row = trim(row);
    if (!row.empty() && row.back() == '\r') row = trim(row.substr(0, row.size() - 1));
    if (row.empty()) continue;
    const auto eq = row.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line);
    const auto key = trim(row.substr(0, eq));
    const auto value = trim(row.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line);
    if (value.empty()) throw ParseError("empty value for '" + std::string(key) + "'", line);
    if (kv.count(key)) throw ParseError("duplicate key '" + std::string(key) + "'", line);
    kv.emplace(std::string(key), KeyValue{line, std::string(value)});
  }
  return kv;
}

}  // namespace detail

/// Parses the line-oriented stack description.
///
///   kind = mos | mim
///   t_ox = 500 nm            (nm, um, cm)
///   area = 4.146e-3 cm2      (cm2, um2)
///   polarity = p | n         (mos only)
///   doping = 1e16 per_cm3    (mos only)
///   epsilon_r = 3.9          (optional)
///   delta_phi_ms = -0.9 V    (optional, mos only)
///   fixed_charge = 0 C_per_cm2  (optional, mos only)
///   temperature = 300 K      (optional)
inline ParsedStack parse_stack_config(std::string_view text) {
  auto kv = detail::key_values(text);
  static const std::vector<std::string_view> known{
      "kind", "t_ox", "area", "polarity", "doping", "epsilon_r", "delta_phi_ms", "fixed_charge",
      "temperature"};
  for (const auto& [key, entry] : kv) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParseError("unknown key '" + key + "'", entry.line);
  }

  auto value_of = [&](std::string_view key) -> const detail::KeyValue* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto required = [&](std::string_view key) -> const detail::KeyValue& {
    const auto* e = value_of(key);
    if (!e) throw ParseError("missing required key '" + std::string(key) + "'", 0);
    return *e;
  };
  auto quantity = [&](const detail::KeyValue& e, Dimension d) {
    try {
      return parse_quantity(e.value, d);
    } catch (const Error& err) {
      throw ParseError(err.what(), e.line);
    }
  };
  auto out_of_range = [](const detail::KeyValue& e, const std::string& what) {
    return Error(ErrorKind::out_of_range, "line " + std::to_string(e.line) + ": " + what);
  };

  ParsedStack parsed;
  auto& stack = parsed.stack;

  const auto& kind = required("kind");
  if (kind.value == "mos") {
    stack.kind = StackKind::mos;
  } else if (kind.value == "mim" || kind.value == "metal-insulator-metal") {
    stack.kind = StackKind::metal_insulator_metal;
    stack.workfunction_difference = 0.0;
  } else {
    throw ParseError("kind must be 'mos' or 'mim'", kind.line);
  }
  const bool mos = stack.kind == StackKind::mos;
  if (!mos) {
    for (std::string_view k : {"polarity", "doping", "delta_phi_ms", "fixed_charge"})
      if (const auto* e = value_of(k))
        throw ParseError("key '" + std::string(k) + "' does not apply to kind = mim", e->line);
  }

  if (const auto* e = value_of("temperature")) {
    const double t = quantity(*e, Dimension::temperature);
    if (!(t > 0.0)) throw out_of_range(*e, "temperature must be positive");
    stack.constants = stack.constants.at_temperature(t);
  } else {
    parsed.defaults_applied.push_back("temperature = 300 K");
  }

  const auto& tox = required("t_ox");
  stack.oxide.thickness = quantity(tox, Dimension::length);
  if (!(stack.oxide.thickness > 0.0)) throw out_of_range(tox, "t_ox must be positive");

  const auto& area = required("area");
  stack.oxide.area = quantity(area, Dimension::area);
  if (!(stack.oxide.area > 0.0)) throw out_of_range(area, "area must be positive");

  if (const auto* e = value_of("epsilon_r")) {
    stack.oxide.relative_permittivity = quantity(*e, Dimension::dimensionless);
    if (!(stack.oxide.relative_permittivity >= 1.0))
      throw out_of_range(*e, "epsilon_r must be >= 1");
  } else {
    stack.oxide.relative_permittivity = stack.constants.oxide_relative_permittivity;
    parsed.defaults_applied.push_back("epsilon_r = 3.9");
  }

  if (mos) {
    SubstrateSpec sub;
    const auto& pol = required("polarity");
    if (pol.value == "p") sub.polarity = Polarity::p_type;
    else if (pol.value == "n") sub.polarity = Polarity::n_type;
    else throw ParseError("polarity must be 'p' or 'n'", pol.line);

    const auto& dop = required("doping");
    sub.doping = quantity(dop, Dimension::concentration);
    if (!(sub.doping > stack.constants.intrinsic_carrier_concentration))
      throw out_of_range(dop, "doping must exceed the intrinsic concentration 1e10 per_cm3");
    stack.substrate = sub;

    if (const auto* e = value_of("delta_phi_ms")) {
      stack.workfunction_difference = quantity(*e, Dimension::voltage);
    } else {
      stack.workfunction_difference = default_workfunction_difference;
      parsed.defaults_applied.push_back("delta_phi_ms = -0.9 V");
    }
    if (const auto* e = value_of("fixed_charge")) {
      stack.fixed_oxide_charge = quantity(*e, Dimension::charge_density);
    } else {
      stack.fixed_oxide_charge = 0.0;
      parsed.defaults_applied.push_back("fixed_charge = 0 C_per_cm2");
    }
  }

  stack.validate();
  return parsed;
}

inline std::string write_stack_config(const DeviceStack& stack) {
  stack.validate();
  std::string out;
  out += std::string("kind = ") + to_string(stack.kind) + '\n';
  out += "t_ox = " + format_general(stack.oxide.thickness_nm(), 10) + " nm\n";
  out += "area = " + format_sci(stack.oxide.area) + " cm2\n";
  out += "epsilon_r = " + format_general(stack.oxide.relative_permittivity, 10) + '\n';
  if (stack.kind == StackKind::mos) {
    out += std::string("polarity = ") + to_string(stack.substrate->polarity) + '\n';
    out += "doping = " + format_sci(stack.substrate->doping) + " per_cm3\n";
    out += "delta_phi_ms = " + format_general(stack.workfunction_difference, 10) + " V\n";
    out += "fixed_charge = " + format_sci(stack.fixed_oxide_charge) + " C_per_cm2\n";
  }
  out += "temperature = " + format_general(stack.constants.temperature, 10) + " K\n";
  return out;
}

// ---------------------------------------------------------------------------
// Extraction result
// ---------------------------------------------------------------------------

inline std::string write_extraction_result(const ExtractionResult& r) {
  std::string out;
  out += "t_ox_nm = " + format_sci(r.t_ox) + '\n';
  out += "area_cm2 = " + format_sci(r.area) + '\n';
  out += "substrate_doping_per_cm3 = " + format_sci(r.substrate_doping) + '\n';
  out += "flat_band_V = " + format_sci(r.flat_band) + '\n';
  out += "residual_rms_F = " + format_sci(r.residual_rms) + '\n';
  out += "iterations = " + std::to_string(r.iterations) + '\n';
  out += std::string("converged = ") + (r.converged ? "true" : "false") + '\n';
  return out;
}

/// Reads the scalar fields written by write_extraction_result. The stack and
/// residual history are not part of the text form.
inline ExtractionResult parse_extraction_result(std::string_view text) {
  auto kv = detail::key_values(text);
  ExtractionResult r;
  auto number = [&](std::string_view key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing key '" + std::string(key) + "'", 0);
    const auto v = parse_number(it->second.value);
    if (!v) throw ParseError("'" + std::string(key) + "' is not a number", it->second.line);
    return *v;
  };
  r.t_ox = number("t_ox_nm");
  r.area = number("area_cm2");
  r.substrate_doping = number("substrate_doping_per_cm3");
  r.flat_band = number("flat_band_V");
  r.residual_rms = number("residual_rms_F");
  r.iterations = static_cast<int>(number("iterations"));
  const auto it = kv.find("converged");
  if (it == kv.end()) throw ParseError("missing key 'converged'", 0);
  if (it->second.value != "true" && it->second.value != "false")
    throw ParseError("converged must be true or false", it->second.line);
  r.converged = it->second.value == "true";
  for (const auto& [key, entry] : kv) {
    static const std::vector<std::string_view> known{
        "t_ox_nm", "area_cm2", "substrate_doping_per_cm3", "flat_band_V", "residual_rms_F",
        "iterations", "converged"};
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ParseError("unknown key '" + key + "'", entry.line);
  }
  return r;
}

}  // namespace moscap::io
