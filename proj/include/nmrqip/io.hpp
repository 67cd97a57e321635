// Copyright 2026 The nmrqip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// File formats: spin-system JSON, control CSV, pulse-program JSON, and the
// plot-data CSVs. Numbers are written in shortest round-trip form so a file
// read back and rewritten is byte-identical.

#pragma once

#include "nmrqip/dynamics.hpp"
#include "nmrqip/grape.hpp"
#include "nmrqip/protocols.hpp"
#include "nmrqip/pulse_sequence.hpp"
#include "nmrqip/spin_system.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace nmrqip {

using json = nlohmann::json;

enum class Severity { Error, Warning };

inline std::string to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

struct Diagnostic {
  std::string location;
  Severity severity = Severity::Error;
  std::string message;
};

inline bool has_errors(const std::vector<Diagnostic>& d) {
  for (const auto& x : d)
    if (x.severity == Severity::Error) return true;
  return false;
}

inline json to_json(const std::vector<Diagnostic>& diags) {
  json out = json::array();
  for (const auto& d : diags)
    out.push_back({{"location", d.location}, {"severity", to_string(d.severity)}, {"message", d.message}});
  return out;
}

/// Thrown for input that is not well-formed JSON or CSV.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for input that parses but does not describe valid domain objects.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<Diagnostic> diags)
      : std::runtime_error(summarize(diags)), diags_(std::move(diags)) {}
  explicit ConfigError(const std::string& message)
      : ConfigError(std::vector<Diagnostic>{{"", Severity::Error, message}}) {}
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  static std::string summarize(const std::vector<Diagnostic>& diags) {
    std::string s;
    for (const auto& d : diags) {
      if (d.severity != Severity::Error) continue;
      if (!s.empty()) s += "; ";
      s += d.location.empty() ? d.message : d.location + ": " + d.message;
    }
    return s;
  }
  std::vector<Diagnostic> diags_;
};

// ---------------------------------------------------------------------------
// Numbers and text files

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  const auto r = std::from_chars(first, last, v);
  if (r.ec != std::errc() || r.ptr != last) throw FormatError("not a number: '" + s + "'");
  return v;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Rows of a CSV whose header must equal `header` (whitespace-insensitive).
inline std::vector<std::vector<std::string>> read_csv_rows(const std::string& text,
                                                           const std::vector<std::string>& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV");
  auto cols = split_csv_line(line);
  for (auto& c : cols) c = trim(c);
  if (cols != header) {
    std::string want;
    for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
    throw FormatError("CSV header must be '" + want + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw FormatError("line " + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields");
    for (auto& c : cells) c = trim(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spin-system JSON

namespace detail {

inline void read_coupling_list(const json& root, const char* key, std::size_t n,
                               std::vector<Diagnostic>& diags, CouplingTable& table) {
  table = CouplingTable::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (!root.contains(key)) return;
  const json& list = root.at(key);
  if (!list.is_array()) {
    diags.push_back({key, Severity::Error, "must be an array of {i, j, value}"});
    return;
  }
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> seen;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string loc = std::string(key) + "[" + std::to_string(k) + "]";
    const json& e = list[k];
    if (!e.is_object() || !e.contains("i") || !e.contains("j") || !e.contains("value") ||
        !e["i"].is_number_unsigned() || !e["j"].is_number_unsigned() || !e["value"].is_number()) {
      diags.push_back({loc, Severity::Error, "needs unsigned i, j and numeric value"});
      continue;
    }
    const auto i = e["i"].get<std::size_t>(), j = e["j"].get<std::size_t>();
    const double v = e["value"].get<double>();
    if (i >= n || j >= n) {
      diags.push_back({loc, Severity::Error, "references a missing spin"});
      continue;
    }
    if (i == j) {
      diags.push_back({loc, Severity::Error, "couples a spin to itself"});
      continue;
    }
    if (!std::isfinite(v)) {
      diags.push_back({loc, Severity::Error, "value must be finite"});
      continue;
    }
    if (auto it = seen.find({i, j}); it != seen.end()) {
      diags.push_back({loc, Severity::Error,
                       "duplicate entry for cell (" + std::to_string(i) + "," + std::to_string(j) +
                           "), first given at " + key + "[" + std::to_string(it->second.second) + "]"});
      continue;
    }
    if (auto it = seen.find({j, i}); it != seen.end()) {
      if (it->second.first != v)
        diags.push_back({loc, Severity::Error,
                         std::string("asymmetric ") + key + " table: cell (" + std::to_string(j) + "," +
                             std::to_string(i) + ") = " + format_double(it->second.first) +
                             " but cell (" + std::to_string(i) + "," + std::to_string(j) +
                             ") = " + format_double(v)});
      else
        diags.push_back({loc, Severity::Warning,
                         "mirror of cell (" + std::to_string(j) + "," + std::to_string(i) + ") is redundant"});
      continue;
    }
    seen[{i, j}] = {v, k};
    table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    table(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
  }
}

inline std::optional<SpinKind> parse_kind(const std::string& s) {
  if (s == "nuclear") return SpinKind::Nuclear;
  if (s == "electron") return SpinKind::Electron;
  return std::nullopt;
}

}  // namespace detail

struct SystemParse {
  std::optional<SpinSystem> system;
  std::vector<Diagnostic> diagnostics;
};

/// Parses a spin-system document, collecting every problem rather than
/// stopping at the first. Same-species pairs outside the weak-coupling
/// regime produce a warning.
inline SystemParse parse_system(const json& root) {
  SystemParse out;
  auto& diags = out.diagnostics;
  if (!root.is_object()) {
    diags.push_back({"", Severity::Error, "top level must be an object"});
    return out;
  }
  for (const auto& [key, value] : root.items())
    if (key != "spins" && key != "j_hz" && key != "dipolar_hz" && key != "hyperfine")
      diags.push_back({key, Severity::Warning, "unknown key ignored"});
  if (!root.contains("spins") || !root["spins"].is_array() || root["spins"].empty()) {
    diags.push_back({"spins", Severity::Error, "must be a nonempty array"});
    return out;
  }
  std::vector<SpinSpecies> species;
  std::vector<Spin> spins;
  const json& js = root["spins"];
  for (std::size_t k = 0; k < js.size(); ++k) {
    const std::string loc = "spins[" + std::to_string(k) + "]";
    const json& s = js[k];
    if (!s.is_object() || !s.contains("label") || !s["label"].is_string() || !s.contains("species") ||
        !s["species"].is_string() || !s.contains("offset_hz") || !s["offset_hz"].is_number()) {
      diags.push_back({loc, Severity::Error, "needs string label, string species, numeric offset_hz"});
      continue;
    }
    SpinKind kind = SpinKind::Nuclear;
    if (s.contains("kind")) {
      const auto k2 = s["kind"].is_string() ? detail::parse_kind(s["kind"].get<std::string>()) : std::nullopt;
      if (!k2) {
        diags.push_back({loc + ".kind", Severity::Error, "must be \"nuclear\" or \"electron\""});
        continue;
      }
      kind = *k2;
    }
    const std::string name = s["species"].get<std::string>();
    bool known = false;
    for (const auto& sp : species)
      if (sp.name == name) {
        known = true;
        if (sp.kind != kind)
          diags.push_back({loc + ".kind", Severity::Error, "conflicts with earlier spins of species '" + name + "'"});
      }
    if (!known) species.push_back({name, kind, 1.0});
    spins.push_back({s["label"].get<std::string>(), name, s["offset_hz"].get<double>()});
  }
  if (spins.size() != js.size()) return out;
  const std::size_t n = spins.size();
  CouplingTable j, d;
  detail::read_coupling_list(root, "j_hz", n, diags, j);
  detail::read_coupling_list(root, "dipolar_hz", n, diags, d);
  std::vector<HyperfineCoupling> hf;
  if (root.contains("hyperfine")) {
    const json& jh = root["hyperfine"];
    if (!jh.is_array()) {
      diags.push_back({"hyperfine", Severity::Error, "must be an array"});
    } else {
      for (std::size_t k = 0; k < jh.size(); ++k) {
        const json& h = jh[k];
        const std::string loc = "hyperfine[" + std::to_string(k) + "]";
        if (!h.is_object() || !h.contains("electron") || !h["electron"].is_number_unsigned() ||
            !h.contains("nucleus") || !h["nucleus"].is_number_unsigned() || !h.contains("az_hz") ||
            !h["az_hz"].is_number() || !h.contains("ax_hz") || !h["ax_hz"].is_number()) {
          diags.push_back({loc, Severity::Error, "needs electron, nucleus, az_hz, ax_hz"});
          continue;
        }
        hf.push_back({h["electron"].get<std::size_t>(), h["nucleus"].get<std::size_t>(),
                      h["az_hz"].get<double>(), h["ax_hz"].get<double>()});
      }
    }
  }
  if (has_errors(diags)) return out;
  try {
    out.system.emplace(std::move(species), std::move(spins), std::move(j), std::move(d), std::move(hf));
  } catch (const std::exception& e) {
    diags.push_back({"", Severity::Error, e.what()});
    return out;
  }
  const SpinSystem& sys = *out.system;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      if (sys.j(a, b) == 0.0 && sys.dipolar(a, b) == 0.0) continue;
      if (!sys.weak_coupling_valid(a, b))
        diags.push_back({"spins[" + std::to_string(a) + "],spins[" + std::to_string(b) + "]",
                         Severity::Warning,
                         "weak-coupling approximation invalid; use full Hamiltonian / GRAPE"});
    }
  return out;
}

inline SpinSystem load_system(const std::string& path) {
  SystemParse p = parse_system(parse_json_text(read_text(path)));
  if (!p.system) throw ConfigError(p.diagnostics);
  return std::move(*p.system);
}

/// Diagnostics for a spin-system file; throws only when it cannot be read.
inline std::vector<Diagnostic> validate_config(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return parse_system(parse_json_text(text)).diagnostics;
  } catch (const FormatError& e) {
    return {{"", Severity::Error, e.what()}};
  }
}

inline json system_to_json(const SpinSystem& sys) {
  json spins = json::array();
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& s = sys.spin(i);
    spins.push_back({{"label", s.label},
                     {"species", s.species},
                     {"kind", sys.species_of(i).kind == SpinKind::Electron ? "electron" : "nuclear"},
                     {"offset_hz", s.offset_hz}});
  }
  json out{{"spins", spins}};
  const auto list = [&](const CouplingTable& t) {
    json l = json::array();
    for (std::size_t a = 0; a < sys.size(); ++a)
      for (std::size_t b = a + 1; b < sys.size(); ++b) {
        const double v = t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (v != 0.0) l.push_back({{"i", a}, {"j", b}, {"value", v}});
      }
    return l;
  };
  out["j_hz"] = list(sys.j_hz());
  out["dipolar_hz"] = list(sys.dipolar_hz());
  json hf = json::array();
  for (const auto& h : sys.hyperfine())
    hf.push_back({{"electron", h.electron}, {"nucleus", h.nucleus}, {"az_hz", h.az_hz}, {"ax_hz", h.ax_hz}});
  out["hyperfine"] = hf;
  return out;
}

// ---------------------------------------------------------------------------
// Control sequence CSV: t_s (end of step), channel (species@carrier_offset_hz),
// amplitude_hz (nutation frequency), phase_rad.

inline const std::vector<std::string>& control_csv_header() {
  static const std::vector<std::string> h{"t_s", "channel", "amplitude_hz", "phase_rad"};
  return h;
}

inline constexpr double kControlTimeTolerance = 1e-9;

inline std::string channel_label(const ControlChannel& c) {
  if (c.species.find('@') != std::string::npos || c.species.find(',') != std::string::npos)
    throw std::invalid_argument("species name '" + c.species + "' cannot be written to CSV");
  return c.species + "@" + format_double(c.carrier_offset_hz);
}

inline ControlChannel parse_channel_label(const std::string& s) {
  const auto at = s.rfind('@');
  if (at == std::string::npos || at == 0) throw ConfigError("channel '" + s + "' must be species@offset_hz");
  return {s.substr(0, at), parse_double(s.substr(at + 1))};
}

inline std::string controls_to_csv(const ControlSequence& c) {
  std::string out = "t_s,channel,amplitude_hz,phase_rad\n";
  std::vector<std::string> labels;
  for (const auto& ch : c.channels()) labels.push_back(channel_label(ch));
  for (std::size_t k = 0; k < c.n_steps(); ++k)
    for (std::size_t ch = 0; ch < c.n_channels(); ++ch) {
      const auto ci = static_cast<Eigen::Index>(ch), ki = static_cast<Eigen::Index>(k);
      out += format_double(c.dt() * static_cast<double>(k + 1)) + "," + labels[ch] + "," +
             format_double(c.amplitudes()(ci, ki) / kTwoPi) + "," + format_double(c.phases()(ci, ki)) + "\n";
    }
  return out;
}

namespace detail {

// rad/s from Hz, nudged so that dividing by 2 pi gives the written value back.
inline double hz_to_angular(double hz) {
  double a = hz * kTwoPi;
  for (int k = 0; k < 4 && a / kTwoPi != hz; ++k)
    a = std::nextafter(a, a / kTwoPi < hz ? HUGE_VAL : -HUGE_VAL);
  return a;
}

}  // namespace detail

inline ControlSequence controls_from_csv(const std::string& text) {
  const auto rows = detail::read_csv_rows(text, control_csv_header());
  if (rows.empty()) throw ConfigError("control CSV has no steps");
  std::vector<ControlChannel> channels;
  std::vector<std::string> labels;
  for (const auto& r : rows) {
    if (std::find(labels.begin(), labels.end(), r[1]) != labels.end()) break;
    labels.push_back(r[1]);
    channels.push_back(parse_channel_label(r[1]));
  }
  const std::size_t nc = channels.size();
  if (rows.size() % nc != 0) throw ConfigError("control CSV rows do not fill every channel at every step");
  const std::size_t ns = rows.size() / nc;
  const double dt = parse_double(rows[0][0]);
  if (!(dt > 0.0)) throw ConfigError("first step must end at a positive time");
  Eigen::MatrixXd amp(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(ns));
  Eigen::MatrixXd phase(amp.rows(), amp.cols());
  for (std::size_t k = 0; k < ns; ++k)
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& r = rows[k * nc + c];
      const std::string where = "row " + std::to_string(k * nc + c + 1);
      if (r[1] != labels[c]) throw ConfigError(where + ": expected channel " + labels[c]);
      if (std::abs(parse_double(r[0]) - dt * static_cast<double>(k + 1)) > kControlTimeTolerance)
        throw ConfigError(where + ": time grid is not uniform");
      const double a = parse_double(r[2]);
      if (!(a >= 0.0)) throw ConfigError(where + ": amplitude must be non-negative");
      amp(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = detail::hz_to_angular(a);
      phase(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = parse_double(r[3]);
    }
  try {
    return ControlSequence(dt, std::move(channels), std::move(amp), std::move(phase));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Pulse-program JSON

inline json pulse_sequence_to_json(const PulseSequence& seq) {
  json events = json::array();
  for (const auto& e : seq.events) {
    if (const auto* d = std::get_if<Delay>(&e)) {
      events.push_back({{"type", "delay"}, {"duration_s", d->duration}});
    } else if (const auto* p = std::get_if<HardPulse>(&e)) {
      events.push_back({{"type", "hard"},
                        {"spins", p->spins},
                        {"phases", p->phases},
                        {"angle", p->angle},
                        {"duration_s", p->duration}});
    } else if (const auto* s = std::get_if<ShapedPulse>(&e)) {
      events.push_back({{"type", "shaped"},
                        {"channel", s->channel},
                        {"envelope", s->envelope},
                        {"sample_dt_s", s->sample_dt},
                        {"carrier_offset_hz", s->carrier_offset_hz},
                        {"phase", s->phase}});
    } else if (const auto* z = std::get_if<VirtualZ>(&e)) {
      events.push_back({{"type", "virtual_z"}, {"spin", z->spin}, {"angle", z->angle}});
    }
  }
  return {{"n_spins", seq.n_spins}, {"events", events}, {"frame_record", seq.frame_record}};
}

inline PulseSequence pulse_sequence_from_json(const json& j) {
  try {
    PulseSequence seq(j.at("n_spins").get<std::size_t>());
    for (const auto& e : j.at("events")) {
      const auto type = e.at("type").get<std::string>();
      if (type == "delay") {
        seq.add(Delay{e.at("duration_s").get<double>()});
      } else if (type == "hard") {
        seq.add(HardPulse{e.at("spins").get<std::vector<std::size_t>>(), e.at("phases").get<std::vector<double>>(),
                          e.at("angle").get<double>(), e.at("duration_s").get<double>()});
      } else if (type == "shaped") {
        seq.add(ShapedPulse{e.at("channel").get<std::string>(), e.at("envelope").get<std::vector<double>>(),
                            e.at("sample_dt_s").get<double>(), e.at("carrier_offset_hz").get<double>(),
                            e.at("phase").get<double>()});
      } else if (type == "virtual_z") {
        seq.add(VirtualZ{e.at("spin").get<std::size_t>(), e.at("angle").get<double>()});
      } else {
        throw ConfigError("unknown event type '" + type + "'");
      }
    }
    if (j.contains("frame_record")) seq.frame_record = j["frame_record"].get<std::vector<double>>();
    seq.validate();
    return seq;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed pulse program: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

/// Aligned text timeline of a pulse program.
inline std::string render_timing(const PulseSequence& seq) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%4s  %12s  %-10s  %s\n", "#", "start_us", "event", "detail");
  out << line;
  double t = 0.0;
  for (std::size_t k = 0; k < seq.events.size(); ++k) {
    const auto& e = seq.events[k];
    std::string kind, detail;
    double dur = 0.0;
    if (const auto* d = std::get_if<Delay>(&e)) {
      kind = "delay";
      dur = d->duration;
      detail = format_double(d->duration * 1e6) + " us";
    } else if (const auto* p = std::get_if<HardPulse>(&e)) {
      kind = "pulse";
      dur = p->duration;
      detail = "angle " + format_double(p->angle) + " on";
      for (std::size_t i = 0; i < p->spins.size(); ++i)
        detail += " " + std::to_string(p->spins[i]) + "(phase " + format_double(p->phases[i]) + ")";
    } else if (const auto* s = std::get_if<ShapedPulse>(&e)) {
      kind = "shaped";
      dur = s->duration();
      detail = s->channel + "@" + format_double(s->carrier_offset_hz) + " Hz, " +
               std::to_string(s->envelope.size()) + " samples";
    } else if (const auto* z = std::get_if<VirtualZ>(&e)) {
      kind = "virtual_z";
      detail = "spin " + std::to_string(z->spin) + " angle " + format_double(z->angle);
    }
    std::snprintf(line, sizeof line, "%4zu  %12.3f  %-10s  ", k, t * 1e6, kind.c_str());
    out << line << detail << "\n";
    t += dur;
  }
  std::snprintf(line, sizeof line, "total %.3f us\n", t * 1e6);
  out << line;
  return out.str();
}

// ---------------------------------------------------------------------------
// Plot-data CSVs

inline std::string sweep_to_csv(const std::vector<SweepPoint>& pts) {
  std::string out = "rf_scale,offset_hz,avg_fidelity,worst_fidelity\n";
  for (const auto& p : pts)
    out += format_double(p.rf_scale) + "," + format_double(p.offset_hz) + "," + format_double(p.avg_fidelity) +
           "," + format_double(p.worst_fidelity) + "\n";
  return out;
}

inline std::vector<SweepPoint> sweep_from_csv(const std::string& text) {
  std::vector<SweepPoint> out;
  for (const auto& r : detail::read_csv_rows(text, {"rf_scale", "offset_hz", "avg_fidelity", "worst_fidelity"}))
    out.push_back({parse_double(r[0]), parse_double(r[1]), parse_double(r[2]), parse_double(r[3])});
  return out;
}

struct TraceRow {
  std::size_t round = 0;
  std::size_t step = 0;
  std::size_t spin = 0;
  double polarization = 0.0;
};

inline std::string hbac_trace_to_csv(const std::vector<HbacStep>& steps) {
  std::string out = "round,step,spin,polarization\n";
  for (const auto& s : steps)
    for (std::size_t i = 0; i < s.polarization.size(); ++i)
      out += std::to_string(s.round) + "," + std::to_string(s.step) + "," + std::to_string(i) + "," +
             format_double(s.polarization[i]) + "\n";
  return out;
}

inline std::vector<TraceRow> hbac_trace_from_csv(const std::string& text) {
  std::vector<TraceRow> out;
  for (const auto& r : detail::read_csv_rows(text, {"round", "step", "spin", "polarization"})) {
    const auto whole = [](const std::string& s) {
      const double v = parse_double(s);
      if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError("expected a non-negative integer: '" + s + "'");
      return static_cast<std::size_t>(v);
    };
    out.push_back({whole(r[0]), whole(r[1]), whole(r[2]), parse_double(r[3])});
  }
  return out;
}

inline std::string transitions_to_csv(const std::vector<Transition>& table) {
  std::string out = "lower,upper,frequency_hz,strength\n";
  for (const auto& t : table)
    out += std::to_string(t.lower) + "," + std::to_string(t.upper) + "," + format_double(t.frequency_hz) + "," +
           format_double(t.strength) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer run artifact

inline std::string to_string(GradientMode m) {
  switch (m) {
    case GradientMode::Exact: return "exact";
    case GradientMode::FirstOrder: return "first_order";
    case GradientMode::FiniteDifference: return "finite_difference";
  }
  return "unknown";
}

inline std::string to_string(OptimizerMethod m) {
  switch (m) {
    case OptimizerMethod::SteepestAscent: return "steepest_ascent";
    case OptimizerMethod::ConjugateGradient: return "conjugate_gradient";
    case OptimizerMethod::Simplex: return "simplex";
  }
  return "unknown";
}

inline json to_json(const OptimizerConfig& c) {
  json channels = json::array();
  for (const auto& ch : c.channels) channels.push_back({{"species", ch.species}, {"carrier_offset_hz", ch.carrier_offset_hz}});
  return {{"n_steps", c.n_steps},
          {"dt_s", c.dt},
          {"max_iterations", c.max_iterations},
          {"target_fidelity", c.target_fidelity},
          {"max_amplitude_hz", c.max_amplitude / kTwoPi},
          {"gradient_mode", to_string(c.gradient_mode)},
          {"method", to_string(c.method)},
          {"seed", c.seed},
          {"hamiltonian", c.hamiltonian == HamiltonianMode::Full ? "full" : "weak"},
          {"channels", channels},
          {"stall_window", c.stall_window},
          {"stall_tolerance", c.stall_tolerance},
          {"on_stall", c.on_stall == StallAction::Stop ? "stop" : "restart"}};
}

inline json to_json(const RobustnessEnsemble& e) {
  json out = json::array();
  for (const auto& m : e.members())
    out.push_back({{"rf_scale", m.rf_scale}, {"field_offset_hz", m.field_offset_hz}, {"weight", m.weight}});
  return out;
}

/// Deterministic record of an optimization: no wall time here, so equal
/// inputs give byte-equal files.
inline json optimizer_artifact(const OptimizerConfig& config, const RobustnessEnsemble& ensemble,
                               const std::vector<double>& trace, double fitness, std::size_t iterations,
                               std::size_t restarts, OptimizerStatus status, double avg_fidelity,
                               double worst_fidelity) {
  return {{"config", to_json(config)},
          {"seed", config.seed},
          {"ensemble", to_json(ensemble)},
          {"trace", trace},
          {"fitness", fitness},
          {"iterations", iterations},
          {"restarts", restarts},
          {"status", to_string(status)},
          {"final_fidelity", {{"average", avg_fidelity}, {"worst_case", worst_fidelity}}}};
}

}  // namespace nmrqip
