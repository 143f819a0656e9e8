// Configuration parsing and deterministic CSV emitters (step records and
// study tables). Snapshot formats live in snapshot.hpp.
#pragma once

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dch/integrate.hpp"
#include "dch/snapshot.hpp"
#include "dch/study.hpp"

namespace dch {

// --- config -----------------------------------------------------------------

namespace detail {

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "epsilon", "gamma",        "tau",          "T",
      "L",       "n0",           "lambda",       "tol",
      "seed",    "max_cycles",   "coarse_sweeps", "initial",
      "initial_file", "snapshot_every", "mms",   "out",
      "format",  "norm",         "levels",       "tau_coeff"};
  return keys;
}

inline double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: malformed number for '" + key + "': " + text);
  }
}

inline long parse_int(const std::string& key, const std::string& text) {
  long v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size())
    throw std::invalid_argument("config: malformed integer for '" + key + "': " + text);
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on") return true;
  if (text == "0" || text == "false" || text == "off") return false;
  throw std::invalid_argument("config: malformed boolean for '" + key + "': " + text);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "epsilon") cfg.params.epsilon = parse_double(key, value);
  else if (key == "gamma") cfg.params.gamma = parse_double(key, value);
  else if (key == "tau") cfg.params.tau = parse_double(key, value);
  else if (key == "T") cfg.params.t_final = parse_double(key, value);
  else if (key == "L") cfg.params.levels = static_cast<int>(parse_int(key, value));
  else if (key == "n0") cfg.params.n0 = static_cast<int>(parse_int(key, value));
  else if (key == "lambda") cfg.params.sweeps = static_cast<int>(parse_int(key, value));
  else if (key == "tol") cfg.params.tol = parse_double(key, value);
  else if (key == "seed") cfg.params.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "max_cycles") cfg.params.max_cycles = static_cast<int>(parse_int(key, value));
  else if (key == "coarse_sweeps") cfg.params.coarse_sweeps = static_cast<int>(parse_int(key, value));
  else if (key == "initial") {
    if (value == "manufactured") cfg.initial = InitialKind::manufactured;
    else if (value == "spinodal-random") cfg.initial = InitialKind::spinodal_random;
    else if (value == "cosine") cfg.initial = InitialKind::cosine;
    else if (value == "file") cfg.initial = InitialKind::file;
    else throw std::invalid_argument(
        "config: unknown initial '" + value +
        "' (expected manufactured | spinodal-random | cosine | file)");
  } else if (key == "initial_file") cfg.initial_file = value;
  else if (key == "snapshot_every") cfg.snapshot_every = static_cast<int>(parse_int(key, value));
  else if (key == "mms") cfg.mms = parse_bool(key, value);
  else if (key == "out") cfg.out_dir = value;
  else if (key == "format") {
    if (value != "grid-csv" && value != "vtk-ascii")
      throw std::invalid_argument("config: unknown format '" + value + "'");
    cfg.format = value;
  } else if (key == "norm") {
    if (value != "l2" && value != "h1")
      throw std::invalid_argument("config: norm must be l2 or h1");
    cfg.study_norm = value;
  } else if (key == "levels") {
    std::vector<int> ls;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
      ls.push_back(static_cast<int>(parse_int(key, trim(item))));
    if (ls.empty()) throw std::invalid_argument("config: empty levels list");
    cfg.study_levels = std::move(ls);
  } else if (key == "tau_coeff") cfg.study_tau_coeff = parse_double(key, value);
  else {
    std::string msg = "config: unknown key '" + key + "'; valid keys:";
    for (const auto& k : config_keys()) msg += " " + k;
    throw std::invalid_argument(msg);
  }
}

}  // namespace detail

// `key = value` pairs, one per line; '#' starts a comment. Missing required
// keys (L, tau, T, epsilon, gamma) and malformed values are errors.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;  // defaults: lambda=2, tol=1e-12, n0=1, seed=42
  std::map<std::string, bool> seen;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not of the form key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    detail::apply_key(cfg, key, value);
    seen[key] = true;
  }
  std::string missing;
  for (const char* req : {"L", "tau", "T", "epsilon", "gamma"})
    if (!seen.count(req)) missing += std::string(missing.empty() ? "" : ", ") + req;
  if (!missing.empty())
    throw std::invalid_argument("config: missing required keys: " + missing);
  cfg.params.validate();
  cfg.step_count();  // rejects non-integer T/tau
  return cfg;
}

// `key=value` override, e.g. from --set; wins over file values.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override '" + assignment + "' is not key=value");
  detail::apply_key(cfg, detail::trim(assignment.substr(0, eq)),
                    detail::trim(assignment.substr(eq + 1)));
}

inline std::string serialize_config(const RunConfig& cfg) {
  std::string s;
  const auto add = [&s](const std::string& k, const std::string& v) {
    s += k + " = " + v + "\n";
  };
  add("epsilon", fmt_full(cfg.params.epsilon));
  add("gamma", fmt_full(cfg.params.gamma));
  add("tau", fmt_full(cfg.params.tau));
  add("T", fmt_full(cfg.params.t_final));
  add("L", std::to_string(cfg.params.levels));
  add("n0", std::to_string(cfg.params.n0));
  add("lambda", std::to_string(cfg.params.sweeps));
  add("tol", fmt_full(cfg.params.tol));
  add("seed", std::to_string(cfg.params.seed));
  add("max_cycles", std::to_string(cfg.params.max_cycles));
  add("coarse_sweeps", std::to_string(cfg.params.coarse_sweeps));
  switch (cfg.initial) {
    case InitialKind::manufactured: add("initial", "manufactured"); break;
    case InitialKind::spinodal_random: add("initial", "spinodal-random"); break;
    case InitialKind::cosine: add("initial", "cosine"); break;
    case InitialKind::file: add("initial", "file"); break;
  }
  if (!cfg.initial_file.empty()) add("initial_file", cfg.initial_file);
  add("snapshot_every", std::to_string(cfg.snapshot_every));
  add("mms", cfg.mms ? "1" : "0");
  add("out", cfg.out_dir);
  add("format", cfg.format);
  add("norm", cfg.study_norm);
  {
    std::string ls;
    for (std::size_t i = 0; i < cfg.study_levels.size(); ++i)
      ls += (i ? "," : "") + std::to_string(cfg.study_levels[i]);
    add("levels", ls);
  }
  if (cfg.study_tau_coeff > 0.0) add("tau_coeff", fmt_full(cfg.study_tau_coeff));
  return s;
}

// --- CSV emitters ------------------------------------------------------------

inline void emit_step_csv(const std::vector<StepRecord>& records, std::ostream& os) {
  os << "m,t,energy,mass,phi_min,phi_max,cycles,residual,energy_defect\n";
  for (const auto& r : records) {
    os << r.m << ',' << fmt_full(r.t) << ',' << fmt_full(r.energy) << ',' << fmt_full(r.mass)
       << ',' << fmt_full(r.phi_min) << ',' << fmt_full(r.phi_max) << ',' << r.cycles << ','
       << fmt_full(r.residual) << ',' << fmt_full(r.energy_defect) << '\n';
  }
}

// Mirrors the refinement-table layout: h (or h_c,h_f), then error and rate
// per field; rate cells are blank on the first row. Metadata rides in '#'
// comment lines.
inline void emit_study_table(const std::vector<StudyRow>& rows, bool cauchy, std::ostream& os,
                             const std::string& metadata = "") {
  if (!metadata.empty()) {
    std::stringstream ms(metadata);
    std::string line;
    while (std::getline(ms, line)) os << "# " << line << '\n';
  }
  const char* field = cauchy ? "delta" : "e";
  if (cauchy) os << "h_c,h_f";
  else os << "h";
  os << ',' << field << "_phi,rate_phi," << field << "_mu,rate_mu," << field << "_p,rate_p\n";
  for (const auto& r : rows) {
    if (cauchy) os << fmt_full(r.h) << ',' << fmt_full(r.h_fine);
    else os << fmt_full(r.h);
    const auto rate = [&](double v) { return r.has_rate ? fmt_full(v) : std::string(); };
    os << ',' << fmt_full(r.e_phi) << ',' << rate(r.rate_phi) << ',' << fmt_full(r.e_mu) << ','
       << rate(r.rate_mu) << ',' << fmt_full(r.e_p) << ',' << rate(r.rate_p) << '\n';
  }
}

}  // namespace dch
