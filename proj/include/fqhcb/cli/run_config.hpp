#pragma once

// Flat key = value run configuration with command-line overrides.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fqhcb/analysis.hpp"
#include "fqhcb/edge_cft.hpp"
#include "fqhcb/errors.hpp"
#include "fqhcb/thermo.hpp"

namespace fqhcb::cli {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
inline KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

/// "key=value" override from the command line.
inline std::pair<std::string, std::string> parse_override(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + arg + "' is not key=value");
  return {trim(arg.substr(0, eq)), trim(arg.substr(eq + 1))};
}

struct RunConfig {
  std::string preset = "rr-z3";
  std::optional<FillingFactor> explicit_filling;
  std::string neutral_model;
  std::int64_t sector_l = 0;
  std::string sector_neutral = "vac";

  ThermoParams params;
  std::vector<double> t_list;
  double phi_min = 0.0;
  double phi_max = 0.0;
  std::size_t n_points = 0;
  double threshold_fraction = 0.1;
  unsigned workers = 0;  // 0: environment / hardware default

  std::string csv_path;
  std::string json_path;
  std::string svg_path;

  /// Every key with its effective value, defaults included.
  KeyValues resolved;
};

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "state", "n_H", "d_H", "neutral_model", "sector_l", "sector_neutral", "t", "t_list",
      "mu_red", "phi_min", "phi_max", "n_points", "include_cz", "include_eta", "t_min", "t_max",
      "max_character_level", "fd_step", "threshold_fraction", "workers", "csv", "json", "svg"};
  return keys;
}

namespace detail {

inline double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  }
}

inline std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_real(key, trim(item)));
  if (out.empty()) throw ConfigError("key '" + key + "' is empty");
  return out;
}

inline std::string format_real(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace detail

/// Builds the state named by the configuration.
inline FQHState make_config_state(const RunConfig& cfg) {
  if (cfg.explicit_filling) {
    const auto& f = *cfg.explicit_filling;
    return make_state("n_H=" + std::to_string(f.n_H) + ",d_H=" + std::to_string(f.d_H) + "," +
                          cfg.neutral_model,
                      f, cfg.neutral_model);
  }
  return make_preset(cfg.preset);
}

/// Resolves a key/value map against the defaults. The state-dependent flux
/// window defaults to three full periods (3 d_H) at step 1e-3.
inline RunConfig resolve_config(const KeyValues& kv) {
  using namespace detail;
  for (const auto& [k, v] : kv) {
    if (std::find(known_keys().begin(), known_keys().end(), k) == known_keys().end()) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  auto get = [&](const std::string& k) -> std::optional<std::string> {
    if (auto it = kv.find(k); it != kv.end()) return it->second;
    return std::nullopt;
  };

  RunConfig cfg;
  if (auto v = get("state")) cfg.preset = *v;
  const bool has_n = get("n_H").has_value(), has_d = get("d_H").has_value();
  if (has_n != has_d) throw ConfigError("n_H and d_H must be given together");
  if (has_n) {
    cfg.explicit_filling = FillingFactor{to_int("n_H", *get("n_H")), to_int("d_H", *get("d_H"))};
    if (cfg.explicit_filling->n_H <= 0 || cfg.explicit_filling->d_H <= 0) {
      throw ConfigError("n_H and d_H must be positive");
    }
    cfg.neutral_model = get("neutral_model").value_or("trivial");
  } else if (get("neutral_model")) {
    throw ConfigError("neutral_model requires explicit n_H and d_H");
  }
  const FQHState state = make_config_state(cfg);
  if (const auto diag = validate_state(state); !diag.empty()) {
    std::string msg = "state '" + state.name + "' is inconsistent:";
    for (const auto& d : diag) msg += " [" + d + "]";
    throw ConfigError(msg);
  }

  if (auto v = get("sector_l")) cfg.sector_l = to_int("sector_l", *v);
  if (auto v = get("sector_neutral")) cfg.sector_neutral = *v;
  const std::size_t neutral = state.neutral.index_of(cfg.sector_neutral);
  if (!pairing_admissible(state, cfg.sector_l, neutral)) {
    throw ConfigError("sector (" + std::to_string(cfg.sector_l) + ", " + cfg.sector_neutral +
                      ") violates the pairing rule");
  }

  if (auto v = get("t")) cfg.params.t = to_real("t", *v);
  if (auto v = get("t_list")) {
    cfg.t_list = to_list("t_list", *v);
  } else {
    cfg.t_list = {cfg.params.t};
  }
  if (auto v = get("mu_red")) cfg.params.mu_red = to_real("mu_red", *v);
  if (auto v = get("include_cz")) cfg.params.include_cz = to_bool("include_cz", *v);
  if (auto v = get("include_eta")) cfg.params.include_eta = to_bool("include_eta", *v);
  if (auto v = get("t_min")) cfg.params.t_min = to_real("t_min", *v);
  if (auto v = get("t_max")) cfg.params.t_max = to_real("t_max", *v);
  if (auto v = get("max_character_level")) {
    cfg.params.max_character_level = to_int("max_character_level", *v);
    if (cfg.params.max_character_level < 0 || cfg.params.max_character_level > kCharacterCacheLevel) {
      throw ConfigError("max_character_level must lie in [0, " + std::to_string(kCharacterCacheLevel) + "]");
    }
  }
  if (auto v = get("fd_step")) cfg.params.fd_step = to_real("fd_step", *v);
  if (!(cfg.params.fd_step > 0.0)) throw ConfigError("fd_step must be positive");

  const double period = static_cast<double>(state.filling.d_H);
  cfg.phi_min = get("phi_min") ? to_real("phi_min", *get("phi_min")) : 0.0;
  cfg.phi_max = get("phi_max") ? to_real("phi_max", *get("phi_max")) : cfg.phi_min + 3.0 * period;
  if (!(cfg.phi_max > cfg.phi_min)) throw ConfigError("phi_max must exceed phi_min");
  if (auto v = get("n_points")) {
    const auto n = to_int("n_points", *v);
    if (n < 2) throw ConfigError("n_points must be >= 2");
    cfg.n_points = static_cast<std::size_t>(n);
  } else {
    cfg.n_points = static_cast<std::size_t>(std::llround((cfg.phi_max - cfg.phi_min) / 1e-3)) + 1;
  }
  if (auto v = get("threshold_fraction")) cfg.threshold_fraction = to_real("threshold_fraction", *v);
  if (!(cfg.threshold_fraction > 0.0 && cfg.threshold_fraction < 1.0)) {
    throw ConfigError("threshold_fraction must lie in (0, 1)");
  }
  if (auto v = get("workers")) {
    const auto w = to_int("workers", *v);
    if (w < 0) throw ConfigError("workers must be >= 0");
    cfg.workers = static_cast<unsigned>(w);
  }
  cfg.csv_path = get("csv").value_or("trace.csv");
  cfg.json_path = get("json").value_or("peaks.json");
  cfg.svg_path = get("svg").value_or("");

  for (double t : cfg.t_list) {
    ThermoParams p = cfg.params;
    p.t = t;
    check_params(p);
  }

  std::string t_list;
  for (std::size_t i = 0; i < cfg.t_list.size(); ++i) {
    t_list += (i ? "," : "") + format_real(cfg.t_list[i]);
  }
  cfg.resolved = {
      {"state", state.name},
      {"n_H", std::to_string(state.filling.n_H)},
      {"d_H", std::to_string(state.filling.d_H)},
      {"neutral_model", state.neutral.name()},
      {"sector_l", std::to_string(cfg.sector_l)},
      {"sector_neutral", cfg.sector_neutral},
      {"t", format_real(cfg.params.t)},
      {"t_list", t_list},
      {"mu_red", format_real(cfg.params.mu_red)},
      {"phi_min", format_real(cfg.phi_min)},
      {"phi_max", format_real(cfg.phi_max)},
      {"n_points", std::to_string(cfg.n_points)},
      {"include_cz", cfg.params.include_cz ? "true" : "false"},
      {"include_eta", cfg.params.include_eta ? "true" : "false"},
      {"t_min", format_real(cfg.params.t_min)},
      {"t_max", format_real(cfg.params.t_max)},
      {"max_character_level", std::to_string(cfg.params.max_character_level)},
      {"fd_step", format_real(cfg.params.fd_step)},
      {"threshold_fraction", format_real(cfg.threshold_fraction)},
      {"workers", std::to_string(cfg.workers)},
      {"csv", cfg.csv_path},
      {"json", cfg.json_path},
      {"svg", cfg.svg_path},
  };
  return cfg;
}

inline Sector config_sector(const RunConfig& cfg, const FQHState& state) {
  return {cfg.sector_l, state.neutral.index_of(cfg.sector_neutral)};
}

}  // namespace fqhcb::cli
