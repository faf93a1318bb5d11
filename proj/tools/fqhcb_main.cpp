// fqhcb: Coulomb-blockade conductance of FQH islands from the edge CFT.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fqhcb/analysis.hpp"
#include "fqhcb/cli/report_io.hpp"
#include "fqhcb/cli/run_config.hpp"
#include "fqhcb/cli/selftest.hpp"
#include "fqhcb/version.hpp"

namespace {

using namespace fqhcb;
using namespace fqhcb::cli;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string preset, csv, json, svg;
  double t = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_file, "key = value configuration file");
    cmd->add_option("-s,--set", overrides, "override a configuration key (key=value)");
    cmd->add_option("--state", preset, "state preset: rr-z3 | laughlin:<d_H>");
    cmd->add_option("--t", t, "reduced temperature T/T0");
    cmd->add_option("--csv", csv, "trace CSV output path");
    cmd->add_option("--json", json, "peak report JSON output path");
    cmd->add_option("--svg", svg, "SVG plot output path");
  }

  KeyValues collect() const {
    KeyValues kv;
    if (!config_file.empty()) kv = read_config_file(config_file);
    if (!preset.empty()) kv["state"] = preset;
    if (t != 0.0) {
      std::ostringstream os;
      os.precision(17);
      os << t;
      kv["t"] = os.str();
    }
    if (!csv.empty()) kv["csv"] = csv;
    if (!json.empty()) kv["json"] = json;
    if (!svg.empty()) kv["svg"] = svg;
    for (const auto& o : overrides) kv.insert_or_assign(parse_override(o).first, parse_override(o).second);
    return kv;
  }
};

/// Resolves the configuration; model and domain errors at this stage are
/// configuration errors.
RunConfig load_config(const ConfigArgs& args) {
  try {
    return resolve_config(args.collect());
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

unsigned workers_of(const RunConfig& cfg) { return cfg.workers ? cfg.workers : default_workers(); }

int run_sweep(const ConfigArgs& args) {
  const RunConfig cfg = load_config(args);
  const FQHState state = make_config_state(cfg);
  const Sector sector = config_sector(cfg, state);
  const auto trace = sweep_flux(state, sector, cfg.params, cfg.phi_min, cfg.phi_max, cfg.n_points,
                                workers_of(cfg));
  const auto report = find_peaks(trace, {cfg.threshold_fraction});

  std::ostringstream csv;
  write_trace_csv(csv, trace);
  write_text_file(cfg.csv_path, csv.str());

  json out = metadata_json(cfg);
  out["state"] = state_json(state, sector);
  out["report"] = report_json(report, state);
  write_text_file(cfg.json_path, out.dump(2) + "\n");
  if (!cfg.svg_path.empty()) write_text_file(cfg.svg_path, trace_svg(trace, report));

  std::cout << state.name << ": t = " << cfg.params.t << ", " << report.peaks.size() << " peaks";
  if (out["report"]["classification"].is_object()) {
    const auto& c = out["report"]["classification"];
    std::cout << ", bunch " << c["bunch_size"] << ", within " << c["within_spacing"] << ", between "
              << c["between_spacing"] << ", period " << c["period"];
  }
  std::cout << "\nwrote " << cfg.csv_path << ", " << cfg.json_path
            << (cfg.svg_path.empty() ? "" : ", " + cfg.svg_path) << "\n";
  return 0;
}

int run_scan(const ConfigArgs& args) {
  const KeyValues kv = args.collect();
  const RunConfig cfg = load_config(args);
  const FQHState state = make_config_state(cfg);
  const Sector sector = config_sector(cfg, state);
  const bool write_csv = kv.count("csv") > 0;
  const std::filesystem::path csv_path(cfg.csv_path);

  json out = metadata_json(cfg);
  out["state"] = state_json(state, sector);
  out["reports"] = json::array();
  for (std::size_t i = 0; i < cfg.t_list.size(); ++i) {
    ThermoParams p = cfg.params;
    p.t = cfg.t_list[i];
    const auto trace = sweep_flux(state, sector, p, cfg.phi_min, cfg.phi_max, cfg.n_points, workers_of(cfg));
    const auto report = find_peaks(trace, {cfg.threshold_fraction});
    out["reports"].push_back(report_json(report, state));
    if (write_csv) {
      auto path = csv_path.parent_path() /
                  (csv_path.stem().string() + "_t" + std::to_string(i) + csv_path.extension().string());
      std::ostringstream csv;
      write_trace_csv(csv, trace);
      write_text_file(path.string(), csv.str());
    }
    std::cout << "t = " << p.t << ": " << report.peaks.size() << " peaks\n";
  }
  write_text_file(cfg.json_path, out.dump(2) + "\n");
  std::cout << "wrote " << cfg.json_path << "\n";
  return 0;
}

int run_describe(const ConfigArgs& args, bool as_json) {
  const RunConfig cfg = load_config(args);
  const FQHState state = make_config_state(cfg);
  const Sector sector = config_sector(cfg, state);
  const auto parts = decompose_sector(state, sector);
  const auto& model = state.neutral;
  const std::int64_t m = state.filling.m();

  if (as_json) {
    json rows = json::array();
    for (std::size_t s = 0; s < parts.size(); ++s) {
      const auto& p = parts[s];
      rows.push_back({{"s", s},
                      {"l", display_charge(p.l, m)},
                      {"neutral", model.label(p.neutral)},
                      {"weight", to_string(model.weight(p.neutral))},
                      {"monodromy_charge", to_string(monodromy_charge(model, p.neutral))},
                      {"admissible", pairing_admissible(state, p.l, p.neutral)}});
    }
    json out = state_json(state, sector);
    out["m"] = m;
    out["neutral_central_charge"] = to_string(model.central_charge());
    out["pairing_sign"] = model.pairing_sign();
    out["decomposition"] = rows;
    out["diagnostics"] = validate_state(state);
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  std::cout << "state            " << state.name << "\n"
            << "filling          nu = " << to_string(state.filling.nu()) << " (n_H = " << state.filling.n_H
            << ", d_H = " << state.filling.d_H << ", m = " << m << ")\n"
            << "neutral model    " << model.name() << ", c0 = " << to_string(model.central_charge())
            << ", omega = " << model.label(model.omega()) << "\n"
            << "electron         Delta_el = " << to_string(electron_dimension(state))
            << ", statistics 2*Delta_el = " << to_string(2 * electron_dimension(state)) << "\n"
            << "pairing rule     n_H Q_omega(Lambda) = " << (model.pairing_sign() < 0 ? "-" : "")
            << "l mod n_H\n\n";
  std::cout << "Z_{" << sector.l << "," << model.label(sector.neutral) << "} = sum over s of K_l(tau, "
            << state.filling.n_H << " zeta; " << m << ") ch_Lambda(tau)\n\n";
  std::printf("  s  %6s  %-8s %-8s %-10s %s\n", "l", "Lambda", "Delta", "Q_omega", "admissible");
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const auto& p = parts[s];
    std::printf("  %zu  %6lld  %-8s %-8s %-10s %s\n", s, static_cast<long long>(display_charge(p.l, m)),
                model.label(p.neutral).c_str(), to_string(model.weight(p.neutral)).c_str(),
                to_string(monodromy_charge(model, p.neutral)).c_str(),
                pairing_admissible(state, p.l, p.neutral) ? "yes" : "no");
  }
  return 0;
}

int run_selftest_cmd(bool inject_fault) {
  SelftestOptions opts;
  opts.corrupt_cz_sign = inject_fault;
  return print_selftest(std::cout, run_selftest(opts)) ? 0 : 1;
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << error_json(kind, message, code) << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coulomb-blockade conductance of fractional quantum Hall islands"};
  app.set_version_flag("--version", std::string(fqhcb::kVersion));
  app.require_subcommand(1);

  ConfigArgs sweep_args, scan_args, describe_args;
  auto* sweep = app.add_subcommand("sweep", "flux sweep of G_is with peak report");
  sweep_args.attach(sweep);
  auto* scan = app.add_subcommand("scan-temperature", "flux sweeps over a list of temperatures (key t_list)");
  scan_args.attach(scan);
  auto* describe = app.add_subcommand("describe-state", "print the sector decomposition of the partition function");
  describe_args.attach(describe);
  bool describe_json = false;
  describe->add_flag("--as-json", describe_json, "emit JSON instead of a table");
  auto* selftest = app.add_subcommand("selftest", "run the built-in invariant suite");
  bool inject_fault = false;
  selftest->add_flag("--inject-cz-sign-fault", inject_fault, "flip the CZ exponent sign (fault injection)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("config", e.what(), kExitConfig);
  }

  try {
    if (*sweep) return run_sweep(sweep_args);
    if (*scan) return run_scan(scan_args);
    if (*describe) return run_describe(describe_args, describe_json);
    if (*selftest) return run_selftest_cmd(inject_fault);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kExitConfig);
  } catch (const IoError& e) {
    return fail("io", e.what(), kExitIo);
  } catch (const GuardViolation& e) {
    return fail("numerical", e.what(), kExitNumeric);
  } catch (const DomainError& e) {
    return fail("numerical", e.what(), kExitNumeric);
  } catch (const ModelError& e) {
    return fail("numerical", e.what(), kExitNumeric);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
