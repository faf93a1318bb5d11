#pragma once

// CSV / JSON / SVG serialisation of traces and peak reports. All numbers are
// rounded to 12 significant digits so outputs diff cleanly across platforms.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fqhcb/analysis.hpp"
#include "fqhcb/cli/run_config.hpp"
#include "fqhcb/version.hpp"

namespace fqhcb::cli {

using nlohmann::json;

/// Failure writing an output artefact.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// x in fixed 12-significant-digit scientific notation.
inline std::string sci12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.11e", x);
  return buf;
}

/// x rounded to 12 significant digits.
inline double round12(double x) { return std::strtod(sci12(x).c_str(), nullptr); }

inline void write_trace_csv(std::ostream& out, const ConductanceTrace& trace) {
  out << "phi,g\n";
  for (std::size_t i = 0; i < trace.phi.size(); ++i) {
    out << sci12(trace.phi[i]) << ',' << sci12(trace.g[i]) << '\n';
  }
}

/// Spacings between consecutive (already rounded) positions, rounded again.
inline std::vector<double> spacings_from_positions(const std::vector<double>& positions) {
  std::vector<double> out;
  for (std::size_t i = 1; i < positions.size(); ++i) out.push_back(round12(positions[i] - positions[i - 1]));
  return out;
}

inline json classification_json(const PeriodClassification& c) {
  return {{"bunch_size", c.bunch_size},
          {"within_spacing", round12(c.within_spacing)},
          {"between_spacing", round12(c.between_spacing)},
          {"period", round12(c.period)},
          {"single_period", c.single_period},
          {"expected_bunch_size", c.expected_bunch_size},
          {"expected_period", c.expected_period},
          {"bunch_size_matches", c.bunch_size == c.expected_bunch_size}};
}

/// Peak list, spacings and classification of one report. Spacings are
/// recomputed from the rounded positions so a reader can reproduce them
/// exactly.
inline json report_json(const PeakReport& report, const FQHState& state) {
  json peaks = json::array();
  std::vector<double> positions;
  for (const Peak& p : report.peaks) {
    positions.push_back(round12(p.position));
    peaks.push_back({{"position", positions.back()},
                     {"height", round12(p.height)},
                     {"fwhm", round12(p.fwhm)}});
  }
  json out{{"t", round12(report.t)},
           {"baseline", round12(report.baseline)},
           {"threshold", round12(report.threshold)},
           {"peaks", peaks},
           {"spacings", spacings_from_positions(positions)}};
  try {
    out["classification"] = classification_json(classify_periods(report, state));
  } catch (const DomainError& e) {
    out["classification"] = nullptr;
    out["classification_note"] = e.what();
  }
  return out;
}

inline json state_json(const FQHState& state, const Sector& sector) {
  return {{"name", state.name},
          {"n_H", state.filling.n_H},
          {"d_H", state.filling.d_H},
          {"nu", to_string(state.filling.nu())},
          {"neutral_model", state.neutral.name()},
          {"electron_dimension", to_string(electron_dimension(state))},
          {"sector", {{"l", sector.l}, {"neutral", state.neutral.label(sector.neutral)}}}};
}

inline json metadata_json(const RunConfig& cfg) {
  json config = json::object();
  for (const auto& [k, v] : cfg.resolved) config[k] = v;
  return {{"tool", "fqhcb"},
          {"version", kVersion},
          {"config", config},
          {"grid", {{"phi_min", round12(cfg.phi_min)},
                    {"phi_max", round12(cfg.phi_max)},
                    {"n_points", cfg.n_points},
                    {"step", round12((cfg.phi_max - cfg.phi_min) / static_cast<double>(cfg.n_points - 1))}}}};
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

/// Static line plot of g versus phi with detected peaks marked.
inline std::string trace_svg(const ConductanceTrace& trace, const PeakReport& report) {
  constexpr double W = 800, H = 400, ml = 60, mr = 20, mt = 20, mb = 50;
  const auto [gmin_it, gmax_it] = std::minmax_element(trace.g.begin(), trace.g.end());
  double gmin = *gmin_it, gmax = *gmax_it;
  if (gmax - gmin <= 0.0) gmax = gmin + 1.0;
  const double xmin = trace.phi.front(), xmax = trace.phi.back();
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto sy = [&](double y) { return H - mb - (y - gmin) / (gmax - gmin) * (H - mt - mb); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double x = xmin + (xmax - xmin) * i / 5.0;
    const double y = gmin + (gmax - gmin) * i / 5.0;
    os << "<text x=\"" << num(sx(x)) << "\" y=\"" << H - mb + 18 << "\" font-size=\"12\" text-anchor=\"middle\">"
       << num(x) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << num(sy(y) + 4) << "\" font-size=\"12\" text-anchor=\"end\">"
       << num(y) << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 8
     << "\" font-size=\"14\" text-anchor=\"middle\">flux (quanta)</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2 << "\" font-size=\"14\" transform=\"rotate(-90 16 "
     << (mt + H - mb) / 2 << ")\" text-anchor=\"middle\">G_is (e^2/h)</text>\n";

  const std::size_t stride = std::max<std::size_t>(1, trace.phi.size() / 4000);
  os << "<path fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.2\" d=\"";
  for (std::size_t i = 0; i < trace.phi.size(); i += stride) {
    os << (i == 0 ? 'M' : 'L') << num(sx(trace.phi[i])) << ',' << num(sy(trace.g[i])) << ' ';
  }
  os << "\"/>\n";
  for (const Peak& p : report.peaks) {
    os << "<circle cx=\"" << num(sx(p.position)) << "\" cy=\"" << num(sy(p.height))
       << "\" r=\"3\" fill=\"crimson\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Single-line machine-readable error record.
inline std::string error_json(const std::string& kind, const std::string& message, int exit_code) {
  return json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", exit_code}}}}.dump();
}

}  // namespace fqhcb::cli
