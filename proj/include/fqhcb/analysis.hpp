#pragma once

// Flux sweeps of the island conductance and quantification of the resulting
// Coulomb-blockade peak pattern.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fqhcb/edge_cft.hpp"
#include "fqhcb/errors.hpp"
#include "fqhcb/thermo.hpp"

namespace fqhcb {

/// Environment variable holding the sweep worker count.
inline constexpr const char* kWorkersEnv = "FQHCB_WORKERS";

inline unsigned default_workers() {
  if (const char* env = std::getenv(kWorkersEnv)) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct ConductanceTrace {
  std::string state;
  Sector sector;
  ThermoParams params;  // phi unused
  std::vector<double> phi;
  std::vector<double> g;

  double step() const { return phi.size() > 1 ? phi[1] - phi[0] : 0.0; }
};

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  if (n < 2) throw DomainError("flux grid needs at least 2 points");
  if (!(hi > lo)) throw DomainError("flux grid needs phi_max > phi_min");
  std::vector<double> grid(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + h * static_cast<double>(i);
  return grid;
}

/// g(phi) on a uniform grid, evaluated with `workers` threads.
inline ConductanceTrace sweep_flux(const FQHState& state, const Sector& sector,
                                   const ThermoParams& base, double phi_min, double phi_max,
                                   std::size_t n_points, unsigned workers = default_workers()) {
  ConductanceTrace trace{state.name, sector, base, uniform_grid(phi_min, phi_max, n_points), {}};
  trace.g.assign(n_points, 0.0);
  check_params(base);

  std::mutex error_mutex;
  std::optional<std::size_t> failed;
  std::string failure;
  auto work = [&](std::size_t begin, std::size_t end) {
    ThermoParams p = base;
    for (std::size_t i = begin; i < end; ++i) {
      p.phi = trace.phi[i];
      try {
        trace.g[i] = conductance_flux(state, sector, p);
        if (!std::isfinite(trace.g[i])) throw GuardViolation("non-finite conductance");
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!failed || i < *failed) {
          failed = i;
          failure = e.what();
        }
        return;
      }
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_points)));
  if (workers == 1) {
    work(0, n_points);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n_points + workers - 1) / workers;
    for (std::size_t begin = 0; begin < n_points; begin += chunk) {
      pool.emplace_back(work, begin, std::min(n_points, begin + chunk));
    }
  }
  if (failed) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "sweep failed at phi = " << trace.phi[*failed] << ": " << failure;
    throw GuardViolation(msg.str());
  }
  return trace;
}

struct Peak {
  double position = 0.0;
  double height = 0.0;
  double fwhm = 0.0;
};

struct PeriodClassification {
  int bunch_size = 0;
  double within_spacing = 0.0;
  double between_spacing = 0.0;
  /// (bunch_size - 1) * within + between.
  double period = 0.0;
  bool single_period = false;
  std::int64_t expected_bunch_size = 0;  // n_H
  std::int64_t expected_period = 0;      // d_H
  std::vector<bool> is_between;          // per spacing
};

struct PeakReport {
  double t = 0.0;
  double baseline = 0.0;
  double threshold = 0.0;
  std::vector<Peak> peaks;
  std::vector<double> spacings;
  std::optional<PeriodClassification> classification;
};

struct PeakOptions {
  /// Detection floor: baseline + fraction * (max - baseline).
  double threshold_fraction = 0.1;
};

/// Local maxima above the noise floor, refined by a three-point parabola,
/// with FWHM measured from the trace baseline. Peaks whose half-height
/// crossing is not inside the grid are dropped.
inline PeakReport find_peaks(const ConductanceTrace& trace, const PeakOptions& opts = {}) {
  const auto& x = trace.phi;
  const auto& g = trace.g;
  if (g.size() < 3 || x.size() != g.size()) throw DomainError("find_peaks: need at least 3 points");
  PeakReport report;
  report.t = trace.params.t;
  const auto [lo_it, hi_it] = std::minmax_element(g.begin(), g.end());
  report.baseline = *lo_it;
  const double range = *hi_it - *lo_it;
  report.threshold = report.baseline + opts.threshold_fraction * range;
  if (!(range > 0.0)) return report;

  const double h = trace.step();
  const std::size_t n = g.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(g[i] > g[i - 1] && g[i] >= g[i + 1] && g[i] > report.threshold)) continue;
    const double curv = g[i - 1] - 2.0 * g[i] + g[i + 1];
    double delta = curv != 0.0 ? 0.5 * (g[i - 1] - g[i + 1]) / curv : 0.0;
    delta = std::clamp(delta, -1.0, 1.0);
    Peak peak;
    peak.position = x[i] + delta * h;
    peak.height = g[i] - 0.25 * (g[i - 1] - g[i + 1]) * delta;
    const double half = report.baseline + 0.5 * (peak.height - report.baseline);

    std::size_t j = i;
    while (j > 0 && g[j] >= half) --j;
    if (g[j] >= half) continue;
    const double left = x[j] + (half - g[j]) / (g[j + 1] - g[j]) * h;
    std::size_t k = i;
    while (k + 1 < n && g[k] >= half) ++k;
    if (g[k] >= half) continue;
    const double right = x[k - 1] + (half - g[k - 1]) / (g[k] - g[k - 1]) * h;
    peak.fwhm = right - left;
    report.peaks.push_back(peak);
  }
  for (std::size_t i = 1; i < report.peaks.size(); ++i) {
    report.spacings.push_back(report.peaks[i].position - report.peaks[i - 1].position);
  }
  return report;
}

/// Splits the peak spacings into a small (within-bunch) and a large
/// (between-bunch) group by two-means clustering seeded with the extremes.
/// Spacings that agree to within `equal_tol` (relative) form a single-period
/// pattern with bunch size 1.
inline PeriodClassification classify_periods(const PeakReport& report, const FQHState& state,
                                             double equal_tol = 0.05) {
  const auto n_h = state.filling.n_H;
  if (static_cast<std::int64_t>(report.peaks.size()) < n_h + 1) {
    throw DomainError("classify_periods: need at least n_H + 1 = " + std::to_string(n_h + 1) +
                      " peaks, got " + std::to_string(report.peaks.size()));
  }
  const auto& s = report.spacings;
  PeriodClassification c;
  c.expected_bunch_size = n_h;
  c.expected_period = state.filling.d_H;
  c.is_between.assign(s.size(), false);

  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  if (*mx - *mn <= equal_tol * *mx) {
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    c.single_period = true;
    c.bunch_size = 1;
    c.within_spacing = mean;
    c.between_spacing = mean;
    c.period = mean;
    c.is_between.assign(s.size(), true);
    return c;
  }

  double lo = *mn, hi = *mx;
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<bool> next(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) next[i] = std::abs(s[i] - lo) > std::abs(s[i] - hi);
    double sum_lo = 0.0, sum_hi = 0.0;
    int n_lo = 0, n_hi = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      (next[i] ? sum_hi : sum_lo) += s[i];
      ++(next[i] ? n_hi : n_lo);
    }
    lo = sum_lo / n_lo;
    hi = sum_hi / n_hi;
    const bool stable = next == c.is_between;
    c.is_between = std::move(next);
    if (stable && iter > 0) break;
  }
  c.within_spacing = lo;
  c.between_spacing = hi;

  // Bunch size from runs of within-spacings enclosed by between-spacings;
  // if no run is enclosed, fall back to the longest run.
  std::map<int, int> interior_runs;
  int longest = 0, run = 0;
  bool seen_between = false;
  for (bool between : c.is_between) {
    if (between) {
      if (seen_between) ++interior_runs[run];
      seen_between = true;
      longest = std::max(longest, run);
      run = 0;
    } else {
      ++run;
    }
  }
  longest = std::max(longest, run);
  int bunch_run = longest;
  if (!interior_runs.empty()) {
    bunch_run = std::max_element(interior_runs.begin(), interior_runs.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; })
                    ->first;
  }
  c.bunch_size = bunch_run + 1;
  c.period = (c.bunch_size - 1) * c.within_spacing + c.between_spacing;
  return c;
}

/// One sweep and peak report per temperature over the same flux window.
inline std::vector<PeakReport> temperature_scan(const FQHState& state, const Sector& sector,
                                                const std::vector<double>& t_values,
                                                const ThermoParams& base, double phi_min,
                                                double phi_max, std::size_t n_points,
                                                unsigned workers = default_workers()) {
  for (double t : t_values) {
    ThermoParams p = base;
    p.t = t;
    check_params(p);
  }
  std::vector<PeakReport> out;
  for (double t : t_values) {
    ThermoParams p = base;
    p.t = t;
    out.push_back(find_peaks(sweep_flux(state, sector, p, phi_min, phi_max, n_points, workers)));
  }
  return out;
}

/// Peak closest to phi_center, if any.
inline std::optional<Peak> central_peak(const PeakReport& report, double phi_center) {
  std::optional<Peak> best;
  for (const Peak& p : report.peaks) {
    if (!best || std::abs(p.position - phi_center) < std::abs(best->position - phi_center)) best = p;
  }
  return best;
}

}  // namespace fqhcb
