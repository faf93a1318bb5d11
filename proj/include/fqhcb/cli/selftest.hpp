#pragma once

// Built-in invariant suite behind `fqhcb selftest`.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "fqhcb/analysis.hpp"
#include "fqhcb/edge_cft.hpp"
#include "fqhcb/qseries.hpp"
#include "fqhcb/thermo.hpp"

namespace fqhcb::cli {

struct SelftestOptions {
  /// Flips the sign of the Cappelli-Zemba exponent (fault injection).
  bool corrupt_cz_sign = false;
  unsigned seed = 20240607;
};

struct SelftestItem {
  std::string name;
  bool passed = false;
  std::size_t checks = 0;
  double tolerance = 0.0;
  double worst = 0.0;  // worst observed deviation
  std::string detail;
};

namespace detail {

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

struct Probe {
  FQHState state;
  Sector sector;
};

inline std::vector<Probe> probes() {
  return {{make_preset("rr-z3"), {0, 0}}, {make_preset("laughlin:3"), {0, 0}}};
}

}  // namespace detail

inline std::vector<SelftestItem> run_selftest(const SelftestOptions& opts = {}) {
  using detail::rel_diff;
  std::vector<SelftestItem> items;
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> t_dist(0.3, 2.0), mu_dist(-2.0, 2.0), phi_dist(0.0, 5.0);
  ThermoParams base;
  base.cz_sign = opts.corrupt_cz_sign ? -1.0 : 1.0;
  const auto probes = detail::probes();

  {
    SelftestItem it{"route equivalence: flux vs Einstein", true, 0, 1e-9};
    SelftestItem fd{"route equivalence: flux vs finite differences", true, 0, 1e-6};
    for (const auto& pr : probes) {
      for (int i = 0; i < 20; ++i) {
        ThermoParams p = base;
        p.t = t_dist(rng);
        p.mu_red = mu_dist(rng);
        p.phi = phi_dist(rng);
        const auto ev = log_Z(pr.state, pr.sector, p);
        const double gf = conductance_flux(ev, p);
        it.worst = std::max(it.worst, rel_diff(gf, conductance_einstein(ev, p)));
        fd.worst = std::max(fd.worst, rel_diff(gf, conductance_fd(pr.state, pr.sector, p, 1e-3).g));
        it.checks += 1;
        fd.checks += 1;
      }
    }
    it.passed = it.worst <= it.tolerance;
    fd.passed = fd.worst <= fd.tolerance;
    items.push_back(it);
    items.push_back(fd);
  }

  auto grid_item = [&](SelftestItem it, const std::function<double(const detail::Probe&, double, double)>& dev) {
    for (const auto& pr : probes) {
      ThermoParams p = base;
      for (int i = 0; i <= 40; ++i) {
        p.phi = -2.0 + 0.173 * i;
        it.worst = std::max(it.worst, dev(pr, p.phi, p.t));
        ++it.checks;
      }
    }
    it.passed = it.worst <= it.tolerance;
    items.push_back(it);
  };

  auto g_at = [&](const detail::Probe& pr, double phi, bool cz) {
    ThermoParams p = base;
    p.phi = phi;
    p.include_cz = cz;
    return conductance_flux(pr.state, pr.sector, p);
  };
  const double g_scale = kPiSquared / (4.0 * base.t);  // two-state peak height

  grid_item({"flux periodicity g(phi + d_H) = g(phi)", true, 0, 1e-9},
            [&](const detail::Probe& pr, double phi, double) {
              const double d = static_cast<double>(pr.state.filling.d_H);
              return std::abs(g_at(pr, phi + d, true) - g_at(pr, phi, true)) / g_scale;
            });
  grid_item({"reflection g(phi) = g(-phi) at mu = 0", true, 0, 1e-9},
            [&](const detail::Probe& pr, double phi, double) {
              return std::abs(g_at(pr, phi, true) - g_at(pr, -phi, true)) / g_scale;
            });
  grid_item({"staircase <Q>(phi + d_H) - <Q>(phi) = n_H", true, 0, 1e-8},
            [&](const detail::Probe& pr, double phi, double) {
              ThermoParams p = base;
              p.phi = phi;
              const double q0 = mean_charge(pr.state, pr.sector, p);
              p.phi = phi + static_cast<double>(pr.state.filling.d_H);
              const double q1 = mean_charge(pr.state, pr.sector, p);
              return std::abs(q1 - q0 - static_cast<double>(pr.state.filling.n_H));
            });

  {
    // g >= 0 without CZ; with CZ the bound -nu_H/2 must hold and be reached
    // in the blockade valleys.
    SelftestItem it{"positivity: g >= 0, g + nu_H/2 >= 0 (sharp)", true, 0, 1e-9};
    for (const auto& pr : probes) {
      const double half_nu = 0.5 * to_double(pr.state.filling.nu());
      double lowest = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= 400; ++i) {
        const double phi = 0.0125 * i;
        const double off = g_at(pr, phi, false);
        const double on = g_at(pr, phi, true) + half_nu;
        it.worst = std::max({it.worst, -off, -on});
        lowest = std::min(lowest, on);
        it.checks += 2;
      }
      it.worst = std::max(it.worst, lowest);
    }
    it.passed = it.worst <= it.tolerance;
    items.push_back(it);
  }

  {
    SelftestItem it{"Z3 characters: [1,0,1,2], ch01 = ch02, non-negative integers", true, 0, 0.0};
    const auto model = build_z3_parafermion_model();
    const auto ch0 = model.character(0, Rational(12));
    const auto ch1 = model.character(1, Rational(12));
    const auto ch2 = model.character(2, Rational(12));
    const std::int64_t expect[] = {1, 0, 1, 2};
    for (int k = 0; k < 4; ++k) {
      it.passed &= ch0.coefficient_at(Rational(-1, 30) + Rational(k)) == Rational(expect[k]);
      ++it.checks;
    }
    it.passed &= ch1.leading_exponent() == Rational(-1, 30) + Rational(2, 3);
    it.passed &= ch1.agrees_with(ch2);
    it.passed &= ch0.nonnegative_integral() && ch1.nonnegative_integral() && ch2.nonnegative_integral();
    it.checks += 3;
    if (!it.passed) it.worst = 1.0;
    items.push_back(it);
  }

  {
    SelftestItem it{"algebra: valid states, admissible decompositions", true, 0, 0.0};
    for (const auto& pr : probes) {
      it.passed &= validate_state(pr.state).empty();
      for (const Sector& s : decompose_sector(pr.state, pr.sector)) {
        it.passed &= pairing_admissible(pr.state, s.l, s.neutral);
        ++it.checks;
      }
      ++it.checks;
    }
    if (!it.passed) it.worst = 1.0;
    items.push_back(it);
  }
  return items;
}

inline bool print_selftest(std::ostream& out, const std::vector<SelftestItem>& items) {
  std::size_t failed = 0;
  for (const auto& it : items) {
    char line[256];
    std::snprintf(line, sizeof line, "[%s] %-62s checks=%-4zu tol=%.1e worst=%.3e\n",
                  it.passed ? "PASS" : "FAIL", it.name.c_str(), it.checks, it.tolerance, it.worst);
    out << line;
    if (!it.passed) ++failed;
  }
  out << items.size() - failed << "/" << items.size() << " items passed\n";
  return failed == 0;
}

}  // namespace fqhcb::cli
