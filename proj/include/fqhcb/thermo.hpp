#pragma once

// Grand-canonical thermodynamics of a flux-threaded FQH disk and the island
// conductance.
//
// Reduced units throughout:
//   t       = T / T0, T0 = hbar v_F / (pi k_B L)   ->  q = exp(-2 pi^2 / t)
//   mu_red  = mu / (k_B T)
//   phi     = Aharonov-Bohm flux in flux quanta
//   g       = G_is in units of e^2/h
//
// A charged lattice term of u(1)_m with a = n + l/m carries the log-weight
//
//   -(pi^2 m / t) a^2 + n_H a x,      x = mu_red + (2 pi^2 / t) phi,
//
// and electric charge Q = n_H a. Z depends on (mu_red, phi) only through x,
// which is the statement that the flux shifts zeta -> zeta + phi tau. Hence
//
//   d/dphi = (2 pi^2 / t) d/dmu_red.
//
// Unit reduction of the flux route: G_is = (L / 2 v_F)(e/h)^2 k_B T
// d^2 ln Z / dphi^2, and k_B T L / (h v_F) = t / (2 pi^2), so
//
//   g = (t / 4 pi^2) d^2 ln Z / dphi^2.
//
// Einstein route: G_is = e^2 D dn/dmu / L with D = L v_F / 2 and
// dn/dmu = Var(Q) / (L k_B T); with v_F / (L k_B) = pi T0 / hbar this gives
//
//   g = (pi^2 / t) Var(Q),
//
// which is the flux route term by term since d^2/dphi^2 = (2 pi^2/t)^2 d^2/dx^2.
//
// The Cappelli-Zemba factor contributes -nu_H t x^2 / (4 pi^2) to ln Z, i.e. a
// constant -nu_H / 2 to g. The Dedekind eta contributes a t-only constant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fqhcb/edge_cft.hpp"
#include "fqhcb/errors.hpp"
#include "fqhcb/qseries.hpp"

namespace fqhcb {

inline constexpr double kPiSquared = std::numbers::pi * std::numbers::pi;

struct ThermoParams {
  double t = 0.5;
  double mu_red = 0.0;
  double phi = 0.0;
  bool include_cz = true;
  bool include_eta = true;

  double t_min = 1e-3;
  double t_max = kDefaultTMax;
  /// Highest character level kept (further capped by the underflow margin).
  std::int64_t max_character_level = kCharacterCacheLevel;
  std::size_t max_window_terms = 1'000'000;
  double fd_step = 1e-3;

  /// Fault-injection hook for the self-test: multiplies the CZ exponent.
  double cz_sign = 1.0;
};

inline void check_params(const ThermoParams& p) {
  if (!(p.t >= p.t_min)) {
    throw GuardViolation("reduced temperature t = " + std::to_string(p.t) + " below t_min = " +
                         std::to_string(p.t_min));
  }
  if (!(p.t <= p.t_max)) {
    throw GuardViolation("reduced temperature t = " + std::to_string(p.t) + " above t_max = " +
                         std::to_string(p.t_max));
  }
  if (!std::isfinite(p.mu_red) || !std::isfinite(p.phi)) {
    throw DomainError("mu_red and phi must be finite");
  }
}

/// x = mu_red + (2 pi^2 / t) phi, the only combination Z depends on.
inline double coupling(const ThermoParams& p) { return p.mu_red + kTwoPiSquared / p.t * p.phi; }

/// dx/dphi.
inline double flux_jacobian(const ThermoParams& p) { return kTwoPiSquared / p.t; }

/// ln CZ as a function of x, with its first two x-derivatives.
struct CzTerm {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline CzTerm cappelli_zemba(double nu, const ThermoParams& p) {
  if (!p.include_cz) return {};
  const double x = coupling(p);
  const double c = p.cz_sign * nu * p.t / (4.0 * kPiSquared);
  return {-c * x * x, -2.0 * c * x, -2.0 * c};
}

/// Window of lattice indices n kept for a K-function.
struct LatticeWindow {
  std::int64_t n_lo = 0;
  std::int64_t n_hi = -1;
};

inline LatticeWindow lattice_window(std::int64_t l, std::int64_t m, std::int64_t n_charge_factor,
                                    const ThermoParams& p) {
  const double curvature = kPiSquared * static_cast<double>(m) / p.t;
  const double a_star = static_cast<double>(n_charge_factor) * coupling(p) / (2.0 * curvature);
  const double n_star = a_star - static_cast<double>(l) / static_cast<double>(m);
  const double half_width = std::sqrt(kLogUnderflowMargin / curvature) + 1.0;
  const double lo = std::floor(n_star - half_width);
  const double hi = std::ceil(n_star + half_width);
  if (!(hi - lo < static_cast<double>(p.max_window_terms))) {
    throw GuardViolation("K-function truncation window overflow (" + std::to_string(hi - lo) +
                         " terms)");
  }
  return {static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)};
}

/// Luttinger-liquid partition function K_l(tau, n_H zeta; m) in the log
/// domain, flux included, as an accumulator whose charges are Q = n_H a.
/// The eta and CZ factors are folded in as constant log-offsets when enabled.
inline LogSeriesAccumulator log_K(std::int64_t l, std::int64_t m, std::int64_t n_charge_factor,
                                  const ThermoParams& p) {
  check_params(p);
  if (m <= 0 || n_charge_factor <= 0) throw DomainError("log_K: m and n_H must be positive");
  const auto window = lattice_window(l, m, n_charge_factor, p);
  const double curvature = kPiSquared * static_cast<double>(m) / p.t;
  const double x = coupling(p);
  const double nh = static_cast<double>(n_charge_factor);
  // Completed square: -c a^2 + n_H a x = -c (a - a*)^2 + nu t x^2 / (4 pi^2).
  // The constant is exactly minus the CZ exponent, so it is combined with CZ
  // analytically instead of cancelling two large numbers.
  const double a_star = nh * x / (2.0 * curvature);
  LogSeriesAccumulator acc;
  for (std::int64_t n = window.n_lo; n <= window.n_hi; ++n) {
    const double a = static_cast<double>(n * m + l) / static_cast<double>(m);
    const double da = a - a_star;
    acc.add(-curvature * da * da, nh * a);
  }
  if (p.include_eta) {
    EtaOptions eta_opts;
    eta_opts.t_max = p.t_max;
    acc.scale_by(-log_dedekind_eta(p.t, eta_opts));
  }
  const double nu = nh * nh / static_cast<double>(m);
  const double square = nu * p.t * x * x / (4.0 * kPiSquared);
  acc.scale_by(p.include_cz ? (1.0 - p.cz_sign) * square : square);
  return acc;
}

/// Character levels kept at reduced temperature t: the first omitted level
/// has Boltzmann suppression beyond the underflow margin, capped at
/// max_character_level.
inline double character_level_cut(const ThermoParams& p) {
  return std::min(static_cast<double>(p.max_character_level),
                  std::floor(kLogUnderflowMargin * p.t / kTwoPiSquared));
}

struct SectorContribution {
  Sector sector;           // (l mod m, neutral sector)
  std::int64_t display_l;  // representative in (-m/2, m/2]
  double log_K;
  double log_character;
  double log_contribution;
};

struct ZEvaluation {
  double log_Z = 0.0;
  double mean_Q = 0.0;
  double var_Q = 0.0;
  double dlogZ_dmu = 0.0;
  double d2logZ_dmu2 = 0.0;
  double dlogZ_dphi = 0.0;
  double d2logZ_dphi2 = 0.0;
  double cz_curvature = 0.0;  // d^2 ln CZ / dmu_red^2 (0 when disabled)
  double level_cut = 0.0;
  std::vector<SectorContribution> sectors;
};

/// Z_{l,Lambda}(tau, zeta + phi tau) = sum_s K_{l + s d_H}(tau, n_H zeta; m) ch_{omega^s Lambda}(tau).
inline ZEvaluation log_Z(const FQHState& state, const Sector& sector, const ThermoParams& p) {
  check_params(p);
  const auto& f = state.filling;
  const std::int64_t m = f.m();
  const double lq = log_nome(p.t);
  ZEvaluation ev;
  ev.level_cut = character_level_cut(p);

  LogSeriesAccumulator total;
  for (const Sector& part : decompose_sector(state, sector)) {
    LogSeriesAccumulator k = log_K(part.l, m, f.n_H, p);
    const double log_k = k.log_value();
    const double log_ch = state.neutral.cached_character(part.neutral).log_evaluate(lq, ev.level_cut);
    k.scale_by(log_ch);
    ev.sectors.push_back({part, display_charge(part.l, m), log_k, log_ch, k.log_value()});
    total.merge(k);
  }

  const double nu = to_double(f.nu());
  const CzTerm cz = cappelli_zemba(nu, p);
  const double jac = flux_jacobian(p);
  ev.log_Z = total.log_value();
  ev.mean_Q = total.mean();
  ev.var_Q = total.variance();
  ev.cz_curvature = cz.d2;
  ev.dlogZ_dmu = ev.mean_Q + cz.d1;
  ev.d2logZ_dmu2 = ev.var_Q + cz.d2;
  ev.dlogZ_dphi = jac * ev.dlogZ_dmu;
  ev.d2logZ_dphi2 = jac * jac * ev.d2logZ_dmu2;
  return ev;
}

/// Omega / (k_B T) = -ln Z.
inline double grand_potential(const FQHState& state, const Sector& sector, const ThermoParams& p) {
  return -log_Z(state, sector, p).log_Z;
}

/// <Q> in electron charges.
inline double mean_charge(const FQHState& state, const Sector& sector, const ThermoParams& p) {
  return log_Z(state, sector, p).mean_Q;
}

/// d<Q>/dmu_red = Var(Q).
inline double charge_stiffness(const FQHState& state, const Sector& sector, const ThermoParams& p) {
  return log_Z(state, sector, p).var_Q;
}

/// Flux-susceptibility route: g = (t / 4 pi^2) d^2 ln Z / dphi^2.
inline double conductance_flux(const ZEvaluation& ev, const ThermoParams& p) {
  return p.t / (4.0 * kPiSquared) * ev.d2logZ_dphi2;
}

inline double conductance_flux(const FQHState& state, const Sector& sector, const ThermoParams& p) {
  return conductance_flux(log_Z(state, sector, p), p);
}

/// Einstein route: g = (pi^2 / t) d^2 ln Z / dmu_red^2, i.e. the charge
/// stiffness times e^2 D / L with the ballistic D = L v_F / 2.
inline double conductance_einstein(const ZEvaluation& ev, const ThermoParams& p) {
  const double stiffness = ev.var_Q + ev.cz_curvature;
  return kPiSquared / p.t * stiffness;
}

inline double conductance_einstein(const FQHState& state, const Sector& sector,
                                   const ThermoParams& p) {
  return conductance_einstein(log_Z(state, sector, p), p);
}

struct SecondDerivative {
  double value = 0.0;
  double coarse = 0.0;    // central difference at step h
  double fine = 0.0;      // central difference at step h/2
  double roundoff = 0.0;  // predicted cancellation error of value
};

/// Central second difference at steps h and h/2, Richardson-combined to
/// O(h^4).
template <class F>
SecondDerivative richardson_second_derivative(F&& f, double x, double h) {
  if (!(h > 0.0)) throw DomainError("richardson_second_derivative: step must be positive");
  const double f0 = f(x);
  const double fp = f(x + h);
  const double fm = f(x - h);
  const double fp2 = f(x + 0.5 * h);
  const double fm2 = f(x - 0.5 * h);
  SecondDerivative d;
  d.coarse = (fp - 2.0 * f0 + fm) / (h * h);
  d.fine = (fp2 - 2.0 * f0 + fm2) / (0.25 * h * h);
  d.value = (4.0 * d.fine - d.coarse) / 3.0;
  const double scale = std::max({std::abs(f0), std::abs(fp), std::abs(fm), std::abs(fp2), std::abs(fm2)});
  d.roundoff = 24.0 * std::numeric_limits<double>::epsilon() * scale / (h * h);
  return d;
}

struct FdConductance {
  double g = 0.0;
  double roundoff = 0.0;  // predicted cancellation error in g
  bool cancellation_warning = false;
};

/// Finite-difference cross-check: g from the second phi-difference of the
/// grand potential.
inline FdConductance conductance_fd(const FQHState& state, const Sector& sector,
                                    const ThermoParams& p, double step, double rel_tol = 1e-6) {
  if (!(step > 0.0)) throw DomainError("conductance_fd: step must be positive");
  const double prefactor = p.t / (4.0 * kPiSquared);
  auto omega = [&](double phi) {
    ThermoParams q = p;
    q.phi = phi;
    return grand_potential(state, sector, q);
  };
  const auto d = richardson_second_derivative(omega, p.phi, step);
  FdConductance out;
  out.g = -prefactor * d.value;
  out.roundoff = prefactor * d.roundoff;
  out.cancellation_warning = out.roundoff > rel_tol * std::abs(out.g);
  return out;
}

inline FdConductance conductance_fd(const FQHState& state, const Sector& sector,
                                    const ThermoParams& p) {
  return conductance_fd(state, sector, p, p.fd_step);
}

/// Sequential tunnelling through the island; QPC conductances in e^2/h.
inline double cb_conductance(double g_left, double g_right, double g_island) {
  if (g_left < 0.0 || g_right < 0.0) throw DomainError("cb_conductance: negative QPC conductance");
  const double sum = g_left + g_right;
  if (sum == 0.0) return 0.0;
  return g_left * g_right / sum * g_island;
}

/// Low-temperature QPC tunnelling conductance, amplitude * t^(4 Delta_el - 2).
inline double qpc_conductance(double t, const Rational& delta_el, double amplitude) {
  if (!(t > 0.0)) throw DomainError("qpc_conductance: t must be positive");
  if (!(amplitude > 0.0)) throw DomainError("qpc_conductance: amplitude must be positive");
  return amplitude * std::pow(t, 4.0 * to_double(delta_el) - 2.0);
}

}  // namespace fqhcb
