#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "fqhcb/edge_cft.hpp"
#include "fqhcb/thermo.hpp"

using namespace fqhcb;
using Catch::Approx;

namespace {

// ln of prod (1 - q^n) times q^(1/24), in long double.
long double eta_oracle(double t) {
  const long double lq = -static_cast<long double>(kTwoPiSquared) / t;
  const long double q = std::exp(lq);
  long double s = lq / 24.0L, qn = 1.0L;
  for (int n = 1; n < 5000; ++n) {
    qn *= q;
    s += std::log1p(-qn);
  }
  return s;
}

// ln sum_n q^{m a^2 / 2} e^{n_H a x}, a = n + l/m, summed over a wide window.
long double theta_oracle(std::int64_t l, std::int64_t m, std::int64_t nh, double t, double x) {
  const long double lq = -static_cast<long double>(kTwoPiSquared) / t;
  long double top = -std::numeric_limits<long double>::infinity();
  std::vector<long double> logs;
  for (std::int64_t n = -400; n <= 400; ++n) {
    const long double a = static_cast<long double>(n) + static_cast<long double>(l) / m;
    logs.push_back(lq * m * a * a / 2.0L + nh * a * x);
    top = std::max(top, logs.back());
  }
  long double s = 0.0L;
  for (long double v : logs) s += std::exp(v - top);
  return top + std::log(s);
}

// Z3 character evaluated numerically from the double sum.
long double z3_character_oracle(int l, double t) {
  const long double q = std::exp(-static_cast<long double>(kTwoPiSquared) / t);
  long double s = 0.0L;
  for (int n1 = 0; n1 < 40; ++n1) {
    for (int n2 = 0; n2 < 40; ++n2) {
      if ((n1 + 2 * n2) % 3 != l) continue;
      long double p1 = 1.0L, p2 = 1.0L;
      for (int k = 1; k <= n1; ++k) p1 *= 1.0L - std::pow(q, k);
      for (int k = 1; k <= n2; ++k) p2 *= 1.0L - std::pow(q, k);
      s += std::pow(q, (2.0L / 3.0L) * (n1 * n1 + n1 * n2 + n2 * n2)) / (p1 * p2);
    }
  }
  return std::log(s) + std::log(q) * (-1.0L / 30.0L);
}

ThermoParams params(double t, double mu, double phi, bool cz = true, bool eta = true) {
  ThermoParams p;
  p.t = t;
  p.mu_red = mu;
  p.phi = phi;
  p.include_cz = cz;
  p.include_eta = eta;
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

const FQHState& z3() {
  static const FQHState s = make_preset("rr-z3");
  return s;
}
const FQHState& laughlin3() {
  static const FQHState s = make_preset("laughlin:3");
  return s;
}

}  // namespace

TEST_CASE("K-function against a wide-window direct sum") {
  for (double t : {0.3, 1.0, 2.0}) {
    for (double phi : {0.0, 0.37, 2.9}) {
      const auto p = params(t, 0.4, phi, false, false);
      for (std::int64_t l : {0, 5, 10, 7}) {
        const double lib = log_K(l, 15, 3, p).log_value();
        const auto oracle = static_cast<double>(theta_oracle(l, 15, 3, t, coupling(p)));
        CHECK(lib == Approx(oracle).epsilon(1e-13).margin(1e-12));
      }
    }
  }
}

TEST_CASE("K-function identities") {
  const auto p = params(0.7, 0.3, 1.1);
  for (std::int64_t l = -3; l <= 16; ++l) {
    const auto k = log_K(l, 15, 3, p);
    const auto k_shift = log_K(l + 15, 15, 3, p);
    CHECK(std::abs(k.log_value() - k_shift.log_value()) < 1e-12);
    CHECK(std::abs(k.mean() - k_shift.mean()) < 1e-12);
    // reflection l -> -l, x -> -x
    auto q = p;
    q.mu_red = -p.mu_red;
    q.phi = -p.phi;
    const auto k_ref = log_K(-l, 15, 3, q);
    CHECK(std::abs(k.log_value() - k_ref.log_value()) < 1e-12);
    CHECK(k.mean() == Approx(-k_ref.mean()).margin(1e-12));
  }
  CHECK_THROWS_AS(log_K(0, 0, 3, p), DomainError);
}

TEST_CASE("Laughlin log Z against the theta-over-eta oracle") {
  for (double t : {0.3, 0.8, 2.0, 10.0}) {
    for (double phi : {0.0, 0.6, 1.5, 4.2}) {
      const auto p = params(t, -0.2, phi);
      const double x = coupling(p);
      const long double cz = -(1.0L / 3.0L) * t * x * x / (4.0L * kPiSquared);
      const auto oracle = static_cast<double>(theta_oracle(0, 3, 1, t, x) - eta_oracle(t) + cz);
      CHECK(log_Z(laughlin3(), {0, 0}, p).log_Z == Approx(oracle).epsilon(1e-13).margin(1e-12));
    }
  }
}

TEST_CASE("Z3 log Z against the numerical double-sum oracle") {
  for (double t : {1.0, 2.0, 10.0}) {
    for (double phi : {0.0, 1.5, 3.3}) {
      const auto p = params(t, 0.1, phi, false, true);
      const double x = coupling(p);
      long double top = -std::numeric_limits<long double>::infinity();
      long double terms[3];
      const std::int64_t ls[3] = {0, 5, 10};
      for (int s = 0; s < 3; ++s) {
        terms[s] = theta_oracle(ls[s], 15, 3, t, x) + z3_character_oracle(s, t);
        top = std::max(top, terms[s]);
      }
      long double sum = 0.0L;
      for (long double v : terms) sum += std::exp(v - top);
      const auto oracle = static_cast<double>(top + std::log(sum) - eta_oracle(t));
      CHECK(log_Z(z3(), {0, 0}, p).log_Z == Approx(oracle).epsilon(1e-12).margin(1e-12));
    }
  }
}

TEST_CASE("flux reflection and periodicity of Z") {
  for (const FQHState* s : {&z3(), &laughlin3()}) {
    const double d = static_cast<double>(s->filling.d_H);
    for (double phi : {0.1, 0.77, 1.5, 2.3}) {
      const auto p = params(0.5, 0.0, phi);
      auto m = p;
      m.phi = -phi;
      CHECK(log_Z(*s, {0, 0}, p).log_Z == Approx(log_Z(*s, {0, 0}, m).log_Z).epsilon(1e-13));
      auto shifted = params(0.5, 0.0, phi + d, false);
      auto plain = params(0.5, 0.0, phi, false);
      // Without CZ, Z(phi + d_H) = Z(phi) e^{n_H x + const}: the variance is periodic.
      CHECK(log_Z(*s, {0, 0}, shifted).var_Q == Approx(log_Z(*s, {0, 0}, plain).var_Q).margin(1e-12));
    }
  }
}

TEST_CASE("eta factor is a phi-independent offset") {
  double offset = 0.0;
  for (double phi : {0.0, 0.4, 1.5, 3.7}) {
    const auto with = log_Z(z3(), {0, 0}, params(0.9, 0.2, phi));
    const auto without = log_Z(z3(), {0, 0}, params(0.9, 0.2, phi, true, false));
    const double d = with.log_Z - without.log_Z;
    if (phi == 0.0) offset = d;
    CHECK(d == Approx(offset).epsilon(1e-13));
    CHECK(with.var_Q == Approx(without.var_Q).epsilon(1e-12));
  }
  CHECK(offset == Approx(-static_cast<double>(eta_oracle(0.9))).epsilon(1e-13));
}

TEST_CASE("charge staircase and monotonicity") {
  for (const FQHState* s : {&z3(), &laughlin3()}) {
    const double d = static_cast<double>(s->filling.d_H);
    const double nh = static_cast<double>(s->filling.n_H);
    for (double phi : {-1.3, 0.0, 0.5, 2.2, 4.9}) {
      const double q0 = mean_charge(*s, {0, 0}, params(0.5, 0.0, phi));
      const double q1 = mean_charge(*s, {0, 0}, params(0.5, 0.0, phi + d));
      CHECK(std::abs(q1 - q0 - nh) < 1e-8);
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 60; ++i) {
      const double q = mean_charge(*s, {0, 0}, params(0.4, -6.0 + 0.2 * i, 0.3));
      CHECK(q >= prev);
      prev = q;
    }
  }
  // mean charge is 0 at the symmetric point
  CHECK(std::abs(mean_charge(z3(), {0, 0}, params(0.5, 0.0, 0.0))) < 1e-12);
}

TEST_CASE("charge stiffness equals d<Q>/dmu") {
  for (double mu : {-1.0, 0.0, 0.8}) {
    const double h = 1e-4;
    const double qp = mean_charge(z3(), {0, 0}, params(0.6, mu + h, 1.2));
    const double qm = mean_charge(z3(), {0, 0}, params(0.6, mu - h, 1.2));
    const double stiff = charge_stiffness(z3(), {0, 0}, params(0.6, mu, 1.2));
    CHECK(rel((qp - qm) / (2 * h), stiff) < 1e-6);
  }
}

TEST_CASE("log Z derivatives against finite differences") {
  const auto p = params(0.8, 0.3, 0.9);
  const auto ev = log_Z(z3(), {0, 0}, p);
  const double h = 1e-5;
  auto lz = [&](double mu, double phi) { return log_Z(z3(), {0, 0}, params(0.8, mu, phi)).log_Z; };
  const double d_mu = (lz(0.3 + h, 0.9) - lz(0.3 - h, 0.9)) / (2 * h);
  const double d_phi = (lz(0.3, 0.9 + h) - lz(0.3, 0.9 - h)) / (2 * h);
  CHECK(rel(ev.dlogZ_dmu, d_mu) < 1e-7);
  CHECK(rel(ev.dlogZ_dphi, d_phi) < 1e-7);
  CHECK(rel(d_phi, flux_jacobian(p) * d_mu) < 1e-7);
}

TEST_CASE("two degenerate charge states at low temperature") {
  // Laughlin peak at phi = 1.5: Var Q -> 1/4, g_off -> pi^2 / (4 t).
  const auto ev = log_Z(laughlin3(), {0, 0}, params(0.05, 0.0, 1.5, false));
  CHECK(ev.var_Q == Approx(0.25).margin(1e-12));
  CHECK(conductance_flux(laughlin3(), {0, 0}, params(0.05, 0.0, 1.5, false)) ==
        Approx(kPiSquared / (4 * 0.05)).epsilon(1e-10));
  // Z3 peak at phi = 1.5.
  CHECK(log_Z(z3(), {0, 0}, params(0.05, 0.0, 1.5, false)).var_Q == Approx(0.25).margin(1e-10));
  // Valley: charge frozen.
  CHECK(log_Z(z3(), {0, 0}, params(0.05, 0.0, 0.0, false)).var_Q < 1e-12);
}

TEST_CASE("CZ factor shifts g by -nu/2") {
  for (const FQHState* s : {&z3(), &laughlin3()}) {
    const double half_nu = 0.5 * to_double(s->filling.nu());
    for (double phi : {0.0, 0.8, 1.5}) {
      for (double t : {0.3, 1.0}) {
        const double on = conductance_flux(*s, {0, 0}, params(t, 0.1, phi, true));
        const double off = conductance_flux(*s, {0, 0}, params(t, 0.1, phi, false));
        CHECK(on - off == Approx(-half_nu).margin(1e-12));
      }
    }
  }
}

TEST_CASE("conductance routes agree") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t_dist(0.3, 2.0), mu_dist(-2.0, 2.0), phi_dist(0.0, 5.0);
  for (int i = 0; i < 15; ++i) {
    const double t = t_dist(rng), mu = mu_dist(rng), phi = phi_dist(rng);
    const auto p = params(t, mu, phi);
    for (const FQHState* s : {&z3(), &laughlin3()}) {
      const auto ev = log_Z(*s, {0, 0}, p);
      const double gf = conductance_flux(ev, p);
      CHECK(rel(gf, conductance_einstein(ev, p)) < 1e-9);
      const auto fd = conductance_fd(*s, {0, 0}, p, 1e-3);
      CHECK(rel(gf, fd.g) < 1e-6);
      CHECK_FALSE(fd.cancellation_warning);
    }
  }
}

TEST_CASE("Richardson second difference") {
  const auto quad = richardson_second_derivative([](double x) { return 3 * x * x - x + 2; }, 0.7, 1e-2);
  CHECK(quad.value == Approx(6.0).epsilon(1e-10));
  CHECK(quad.coarse == Approx(6.0).epsilon(1e-10));
  const auto quartic = richardson_second_derivative([](double x) { return x * x * x * x; }, 1.0, 1e-2);
  // central differences carry h^2 error on x^4; Richardson removes it
  CHECK(std::abs(quartic.coarse - 12.0) > 1e-5);
  CHECK(quartic.value == Approx(12.0).epsilon(1e-10));
  const auto s = richardson_second_derivative([](double x) { return std::sin(x); }, 0.4, 1e-2);
  CHECK(s.value == Approx(-std::sin(0.4)).epsilon(1e-9));
  CHECK_THROWS_AS(richardson_second_derivative([](double x) { return x; }, 0.0, 0.0), DomainError);
}

TEST_CASE("finite-difference step too small triggers the cancellation warning") {
  const auto fd = conductance_fd(z3(), {0, 0}, params(0.5, 0.0, 0.0), 1e-7);
  CHECK(fd.cancellation_warning);
}

TEST_CASE("large flux stays finite") {
  for (double phi : {100.0, 1000.0, 1e5}) {
    const auto ev = log_Z(z3(), {0, 0}, params(0.3, 0.0, phi));
    CHECK(std::isfinite(ev.log_Z));
    const double g = conductance_flux(ev, params(0.3, 0.0, phi));
    const double g_ref = conductance_flux(z3(), {0, 0}, params(0.3, 0.0, std::fmod(phi, 5.0)));
    CHECK(g == Approx(g_ref).margin(1e-6));
  }
}

TEST_CASE("CB and QPC conductances") {
  CHECK(cb_conductance(1.0, 1.0, 2.0) == 1.0);
  CHECK(cb_conductance(0.2, 0.6, 1.0) == Approx(0.15).epsilon(1e-15));
  CHECK(cb_conductance(0.0, 0.0, 3.0) == 0.0);
  CHECK_THROWS_AS(cb_conductance(-0.1, 1.0, 1.0), DomainError);
  const Rational delta = electron_dimension(z3());
  CHECK(qpc_conductance(0.5, delta, 1.0) == Approx(0.0625).epsilon(1e-15));
  CHECK(qpc_conductance(2.0, delta, 3.0) == Approx(48.0).epsilon(1e-15));
  CHECK_THROWS_AS(qpc_conductance(0.0, delta, 1.0), DomainError);
}

TEST_CASE("parameter guards") {
  CHECK_THROWS_AS(log_Z(z3(), {0, 0}, params(1e-4, 0.0, 0.0)), GuardViolation);
  CHECK_THROWS_AS(log_Z(z3(), {0, 0}, params(60.0, 0.0, 0.0)), GuardViolation);
  CHECK_THROWS_AS(log_Z(z3(), {0, 0}, params(0.5, std::nan(""), 0.0)), DomainError);
  CHECK_THROWS_AS(log_Z(z3(), {0, 0}, params(0.5, 0.0, INFINITY)), DomainError);
  auto p = params(0.5, 0.0, 0.0);
  p.max_window_terms = 2;
  CHECK_THROWS_AS(log_Z(z3(), {0, 0}, p), GuardViolation);
  CHECK_THROWS_AS(log_Z(z3(), {1, 0}, params(0.5, 0.0, 0.0)), ModelError);
  CHECK_NOTHROW(log_Z(z3(), {0, 0}, params(1e-3, 0.0, 0.0)));
}
