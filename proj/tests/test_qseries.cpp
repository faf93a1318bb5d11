#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "fqhcb/edge_cft.hpp"
#include "fqhcb/qseries.hpp"

using namespace fqhcb;
using Catch::Approx;

namespace {

// Partitions of k into parts no larger than max_part, by plain recursion.
std::int64_t count_partitions(std::int64_t k, std::int64_t max_part) {
  if (k == 0) return 1;
  if (max_part == 0) return 0;
  std::int64_t total = 0;
  for (std::int64_t p = std::min(k, max_part); p >= 1; --p) total += count_partitions(k - p, p);
  return total;
}

// Brute-force Z3 double sum on a grid of thirds: key = 3 * (exponent + 1/30).
// residue < 0 means unrestricted.
std::map<std::int64_t, std::int64_t> brute_double_sum(int residue, std::int64_t max_thirds) {
  std::map<std::int64_t, std::int64_t> out;
  for (std::int64_t n1 = 0; 2 * n1 * n1 <= max_thirds; ++n1) {
    for (std::int64_t n2 = 0; 2 * (n1 * n1 + n1 * n2 + n2 * n2) <= max_thirds; ++n2) {
      if (residue >= 0 && (n1 + 2 * n2) % 3 != residue) continue;
      const std::int64_t base = 2 * (n1 * n1 + n1 * n2 + n2 * n2);
      for (std::int64_t k = 0; base + 3 * k <= max_thirds; ++k) {
        std::int64_t c = 0;
        for (std::int64_t i = 0; i <= k; ++i) c += count_partitions(i, n1) * count_partitions(k - i, n2);
        if (c != 0) out[base + 3 * k] += c;
      }
    }
  }
  return out;
}

Rational from_thirds(std::int64_t thirds) { return Rational(-1, 30) + Rational(thirds, 3); }

}  // namespace

TEST_CASE("q_pochhammer") {
  CHECK(q_pochhammer(0, 0.37) == 1.0);
  CHECK(q_pochhammer(1, 0.5) == 0.5);
  CHECK(q_pochhammer(2, 0.5) == 0.375);
  CHECK_THROWS_AS(q_pochhammer(2, 1.0), DomainError);
  CHECK_THROWS_AS(q_pochhammer(2, -0.1), DomainError);
}

TEST_CASE("log_dedekind_eta") {
  SECTION("t -> 0 approaches the bare prefactor") {
    const double t = 0.05;
    CHECK(log_dedekind_eta(t) == Approx(-kTwoPiSquared / t / 24.0).epsilon(1e-15));
  }
  SECTION("t = 0.5 keeps one factor") {
    const double lq = -kTwoPiSquared / 0.5;
    const double expected = lq / 24.0 + std::log1p(-std::exp(lq));
    CHECK(log_dedekind_eta(0.5) == Approx(expected).epsilon(1e-15));
  }
  SECTION("direct long-double product oracle") {
    for (double t : {1.0, 2.0, 10.0, 40.0}) {
      const long double q = std::exp(static_cast<long double>(-kTwoPiSquared / t));
      long double prod = 1.0L, qn = 1.0L;
      for (int n = 1; n < 20000; ++n) {
        qn *= q;
        prod *= 1.0L - qn;
      }
      const double oracle = static_cast<double>(std::log(q) / 24.0L + std::log(prod));
      CHECK(log_dedekind_eta(t) == Approx(oracle).epsilon(1e-13).margin(1e-13));
    }
  }
  SECTION("doubling the cutoff at t = 2 is invisible") {
    const std::size_t n = dedekind_eta_terms(2.0);
    CHECK(std::abs(log_dedekind_eta_truncated(2.0, 2 * n) - log_dedekind_eta_truncated(2.0, n)) < 1e-14);
  }
  SECTION("guards") {
    CHECK_THROWS_AS(log_dedekind_eta(60.0), GuardViolation);
    CHECK_NOTHROW(log_dedekind_eta(60.0, {1e-18, 100.0}));
    CHECK_THROWS_AS(log_dedekind_eta(0.0), DomainError);
  }
}

TEST_CASE("Z3 vacuum character: first coefficients") {
  // Oracle 1: brute-force double sum.
  const auto brute = brute_double_sum(0, 3 * 3);
  std::vector<std::int64_t> oracle;
  for (std::int64_t level = 0; level <= 3; ++level) {
    auto it = brute.find(3 * level);
    oracle.push_back(it == brute.end() ? 0 : it->second);
  }
  // Oracle 2: descendants of a chiral algebra with one spin-2 and one spin-3
  // generator (no null vectors below level 4).
  std::vector<std::int64_t> desc(4, 0);
  desc[0] = 1;
  for (int spin : {2, 3}) {
    for (int mode = spin; mode <= 3; ++mode) {
      for (int k = mode; k <= 3; ++k) desc[k] += desc[k - mode];
    }
  }
  CHECK(oracle == std::vector<std::int64_t>{1, 0, 1, 2});
  CHECK(desc == oracle);

  const auto ch = z3_parafermion_character(0, Rational(3));
  CHECK(ch.leading_exponent() == Rational(-1, 30));
  for (int level = 0; level <= 3; ++level) {
    CHECK(ch.coefficient_at(Rational(-1, 30) + Rational(level)) == Rational(oracle[level]));
  }
}

TEST_CASE("Z3 characters: leading exponents and structure") {
  const auto ch1 = z3_parafermion_character(1, Rational(12));
  const auto ch2 = z3_parafermion_character(2, Rational(12));
  CHECK(ch1.leading_exponent() == Rational(-1, 30) + Rational(2, 3));
  CHECK(ch2.leading_exponent() == Rational(-1, 30) + Rational(2, 3));
  CHECK(ch1.agrees_with(ch2));
  for (int l = 0; l < 3; ++l) {
    const auto ch = z3_parafermion_character(l, Rational(12));
    CHECK(ch.nonnegative_integral());
    CHECK(ch.step() == Rational(1));
    CHECK(ch.coefficients().front() == Rational(1));
  }
  CHECK_THROWS_AS(z3_parafermion_character(3, Rational(1)), DomainError);
}

TEST_CASE("Z3 characters agree with the brute-force sum for every sector") {
  for (int l = 0; l < 3; ++l) {
    const auto ch = z3_parafermion_character(l, Rational(12));
    const std::int64_t lead_thirds = (l == 0) ? 0 : 2;
    const auto brute = brute_double_sum(l, lead_thirds + 36);
    for (const auto& [thirds, c] : brute) {
      CHECK(ch.coefficient_at(from_thirds(thirds)) == Rational(c));
    }
    CHECK(ch.terms().size() == brute.size());
  }
}

TEST_CASE("sector sum equals the unrestricted double sum") {
  const auto sum = z3_parafermion_character(0, Rational(12)) + z3_parafermion_character(1, Rational(12)) +
                   z3_parafermion_character(2, Rational(12));
  // Common valid range of the three: up to q^{-1/30 + 12}.
  CHECK(sum.upper_exponent() == Rational(-1, 30) + Rational(12));
  const auto brute = brute_double_sum(-1, 36);
  for (const auto& [thirds, c] : brute) {
    CHECK(sum.coefficient_at(from_thirds(thirds)) == Rational(c));
  }
  CHECK(sum.terms().size() == brute.size());
}

TEST_CASE("trivial neutral model has character 1") {
  const auto model = build_laughlin_model();
  for (int level : {0, 5, 40}) {
    const auto ch = expand_character(model, "vac", Rational(level));
    CHECK(ch.leading_exponent() == Rational(0));
    CHECK(ch.coefficients() == std::vector<Rational>{Rational(1)});
  }
}

TEST_CASE("QExpansion log evaluation matches a direct sum") {
  const auto ch = z3_parafermion_character(0, Rational(20));
  const double t = 3.0;
  const double lq = log_nome(t);
  double direct = 0.0;
  for (const auto& [e, c] : ch.terms()) direct += to_double(c) * std::exp(lq * to_double(e));
  CHECK(ch.log_evaluate(lq, 20.0) == Approx(std::log(direct)).epsilon(1e-14));
  CHECK(ch.log_evaluate(lq, 0.0) == Approx(lq * -1.0 / 30.0).epsilon(1e-15));
}

TEST_CASE("LogSeriesAccumulator examples") {
  SECTION("single term") {
    const auto acc = accumulate_log_terms(std::vector<LogTerm>{{-5.0, 2.0}});
    CHECK(acc.log_value() == -5.0);
    CHECK(acc.mean() == 2.0);
    CHECK(acc.variance() == 0.0);
    CHECK(acc.s0() > 0.0);
  }
  SECTION("two equal weights") {
    const auto acc = accumulate_log_terms(std::vector<LogTerm>{{1.0, 0.0}, {1.0, 1.0}});
    CHECK(acc.mean() == Approx(0.5).epsilon(1e-15));
    CHECK(acc.variance() == Approx(0.25).epsilon(1e-15));
    CHECK(acc.log_value() == Approx(1.0 + std::log(2.0)).epsilon(1e-15));
  }
  SECTION("empty stream") {
    CHECK_THROWS_AS(accumulate_log_terms(std::vector<LogTerm>{}), std::invalid_argument);
  }
  SECTION("weights far outside floating range") {
    const auto acc = accumulate_log_terms(std::vector<LogTerm>{{-2000.0, 1.0}, {-2000.0 + std::log(3.0), 2.0}});
    CHECK(acc.log_value() == Approx(-2000.0 + std::log(4.0)).epsilon(1e-15));
    CHECK(acc.mean() == Approx(1.75).epsilon(1e-14));
    CHECK(acc.variance() == Approx(0.1875).epsilon(1e-13));
  }
}

TEST_CASE("LogSeriesAccumulator properties") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lw(-30.0, 5.0), charge(-4.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LogTerm> terms(1000);
    for (auto& term : terms) term = {lw(rng), charge(rng)};

    const auto fwd = accumulate_log_terms(terms);
    std::vector<LogTerm> rev(terms.rbegin(), terms.rend());
    const auto bwd = accumulate_log_terms(rev);
    std::shuffle(terms.begin(), terms.end(), rng);
    const auto shuf = accumulate_log_terms(terms);
    for (const auto* other : {&bwd, &shuf}) {
      CHECK(other->log_value() == Approx(fwd.log_value()).epsilon(1e-13));
      CHECK(other->mean() == Approx(fwd.mean()).epsilon(1e-13).margin(1e-13));
      CHECK(other->variance() == Approx(fwd.variance()).epsilon(1e-13));
    }

    // Direct summation in long double.
    long double s0 = 0, s1 = 0, s2 = 0;
    for (const auto& term : terms) {
      const long double w = std::exp(static_cast<long double>(term.log_weight));
      s0 += w;
      s1 += w * term.charge;
      s2 += w * term.charge * term.charge;
    }
    const double mean = static_cast<double>(s1 / s0);
    CHECK(fwd.log_value() == Approx(static_cast<double>(std::log(s0))).epsilon(1e-12));
    CHECK(fwd.mean() == Approx(mean).epsilon(1e-12).margin(1e-12));
    CHECK(fwd.variance() == Approx(static_cast<double>(s2 / s0 - (s1 / s0) * (s1 / s0))).epsilon(1e-12));
    CHECK(fwd.variance() >= 0.0);
    const double scale = std::exp(fwd.log_scale());
    CHECK(fwd.s1() * scale == Approx(static_cast<double>(s1)).epsilon(1e-11).margin(1e-11));
    CHECK(fwd.s2() * scale == Approx(static_cast<double>(s2)).epsilon(1e-11));

    // Merge of two halves = concatenated stream.
    const std::vector<LogTerm> a(terms.begin(), terms.begin() + 400), b(terms.begin() + 400, terms.end());
    auto merged = accumulate_log_terms(a);
    merged.merge(accumulate_log_terms(b));
    CHECK(merged.count() == terms.size());
    CHECK(merged.log_value() == Approx(shuf.log_value()).epsilon(1e-13));
    CHECK(merged.mean() == Approx(shuf.mean()).epsilon(1e-12).margin(1e-12));
    CHECK(merged.variance() == Approx(shuf.variance()).epsilon(1e-12));
  }
}
