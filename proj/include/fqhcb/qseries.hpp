#pragma once

// q-series building blocks.
//
// Everything here is parameterised by the reduced temperature t = T/T0 via the
// nome q = exp(-2 pi^2 / t), which is the purely imaginary modular parameter
// tau = i pi / t. Exact expansions (QExpansion) use rational exponents and
// coefficients; evaluation happens in the log domain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <ranges>
#include <stdexcept>
#include <string>
#include <vector>

#include "fqhcb/errors.hpp"
#include "fqhcb/rational.hpp"

namespace fqhcb {

inline constexpr double kTwoPiSquared = 2.0 * std::numbers::pi * std::numbers::pi;

/// Terms whose log-weight falls this far below the running maximum are dropped.
inline constexpr double kLogUnderflowMargin = 750.0;

/// Default upper guard on the reduced temperature (q ~ 0.67).
inline constexpr double kDefaultTMax = 50.0;

/// ln q for reduced temperature t.
inline double log_nome(double t) { return -kTwoPiSquared / t; }

/// (q)_n = prod_{j=1}^n (1 - q^j).
inline double q_pochhammer(std::int64_t n, double q) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw DomainError("q_pochhammer: q must lie in [0, 1)");
  }
  if (n < 0) throw DomainError("q_pochhammer: n must be non-negative");
  double result = 1.0;
  double qj = 1.0;
  for (std::int64_t j = 1; j <= n; ++j) {
    qj *= q;
    result *= 1.0 - qj;
  }
  return result;
}

/// ln eta = ln q / 24 + sum_{n=1}^{n_terms} ln(1 - q^n), with a fixed number
/// of product factors. Used to probe truncation convergence.
inline double log_dedekind_eta_truncated(double t, std::size_t n_terms) {
  if (!(t > 0.0)) throw DomainError("log_dedekind_eta: t must be positive");
  const double lq = log_nome(t);
  double sum = 0.0;
  for (std::size_t n = 1; n <= n_terms; ++n) {
    sum += std::log1p(-std::exp(lq * static_cast<double>(n)));
  }
  return lq / 24.0 + sum;
}

struct EtaOptions {
  double abs_tol = 1e-18;
  double t_max = kDefaultTMax;
};

/// Number of product factors log_dedekind_eta keeps before the first factor
/// with |ln(1 - q^n)| < abs_tol.
inline std::size_t dedekind_eta_terms(double t, const EtaOptions& opts = {}) {
  if (!(t > 0.0)) throw DomainError("log_dedekind_eta: t must be positive");
  if (t > opts.t_max) {
    throw GuardViolation("log_dedekind_eta: t = " + std::to_string(t) +
                         " exceeds t_max = " + std::to_string(opts.t_max));
  }
  const double lq = log_nome(t);
  std::size_t n = 1;
  while (std::abs(std::log1p(-std::exp(lq * static_cast<double>(n)))) >= opts.abs_tol) {
    ++n;
  }
  return n - 1;
}

inline double log_dedekind_eta(double t, const EtaOptions& opts = {}) {
  return log_dedekind_eta_truncated(t, dedekind_eta_terms(t, opts));
}

/// Numerically stable log(sum(exp(x))). Returns -inf for an empty range.
template <std::ranges::input_range R>
double log_sum_exp(R&& values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double v : values) s += std::exp(v - hi);
  return hi + std::log(s);
}

/// Coefficients of 1/(q)_n = sum_k p(k; parts <= n) q^k up to degree max_degree.
inline std::vector<std::int64_t> inverse_pochhammer_series(std::int64_t n,
                                                           std::int64_t max_degree) {
  std::vector<std::int64_t> c(static_cast<std::size_t>(max_degree + 1), 0);
  c[0] = 1;
  for (std::int64_t j = 1; j <= n; ++j) {
    for (std::int64_t k = j; k <= max_degree; ++k) c[k] += c[k - j];
  }
  return c;
}

/// Truncated q-series sum_k c_k q^{leading + k*step}, exact in exponents and
/// coefficients. Valid for every exponent <= leading + level_max.
class QExpansion {
 public:
  QExpansion() = default;

  QExpansion(Rational leading, Rational step, std::vector<Rational> coefficients,
             Rational level_max)
      : leading_(leading), step_(step), coeffs_(std::move(coefficients)),
        level_max_(level_max) {
    if (step_.numerator() <= 0) throw DomainError("QExpansion: step must be positive");
    if (level_max_.numerator() < 0) throw DomainError("QExpansion: level_max must be >= 0");
    trim();
  }

  /// Builds an expansion from (exponent -> coefficient) pairs, truncated to
  /// exponents <= min exponent + level_max. The grid step is the rational gcd
  /// of all gaps to the leading exponent (1 when a single term survives).
  static QExpansion from_terms(const std::map<Rational, Rational>& terms,
                               Rational level_max) {
    std::map<Rational, Rational> nz;
    for (const auto& [e, c] : terms) {
      if (c.numerator() != 0) nz.emplace(e, c);
    }
    if (nz.empty()) return QExpansion(Rational(0), Rational(1), {}, level_max);
    const Rational lead = nz.begin()->first;
    const Rational top = lead + level_max;
    Rational step(0);
    for (const auto& [e, c] : nz) {
      if (e > top) break;
      step = rational_gcd(step, e - lead);
    }
    if (step.numerator() == 0) step = Rational(1);
    std::vector<Rational> coeffs;
    for (const auto& [e, c] : nz) {
      if (e > top) break;
      const Rational k = (e - lead) / step;
      const auto idx = static_cast<std::size_t>(k.numerator());
      if (coeffs.size() <= idx) coeffs.resize(idx + 1, Rational(0));
      coeffs[idx] = c;
    }
    return QExpansion(lead, step, std::move(coeffs), level_max);
  }

  const Rational& leading_exponent() const { return leading_; }
  const Rational& step() const { return step_; }
  const Rational& level_max() const { return level_max_; }
  const std::vector<Rational>& coefficients() const { return coeffs_; }
  bool empty() const { return coeffs_.empty(); }

  Rational exponent(std::size_t k) const {
    return leading_ + step_ * static_cast<std::int64_t>(k);
  }
  Rational upper_exponent() const { return leading_ + level_max_; }

  /// Coefficient of q^e; zero off-grid or beyond the stored terms.
  Rational coefficient_at(const Rational& e) const {
    const Rational k = (e - leading_) / step_;
    if (k.numerator() < 0 || !is_integer(k)) return Rational(0);
    const auto idx = static_cast<std::size_t>(k.numerator());
    return idx < coeffs_.size() ? coeffs_[idx] : Rational(0);
  }

  std::map<Rational, Rational> terms() const {
    std::map<Rational, Rational> out;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      if (coeffs_[k].numerator() != 0) out.emplace(exponent(k), coeffs_[k]);
    }
    return out;
  }

  bool nonnegative_integral() const {
    return std::ranges::all_of(coeffs_, [](const Rational& c) {
      return c.numerator() >= 0 && is_integer(c);
    });
  }

  /// Sum, valid on the common range of both operands.
  friend QExpansion operator+(const QExpansion& a, const QExpansion& b) {
    auto terms = a.terms();
    for (const auto& [e, c] : b.terms()) terms[e] += c;
    const Rational top = std::min(a.upper_exponent(), b.upper_exponent());
    std::map<Rational, Rational> kept;
    for (const auto& [e, c] : terms) {
      if (e <= top && c.numerator() != 0) kept.emplace(e, c);
    }
    if (kept.empty()) return QExpansion(Rational(0), Rational(1), {}, Rational(0));
    return from_terms(kept, top - kept.begin()->first);
  }

  /// Coefficient-wise equality on the common valid range.
  bool agrees_with(const QExpansion& other) const {
    const Rational top = std::min(upper_exponent(), other.upper_exponent());
    auto mine = terms();
    auto theirs = other.terms();
    for (auto it = mine.begin(); it != mine.end() && it->first <= top; ++it) {
      if (other.coefficient_at(it->first) != it->second) return false;
    }
    for (auto it = theirs.begin(); it != theirs.end() && it->first <= top; ++it) {
      if (coefficient_at(it->first) != it->second) return false;
    }
    return true;
  }

  /// ln of the truncated series at nome ln q, keeping terms whose exponent
  /// gap to the leading term is <= level_cut. Requires positive coefficients.
  double log_evaluate(double log_q, double level_cut) const {
    if (coeffs_.empty()) {
      return -std::numeric_limits<double>::infinity();
    }
    std::vector<double> logs;
    logs.reserve(coeffs_.size());
    const double step = to_double(step_);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      if (step * static_cast<double>(k) > level_cut) break;
      const Rational& c = coeffs_[k];
      if (c.numerator() == 0) continue;
      if (c.numerator() < 0) throw DomainError("QExpansion::log_evaluate: negative coefficient");
      logs.push_back(std::log(to_double(c)) + log_q * step * static_cast<double>(k));
    }
    return to_double(leading_) * log_q + log_sum_exp(logs);
  }

 private:
  void trim() {
    while (!coeffs_.empty() && coeffs_.back().numerator() == 0) coeffs_.pop_back();
  }

  Rational leading_{0};
  Rational step_{1};
  std::vector<Rational> coeffs_;
  Rational level_max_{0};
};

/// Exact expansion of the Z3 parafermion vacuum-orbit character
///
///   ch_{0,l} = q^{-1/30} sum_{n1,n2 >= 0, n1 + 2 n2 = l mod 3}
///              q^{(2/3)(n1^2 + n1 n2 + n2^2)} / ((q)_{n1} (q)_{n2})
///
/// complete for every exponent up to the leading exponent + level_max.
inline QExpansion z3_parafermion_character(int l, const Rational& level_max) {
  if (l < 0 || l > 2) throw DomainError("z3_parafermion_character: l must be 0, 1 or 2");
  if (level_max.numerator() < 0) throw DomainError("z3_parafermion_character: level_max must be >= 0");
  const Rational prefactor(-1, 30);
  auto quad = [](std::int64_t a, std::int64_t b) {
    return Rational(2 * (a * a + a * b + b * b), 3);
  };
  // Minimal quadratic term per residue class: (0,0), (1,0), (0,1).
  const Rational lead = (l == 0) ? Rational(0) : Rational(2, 3);
  const Rational top = lead + level_max;
  const std::int64_t degree = floor(top) + 1;

  std::map<Rational, Rational> terms;
  for (std::int64_t n1 = 0; quad(n1, 0) <= top; ++n1) {
    for (std::int64_t n2 = 0; quad(n1, n2) <= top; ++n2) {
      if ((n1 + 2 * n2) % 3 != l) continue;
      const Rational base = quad(n1, n2);
      const auto s1 = inverse_pochhammer_series(n1, degree);
      const auto s2 = inverse_pochhammer_series(n2, degree);
      for (std::int64_t k = 0; base + k <= top; ++k) {
        std::int64_t c = 0;
        for (std::int64_t i = 0; i <= k; ++i) c += s1[i] * s2[k - i];
        terms[prefactor + base + k] += c;
      }
    }
  }
  return QExpansion::from_terms(terms, level_max);
}

/// Weighted log-domain accumulator with charge moments.
///
/// Holds sum_i w_i, the weighted mean of the charges q_i and their centred
/// second moment, with all weights stored relative to exp(log_scale()). The
/// scale follows the largest log-weight seen, so neither underflow nor
/// overflow occurs for any finite input.
class LogSeriesAccumulator {
 public:
  void add(double log_weight, double charge) {
    if (!std::isfinite(log_weight)) {
      if (log_weight == -std::numeric_limits<double>::infinity()) return;
      throw DomainError("LogSeriesAccumulator: non-finite log-weight");
    }
    double w;
    if (count_ == 0) {
      scale_ = log_weight;
      w = 1.0;
    } else if (log_weight > scale_) {
      const double r = std::exp(scale_ - log_weight);
      weight_ *= r;
      m2_ *= r;
      scale_ = log_weight;
      w = 1.0;
    } else {
      w = std::exp(log_weight - scale_);
    }
    ++count_;
    if (w == 0.0) return;
    const double total = weight_ + w;
    const double delta = charge - mean_;
    mean_ += delta * (w / total);
    m2_ += w * delta * (charge - mean_);
    weight_ = total;
  }

  /// Combines two accumulators as if their term streams were concatenated.
  void merge(const LogSeriesAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double hi = std::max(scale_, other.scale_);
    const double wa = weight_ * std::exp(scale_ - hi);
    const double ma2 = m2_ * std::exp(scale_ - hi);
    const double wb = other.weight_ * std::exp(other.scale_ - hi);
    const double mb2 = other.m2_ * std::exp(other.scale_ - hi);
    const double total = wa + wb;
    const double delta = other.mean_ - mean_;
    mean_ = (total > 0.0) ? mean_ + delta * (wb / total) : mean_;
    m2_ = ma2 + mb2 + (total > 0.0 ? delta * delta * wa * wb / total : 0.0);
    weight_ = total;
    scale_ = hi;
    count_ += other.count_;
  }

  /// Multiplies every weight by exp(log_factor).
  void scale_by(double log_factor) { scale_ += log_factor; }

  std::size_t count() const { return count_; }
  double log_scale() const { return scale_; }

  /// ln sum_i w_i.
  double log_value() const {
    if (count_ == 0) return -std::numeric_limits<double>::infinity();
    return scale_ + std::log(weight_);
  }
  /// S0, S1, S2 relative to exp(log_scale()).
  double s0() const { return weight_; }
  double s1() const { return weight_ * mean_; }
  double s2() const { return m2_ + weight_ * mean_ * mean_; }

  double mean() const { return mean_; }
  double variance() const {
    if (weight_ <= 0.0) return 0.0;
    return std::max(0.0, m2_ / weight_);
  }

 private:
  double scale_ = -std::numeric_limits<double>::infinity();
  double weight_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  std::size_t count_ = 0;
};

struct LogTerm {
  double log_weight;
  double charge;
};

/// Accumulates a non-empty stream of (log-weight, charge) terms.
template <std::ranges::input_range R>
  requires std::convertible_to<std::ranges::range_value_t<R>, LogTerm>
LogSeriesAccumulator accumulate_log_terms(R&& terms) {
  LogSeriesAccumulator acc;
  for (const LogTerm& term : terms) acc.add(term.log_weight, term.charge);
  if (acc.count() == 0) throw std::invalid_argument("accumulate_log_terms: empty stream");
  return acc;
}

}  // namespace fqhcb
