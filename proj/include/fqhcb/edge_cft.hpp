#pragma once

// Algebraic structure of a fractional quantum Hall edge: filling factor,
// neutral CFT data, electron operator, monodromy charge, pairing rule and the
// Z_{n_H}-graded decomposition of a sector into charged x neutral products.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "fqhcb/errors.hpp"
#include "fqhcb/qseries.hpp"
#include "fqhcb/rational.hpp"

namespace fqhcb {

/// Level up to which neutral characters are expanded and cached.
inline constexpr std::int64_t kCharacterCacheLevel = 64;

struct FillingFactor {
  std::int64_t n_H = 1;
  std::int64_t d_H = 1;

  Rational nu() const { return Rational(n_H, d_H); }
  /// Lattice parameter of the rational u(1) extension, m = n_H d_H.
  std::int64_t m() const { return n_H * d_H; }
};

struct NeutralSector {
  std::string label;
  Rational weight;  // conformal dimension
};

using CharacterProvider = std::function<QExpansion(std::size_t sector, const Rational& level_max)>;

/// Neutral part of the edge CFT, restricted to the sectors the thermodynamics
/// needs (the orbit of the vacuum under fusion with the electron's charge).
class NeutralModel {
 public:
  NeutralModel(std::string name, Rational central_charge, std::vector<NeutralSector> sectors,
               std::size_t omega, std::vector<std::size_t> fuse_with_omega,
               CharacterProvider characters, int pairing_sign)
      : name_(std::move(name)), central_charge_(central_charge), sectors_(std::move(sectors)),
        omega_(omega), fuse_(std::move(fuse_with_omega)), characters_(std::move(characters)),
        pairing_sign_(pairing_sign) {
    if (sectors_.empty()) throw ModelError("NeutralModel: no sectors");
    if (fuse_.size() != sectors_.size()) throw ModelError("NeutralModel: fusion table size mismatch");
    if (omega_ >= sectors_.size()) throw ModelError("NeutralModel: omega out of range");
    for (std::size_t f : fuse_) {
      if (f >= sectors_.size()) throw ModelError("NeutralModel: fusion result out of range");
    }
    if (pairing_sign_ != 1 && pairing_sign_ != -1) throw ModelError("NeutralModel: pairing sign must be +-1");
    auto cache = std::make_shared<std::vector<QExpansion>>();
    for (std::size_t i = 0; i < sectors_.size(); ++i) {
      cache->push_back(characters_(i, Rational(kCharacterCacheLevel)));
    }
    cache_ = std::move(cache);
  }

  const std::string& name() const { return name_; }
  /// c^(0), the central charge of the neutral Virasoro algebra.
  const Rational& central_charge() const { return central_charge_; }
  std::size_t size() const { return sectors_.size(); }
  const std::vector<NeutralSector>& sectors() const { return sectors_; }
  std::size_t omega() const { return omega_; }
  std::size_t vacuum() const { return 0; }
  int pairing_sign() const { return pairing_sign_; }

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < sectors_.size(); ++i) {
      if (sectors_[i].label == label) return i;
    }
    throw ModelError("unknown neutral sector '" + label + "' in model " + name_);
  }
  const std::string& label(std::size_t i) const { return at(i).label; }
  const Rational& weight(std::size_t i) const { return at(i).weight; }

  std::size_t fuse_with_omega(std::size_t i) const {
    at(i);
    return fuse_[i];
  }
  /// omega^s * Lambda.
  std::size_t fuse_with_omega_power(std::size_t i, std::int64_t s) const {
    for (std::int64_t k = 0; k < s; ++k) i = fuse_with_omega(i);
    return i;
  }

  /// Exact character expansion, complete up to leading exponent + level_max.
  QExpansion character(std::size_t i, const Rational& level_max) const {
    at(i);
    if (level_max.numerator() < 0) throw DomainError("character: level_max must be >= 0");
    if (level_max <= Rational(kCharacterCacheLevel)) {
      const QExpansion& full = (*cache_)[i];
      auto terms = full.terms();
      std::map<Rational, Rational> kept;
      for (const auto& [e, c] : terms) {
        if (e <= full.leading_exponent() + level_max) kept.emplace(e, c);
      }
      return QExpansion::from_terms(kept, level_max);
    }
    return characters_(i, level_max);
  }

  /// Expansion cached at kCharacterCacheLevel; used by the thermodynamics.
  const QExpansion& cached_character(std::size_t i) const {
    at(i);
    return (*cache_)[i];
  }

 private:
  const NeutralSector& at(std::size_t i) const {
    if (i >= sectors_.size()) throw ModelError("neutral sector index out of range in model " + name_);
    return sectors_[i];
  }

  std::string name_;
  Rational central_charge_;
  std::vector<NeutralSector> sectors_;
  std::size_t omega_;
  std::vector<std::size_t> fuse_;
  CharacterProvider characters_;
  int pairing_sign_;
  std::shared_ptr<const std::vector<QExpansion>> cache_;
};

struct FQHState {
  std::string name;
  FillingFactor filling;
  NeutralModel neutral;
};

/// (l, Lambda): charge label l (electric charge l/d_H) and neutral sector.
struct Sector {
  std::int64_t l = 0;
  std::size_t neutral = 0;

  friend bool operator==(const Sector&, const Sector&) = default;
};

/// Z3 parafermion vacuum orbit {1, psi1, psi2}: omega = psi1, c^(0) = 4/5,
/// Delta(psi1) = Delta(psi2) = 2/3.
inline NeutralModel build_z3_parafermion_model() {
  std::vector<NeutralSector> sectors{
      {"vac", Rational(0)}, {"psi1", Rational(2, 3)}, {"psi2", Rational(2, 3)}};
  // psi1 * vac = psi1, psi1 * psi1 = psi2, psi1 * psi2 = vac
  std::vector<std::size_t> fuse{1, 2, 0};
  auto chars = [](std::size_t i, const Rational& level_max) {
    return z3_parafermion_character(static_cast<int>(i), level_max);
  };
  return NeutralModel("z3-parafermion", Rational(4, 5), std::move(sectors), 1, std::move(fuse),
                      chars, -1);
}

/// Trivial neutral sector (Laughlin states). The whole c = 1 lives in the
/// charged part, so c^(0) = 0 and the character is identically 1.
inline NeutralModel build_laughlin_model() {
  std::vector<NeutralSector> sectors{{"vac", Rational(0)}};
  auto chars = [](std::size_t, const Rational& level_max) {
    return QExpansion(Rational(0), Rational(1), {Rational(1)}, level_max);
  };
  return NeutralModel("trivial", Rational(0), std::move(sectors), 0, {0}, chars, -1);
}

inline NeutralModel build_neutral_model(const std::string& name) {
  if (name == "z3-parafermion" || name == "z3") return build_z3_parafermion_model();
  if (name == "trivial" || name == "laughlin") return build_laughlin_model();
  throw ConfigError("unknown neutral model '" + name + "'");
}

/// Exact character of the named sector, complete up to level_max above its
/// leading exponent.
inline QExpansion expand_character(const NeutralModel& model, const std::string& label,
                                   const Rational& level_max) {
  return model.character(model.index_of(label), level_max);
}

/// Delta_el = d_H / (2 n_H) + Delta(omega).
inline Rational electron_dimension(const FQHState& state) {
  return Rational(state.filling.d_H, 2 * state.filling.n_H) +
         state.neutral.weight(state.neutral.omega());
}

/// Q_omega(Lambda) = Delta(omega*Lambda) - Delta(Lambda) - Delta(omega) mod 1.
inline Rational monodromy_charge(const NeutralModel& model, std::size_t sector) {
  const std::size_t fused = model.fuse_with_omega(sector);
  return mod1(model.weight(fused) - model.weight(sector) - model.weight(model.omega()));
}

/// Checks the state's structural consistency; returns one message per
/// violated condition (empty when valid).
inline std::vector<std::string> validate_state(const FQHState& state) {
  std::vector<std::string> diag;
  const auto& f = state.filling;
  const auto& model = state.neutral;
  if (f.n_H <= 0 || f.d_H <= 0) {
    diag.push_back("filling factor must have positive numerator and denominator");
    return diag;
  }
  if (std::gcd(f.n_H, f.d_H) != 1) {
    diag.push_back("gcd(n_H, d_H) = " + std::to_string(std::gcd(f.n_H, f.d_H)) + " != 1");
  }
  const Rational theta = 2 * electron_dimension(state);
  if (!is_integer(theta) || theta.numerator() <= 0 || theta.numerator() % 2 == 0) {
    diag.push_back("electron statistics 2*Delta_el = " + to_string(theta) +
                   " is not an odd positive integer");
  }
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (model.fuse_with_omega_power(i, f.n_H) != i) {
      diag.push_back("omega-orbit of sector " + model.label(i) + " does not close after n_H = " +
                     std::to_string(f.n_H) + " fusions");
    }
  }
  if (model.size() > 1 && model.central_charge().numerator() <= 0) {
    diag.push_back("neutral central charge must be positive");
  }
  const Rational offset = model.central_charge() / 24;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& ch = model.cached_character(i);
    const Rational expected = model.weight(i) - offset;
    if (ch.empty() || ch.leading_exponent() != expected) {
      diag.push_back("character of sector " + model.label(i) + " starts at q^" +
                     to_string(ch.leading_exponent()) + ", expected q^" + to_string(expected));
    }
  }
  return diag;
}

/// Pairing rule n_H Q_omega(Lambda) = sigma * l (mod n_H), sigma being the
/// model's sign convention.
inline bool pairing_admissible(const FQHState& state, std::int64_t l, std::size_t sector) {
  const std::int64_t n = state.filling.n_H;
  const Rational lhs = n * monodromy_charge(state.neutral, sector);
  if (!is_integer(lhs)) {
    throw ModelError("n_H * Q_omega(" + state.neutral.label(sector) + ") = " + to_string(lhs) +
                     " is not an integer: inconsistent neutral model");
  }
  const std::int64_t diff = lhs.numerator() - state.neutral.pairing_sign() * l;
  return ((diff % n) + n) % n == 0;
}

/// Representative of l mod m in (-m/2, m/2].
inline std::int64_t display_charge(std::int64_t l, std::int64_t m) {
  std::int64_t r = ((l % m) + m) % m;
  if (2 * r > m) r -= m;
  return r;
}

/// [(l + s d_H mod m, omega^s * Lambda)] for s = 0 .. n_H - 1.
inline std::vector<Sector> decompose_sector(const FQHState& state, const Sector& sector) {
  if (!pairing_admissible(state, sector.l, sector.neutral)) {
    throw ModelError("sector (" + std::to_string(sector.l) + ", " +
                     state.neutral.label(sector.neutral) + ") violates the pairing rule");
  }
  const auto& f = state.filling;
  const std::int64_t m = f.m();
  std::vector<Sector> out;
  out.reserve(static_cast<std::size_t>(f.n_H));
  for (std::int64_t s = 0; s < f.n_H; ++s) {
    const std::int64_t l = (((sector.l + s * f.d_H) % m) + m) % m;
    out.push_back({l, state.neutral.fuse_with_omega_power(sector.neutral, s)});
  }
  return out;
}

inline FQHState make_state(std::string name, FillingFactor filling, const std::string& model) {
  return FQHState{std::move(name), filling, build_neutral_model(model)};
}

/// Named presets: "rr-z3" (nu = 3/5 Read-Rezayi) and "laughlin:<d_H>".
inline FQHState make_preset(const std::string& preset) {
  if (preset == "rr-z3") {
    return FQHState{"rr-z3", {3, 5}, build_z3_parafermion_model()};
  }
  const std::string prefix = "laughlin:";
  if (preset.rfind(prefix, 0) == 0) {
    const std::string digits = preset.substr(prefix.size());
    std::size_t used = 0;
    long long d = 0;
    try {
      d = std::stoll(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (digits.empty() || used != digits.size() || d <= 0) {
      throw ConfigError("bad Laughlin denominator in preset '" + preset + "'");
    }
    return FQHState{preset, {1, d}, build_laughlin_model()};
  }
  throw ConfigError("unknown state preset '" + preset + "'");
}

}  // namespace fqhcb
