#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "chainkit/distribution.hpp"
#include "chainkit/errors.hpp"
#include "chainkit/state.hpp"

namespace chainkit {

/// Validation tolerance for masses and row sums. Parametric families produce
/// rows analytically, so there is no allowance for loose input data.
inline constexpr double kMassTolerance = 1e-12;

enum class ChainKind { Discrete, Continuous };

inline const char* to_string(ChainKind kind) {
  return kind == ChainKind::Discrete ? "discrete" : "continuous";
}

/// One row of a one-step matrix (weights are probabilities, sum to 1) or of a
/// rate matrix (weights are off-diagonal rates; the diagonal is implied).
/// Entries are kept sorted by target key with distinct targets.
struct TransitionRow {
  std::vector<std::pair<StateKey, double>> entries;

  double total_weight() const {
    double sum = 0.0;
    for (const auto& [target, weight] : entries) sum += weight;
    return sum;
  }
};

/// A chain model: a lazy sparse row oracle over a countable state space plus
/// an initial distribution. Rows are validated on every query; models are
/// immutable after construction and safe to share across threads.
class ChainModel {
 public:
  using RowOracle = std::function<TransitionRow(const StateKey&)>;

  ChainModel(ChainKind kind, RowOracle oracle, SparseDistribution gamma, std::string name = {},
             std::map<std::string, double> params = {})
      : kind_(kind),
        oracle_(std::move(oracle)),
        gamma_(std::move(gamma)),
        name_(std::move(name)),
        params_(std::move(params)) {
    if (std::abs(gamma_.mass() - 1.0) > kMassTolerance) {
      throw ValidationError("initial distribution mass " + std::to_string(gamma_.mass()) +
                            " is not 1 within 1e-12");
    }
  }

  ChainKind kind() const { return kind_; }
  const SparseDistribution& gamma() const { return gamma_; }
  const std::string& name() const { return name_; }
  const std::map<std::string, double>& params() const { return params_; }

  /// Validated transition row of `x`: sorted, distinct targets, nonnegative
  /// finite weights; discrete rows sum to 1 within 1e-12, continuous rows
  /// carry off-diagonal entries only.
  TransitionRow row(const StateKey& x) const {
    TransitionRow row = oracle_(x);
    std::sort(row.entries.begin(), row.entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double sum = 0.0;
    for (std::size_t i = 0; i < row.entries.size(); ++i) {
      const auto& [target, weight] = row.entries[i];
      if (!(weight >= 0.0) || !std::isfinite(weight)) {
        throw ValidationError("row of " + x.to_string() + ": weight " + std::to_string(weight) +
                              " to " + target.to_string() + " must be finite and >= 0");
      }
      if (i > 0 && row.entries[i - 1].first == target) {
        throw ValidationError("row of " + x.to_string() + ": duplicate target " +
                              target.to_string());
      }
      if (kind_ == ChainKind::Continuous && target == x) {
        throw ValidationError("row of " + x.to_string() +
                              ": continuous rows must not carry a diagonal entry");
      }
      sum += weight;
    }
    if (kind_ == ChainKind::Discrete && std::abs(sum - 1.0) > kMassTolerance) {
      throw ValidationError("row of " + x.to_string() + ": mass " + std::to_string(sum) +
                            " is not 1 within 1e-12");
    }
    if (!std::isfinite(sum)) {
      throw ValidationError("row of " + x.to_string() + ": total rate is not finite");
    }
    return row;
  }

  /// Total exit rate q(x) of a continuous model.
  double total_rate(const StateKey& x) const { return row(x).total_weight(); }

 private:
  ChainKind kind_;
  RowOracle oracle_;
  SparseDistribution gamma_;
  std::string name_;
  std::map<std::string, double> params_;
};

/// Jump matrix P(x,.) and jump rates lambda(x) of a rate matrix: for
/// q(x) > 0, P(x,y) = q(x,y)/q(x) and lambda(x) = q(x); absorbing states get
/// the identity row and unit rate.
class JumpDecomposition {
 public:
  explicit JumpDecomposition(const ChainModel& source)
      : source_(std::make_shared<ChainModel>(source)),
        jump_chain_(ChainKind::Discrete, make_oracle(source_), source.gamma(),
                    source.name() + ":jump", source.params()) {
    if (source.kind() != ChainKind::Continuous) {
      throw ValidationError("jump decomposition requires a continuous model");
    }
  }

  /// Embedded discrete-time chain, started from the same initial law.
  const ChainModel& jump_chain() const { return jump_chain_; }

  double jump_rate(const StateKey& x) const {
    double q = source_->total_rate(x);
    return q > 0.0 ? q : 1.0;
  }

 private:
  static ChainModel::RowOracle make_oracle(std::shared_ptr<ChainModel> source) {
    return [source](const StateKey& x) {
      TransitionRow row = source->row(x);
      double q = row.total_weight();
      if (q <= 0.0) {
        return TransitionRow{{{x, 1.0}}};
      }
      for (auto& [target, weight] : row.entries) weight /= q;
      return row;
    };
  }

  std::shared_ptr<ChainModel> source_;
  ChainModel jump_chain_;
};

inline JumpDecomposition jump_decomposition(const ChainModel& model) {
  return JumpDecomposition(model);
}

// ---------------------------------------------------------------------------
// Built-in model families.
// ---------------------------------------------------------------------------

/// Gambler's ruin on {0..K}: from 0 < x < K move down with probability 1-a
/// and up with probability a; 0 and K are absorbing.
inline ChainModel make_gambler(double a, std::int64_t capital, SparseDistribution gamma) {
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("gambler: a must lie in (0,1)");
  if (capital < 2) throw ValidationError("gambler: K must be >= 2");
  auto oracle = [a, capital](const StateKey& state) {
    std::int64_t x = state.value();
    if (x <= 0 || x >= capital) return TransitionRow{{{state, 1.0}}};
    return TransitionRow{{{StateKey::scalar(x - 1), 1.0 - a}, {StateKey::scalar(x + 1), a}}};
  };
  return ChainModel(ChainKind::Discrete, oracle, std::move(gamma), "gambler",
                    {{"a", a}, {"K", static_cast<double>(capital)}});
}

// Geometric rates saturate at this value instead of overflowing to infinity,
// which would void the finite-row axiom for states past ~1000 on paths that
// chase an explosion.
inline constexpr double kMaxFamilyRate = 1e300;

namespace detail {

// base^x saturated at kMaxFamilyRate declared below, tabulated for the
// nonnegative range so paths that chase an explosion do not grind through
// std::pow on every jump.
class GeometricRate {
 public:
  GeometricRate(double base, double cap) : base_(base), cap_(cap) {
    double value = 1.0;
    table_.push_back(value);
    while (value < cap && table_.size() < 4096) {
      value = std::min(value * base, cap);
      table_.push_back(value);
    }
  }

  double operator()(std::int64_t x) const {
    if (x >= 0 && static_cast<std::size_t>(x) < table_.size()) {
      return table_[static_cast<std::size_t>(x)];
    }
    if (base_ > 1.0 && x >= static_cast<std::int64_t>(table_.size())) return cap_;
    return std::min(std::pow(base_, static_cast<double>(x)), cap_);
  }

 private:
  double base_;
  double cap_;
  std::vector<double> table_;
};

}  // namespace detail

/// Pure birth chain on the integers that moves one state up per jump with
/// rate base^x (saturating at kMaxFamilyRate). Explosive for base > 1.
inline ChainModel make_pure_birth_geometric(double base, SparseDistribution gamma) {
  if (!(base > 0.0)) throw ValidationError("pure-birth-geometric: base must be > 0");
  auto oracle = [rate = detail::GeometricRate(base, kMaxFamilyRate)](const StateKey& state) {
    std::int64_t x = state.value();
    double up = rate(x);
    if (up <= 0.0) return TransitionRow{};
    return TransitionRow{{{StateKey::scalar(x + 1), up}}};
  };
  return ChainModel(ChainKind::Continuous, oracle, std::move(gamma), "pure-birth-geometric",
                    {{"base", base}});
}

/// Birth-death rate chain on the nonnegative integers defined by rates
/// q(x,x+1) = 4^x and q(x,x-1) = 4^x/2; pi(x) = 2^-(x+1) solves pi Q = 0 yet
/// the chain is explosive and has no stationary distribution.
inline ChainModel make_miller(SparseDistribution gamma) {
  auto oracle = [rate = detail::GeometricRate(4.0, kMaxFamilyRate)](const StateKey& state) {
    std::int64_t x = state.value();
    if (x < 0) return TransitionRow{};
    double up = rate(x);
    TransitionRow row;
    if (x > 0) row.entries.push_back({StateKey::scalar(x - 1), up / 2.0});
    row.entries.push_back({StateKey::scalar(x + 1), up});
    return row;
  };
  return ChainModel(ChainKind::Continuous, oracle, std::move(gamma), "miller");
}

/// Continuous-time chain on {0,1} with rates q(0,1) = a and q(1,0) = b.
inline ChainModel make_two_state(double a, double b, SparseDistribution gamma) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw ValidationError("two-state: rates must be >= 0");
  auto oracle = [a, b](const StateKey& state) {
    std::int64_t x = state.value();
    TransitionRow row;
    if (x == 0 && a > 0.0) row.entries.push_back({StateKey::scalar(1), a});
    if (x == 1 && b > 0.0) row.entries.push_back({StateKey::scalar(0), b});
    return row;
  };
  return ChainModel(ChainKind::Continuous, oracle, std::move(gamma), "two-state",
                    {{"a", a}, {"b", b}});
}

/// Birth-death chain on the nonnegative integers with per-state birth and
/// death rates; the death rate applies only for x > 0.
inline ChainModel make_birth_death(std::function<double(std::int64_t)> birth,
                                   std::function<double(std::int64_t)> death,
                                   SparseDistribution gamma) {
  auto oracle = [birth = std::move(birth), death = std::move(death)](const StateKey& state) {
    std::int64_t x = state.value();
    if (x < 0) return TransitionRow{};
    TransitionRow row;
    if (x > 0) {
      double down = death(x);
      if (down < 0.0) throw ValidationError("birth-death: negative death rate at state " +
                                            std::to_string(x));
      if (down > 0.0) row.entries.push_back({StateKey::scalar(x - 1), down});
    }
    double up = birth(x);
    if (up < 0.0) throw ValidationError("birth-death: negative birth rate at state " +
                                        std::to_string(x));
    if (up > 0.0) row.entries.push_back({StateKey::scalar(x + 1), up});
    return row;
  };
  return ChainModel(ChainKind::Continuous, oracle, std::move(gamma), "birth-death");
}

/// Model with explicitly listed rows. Querying a state without a row is an
/// error: explicit models must cover every state reachable by the caller.
inline ChainModel make_explicit(ChainKind kind, std::map<StateKey, TransitionRow> rows,
                                SparseDistribution gamma) {
  auto shared = std::make_shared<std::map<StateKey, TransitionRow>>(std::move(rows));
  auto oracle = [shared](const StateKey& x) {
    auto it = shared->find(x);
    if (it == shared->end()) {
      throw ValidationError("explicit model has no row for state " + x.to_string());
    }
    return it->second;
  };
  return ChainModel(kind, oracle, std::move(gamma),
                    kind == ChainKind::Discrete ? "explicit-dt" : "explicit-ct");
}

/// Evaluates sum_k coeffs[k] * x^k.
inline double polynomial(const std::vector<double>& coeffs, double x) {
  double value = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) value = value * x + coeffs[k];
  return value;
}

}  // namespace chainkit
