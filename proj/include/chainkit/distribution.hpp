#pragma once

#include <cmath>
#include <map>
#include <utility>

#include "chainkit/errors.hpp"
#include "chainkit/state.hpp"

namespace chainkit {

/// Finitely supported nonnegative measure over states. Zero entries are
/// pruned so the support is exactly the set of stored keys. Entries are kept
/// in key order, which makes iteration (and file output) deterministic.
class SparseDistribution {
 public:
  using const_iterator = std::map<StateKey, double>::const_iterator;

  SparseDistribution() = default;

  static SparseDistribution point_mass(const StateKey& x) {
    SparseDistribution d;
    d.set(x, 1.0);
    return d;
  }

  void set(const StateKey& x, double mass) {
    if (mass < 0.0 || !std::isfinite(mass)) {
      throw ValidationError("distribution mass at " + x.to_string() + " must be finite and >= 0");
    }
    auto it = entries_.find(x);
    if (it != entries_.end()) {
      total_ -= it->second;
      entries_.erase(it);
    }
    if (mass > 0.0) {
      entries_.emplace(x, mass);
      total_ += mass;
    }
  }

  void add(const StateKey& x, double mass) {
    if (mass == 0.0) return;
    auto it = entries_.find(x);
    double next = mass + (it == entries_.end() ? 0.0 : it->second);
    if (it != entries_.end()) {
      total_ -= it->second;
      entries_.erase(it);
    }
    if (next < 0.0 || !std::isfinite(next)) {
      throw ValidationError("distribution mass at " + x.to_string() + " must be finite and >= 0");
    }
    if (next > 0.0) {
      entries_.emplace(x, next);
      total_ += next;
    }
  }

  double at(const StateKey& x) const {
    auto it = entries_.find(x);
    return it == entries_.end() ? 0.0 : it->second;
  }

  double mass() const { return total_; }
  std::size_t support_size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const_iterator begin() const { return entries_.begin(); }
  const_iterator end() const { return entries_.end(); }

  void scale(double factor) {
    if (factor < 0.0 || !std::isfinite(factor)) {
      throw ValidationError("scale factor must be finite and >= 0");
    }
    total_ = 0.0;
    for (auto it = entries_.begin(); it != entries_.end();) {
      it->second *= factor;
      if (it->second == 0.0) {
        it = entries_.erase(it);
      } else {
        total_ += it->second;
        ++it;
      }
    }
  }

  /// Normalized copy (mass 1). Requires positive mass.
  SparseDistribution normalized() const {
    if (total_ <= 0.0) throw ValidationError("cannot normalize a zero-mass distribution");
    SparseDistribution out = *this;
    out.scale(1.0 / total_);
    return out;
  }

 private:
  std::map<StateKey, double> entries_;
  double total_ = 0.0;
};

namespace detail {

/// Nudges the largest entry so the cached mass is exactly the target; the
/// defect is at the rounding level, so a couple of rounds suffice.
inline void pin_mass(SparseDistribution& dist, double target) {
  if (dist.empty()) return;
  StateKey heaviest;
  double best = -1.0;
  for (const auto& [state, mass] : dist) {
    if (mass > best) {
      best = mass;
      heaviest = state;
    }
  }
  for (int round = 0; round < 10 && dist.mass() != target; ++round) {
    dist.add(heaviest, target - dist.mass());
  }
}

}  // namespace detail

/// Total variation distance, sup_A |a(A) - b(A)|, between two finitely
/// supported nonnegative measures: half the l1 distance plus half the mass
/// difference. For a distribution and a pointwise lower bound of it this is
/// exactly the mass defect.
inline double total_variation(const SparseDistribution& a, const SparseDistribution& b) {
  double l1 = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      l1 += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      l1 += std::abs(ib->second);
      ++ib;
    } else {
      l1 += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * l1 + 0.5 * std::abs(a.mass() - b.mass());
}

inline double l1_distance(const SparseDistribution& a, const SparseDistribution& b) {
  double l1 = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      l1 += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      l1 += std::abs(ib->second);
      ++ib;
    } else {
      l1 += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return l1;
}

}  // namespace chainkit
