#pragma once

#include <cstdint>
#include <vector>

#include "chainkit/errors.hpp"
#include "chainkit/model.hpp"
#include "chainkit/state.hpp"

namespace chainkit {

/// A finite ordered set of states used by the truncation-based solvers.
/// Construction preserves first-seen order and drops duplicates, so nested
/// truncations built by repeated expansion keep stable indices.
class Truncation {
 public:
  Truncation() = default;

  explicit Truncation(const std::vector<StateKey>& states) {
    for (const StateKey& s : states) indexer_.index_of(s);
    if (indexer_.size() == 0) throw ValidationError("truncation must be nonempty");
  }

  /// Axis-aligned box, one inclusive [lo, hi] interval per coordinate.
  /// States are enumerated in lexicographic order.
  static Truncation box(const std::vector<std::pair<std::int64_t, std::int64_t>>& bounds) {
    if (bounds.empty()) throw ValidationError("truncation box needs at least one coordinate");
    for (const auto& [lo, hi] : bounds) {
      if (lo > hi) throw ValidationError("truncation box has an empty interval");
    }
    std::vector<StateKey> states;
    std::vector<std::int64_t> point(bounds.size());
    for (std::size_t i = 0; i < bounds.size(); ++i) point[i] = bounds[i].first;
    while (true) {
      states.emplace_back(point);
      std::size_t i = bounds.size();
      while (i-- > 0) {
        if (point[i] < bounds[i].second) {
          ++point[i];
          break;
        }
        point[i] = bounds[i].first;
        if (i == 0) return Truncation(states);
      }
    }
  }

  static Truncation range(std::int64_t lo, std::int64_t hi) { return box({{lo, hi}}); }

  bool contains(const StateKey& x) const { return indexer_.contains(x); }
  int index_of(const StateKey& x) const { return indexer_.find(x); }
  const StateKey& state(int index) const { return indexer_.key_of(index); }
  int size() const { return indexer_.size(); }
  const std::vector<StateKey>& states() const { return indexer_.keys(); }

  /// True if some transition of `x` under `model` leaves this truncation.
  bool is_boundary(const ChainModel& model, const StateKey& x) const {
    for (const auto& [target, weight] : model.row(x).entries) {
      if (weight > 0.0 && !contains(target)) return true;
    }
    return false;
  }

  /// This truncation enlarged by every one-step target of its members.
  /// Existing states keep their indices.
  Truncation expanded_frontier(const ChainModel& model) const {
    Truncation out = *this;
    for (const StateKey& x : states()) {
      for (const auto& [target, weight] : model.row(x).entries) {
        if (weight > 0.0) out.indexer_.index_of(target);
      }
    }
    return out;
  }

  /// Adds a state (used by callers assembling truncations incrementally).
  void insert(const StateKey& x) { indexer_.index_of(x); }

 private:
  StateIndexer indexer_;
};

}  // namespace chainkit
