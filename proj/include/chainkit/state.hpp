#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace chainkit {

/// A point of a countable state space: a tuple of signed integers.
/// Keys compare lexicographically; equality is coordinate-wise. Tuples of up
/// to two coordinates live inline, so the common lattice cases never touch
/// the heap on the simulation hot paths.
class StateKey {
 public:
  StateKey() = default;

  StateKey(std::initializer_list<std::int64_t> coords) { assign(coords.begin(), coords.size()); }

  explicit StateKey(const std::vector<std::int64_t>& coords) {
    assign(coords.data(), coords.size());
  }

  /// One-dimensional key.
  static StateKey scalar(std::int64_t x) {
    StateKey key;
    key.size_ = 1;
    key.small_[0] = x;
    return key;
  }

  std::size_t dimension() const { return size_; }
  std::int64_t operator[](std::size_t i) const { return data()[i]; }

  const std::int64_t* begin() const { return data(); }
  const std::int64_t* end() const { return data() + size_; }

  /// Scalar value of a 1-d key (first coordinate otherwise).
  std::int64_t value() const { return size_ == 0 ? 0 : data()[0]; }

  friend bool operator==(const StateKey& a, const StateKey& b) {
    return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
  }
  friend bool operator!=(const StateKey& a, const StateKey& b) { return !(a == b); }
  friend bool operator<(const StateKey& a, const StateKey& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
  friend bool operator<=(const StateKey& a, const StateKey& b) { return !(b < a); }
  friend bool operator>(const StateKey& a, const StateKey& b) { return b < a; }
  friend bool operator>=(const StateKey& a, const StateKey& b) { return !(a < b); }

  std::string to_string() const {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < size_; ++i) {
      if (i > 0) out << ',';
      out << data()[i];
    }
    out << ')';
    return out.str();
  }

 private:
  void assign(const std::int64_t* coords, std::size_t count) {
    size_ = count;
    if (count <= kInlineCapacity) {
      std::copy(coords, coords + count, small_.begin());
    } else {
      overflow_.assign(coords, coords + count);
    }
  }

  const std::int64_t* data() const {
    return size_ <= kInlineCapacity ? small_.data() : overflow_.data();
  }

  static constexpr std::size_t kInlineCapacity = 2;
  std::array<std::int64_t, kInlineCapacity> small_{};
  std::vector<std::int64_t> overflow_;
  std::size_t size_ = 0;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& key) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ key.dimension();
    for (std::int64_t c : key) {
      std::uint64_t z = h + 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(c);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      h = z ^ (z >> 31);
    }
    return static_cast<std::size_t>(h);
  }
};

/// Bijection between discovered StateKeys and dense indices 0..N-1.
/// Indices are assigned in discovery (insertion) order and never change.
/// Discovery mutates the indexer: synchronize externally or give each
/// thread its own copy.
class StateIndexer {
 public:
  /// Index of `key`, assigning the next free index on first sight.
  int index_of(const StateKey& key) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<int>(keys_.size()));
    if (inserted) keys_.push_back(key);
    return it->second;
  }

  /// Index of `key` if already discovered, else -1.
  int find(const StateKey& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? -1 : it->second;
  }

  bool contains(const StateKey& key) const { return index_.count(key) > 0; }
  const StateKey& key_of(int index) const { return keys_[static_cast<std::size_t>(index)]; }
  int size() const { return static_cast<int>(keys_.size()); }
  const std::vector<StateKey>& keys() const { return keys_; }

 private:
  std::unordered_map<StateKey, int, StateKeyHash> index_;
  std::vector<StateKey> keys_;
};

}  // namespace chainkit
