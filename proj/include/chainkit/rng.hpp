#pragma once

#include <cmath>
#include <cstdint>

namespace chainkit {

namespace detail {

// SplitMix64 finalizer: a 64-bit bijective mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based random stream: the n-th output is a pure function of
/// (seed, stream, n), so streams can be split per trajectory and consumed in
/// parallel without any shared state, and results do not depend on scheduling.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream)
      : key_(detail::mix64(seed + 0x9e3779b97f4a7c15ull * (stream + 1)) ^
             detail::mix64(stream ^ 0xd1b54a32d192ed03ull)) {}

  static RandomStream split(std::uint64_t seed, std::uint64_t stream) {
    return RandomStream(seed, stream);
  }

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ull;
    return detail::mix64(key_ ^ counter_);
  }

  /// Uniform draw on the open interval (0, 1).
  double uniform() {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  /// Unit-mean exponential draw.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace chainkit
