#pragma once

#include <cstdint>
#include <vector>

#include "chainkit/distribution.hpp"
#include "chainkit/errors.hpp"
#include "chainkit/model.hpp"
#include "chainkit/rng.hpp"
#include "chainkit/state.hpp"

namespace chainkit {

struct PathDT {
  std::vector<StateKey> states;  // X_0 .. X_n
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

enum class CtTermination { Horizon, JumpBudget };

struct PathCT {
  std::vector<StateKey> states;  // jump chain Y_0 .. Y_m
  std::vector<double> times;     // jump times, T_0 = 0
  CtTermination reason = CtTermination::Horizon;
  double horizon = 0.0;  // requested t_max
  /// Running sum of 1/lambda over visited states; by the jump-chain
  /// characterisation of explosion it stays bounded exactly when the path is
  /// heading for an explosion, so a small value under a large jump budget is
  /// the practical explosion signal.
  double explosion_diagnostic = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

struct EmpiricalDistribution {
  SparseDistribution weights;
  double horizon = 0.0;  // N for discrete paths, T for continuous ones
};

namespace detail {

// Inverse-CDF draw over entries sorted by state key: the first index whose
// cumulative weight reaches u * total.
inline const StateKey& pick_by_cdf(const std::vector<std::pair<StateKey, double>>& entries,
                                   double u, double total) {
  double threshold = u * total;
  double cumulative = 0.0;
  for (const auto& [state, weight] : entries) {
    cumulative += weight;
    if (threshold <= cumulative && weight > 0.0) return state;
  }
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (it->second > 0.0) return it->first;
  }
  throw ValidationError("cannot sample from an empty row");
}

inline StateKey sample_initial(const SparseDistribution& gamma, RandomStream& rng) {
  double threshold = rng.uniform() * gamma.mass();
  double cumulative = 0.0;
  const StateKey* last = nullptr;
  for (const auto& [state, mass] : gamma) {
    cumulative += mass;
    last = &state;
    if (threshold <= cumulative) return state;
  }
  if (last == nullptr) throw ValidationError("cannot sample from an empty initial distribution");
  return *last;
}

}  // namespace detail

/// Samples X_0 ~ gamma and n one-step transitions, each drawn by walking the
/// row's cumulative weights in state-key order. Trajectory `stream` of a run
/// uses its own counter-based stream, so ensembles are order-independent.
inline PathDT sample_path_dt(const ChainModel& model, long n_steps, std::uint64_t seed,
                             std::uint64_t stream = 0) {
  if (model.kind() != ChainKind::Discrete) {
    throw ValidationError("sample_path_dt requires a discrete model");
  }
  if (n_steps < 0) throw ValidationError("sample_path_dt: step count must be >= 0");
  RandomStream rng = RandomStream::split(seed, stream);
  PathDT path;
  path.seed = seed;
  path.stream = stream;
  path.states.reserve(std::size_t(n_steps) + 1);
  StateKey current = detail::sample_initial(model.gamma(), rng);
  path.states.push_back(current);
  for (long n = 0; n < n_steps; ++n) {
    TransitionRow row = model.row(current);
    current = detail::pick_by_cdf(row.entries, rng.uniform(), 1.0);
    path.states.push_back(current);
  }
  return path;
}

/// Kendall-Gillespie path: waiting times are unit exponentials scaled by
/// 1/q(Y), targets drawn from the jump matrix row. The path stops at the
/// first jump past `t_max` (reason Horizon, that jump discarded) or after
/// `max_jumps` jumps (reason JumpBudget, a reported outcome rather than an
/// error). Absorbing states end the path at the horizon; the fictitious
/// self-jumps of the construction are not materialized.
inline PathCT sample_path_ct(const ChainModel& model, double t_max, long max_jumps,
                             std::uint64_t seed, std::uint64_t stream = 0) {
  if (model.kind() != ChainKind::Continuous) {
    throw ValidationError("sample_path_ct requires a continuous model");
  }
  if (!(t_max > 0.0)) throw ValidationError("sample_path_ct: t_max must be > 0");
  if (max_jumps < 1) throw ValidationError("sample_path_ct: max_jumps must be >= 1");

  RandomStream rng = RandomStream::split(seed, stream);
  PathCT path;
  path.seed = seed;
  path.stream = stream;
  path.horizon = t_max;

  StateKey current = detail::sample_initial(model.gamma(), rng);
  path.states.push_back(current);
  path.times.push_back(0.0);
  TransitionRow row = model.row(current);
  double rate = row.total_weight();
  path.explosion_diagnostic += 1.0 / (rate > 0.0 ? rate : 1.0);

  double now = 0.0;
  for (long jumps = 0; jumps < max_jumps; ++jumps) {
    if (rate <= 0.0) {
      path.reason = CtTermination::Horizon;
      return path;
    }
    double u = rng.uniform();
    double wait = rng.exponential() / rate;
    if (now + wait > t_max) {
      path.reason = CtTermination::Horizon;
      return path;
    }
    now += wait;
    current = detail::pick_by_cdf(row.entries, u, rate);
    path.states.push_back(current);
    path.times.push_back(now);
    row = model.row(current);
    rate = row.total_weight();
    path.explosion_diagnostic += 1.0 / (rate > 0.0 ? rate : 1.0);
  }
  path.reason = CtTermination::JumpBudget;
  return path;
}

/// Fraction of the first N time-steps spent in each state.
inline EmpiricalDistribution empirical_distribution(const PathDT& path) {
  if (path.states.empty()) throw ValidationError("empirical_distribution: empty path");
  EmpiricalDistribution out;
  double n = static_cast<double>(path.states.size());
  for (const StateKey& state : path.states) out.weights.add(state, 1.0 / n);
  detail::pin_mass(out.weights, 1.0);
  out.horizon = n;
  return out;
}

/// Time-weighted occupancy over [0, T], piecewise-constant between jumps. The
/// mass is exactly 1 for horizon-terminated paths and T_m / T for
/// budget-terminated ones (the path is unknown past its last jump).
inline EmpiricalDistribution empirical_distribution(const PathCT& path) {
  if (path.states.empty()) throw ValidationError("empirical_distribution: empty path");
  EmpiricalDistribution out;
  out.horizon = path.horizon;
  double scale = 1.0 / path.horizon;
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    double start = path.times[k];
    double end = (k + 1 < path.states.size()) ? path.times[k + 1]
                 : path.reason == CtTermination::Horizon ? path.horizon
                                                         : path.times[k];
    if (end > start) out.weights.add(path.states[k], (end - start) * scale);
  }
  if (path.reason == CtTermination::Horizon) detail::pin_mass(out.weights, 1.0);
  return out;
}

}  // namespace chainkit
