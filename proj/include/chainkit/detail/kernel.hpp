#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "chainkit/model.hpp"
#include "chainkit/state.hpp"
#include "chainkit/truncation.hpp"

namespace chainkit::detail {

/// Rows of a model restricted to a truncation, flattened to CSR form over
/// dense truncation indices. Targets outside the truncation are kept as keys
/// with their weights so callers can route escaping mass explicitly.
struct TruncatedRows {
  std::vector<std::size_t> offsets;              // size n+1, into targets/weights
  std::vector<int> targets;                      // inside-truncation dense indices
  std::vector<double> weights;                   // matching weights
  std::vector<double> outside_weight;            // per row, total weight leaving
  std::vector<std::vector<std::pair<StateKey, double>>> outside;  // per row, escaping entries
  std::vector<double> total_weight;              // per row, full row weight

  int size() const { return static_cast<int>(offsets.size()) - 1; }
};

inline TruncatedRows build_truncated_rows(const ChainModel& model, const Truncation& trunc,
                                          bool keep_outside_entries = false) {
  TruncatedRows rows;
  int n = trunc.size();
  rows.offsets.assign(1, 0);
  rows.outside_weight.assign(std::size_t(n), 0.0);
  rows.total_weight.assign(std::size_t(n), 0.0);
  if (keep_outside_entries) rows.outside.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    TransitionRow row = model.row(trunc.state(i));
    for (const auto& [target, weight] : row.entries) {
      if (weight == 0.0) continue;
      rows.total_weight[std::size_t(i)] += weight;
      int j = trunc.index_of(target);
      if (j >= 0) {
        rows.targets.push_back(j);
        rows.weights.push_back(weight);
      } else {
        rows.outside_weight[std::size_t(i)] += weight;
        if (keep_outside_entries) rows.outside[std::size_t(i)].push_back({target, weight});
      }
    }
    rows.offsets.push_back(rows.targets.size());
  }
  return rows;
}

/// Transposed view: for each truncation state, the list of in-truncation
/// predecessors with weights. Used by gather-style sweeps.
struct TruncatedColumns {
  std::vector<std::size_t> offsets;
  std::vector<int> sources;
  std::vector<double> weights;
};

inline TruncatedColumns transpose(const TruncatedRows& rows) {
  int n = rows.size();
  std::vector<std::size_t> counts(std::size_t(n) + 1, 0);
  for (int t : rows.targets) ++counts[std::size_t(t) + 1];
  for (int i = 0; i < n; ++i) counts[std::size_t(i) + 1] += counts[std::size_t(i)];
  TruncatedColumns cols;
  cols.offsets = counts;
  cols.sources.assign(rows.targets.size(), 0);
  cols.weights.assign(rows.targets.size(), 0.0);
  std::vector<std::size_t> cursor = counts;
  for (int i = 0; i < n; ++i) {
    for (std::size_t k = rows.offsets[std::size_t(i)]; k < rows.offsets[std::size_t(i) + 1]; ++k) {
      std::size_t slot = cursor[std::size_t(rows.targets[k])]++;
      cols.sources[slot] = i;
      cols.weights[slot] = rows.weights[k];
    }
  }
  return cols;
}

/// Window [klo, khi] and weights of a Poisson(a) distribution covering all
/// but at most `tail` mass on each side. Weights are evaluated term by term
/// in log space, so no normalization ever pushes them above the true values.
struct PoissonWindow {
  std::int64_t klo = 0;
  std::int64_t khi = 0;
  std::vector<double> weights;  // weights[k - klo] ~= exp(-a) a^k / k!
};

inline double poisson_log_pmf(double a, std::int64_t k) {
  if (a == 0.0) return k == 0 ? 0.0 : -INFINITY;
  return -a + static_cast<double>(k) * std::log(a) - std::lgamma(static_cast<double>(k) + 1.0);
}

// Chernoff bound on the Poisson(a) tail beyond k (upper tail for k >= a,
// lower tail for k <= a): P <= exp(-a + k - k log(k/a)).
inline double poisson_tail_log_bound(double a, std::int64_t k) {
  if (k <= 0) return 0.0;
  double kd = static_cast<double>(k);
  return -a + kd - kd * std::log(kd / a);
}

inline PoissonWindow poisson_window(double a, double tail) {
  PoissonWindow window;
  if (a <= 0.0) {
    window.weights = {1.0};
    return window;
  }
  double log_tail = std::log(tail);
  std::int64_t mode = static_cast<std::int64_t>(a);
  std::int64_t khi = mode;
  while (poisson_tail_log_bound(a, khi + 1) > log_tail) ++khi;
  std::int64_t klo = mode;
  while (klo > 0 && poisson_tail_log_bound(a, klo - 1) > log_tail) --klo;
  window.klo = klo;
  window.khi = khi;
  window.weights.reserve(std::size_t(khi - klo + 1));
  for (std::int64_t k = klo; k <= khi; ++k) {
    window.weights.push_back(std::exp(poisson_log_pmf(a, k)));
  }
  return window;
}

/// Extended-precision Poisson weights for the squaring path, where weight
/// rounding is amplified by the number of effective uniformization steps.
struct PoissonWindowExt {
  std::int64_t klo = 0;
  std::int64_t khi = 0;
  std::vector<long double> weights;
};

inline PoissonWindowExt poisson_window_ext(double a, double tail) {
  PoissonWindow plain = poisson_window(a, tail);
  PoissonWindowExt window;
  window.klo = plain.klo;
  window.khi = plain.khi;
  window.weights.reserve(plain.weights.size());
  long double la = static_cast<long double>(a);
  for (std::int64_t k = window.klo; k <= window.khi; ++k) {
    long double log_pmf = -la + static_cast<long double>(k) * std::log(la) -
                          std::lgamma(static_cast<long double>(k) + 1.0L);
    window.weights.push_back(std::exp(log_pmf));
  }
  return window;
}

}  // namespace chainkit::detail
