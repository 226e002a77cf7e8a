#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "chainkit/detail/kernel.hpp"
#include "chainkit/detail/linalg.hpp"
#include "chainkit/distribution.hpp"
#include "chainkit/errors.hpp"
#include "chainkit/model.hpp"
#include "chainkit/truncation.hpp"

namespace chainkit {

struct SolverLog {
  long sweeps = 0;
  long series_terms = 0;
  long squarings = 0;
  double series_tail = 0.0;      // Poisson mass outside the summed window
  double truncation_leak = 0.0;  // mass routed to states outside the truncation
  bool exact_bookkeeping = false;
  /// Number of truncation states dropped because their rates were too stiff
  /// to integrate certifiably at the requested series tolerance.
  long stiffness_limited = 0;
};

/// Output bundle of the truncation-based law solvers: a certified lower bound
/// on the time-varying law together with its error bound.
struct TruncationResult {
  SparseDistribution distribution;
  double retained_mass = 0.0;
  double error_bound = 0.0;  // 1 - retained (+ series tolerance in continuous time)
  Truncation truncation;
  long horizon_steps = -1;   // discrete horizon, -1 if continuous
  double horizon_time = -1;  // continuous horizon, -1 if discrete
  bool converged = true;     // false only for adaptive runs that gave up
  std::string termination;   // adaptive runs: tolerance-met | budget-exceeded | stagnated
  SolverLog log;
};

/// Horizon of an adaptive solve: a step count or a time span.
struct Horizon {
  static Horizon steps(long n) { return Horizon{n, -1.0}; }
  static Horizon time(double t) { return Horizon{-1, t}; }
  bool is_discrete() const { return step_count >= 0; }

  long step_count = -1;
  double time_span = -1.0;
};

namespace detail {

inline std::vector<double> restrict_to(const SparseDistribution& dist, const Truncation& trunc) {
  std::vector<double> v(std::size_t(trunc.size()), 0.0);
  for (const auto& [state, mass] : dist) {
    int i = trunc.index_of(state);
    if (i >= 0) v[std::size_t(i)] = mass;
  }
  return v;
}

inline SparseDistribution to_sparse(const std::vector<double>& v, const Truncation& trunc,
                                    double cutoff = 0.0) {
  SparseDistribution out;
  for (int i = 0; i < trunc.size(); ++i) {
    if (v[std::size_t(i)] > cutoff) out.set(trunc.state(i), v[std::size_t(i)]);
  }
  return out;
}

// One FSP sweep: mass at truncation states pushed through their rows, with
// anything aimed outside the truncation dropped.
inline void fsp_sweep(const TruncatedRows& rows, const std::vector<double>& cur,
                      std::vector<double>& next) {
  std::fill(next.begin(), next.end(), 0.0);
  int n = rows.size();
  for (int i = 0; i < n; ++i) {
    double mass = cur[std::size_t(i)];
    if (mass == 0.0) continue;
    for (std::size_t k = rows.offsets[std::size_t(i)]; k < rows.offsets[std::size_t(i) + 1]; ++k) {
      next[std::size_t(rows.targets[k])] += mass * rows.weights[k];
    }
  }
}

// One sparse left-multiplication by the sub-stochastic uniformized matrix
// P = I + Q^r / lambda (targets outside the truncation dropped).
inline void uniformized_sweep(const TruncatedRows& rows, double lambda,
                              const std::vector<double>& cur, std::vector<double>& next) {
  int n = rows.size();
  for (int i = 0; i < n; ++i) {
    next[std::size_t(i)] = cur[std::size_t(i)] * (1.0 - rows.total_weight[std::size_t(i)] / lambda);
  }
  for (int i = 0; i < n; ++i) {
    double mass = cur[std::size_t(i)];
    if (mass == 0.0) continue;
    for (std::size_t k = rows.offsets[std::size_t(i)]; k < rows.offsets[std::size_t(i) + 1]; ++k) {
      next[std::size_t(rows.targets[k])] += mass * rows.weights[k] / lambda;
    }
  }
}

// Matrices larger than this are refused by the scaling-and-squaring path;
// the stiff cases this path exists for live on small truncations.
inline constexpr int kMaxDenseDim = 1200;
// Poisson means up to this size are summed directly on vectors.
inline constexpr double kMaxVectorSeriesMean = 4096.0;
// Realized relative mass drift per effective uniformization step seen in the
// squaring chain with double storage; long double storage buys three extra
// orders of margin on top of the certification rule below.
inline constexpr double kSquaringMassBias = 1e-18;

/// Largest uniformization step count lambda * t whose squaring-chain result
/// still certifies at `series_tol`: deeper chains accumulate floating-point
/// mass drift past the series budget and would silently void the lower-bound
/// guarantee.
inline double certifiable_steps(double series_tol) { return series_tol / kSquaringMassBias; }

// Dense long double matrix used only inside the squaring chain.
class LdMatrix {
 public:
  LdMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, 0.0L) {}

  static LdMatrix identity(int n) {
    LdMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0L;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  long double& operator()(int i, int j) { return data_[std::size_t(i) * cols_ + j]; }
  long double operator()(int i, int j) const { return data_[std::size_t(i) * cols_ + j]; }
  long double* row_ptr(int i) { return data_.data() + std::size_t(i) * cols_; }
  const long double* row_ptr(int i) const { return data_.data() + std::size_t(i) * cols_; }

 private:
  int rows_;
  int cols_;
  std::vector<long double> data_;
};

inline LdMatrix multiply(const LdMatrix& a, const LdMatrix& b) {
  LdMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    long double* out = c.row_ptr(i);
    const long double* arow = a.row_ptr(i);
    for (int k = 0; k < a.cols(); ++k) {
      long double aik = arow[k];
      if (aik == 0.0L) continue;
      const long double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

// exp(t Q^r) as a dense entrywise lower bound with total row-sum defect at
// most `series_tol`, via a truncated uniformization series and, for stiff
// generators, repeated squaring of a short-step matrix. The chain runs in
// long double: squaring doubles relative rounding per level, so the extra
// mantissa is what keeps deep chains inside the series budget.
inline Matrix uniformized_exponential(const TruncatedRows& rows, double lambda, double t,
                                      double series_tol, SolverLog& log) {
  int n = rows.size();
  double a = lambda * t;
  int squarings = 0;
  if (a > 2.0) {
    squarings = static_cast<int>(std::ceil(std::log2(a / 2.0)));
  }
  if (squarings > 0 && n > kMaxDenseDim) {
    throw SolveError("uniformization needs " + std::to_string(squarings) +
                         " squarings of a " + std::to_string(n) +
                         "-state dense matrix; truncation too large for this stiffness",
                     a);
  }
  double a_step = a / std::pow(2.0, squarings);
  double step_tol = series_tol / std::pow(2.0, squarings + 1);
  PoissonWindowExt window = poisson_window_ext(a_step, step_tol / 2.0);

  LdMatrix p(n, n);
  long double ld_lambda = static_cast<long double>(lambda);
  for (int i = 0; i < n; ++i) {
    for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1]; ++e) {
      p(i, rows.targets[e]) += static_cast<long double>(rows.weights[e]) / ld_lambda;
    }
    p(i, i) += 1.0L - static_cast<long double>(rows.total_weight[std::size_t(i)]) / ld_lambda;
  }

  LdMatrix term = LdMatrix::identity(n);
  LdMatrix acc(n, n);
  for (std::int64_t k = 0; k <= window.khi; ++k) {
    if (k > 0) term = multiply(term, p);
    if (k >= window.klo) {
      long double w = window.weights[std::size_t(k - window.klo)];
      for (int i = 0; i < n; ++i) {
        long double* out = acc.row_ptr(i);
        const long double* src = term.row_ptr(i);
        for (int j = 0; j < n; ++j) out[j] += w * src[j];
      }
    }
    ++log.series_terms;
  }
  for (int s = 0; s < squarings; ++s) {
    acc = multiply(acc, acc);
    ++log.squarings;
  }
  Matrix out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = static_cast<double>(acc(i, j));
  }
  return out;
}

/// States of the truncation whose exit rates are slow enough that the
/// squaring chain stays certifiable over horizon t. Everything faster is
/// dropped (made dead), which keeps the result a valid lower bound.
inline std::vector<int> certifiable_states(const TruncatedRows& rows, double t,
                                           double series_tol) {
  double limit = certifiable_steps(series_tol) / t;
  std::vector<int> kept;
  for (int i = 0; i < rows.size(); ++i) {
    if (rows.total_weight[std::size_t(i)] <= limit) kept.push_back(i);
  }
  return kept;
}

}  // namespace detail

/// Exact time-varying law p_n = gamma P^n of a discrete model, computed by n
/// sparse row-gather sweeps. Every state reachable from supp(gamma) within n
/// steps must lie in the truncation; the first escaping state is reported.
inline SparseDistribution law_exact_dt(const ChainModel& model, long n_steps,
                                       const Truncation& trunc) {
  if (model.kind() != ChainKind::Discrete) {
    throw ValidationError("law_exact_dt requires a discrete model");
  }
  if (n_steps < 0) throw ValidationError("law_exact_dt: step count must be >= 0");

  for (const auto& [state, mass] : model.gamma()) {
    if (trunc.index_of(state) < 0) {
      throw ValidationError("law_exact_dt: initial state " + state.to_string() +
                            " escapes the truncation");
    }
  }
  // Frontier scan: reachability within n steps must stay inside.
  std::vector<char> reached(std::size_t(trunc.size()), 0);
  std::deque<int> frontier;
  for (const auto& [state, mass] : model.gamma()) {
    int i = trunc.index_of(state);
    if (!reached[std::size_t(i)]) {
      reached[std::size_t(i)] = 1;
      frontier.push_back(i);
    }
  }
  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc, true);
  for (long depth = 0; depth < n_steps && !frontier.empty(); ++depth) {
    std::deque<int> next;
    for (int i : frontier) {
      if (!rows.outside[std::size_t(i)].empty()) {
        throw ValidationError("law_exact_dt: state " +
                              rows.outside[std::size_t(i)].front().first.to_string() +
                              " is reachable within " + std::to_string(n_steps) +
                              " steps but escapes the truncation");
      }
      for (std::size_t k = rows.offsets[std::size_t(i)]; k < rows.offsets[std::size_t(i) + 1];
           ++k) {
        int j = rows.targets[k];
        if (!reached[std::size_t(j)]) {
          reached[std::size_t(j)] = 1;
          next.push_back(j);
        }
      }
    }
    frontier.swap(next);
  }

  std::vector<double> cur = detail::restrict_to(model.gamma(), trunc);
  std::vector<double> next(cur.size(), 0.0);
  for (long m = 0; m < n_steps; ++m) {
    detail::fsp_sweep(rows, cur, next);
    cur.swap(next);
  }
  return detail::to_sparse(cur, trunc);
}

/// Discrete-time finite state projection: propagates only through rows of
/// truncation states, so the result is a pointwise lower bound on p_n and
/// 1 - retained mass is exactly the total variation error.
inline TruncationResult fsp_dt(const ChainModel& model, long n_steps, const Truncation& trunc) {
  if (model.kind() != ChainKind::Discrete) throw ValidationError("fsp_dt requires a discrete model");
  if (n_steps < 0) throw ValidationError("fsp_dt: step count must be >= 0");

  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc);
  std::vector<double> cur = detail::restrict_to(model.gamma(), trunc);
  std::vector<double> next(cur.size(), 0.0);
  TruncationResult result;
  for (long m = 0; m < n_steps; ++m) {
    detail::fsp_sweep(rows, cur, next);
    cur.swap(next);
    ++result.log.sweeps;
  }
  result.distribution = detail::to_sparse(cur, trunc);
  result.retained_mass = result.distribution.mass();
  result.error_bound = std::min(1.0, std::max(0.0, 1.0 - result.retained_mass));
  result.truncation = trunc;
  result.horizon_steps = n_steps;
  result.log.truncation_leak = 1.0 - result.retained_mass;
  result.log.exact_bookkeeping = true;
  return result;
}

/// Continuous-time finite state projection via uniformization of the
/// truncated generator. The truncated Poisson series only removes mass, so
/// the result stays a guaranteed lower bound on p_t, and the reported error
/// bound 1 - retained + series_tol remains valid after discretization.
///
/// Uniformization never differentiates the law, so the open regularity
/// questions around the master equation (which integrability condition, if
/// any, is needed for p_t to be differentiable) do not affect the result.
inline TruncationResult fsp_ct(const ChainModel& model, double t, const Truncation& trunc,
                               double series_tol = 1e-12) {
  if (model.kind() != ChainKind::Continuous) {
    throw ValidationError("fsp_ct requires a continuous model");
  }
  if (!(t >= 0.0)) throw ValidationError("fsp_ct: time must be >= 0");
  if (!(series_tol > 0.0 && series_tol <= 1e-6)) {
    throw ValidationError("fsp_ct: series_tol must lie in (0, 1e-6]");
  }

  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc);
  int n = trunc.size();
  double lambda = 0.0;
  for (double q : rows.total_weight) lambda = std::max(lambda, q);

  TruncationResult result;
  result.truncation = trunc;
  result.horizon_time = t;

  std::vector<double> initial = detail::restrict_to(model.gamma(), trunc);
  double initial_mass = 0.0;
  for (double v : initial) initial_mass += v;

  if (lambda == 0.0 || t == 0.0) {
    // Every truncation state is absorbing (or nothing happens before t=0+).
    result.distribution = detail::to_sparse(initial, trunc);
    result.retained_mass = initial_mass;
    result.error_bound = std::min(1.0, 1.0 - initial_mass + series_tol);
    result.log.truncation_leak = 1.0 - initial_mass;
    result.log.series_tail = 0.0;
    result.log.exact_bookkeeping = true;
    return result;
  }

  double a = lambda * t;
  std::vector<double> acc(std::size_t(n), 0.0);
  if (a <= detail::kMaxVectorSeriesMean) {
    detail::PoissonWindow window = detail::poisson_window(a, series_tol / 2.0);
    std::vector<double> cur = initial;
    std::vector<double> next(cur.size(), 0.0);
    double weight_sum = 0.0;
    double weighted_mass = 0.0;
    for (std::int64_t k = 0; k <= window.khi; ++k) {
      if (k > 0) {
        detail::uniformized_sweep(rows, lambda, cur, next);
        cur.swap(next);
        ++result.log.sweeps;
      }
      if (k >= window.klo) {
        double w = window.weights[std::size_t(k - window.klo)];
        weight_sum += w;
        double mass_k = 0.0;
        for (int i = 0; i < n; ++i) {
          acc[std::size_t(i)] += w * cur[std::size_t(i)];
          mass_k += cur[std::size_t(i)];
        }
        weighted_mass += w * mass_k;
      }
      ++result.log.series_terms;
    }
    result.log.series_tail = initial_mass * (1.0 - weight_sum);
    result.log.truncation_leak = (1.0 - initial_mass) + (weight_sum * initial_mass - weighted_mass);
    result.log.exact_bookkeeping = true;
  } else if (a <= detail::certifiable_steps(series_tol)) {
    detail::Matrix u = detail::uniformized_exponential(rows, lambda, t, series_tol, result.log);
    acc = detail::left_multiply(initial, u);
    result.log.series_tail = series_tol;  // budgeted bound, not an exact tally
    result.log.exact_bookkeeping = false;
  } else {
    // Too stiff to certify on the whole truncation: solve on the slow states
    // only. The rest become dead, which keeps the result a lower bound and
    // the error bound valid (if conservative).
    std::vector<int> kept = detail::certifiable_states(rows, t, series_tol);
    if (!kept.empty()) {
      std::vector<StateKey> slow;
      slow.reserve(kept.size());
      for (int i : kept) slow.push_back(trunc.state(i));
      Truncation effective(slow);
      detail::TruncatedRows slow_rows = detail::build_truncated_rows(model, effective);
      double slow_lambda = 0.0;
      for (double q : slow_rows.total_weight) slow_lambda = std::max(slow_lambda, q);
      std::vector<double> slow_initial = detail::restrict_to(model.gamma(), effective);
      std::vector<double> slow_acc;
      if (slow_lambda * t <= detail::kMaxVectorSeriesMean) {
        TruncationResult inner = fsp_ct(model, t, effective, series_tol);
        slow_acc = detail::restrict_to(inner.distribution, effective);
        result.log = inner.log;
      } else {
        detail::Matrix u = detail::uniformized_exponential(slow_rows, slow_lambda, t, series_tol,
                                                           result.log);
        slow_acc = detail::left_multiply(slow_initial, u);
        result.log.series_tail = series_tol;
        result.log.exact_bookkeeping = false;
      }
      for (std::size_t s = 0; s < kept.size(); ++s) {
        acc[std::size_t(kept[s])] = slow_acc[s];
      }
    }
    result.log.stiffness_limited = static_cast<long>(n - static_cast<int>(kept.size()));
  }

  result.distribution = detail::to_sparse(acc, trunc);
  result.retained_mass = result.distribution.mass();
  result.error_bound = std::min(1.0, std::max(0.0, 1.0 - result.retained_mass) + series_tol);
  if (!result.log.exact_bookkeeping) {
    result.log.truncation_leak =
        std::max(0.0, 1.0 - result.retained_mass - result.log.series_tail);
  }
  return result;
}

/// Iterated FSP: solve, and while the error bound exceeds `tol`, grow the
/// truncation by its full one-step frontier. Explosive chains make the loop
/// non-terminating, so the run also gives up (flagged, never a throw) when
/// the state budget is exceeded or the bound stops improving.
inline TruncationResult fsp_adaptive(const ChainModel& model, Horizon horizon, double tol,
                                     const Truncation& initial, long max_states,
                                     double series_tol = 1e-12) {
  if (!(tol > 0.0 && tol <= 1.0)) throw ValidationError("fsp_adaptive: tol must lie in (0,1]");
  if (max_states < 1) throw ValidationError("fsp_adaptive: max_states must be >= 1");
  if (horizon.is_discrete() && model.kind() != ChainKind::Discrete) {
    throw ValidationError("fsp_adaptive: step horizon requires a discrete model");
  }
  if (!horizon.is_discrete() && model.kind() != ChainKind::Continuous) {
    throw ValidationError("fsp_adaptive: time horizon requires a continuous model");
  }

  Truncation trunc = initial;
  double previous_eps = 2.0;
  int stagnant_rounds = 0;
  while (true) {
    TruncationResult result = horizon.is_discrete()
                                  ? fsp_dt(model, horizon.step_count, trunc)
                                  : fsp_ct(model, horizon.time_span, trunc, series_tol);
    if (result.error_bound <= tol) {
      result.termination = "tolerance-met";
      return result;
    }
    if (trunc.size() >= max_states) {
      result.converged = false;
      result.termination = "budget-exceeded";
      return result;
    }
    double improvement = previous_eps - result.error_bound;
    if (improvement <= 1e-6 * result.error_bound) {
      ++stagnant_rounds;
    } else {
      stagnant_rounds = 0;
    }
    previous_eps = result.error_bound;

    Truncation grown = trunc.expanded_frontier(model);
    if (grown.size() == trunc.size() || stagnant_rounds >= 2) {
      result.converged = false;
      result.termination = "stagnated";
      return result;
    }
    trunc = std::move(grown);
  }
}

/// delta-skeleton transition matrix over a truncation: row x approximates the
/// law at time delta started from x, with 1 - row sum the mass absorbed by
/// the implicit dead state.
struct SkeletonMatrix {
  Truncation truncation;
  std::vector<std::vector<double>> rows;
  double delta = 0.0;

  double dead_mass(int i) const {
    double sum = 0.0;
    for (double v : rows[std::size_t(i)]) sum += v;
    return 1.0 - sum;
  }
};

inline SkeletonMatrix skeleton_matrix(const ChainModel& model, double delta,
                                      const Truncation& trunc, double series_tol = 1e-12) {
  if (model.kind() != ChainKind::Continuous) {
    throw ValidationError("skeleton_matrix requires a continuous model");
  }
  if (!(delta > 0.0)) throw ValidationError("skeleton_matrix: delta must be > 0");

  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc);
  int n = trunc.size();
  double lambda = 0.0;
  for (double q : rows.total_weight) lambda = std::max(lambda, q);

  SkeletonMatrix out;
  out.truncation = trunc;
  out.delta = delta;
  out.rows.assign(std::size_t(n), std::vector<double>(std::size_t(n), 0.0));
  if (lambda == 0.0) {
    for (int i = 0; i < n; ++i) out.rows[std::size_t(i)][std::size_t(i)] = 1.0;
    return out;
  }
  SolverLog log;
  if (lambda * delta <= detail::certifiable_steps(series_tol)) {
    detail::Matrix u = detail::uniformized_exponential(rows, lambda, delta, series_tol, log);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out.rows[std::size_t(i)][std::size_t(j)] = u(i, j);
    }
    return out;
  }
  // Stiffness ceiling: rows of states too fast to integrate certifiably stay
  // all-dead, which is still a per-row lower bound on the skeleton.
  std::vector<int> kept = detail::certifiable_states(rows, delta, series_tol);
  if (kept.empty()) return out;
  std::vector<StateKey> slow;
  for (int i : kept) slow.push_back(trunc.state(i));
  Truncation effective(slow);
  detail::TruncatedRows slow_rows = detail::build_truncated_rows(model, effective);
  double slow_lambda = 0.0;
  for (double q : slow_rows.total_weight) slow_lambda = std::max(slow_lambda, q);
  if (slow_lambda == 0.0) {
    for (int i : kept) out.rows[std::size_t(i)][std::size_t(i)] = 1.0;
    return out;
  }
  detail::Matrix u = detail::uniformized_exponential(slow_rows, slow_lambda, delta, series_tol,
                                                     log);
  for (std::size_t si = 0; si < kept.size(); ++si) {
    for (std::size_t sj = 0; sj < kept.size(); ++sj) {
      out.rows[std::size_t(kept[si])][std::size_t(kept[sj])] =
          u(static_cast<int>(si), static_cast<int>(sj));
    }
  }
  return out;
}

/// Small-scale cross-check of the jump-count decomposition of the law:
/// p_t^n(x,y), the probability of being at y at time t with at most n jumps,
/// computed by numerically iterating both the forward and the backward
/// integral recursions on a uniform time grid. A test fixture: quadrature
/// error is unbounded for stiff rates, so instance sizes are capped.
struct FirBirResult {
  double fir = 0.0;
  double bir = 0.0;
  std::vector<double> fir_by_jumps;  // value at (x,y,t) after 0..n jumps
  std::vector<double> bir_by_jumps;
};

inline FirBirResult fir_bir_oracle(const ChainModel& model, const Truncation& trunc,
                                   const StateKey& from, const StateKey& to, double t,
                                   int n_jumps, int quad_steps) {
  if (model.kind() != ChainKind::Continuous) {
    throw ValidationError("fir_bir_oracle requires a continuous model");
  }
  if (trunc.size() > 20 || n_jumps > 8) {
    throw ValidationError("fir_bir_oracle refuses instances beyond 20 states / 8 jumps");
  }
  if (quad_steps < 100) throw ValidationError("fir_bir_oracle: quad_steps must be >= 100");
  if (!(t > 0.0)) throw ValidationError("fir_bir_oracle: time must be > 0");
  int xi = trunc.index_of(from);
  int yi = trunc.index_of(to);
  if (xi < 0 || yi < 0) throw ValidationError("fir_bir_oracle: endpoints must lie in the truncation");

  int n = trunc.size();
  JumpDecomposition jumps(model);
  std::vector<double> rate(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) rate[std::size_t(i)] = jumps.jump_rate(trunc.state(i));
  detail::TruncatedRows p = detail::build_truncated_rows(jumps.jump_chain(), trunc);

  int m = quad_steps;
  double h = t / m;
  auto grid_index = [m](int j, int z, int n_states) { return std::size_t(j) * n_states + z; };

  FirBirResult result;

  // Forward recursion, fixed source. level[j*n+z] = p^k at time j*h from x to z.
  {
    std::vector<double> level(std::size_t(m + 1) * n, 0.0);
    for (int j = 0; j <= m; ++j) {
      level[grid_index(j, xi, n)] = std::exp(-rate[std::size_t(xi)] * h * j);
    }
    result.fir_by_jumps.push_back(level[grid_index(m, yi, n)]);
    std::vector<double> flux(std::size_t(m + 1) * n, 0.0);
    std::vector<double> next(level.size(), 0.0);
    for (int k = 1; k <= n_jumps; ++k) {
      // flux[j*n+y] = sum_z p^{k-1}(x,z) lambda(z) p(z,y) at time j*h
      std::fill(flux.begin(), flux.end(), 0.0);
      for (int j = 0; j <= m; ++j) {
        for (int z = 0; z < n; ++z) {
          double mass = level[grid_index(j, z, n)] * rate[std::size_t(z)];
          if (mass == 0.0) continue;
          for (std::size_t e = p.offsets[std::size_t(z)]; e < p.offsets[std::size_t(z) + 1]; ++e) {
            flux[grid_index(j, p.targets[e], n)] += mass * p.weights[e];
          }
        }
      }
      for (int y = 0; y < n; ++y) {
        double decay = std::exp(-rate[std::size_t(y)] * h);
        double conv = 0.0;
        next[grid_index(0, y, n)] = (y == xi) ? 1.0 : 0.0;
        for (int j = 1; j <= m; ++j) {
          conv = decay * conv + 0.5 * h * (decay * flux[grid_index(j - 1, y, n)] +
                                           flux[grid_index(j, y, n)]);
          next[grid_index(j, y, n)] =
              (y == xi ? std::exp(-rate[std::size_t(y)] * h * j) : 0.0) + conv;
        }
      }
      level.swap(next);
      result.fir_by_jumps.push_back(level[grid_index(m, yi, n)]);
    }
    result.fir = result.fir_by_jumps.back();
  }

  // Backward recursion, fixed target. level[j*n+z] = p^k at time j*h from z to y.
  {
    std::vector<double> level(std::size_t(m + 1) * n, 0.0);
    for (int j = 0; j <= m; ++j) {
      level[grid_index(j, yi, n)] = std::exp(-rate[std::size_t(yi)] * h * j);
    }
    result.bir_by_jumps.push_back(level[grid_index(m, xi, n)]);
    std::vector<double> mixed(std::size_t(m + 1) * n, 0.0);
    std::vector<double> next(level.size(), 0.0);
    for (int k = 1; k <= n_jumps; ++k) {
      // mixed[j*n+z] = sum_w p(z,w) p^{k-1}(w,y) at time j*h
      std::fill(mixed.begin(), mixed.end(), 0.0);
      for (int j = 0; j <= m; ++j) {
        for (int z = 0; z < n; ++z) {
          double sum = 0.0;
          for (std::size_t e = p.offsets[std::size_t(z)]; e < p.offsets[std::size_t(z) + 1]; ++e) {
            sum += p.weights[e] * level[grid_index(j, p.targets[e], n)];
          }
          mixed[grid_index(j, z, n)] = sum;
        }
      }
      for (int z = 0; z < n; ++z) {
        double decay = std::exp(-rate[std::size_t(z)] * h);
        double conv = 0.0;
        next[grid_index(0, z, n)] = (z == yi) ? 1.0 : 0.0;
        for (int j = 1; j <= m; ++j) {
          conv = decay * conv + 0.5 * h * rate[std::size_t(z)] *
                                    (decay * mixed[grid_index(j - 1, z, n)] +
                                     mixed[grid_index(j, z, n)]);
          next[grid_index(j, z, n)] =
              (z == yi ? std::exp(-rate[std::size_t(z)] * h * j) : 0.0) + conv;
        }
      }
      level.swap(next);
      result.bir_by_jumps.push_back(level[grid_index(m, xi, n)]);
    }
    result.bir = result.bir_by_jumps.back();
  }

  return result;
}

}  // namespace chainkit
