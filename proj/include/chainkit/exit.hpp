#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chainkit/detail/kernel.hpp"
#include "chainkit/detail/linalg.hpp"
#include "chainkit/distribution.hpp"
#include "chainkit/errors.hpp"
#include "chainkit/model.hpp"
#include "chainkit/transient.hpp"
#include "chainkit/truncation.hpp"

namespace chainkit {

/// The subset of the state space whose exit statistics are being studied.
struct Domain {
  std::function<bool(const StateKey&)> contains;

  static Domain from_predicate(std::function<bool(const StateKey&)> predicate) {
    return Domain{std::move(predicate)};
  }

  static Domain from_set(const std::vector<StateKey>& states) {
    auto owned = std::make_shared<std::set<StateKey>>(states.begin(), states.end());
    return Domain{[owned](const StateKey& x) { return owned->count(x) > 0; }};
  }

  /// 1-d interval [lo, hi].
  static Domain interval(std::int64_t lo, std::int64_t hi) {
    return Domain{[lo, hi](const StateKey& x) { return x.value() >= lo && x.value() <= hi; }};
  }
};

/// Exit distribution mu (where and when the chain leaves the domain) and
/// occupation measure nu (expected time per state before leaving), with the
/// mass identities: mu's mass is the exit probability and nu's mass the mean
/// exit time. mu is supported off the domain and nu inside it.
struct ExitStatistics {
  // Joint tables: entry k is mu / nu at step k (discrete) or on the k-th time
  // bin (continuous; `time_edges` carries the bin edges).
  std::vector<SparseDistribution> exit_by_time;
  std::vector<SparseDistribution> occupation_by_time;
  std::vector<double> time_edges;

  SparseDistribution exit_marginal;        // mu_S
  SparseDistribution occupation_marginal;  // nu_S
  double exit_probability = 0.0;           // mass of mu_S (a lower bound)
  double mean_exit_time = 0.0;             // mass of nu_S (a lower bound)

  /// 1 - accumulated exit mass: bounds the total-variation distance between
  /// the computed lower bound and the true exit distribution.
  double error_bound = 1.0;
  double retained_mass = 0.0;  // mass still alive inside the domain at the horizon
  double lost_mass = 0.0;      // mass that escaped the truncation
  double initial_atom = 0.0;   // continuous case: gamma mass starting outside the domain

  bool converged = true;
  bool assumed_finite_exit = false;  // hypothesis recorded, not verified here
  long sweeps = 0;
  double last_iterate_mass = 0.0;  // filled on failure reports
};

/// Joint exit distribution and occupation measure of a discrete-time chain:
/// the absorbing-complement recursion propagated through the truncation for
/// n_f steps. Every table entry is a lower bound on the true value and the
/// bounds improve as the truncation or the horizon grows.
inline ExitStatistics exit_joint_dt(const ChainModel& model, const Domain& domain, long n_f,
                                    const Truncation& trunc) {
  if (model.kind() != ChainKind::Discrete) {
    throw ValidationError("exit_joint_dt requires a discrete model");
  }
  if (n_f < 0) throw ValidationError("exit_joint_dt: horizon must be >= 0");

  int n = trunc.size();
  std::vector<char> in_domain(std::size_t(n), 0);
  bool any_domain = false;
  for (int i = 0; i < n; ++i) {
    in_domain[std::size_t(i)] = domain.contains(trunc.state(i)) ? 1 : 0;
    any_domain = any_domain || in_domain[std::size_t(i)];
  }
  if (!any_domain) throw ValidationError("exit_joint_dt: truncation does not meet the domain");

  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc);

  ExitStatistics stats;
  stats.assumed_finite_exit = false;

  std::vector<double> alive(std::size_t(n), 0.0);
  SparseDistribution mu0;
  for (const auto& [state, mass] : model.gamma()) {
    int i = trunc.index_of(state);
    if (i < 0) {
      stats.lost_mass += mass;
    } else if (in_domain[std::size_t(i)]) {
      alive[std::size_t(i)] = mass;
    } else {
      mu0.add(state, mass);
    }
  }
  stats.exit_by_time.push_back(mu0);
  stats.occupation_by_time.push_back(detail::to_sparse(alive, trunc));

  std::vector<double> next(std::size_t(n), 0.0);
  for (long step = 1; step <= n_f; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    SparseDistribution mu_step;
    for (int i = 0; i < n; ++i) {
      double mass = alive[std::size_t(i)];
      if (mass == 0.0 || !in_domain[std::size_t(i)]) continue;
      stats.lost_mass += mass * rows.outside_weight[std::size_t(i)];
      for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1];
           ++e) {
        int j = rows.targets[e];
        double arriving = mass * rows.weights[e];
        if (in_domain[std::size_t(j)]) {
          next[std::size_t(j)] += arriving;
        } else {
          mu_step.add(trunc.state(j), arriving);
        }
      }
    }
    alive.swap(next);
    stats.exit_by_time.push_back(std::move(mu_step));
    stats.occupation_by_time.push_back(detail::to_sparse(alive, trunc));
    ++stats.sweeps;
  }

  for (const SparseDistribution& mu : stats.exit_by_time) {
    for (const auto& [state, mass] : mu) stats.exit_marginal.add(state, mass);
  }
  for (const SparseDistribution& nu : stats.occupation_by_time) {
    for (const auto& [state, mass] : nu) stats.occupation_marginal.add(state, mass);
  }
  stats.exit_probability = stats.exit_marginal.mass();
  stats.mean_exit_time = stats.occupation_marginal.mass();
  stats.retained_mass = stats.occupation_by_time.back().mass();
  stats.error_bound = std::min(1.0, std::max(0.0, 1.0 - stats.exit_probability));
  return stats;
}

/// Space marginals mu_S, nu_S as the minimal nonnegative solution of their
/// linear equations, by monotone value iteration from zero. A direct linear
/// solve could return a non-minimal solution when an unreachable closed set
/// sits inside the domain, so direct solves are reserved for test oracles.
/// When exactly the equations admit several nonnegative solutions is an
/// unresolved question; this routine never attempts uniqueness detection and
/// always returns the minimal, probabilistically meaningful one.
///
/// The finite-exit hypothesis behind the equations is recorded, not checked
/// (it is also unknown whether the balance identities can survive without
/// it); discharge it with a Foster-Lyapunov certificate when needed. States
/// outside the truncation are treated as never returning.
inline ExitStatistics exit_marginals_minimal(const ChainModel& model, const Domain& domain,
                                             const SparseDistribution& gamma,
                                             const Truncation& trunc, double tol = 1e-13,
                                             long max_sweeps = 50000000,
                                             double divergence_cap = 1e15) {
  int n = trunc.size();
  std::vector<char> in_domain(std::size_t(n), 0);
  for (int i = 0; i < n; ++i) {
    in_domain[std::size_t(i)] = domain.contains(trunc.state(i)) ? 1 : 0;
  }
  bool continuous = model.kind() == ChainKind::Continuous;
  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc, true);

  ExitStatistics stats;
  stats.assumed_finite_exit = true;

  // Transposed domain-interior kernel: for each domain state, its in-domain
  // predecessors, so a sweep is a cache-friendly gather.
  std::vector<int> domain_states;
  std::vector<int> slot_of(std::size_t(n), -1);
  for (int i = 0; i < n; ++i) {
    if (in_domain[std::size_t(i)]) {
      slot_of[std::size_t(i)] = static_cast<int>(domain_states.size());
      domain_states.push_back(i);
    }
  }
  int m = static_cast<int>(domain_states.size());
  if (m == 0) throw ValidationError("exit_marginals_minimal: truncation does not meet the domain");

  std::vector<std::size_t> offsets(std::size_t(m) + 1, 0);
  std::vector<int> sources;
  std::vector<double> weights;
  {
    for (int si = 0; si < m; ++si) {
      int i = domain_states[std::size_t(si)];
      for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1];
           ++e) {
        int j = rows.targets[e];
        if (slot_of[std::size_t(j)] >= 0) ++offsets[std::size_t(slot_of[std::size_t(j)]) + 1];
      }
    }
    for (int s = 0; s < m; ++s) offsets[std::size_t(s) + 1] += offsets[std::size_t(s)];
    sources.assign(offsets.back(), 0);
    weights.assign(offsets.back(), 0.0);
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (int si = 0; si < m; ++si) {
      int i = domain_states[std::size_t(si)];
      for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1];
           ++e) {
        int j = rows.targets[e];
        int sj = slot_of[std::size_t(j)];
        if (sj >= 0) {
          sources[cursor[std::size_t(sj)]] = si;
          weights[cursor[std::size_t(sj)]] = rows.weights[e];
          ++cursor[std::size_t(sj)];
        }
      }
    }
  }

  std::vector<double> gamma_in(std::size_t(m), 0.0);
  for (const auto& [state, mass] : gamma) {
    int i = trunc.index_of(state);
    if (i >= 0 && slot_of[std::size_t(i)] >= 0) gamma_in[std::size_t(slot_of[std::size_t(i)])] = mass;
  }
  std::vector<double> exit_rate(std::size_t(m), 0.0);  // continuous: q(x)
  if (continuous) {
    for (int s = 0; s < m; ++s) {
      exit_rate[std::size_t(s)] = rows.total_weight[std::size_t(domain_states[std::size_t(s)])];
    }
  }

  std::vector<double> nu(std::size_t(m), 0.0);
  std::vector<double> next(std::size_t(m), 0.0);
  bool diverged = false;
  double change = 0.0;
  long sweeps = 0;
  for (; sweeps < max_sweeps; ++sweeps) {
    change = 0.0;
    double mass = 0.0;
    for (int s = 0; s < m; ++s) {
      double sum = gamma_in[std::size_t(s)];
      for (std::size_t e = offsets[std::size_t(s)]; e < offsets[std::size_t(s) + 1]; ++e) {
        sum += weights[e] * nu[std::size_t(sources[e])];
      }
      if (continuous) {
        double q = exit_rate[std::size_t(s)];
        if (q <= 0.0) {
          // Absorbing state inside the domain: the occupation there is
          // infinite as soon as any mass reaches it.
          sum = sum > 0.0 ? divergence_cap : 0.0;
        } else {
          sum /= q;
        }
      }
      next[std::size_t(s)] = sum;
      change = std::max(change, sum - nu[std::size_t(s)]);
      mass += sum;
    }
    nu.swap(next);
    if (mass > divergence_cap) {
      diverged = true;
      stats.last_iterate_mass = mass;
      break;
    }
    if (change <= tol) break;
  }
  stats.sweeps = sweeps;
  if (diverged || change > tol) {
    stats.converged = false;
    if (stats.last_iterate_mass == 0.0) {
      double mass = 0.0;
      for (double v : nu) mass += v;
      stats.last_iterate_mass = mass;
    }
    return stats;
  }

  for (int s = 0; s < m; ++s) {
    if (nu[std::size_t(s)] > 0.0) {
      stats.occupation_marginal.set(trunc.state(domain_states[std::size_t(s)]),
                                    nu[std::size_t(s)]);
    }
  }
  // mu_S: gamma mass already outside the domain, plus flow out of it.
  for (const auto& [state, mass] : gamma) {
    if (!domain.contains(state)) stats.exit_marginal.add(state, mass);
  }
  for (int s = 0; s < m; ++s) {
    int i = domain_states[std::size_t(s)];
    double occupied = nu[std::size_t(s)];
    if (occupied == 0.0) continue;
    for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1]; ++e) {
      int j = rows.targets[e];
      if (slot_of[std::size_t(j)] < 0) {
        stats.exit_marginal.add(trunc.state(j), occupied * rows.weights[e]);
      }
    }
    for (const auto& [state, weight] : rows.outside[std::size_t(i)]) {
      if (!domain.contains(state)) stats.exit_marginal.add(state, occupied * weight);
    }
  }
  stats.exit_probability = stats.exit_marginal.mass();
  stats.mean_exit_time = stats.occupation_marginal.mass();
  stats.error_bound = std::min(1.0, std::max(0.0, 1.0 - stats.exit_probability));
  return stats;
}

/// Exit statistics of a continuous-time chain by integrating the law of the
/// domain-absorbed chain with uniformization over the truncation. The exit
/// density is reported as per-bin masses (no numerical differentiation); the
/// occupation entries are per-bin trapezoid integrals of the absorbed law.
inline ExitStatistics exit_density_ct(const ChainModel& model, const Domain& domain, double t_f,
                                      const Truncation& trunc, double series_tol = 1e-12,
                                      int n_bins = 64) {
  if (model.kind() != ChainKind::Continuous) {
    throw ValidationError("exit_density_ct requires a continuous model");
  }
  if (!(t_f > 0.0)) throw ValidationError("exit_density_ct: horizon must be > 0");
  if (n_bins < 1) throw ValidationError("exit_density_ct: need at least one bin");
  if (!(series_tol > 0.0 && series_tol <= 1e-6)) {
    throw ValidationError("exit_density_ct: series_tol must lie in (0, 1e-6]");
  }

  int n = trunc.size();
  std::vector<char> in_domain(std::size_t(n), 0);
  for (int i = 0; i < n; ++i) {
    in_domain[std::size_t(i)] = domain.contains(trunc.state(i)) ? 1 : 0;
  }

  // Rows of the domain-absorbed generator: untouched inside the domain,
  // zeroed outside it. Domain states too stiff to integrate certifiably over
  // the horizon are absorbed as well (stiffness ceiling of the squaring
  // chain); their exit flow is forfeited, which keeps mu a lower bound.
  double stiff_limit = detail::certifiable_steps(series_tol) / t_f;
  detail::TruncatedRows rows;
  rows.offsets.assign(1, 0);
  rows.outside_weight.assign(std::size_t(n), 0.0);
  rows.total_weight.assign(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (in_domain[std::size_t(i)]) {
      TransitionRow row = model.row(trunc.state(i));
      if (row.total_weight() <= stiff_limit) {
        for (const auto& [target, weight] : row.entries) {
          if (weight == 0.0) continue;
          rows.total_weight[std::size_t(i)] += weight;
          int j = trunc.index_of(target);
          if (j >= 0) {
            rows.targets.push_back(j);
            rows.weights.push_back(weight);
          } else {
            rows.outside_weight[std::size_t(i)] += weight;
          }
        }
      }
    }
    rows.offsets.push_back(rows.targets.size());
  }

  double lambda = 0.0;
  for (double q : rows.total_weight) lambda = std::max(lambda, q);

  ExitStatistics stats;
  stats.assumed_finite_exit = false;
  stats.initial_atom = 0.0;
  for (const auto& [state, mass] : model.gamma()) {
    if (!domain.contains(state)) stats.initial_atom += mass;
  }

  std::vector<double> hat = detail::restrict_to(model.gamma(), trunc);
  double gamma_in_trunc = 0.0;
  for (double v : hat) gamma_in_trunc += v;
  stats.lost_mass = 1.0 - gamma_in_trunc;

  double delta = t_f / n_bins;
  detail::Matrix step;
  SolverLog log;
  if (lambda > 0.0) {
    step = detail::uniformized_exponential(rows, lambda, delta, series_tol / n_bins, log);
  }
  stats.time_edges.push_back(0.0);

  std::vector<double> previous = hat;
  for (int bin = 0; bin < n_bins; ++bin) {
    std::vector<double> current =
        lambda > 0.0 ? detail::left_multiply(previous, step) : previous;
    SparseDistribution mu_bin;
    SparseDistribution nu_bin;
    for (int i = 0; i < n; ++i) {
      if (in_domain[std::size_t(i)]) {
        double integral =
            0.5 * delta * (previous[std::size_t(i)] + current[std::size_t(i)]);
        if (integral > 0.0) nu_bin.set(trunc.state(i), integral);
      } else {
        double increment = current[std::size_t(i)] - previous[std::size_t(i)];
        if (increment > 0.0) mu_bin.set(trunc.state(i), increment);
      }
    }
    stats.exit_by_time.push_back(std::move(mu_bin));
    stats.occupation_by_time.push_back(std::move(nu_bin));
    stats.time_edges.push_back(delta * (bin + 1));
    previous.swap(current);
    ++stats.sweeps;
  }

  for (int i = 0; i < n; ++i) {
    if (in_domain[std::size_t(i)]) {
      stats.retained_mass += previous[std::size_t(i)];
    } else if (previous[std::size_t(i)] > 0.0) {
      stats.exit_marginal.set(trunc.state(i), previous[std::size_t(i)]);
    }
  }
  // gamma mass that starts outside both the domain and the truncation still
  // belongs to the exit distribution's atom at t = 0.
  for (const auto& [state, mass] : model.gamma()) {
    if (!domain.contains(state) && trunc.index_of(state) < 0) {
      stats.exit_marginal.add(state, mass);
    }
  }
  for (const SparseDistribution& nu : stats.occupation_by_time) {
    for (const auto& [state, mass] : nu) stats.occupation_marginal.add(state, mass);
  }
  stats.exit_probability = stats.exit_marginal.mass();
  stats.mean_exit_time = stats.occupation_marginal.mass();
  stats.error_bound =
      std::min(1.0, std::max(0.0, 1.0 - stats.exit_probability) + series_tol);
  return stats;
}

/// Closed-form success and ruin probabilities of the gambler aiming for K,
/// starting from a distribution on {1..K-1}: E[X_0]/K for a fair coin,
/// (1 - E[alpha^X_0]) / (1 - alpha^K) with alpha = (1-a)/a otherwise.
struct GamblerOutcome {
  double success = 0.0;
  double ruin = 0.0;
};

inline GamblerOutcome gambler_oracle(double a, std::int64_t capital,
                                     const SparseDistribution& gamma) {
  if (!(a > 0.0 && a < 1.0)) throw ValidationError("gambler_oracle: a must lie in (0,1)");
  if (capital < 2) throw ValidationError("gambler_oracle: K must be >= 2");
  if (std::abs(gamma.mass() - 1.0) > kMassTolerance) {
    throw ValidationError("gambler_oracle: initial distribution must have mass 1");
  }
  for (const auto& [state, mass] : gamma) {
    if (state.value() < 1 || state.value() > capital - 1) {
      throw ValidationError("gambler_oracle: initial mass at " + state.to_string() +
                            " lies outside {1..K-1}");
    }
  }
  GamblerOutcome out;
  if (a == 0.5) {
    double mean = 0.0;
    for (const auto& [state, mass] : gamma) mean += mass * static_cast<double>(state.value());
    out.success = mean / static_cast<double>(capital);
  } else {
    double log_alpha = std::log1p(-a) - std::log(a);
    double numerator = 0.0;
    if (log_alpha > 0.0) {
      // alpha > 1: rewrite as E[alpha^(X0-K) (1 - alpha^-X0)] / (1 - alpha^-K)
      // so every exponent of alpha is nonpositive and large K cannot overflow.
      for (const auto& [state, mass] : gamma) {
        double x = static_cast<double>(state.value());
        numerator += mass * std::exp((x - static_cast<double>(capital)) * log_alpha) *
                     -std::expm1(-x * log_alpha);
      }
      out.success = numerator / -std::expm1(-static_cast<double>(capital) * log_alpha);
    } else {
      // alpha < 1: the textbook form is already stable.
      for (const auto& [state, mass] : gamma) {
        double x = static_cast<double>(state.value());
        numerator += mass * -std::expm1(x * log_alpha);
      }
      out.success = numerator / -std::expm1(static_cast<double>(capital) * log_alpha);
    }
  }
  out.ruin = 1.0 - out.success;
  return out;
}

}  // namespace chainkit
