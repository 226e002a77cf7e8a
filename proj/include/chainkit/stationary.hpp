#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chainkit/detail/kernel.hpp"
#include "chainkit/detail/linalg.hpp"
#include "chainkit/distribution.hpp"
#include "chainkit/errors.hpp"
#include "chainkit/exit.hpp"
#include "chainkit/model.hpp"
#include "chainkit/structure.hpp"
#include "chainkit/truncation.hpp"

namespace chainkit {

struct ErgodicClassResult {
  std::vector<StateKey> members;
  SparseDistribution pi;
  double residual = 0.0;      // l1 norm of pi P - pi (discrete) or pi Q (continuous)
  std::string method;         // "direct" or "power-iteration" (possibly chained)
};

struct ErgodicReport {
  std::vector<ErgodicClassResult> classes;
  std::vector<std::string> notes;
};

struct StationaryResidualReport {
  /// l1 residual over interior truncation states (those whose rows stay
  /// inside the truncation). Interior balance equations see every flow the
  /// truncation can expose; boundary states unavoidably miss inflow from
  /// outside and are reported separately.
  double residual = 0.0;
  double residual_with_boundary = 0.0;
  std::vector<StateKey> boundary_states;
  /// A small residual alone never certifies stationarity of a continuous
  /// chain: pi Q = 0 admits solutions of explosive chains that are not
  /// stationary. Discharge with a regularity certificate (lyapunov module).
  bool requires_non_explosivity = false;
  std::string note;
};

namespace detail {

inline double class_residual(const ChainModel& model, const std::vector<double>& pi,
                             const Truncation& trunc, const TruncatedRows& rows) {
  int n = trunc.size();
  std::vector<double> flow(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double mass = pi[std::size_t(i)];
    for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1]; ++e) {
      flow[std::size_t(rows.targets[e])] += mass * rows.weights[e];
    }
  }
  double residual = 0.0;
  if (model.kind() == ChainKind::Discrete) {
    for (int i = 0; i < n; ++i) residual += std::abs(flow[std::size_t(i)] - pi[std::size_t(i)]);
  } else {
    for (int i = 0; i < n; ++i) {
      residual += std::abs(flow[std::size_t(i)] -
                           pi[std::size_t(i)] * rows.total_weight[std::size_t(i)]);
    }
  }
  return residual;
}

// Damped power iteration on (P+I)/2, or on the uniformized matrix of Q with
// a 5% rate margin, so periodic classes cannot oscillate. Fixed points
// coincide with the undamped ones.
inline bool power_iteration(const ChainModel& model, const Truncation& trunc,
                            const TruncatedRows& rows, std::vector<double>& pi,
                            double residual_target, long max_iters) {
  int n = trunc.size();
  double lambda = 1.0;
  if (model.kind() == ChainKind::Continuous) {
    for (double q : rows.total_weight) lambda = std::max(lambda, q);
    lambda *= 1.05;
  }
  pi.assign(std::size_t(n), 1.0 / n);
  std::vector<double> next(std::size_t(n), 0.0);
  for (long iter = 0; iter < max_iters; ++iter) {
    if (model.kind() == ChainKind::Discrete) {
      for (int i = 0; i < n; ++i) next[std::size_t(i)] = 0.5 * pi[std::size_t(i)];
      for (int i = 0; i < n; ++i) {
        double mass = 0.5 * pi[std::size_t(i)];
        for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1];
             ++e) {
          next[std::size_t(rows.targets[e])] += mass * rows.weights[e];
        }
      }
    } else {
      for (int i = 0; i < n; ++i) {
        next[std::size_t(i)] =
            pi[std::size_t(i)] * (1.0 - rows.total_weight[std::size_t(i)] / lambda);
      }
      for (int i = 0; i < n; ++i) {
        double mass = pi[std::size_t(i)] / lambda;
        for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1];
             ++e) {
          next[std::size_t(rows.targets[e])] += mass * rows.weights[e];
        }
      }
    }
    double mass = 0.0;
    for (double v : next) mass += v;
    for (double& v : next) v /= mass;
    pi.swap(next);
    if ((iter & 0x3f) == 0 && class_residual(model, pi, trunc, rows) <= residual_target) {
      return true;
    }
  }
  return class_residual(model, pi, trunc, rows) <= residual_target;
}

}  // namespace detail

/// Ergodic distribution of every certified-closed class of a decomposition:
/// the normalized solution of pi P = pi (or pi Q = 0), by a dense solve with
/// the anchor balance row replaced by the normalization, falling back to
/// damped power iteration when the class is large or the solve degenerates.
/// The full stationary set is the convex hull of the returned distributions.
inline ErgodicReport ergodic_distributions(const ChainModel& model,
                                           const ClassDecomposition& decomposition,
                                           int dense_limit = 2000) {
  ErgodicReport report;
  report.notes.push_back(
      "the stationary distributions are exactly the convex combinations of the ergodic "
      "distributions listed per certified-closed class");
  bool skipped = false;
  for (const StateClass& cls : decomposition.classes) {
    if (!cls.certified_closed) {
      skipped = true;
      continue;
    }
    Truncation trunc(cls.members);
    detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc);
    int n = trunc.size();

    ErgodicClassResult result;
    result.members = cls.members;
    std::vector<double> pi;
    bool solved = false;
    if (n <= dense_limit) {
      // Transposed balance equations with the anchor row replaced by sum = 1.
      detail::Matrix a(n, n);
      for (int i = 0; i < n; ++i) {
        for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1];
             ++e) {
          a(rows.targets[e], i) += rows.weights[e];
        }
        if (model.kind() == ChainKind::Discrete) {
          a(i, i) -= 1.0;
        } else {
          a(i, i) -= rows.total_weight[std::size_t(i)];
        }
      }
      std::vector<double> rhs(std::size_t(n), 0.0);
      for (int j = 0; j < n; ++j) a(0, j) = 1.0;
      rhs[0] = 1.0;
      solved = detail::solve_linear(a, rhs, pi);
      result.method = "direct";
      if (solved) {
        double mass = 0.0;
        for (double& v : pi) {
          if (v < 0.0 && v > -1e-9) v = 0.0;
          if (v < 0.0) solved = false;
          mass += v;
        }
        if (solved) {
          for (double& v : pi) v /= mass;
          solved = detail::class_residual(model, pi, trunc, rows) <= 1e-10;
        }
      }
    }
    if (!solved) {
      bool ok = detail::power_iteration(model, trunc, rows, pi, 1e-12, 2000000);
      result.method = result.method.empty() ? "power-iteration"
                                            : result.method + "+power-iteration";
      if (!ok) {
        report.notes.push_back("power iteration missed its residual target on a class of size " +
                               std::to_string(n));
      }
    }
    result.residual = detail::class_residual(model, pi, trunc, rows);
    for (int i = 0; i < n; ++i) {
      if (pi[std::size_t(i)] > 0.0) result.pi.set(trunc.state(i), pi[std::size_t(i)]);
    }
    detail::pin_mass(result.pi, 1.0);
    report.classes.push_back(std::move(result));
  }
  if (skipped) {
    report.notes.push_back(
        "classes not certified closed at this truncation were skipped: their members need not be "
        "positive recurrent");
  }
  return report;
}

/// Balance residual of a candidate pi over a truncation. Never asserts
/// stationarity: for continuous models the report carries the
/// requires_non_explosivity caveat, dischargeable via a ct-regularity
/// certificate.
inline StationaryResidualReport stationary_residual(const ChainModel& model,
                                                    const SparseDistribution& pi,
                                                    const Truncation& trunc) {
  for (const auto& [state, mass] : pi) {
    if (mass > 1e-12 && trunc.index_of(state) < 0) {
      throw ValidationError("stationary_residual: pi has mass " + std::to_string(mass) + " at " +
                            state.to_string() + " outside the truncation");
    }
  }
  int n = trunc.size();
  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc);
  std::vector<double> p = detail::restrict_to(pi, trunc);

  std::vector<double> flow(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double mass = p[std::size_t(i)];
    if (mass == 0.0) continue;
    for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1]; ++e) {
      flow[std::size_t(rows.targets[e])] += mass * rows.weights[e];
    }
  }
  StationaryResidualReport report;
  report.requires_non_explosivity = model.kind() == ChainKind::Continuous;
  for (int i = 0; i < n; ++i) {
    double component;
    if (model.kind() == ChainKind::Discrete) {
      component = std::abs(flow[std::size_t(i)] - p[std::size_t(i)]);
    } else {
      component =
          std::abs(flow[std::size_t(i)] - p[std::size_t(i)] * rows.total_weight[std::size_t(i)]);
    }
    report.residual_with_boundary += component;
    if (rows.outside_weight[std::size_t(i)] > 0.0) {
      report.boundary_states.push_back(trunc.state(i));
    } else {
      report.residual += component;
    }
  }
  report.note = report.requires_non_explosivity
                    ? "pi Q = 0 on a truncation does not certify stationarity: the chain must "
                      "also be non-explosive under pi (see Miller-type counterexamples); "
                      "discharge with a ct-regularity certificate"
                    : "balance residual over the truncation; boundary states miss inflow from "
                      "outside and are excluded from the headline figure";
  return report;
}

/// Ergodic distribution of a finite certified-closed class via the
/// regeneration identity: the expected pre-return occupation around an
/// anchor, normalized by the mean return time. Cross-validates
/// ergodic_distributions through an entirely different computation.
inline SparseDistribution ergodic_via_regeneration(const ChainModel& model,
                                                   const std::vector<StateKey>& class_members,
                                                   const StateKey& anchor, double tol = 1e-13) {
  if (class_members.empty()) throw ValidationError("ergodic_via_regeneration: empty class");
  bool anchored = false;
  for (const StateKey& s : class_members) anchored = anchored || s == anchor;
  if (!anchored) {
    throw ValidationError("ergodic_via_regeneration: anchor must belong to the class");
  }
  if (class_members.size() == 1) return SparseDistribution::point_mass(anchor);

  Truncation trunc(class_members);
  Domain around_anchor = Domain::from_predicate(
      [anchor, trunc](const StateKey& x) { return x != anchor && trunc.contains(x); });

  SparseDistribution occupation;
  if (model.kind() == ChainKind::Discrete) {
    TransitionRow row = model.row(anchor);
    SparseDistribution step;
    for (const auto& [target, weight] : row.entries) step.add(target, weight);
    ExitStatistics stats =
        exit_marginals_minimal(model, around_anchor, step, trunc, tol);
    if (!stats.converged) {
      throw SolveError("ergodic_via_regeneration: occupation iteration diverged on a finite "
                       "closed class (this should not happen)",
                       stats.last_iterate_mass);
    }
    occupation = stats.occupation_marginal;
    occupation.add(anchor, 1.0);  // the visit at time zero
  } else {
    double q = model.total_rate(anchor);
    if (q <= 0.0) {
      throw ValidationError("ergodic_via_regeneration: absorbing anchor in a multi-state class");
    }
    TransitionRow row = model.row(anchor);
    SparseDistribution step;
    for (const auto& [target, weight] : row.entries) step.add(target, weight / q);
    ExitStatistics stats =
        exit_marginals_minimal(model, around_anchor, step, trunc, tol);
    if (!stats.converged) {
      throw SolveError("ergodic_via_regeneration: occupation iteration diverged on a finite "
                       "closed class (this should not happen)",
                       stats.last_iterate_mass);
    }
    occupation = stats.occupation_marginal;
    occupation.add(anchor, 1.0 / q);  // the initial sojourn at the anchor
  }
  return occupation.normalized();
}

}  // namespace chainkit
