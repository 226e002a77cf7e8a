#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "chainkit/detail/kernel.hpp"
#include "chainkit/errors.hpp"
#include "chainkit/model.hpp"
#include "chainkit/truncation.hpp"

namespace chainkit {

/// Drift criteria checkable against a test function v >= 0 and a finite set F:
///   dt-recurrence    Pv <= v off F                  (v norm-like)
///   dt-foster        Pv <= v - 1 + b 1_F
///   dt-geometric     Pv <= v/theta - 1 + b 1_F      (theta > 1)
///   ct-regularity    Qv <= c v                      (v norm-like)
///   ct-positive      Qv <= -1 + b 1_F
///   ct-exponential   Qv <= -alpha v - 1 + b 1_F     (alpha > 0)
enum class CertificateKind {
  DtRecurrence,
  DtFoster,
  DtGeometric,
  CtRegularity,
  CtPositive,
  CtExponential,
};

inline const char* to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::DtRecurrence: return "dt-recurrence";
    case CertificateKind::DtFoster: return "dt-foster";
    case CertificateKind::DtGeometric: return "dt-geometric";
    case CertificateKind::CtRegularity: return "ct-regularity";
    case CertificateKind::CtPositive: return "ct-positive";
    case CertificateKind::CtExponential: return "ct-exponential";
  }
  return "?";
}

struct Certificate {
  CertificateKind kind = CertificateKind::DtFoster;
  std::function<double(const StateKey&)> v;
  std::vector<StateKey> focus_set;  // F
  double b = 0.0;
  double theta = 0.0;  // dt-geometric
  double alpha = 0.0;  // ct-exponential
  double c = 0.0;      // ct-regularity
  /// The criteria quantify over the whole infinite state space; whatever the
  /// user claims about v beyond the truncation is recorded verbatim here and
  /// never machine-checked.
  std::string tail_claim;
};

struct SlackEntry {
  StateKey state;
  double slack;  // rhs - lhs of the drift inequality; negative means violated
};

struct CertificateReport {
  bool holds_on_truncation = false;
  std::vector<SlackEntry> violations;
  double worst_slack = std::numeric_limits<double>::infinity();
  long interior_checked = 0;
  /// States whose rows leave the truncation are never silently passed.
  std::vector<StateKey> boundary_unchecked;
  std::string coverage_note;
};

/// Checks the certificate's drift inequality pointwise on every interior
/// state of the truncation (states whose whole row stays inside it).
///
/// Only the forward directions of the drift criteria are checked: a holding
/// certificate witnesses stability of the checked region. The converse
/// constructions (building v from a stable chain) need extra structural
/// assumptions — whether their no-transient-states requirement can be
/// dropped is unresolved — and are out of scope here.
inline CertificateReport check_certificate(const ChainModel& model, const Certificate& cert,
                                           const Truncation& trunc) {
  bool discrete_kind = cert.kind == CertificateKind::DtRecurrence ||
                       cert.kind == CertificateKind::DtFoster ||
                       cert.kind == CertificateKind::DtGeometric;
  if (discrete_kind != (model.kind() == ChainKind::Discrete)) {
    throw ValidationError(std::string("certificate kind ") + to_string(cert.kind) +
                          " does not match a " + to_string(model.kind()) + " model");
  }
  if (cert.kind == CertificateKind::DtGeometric && !(cert.theta > 1.0)) {
    throw ValidationError("dt-geometric requires theta > 1");
  }
  if (cert.kind == CertificateKind::CtExponential && !(cert.alpha > 0.0)) {
    throw ValidationError("ct-exponential requires alpha > 0");
  }
  std::set<StateKey> focus(cert.focus_set.begin(), cert.focus_set.end());
  for (const StateKey& f : cert.focus_set) {
    if (!trunc.contains(f)) {
      throw ValidationError("certificate set F must lie inside the truncation; " + f.to_string() +
                            " does not");
    }
  }

  auto value = [&cert](const StateKey& x) {
    double vx = cert.v(x);
    if (!std::isfinite(vx) || vx < 0.0) {
      throw ValidationError("test function is " + std::to_string(vx) + " at " + x.to_string() +
                            "; it must be finite and nonnegative");
    }
    return vx;
  };

  CertificateReport report;
  for (int i = 0; i < trunc.size(); ++i) {
    const StateKey& x = trunc.state(i);
    TransitionRow row = model.row(x);
    bool interior = true;
    for (const auto& [target, weight] : row.entries) {
      if (weight > 0.0 && !trunc.contains(target)) interior = false;
    }
    if (!interior) {
      report.boundary_unchecked.push_back(x);
      continue;
    }
    bool in_focus = focus.count(x) > 0;
    if (cert.kind == CertificateKind::DtRecurrence && in_focus) continue;

    double vx = value(x);
    double lhs = 0.0;
    if (discrete_kind) {
      for (const auto& [target, weight] : row.entries) lhs += weight * value(target);
    } else {
      for (const auto& [target, weight] : row.entries) lhs += weight * (value(target) - vx);
    }
    double rhs = 0.0;
    switch (cert.kind) {
      case CertificateKind::DtRecurrence: rhs = vx; break;
      case CertificateKind::DtFoster: rhs = vx - 1.0 + (in_focus ? cert.b : 0.0); break;
      case CertificateKind::DtGeometric:
        rhs = vx / cert.theta - 1.0 + (in_focus ? cert.b : 0.0);
        break;
      case CertificateKind::CtRegularity: rhs = cert.c * vx; break;
      case CertificateKind::CtPositive: rhs = -1.0 + (in_focus ? cert.b : 0.0); break;
      case CertificateKind::CtExponential:
        rhs = -cert.alpha * vx - 1.0 + (in_focus ? cert.b : 0.0);
        break;
    }
    double slack = rhs - lhs;
    ++report.interior_checked;
    report.worst_slack = std::min(report.worst_slack, slack);
    if (slack < 0.0) report.violations.push_back({x, slack});
  }
  report.holds_on_truncation = report.violations.empty();
  report.coverage_note =
      "checked " + std::to_string(report.interior_checked) + " interior states; " +
      std::to_string(report.boundary_unchecked.size()) +
      " boundary states (rows leaving the truncation) left unchecked; the tail claim \"" +
      cert.tail_claim + "\" is recorded, not verified";
  return report;
}

/// Minimal-solution hitting functionals of a finite set F, by value
/// iteration from zero:
///   discrete, theta >= 1:  u(x) = theta (1 + sum_{z not in F} p(x,z) u(z)),
///     so theta = 1 is the mean hitting time of F and theta > 1 carries
///     theta/(theta-1) (E[theta^phi_F] - 1);
///   continuous, 0 <= alpha < q(x) off F:
///     u(x) = (1 + sum_{z != x} q(x,z) u(z)) / (q(x) - alpha),
///     alpha = 0 giving the mean hitting time.
/// States outside the truncation stand in at the divergence cap (a +inf
/// surrogate); states whose iterates reach the cap are flagged unbounded at
/// this truncation rather than failing the whole call.
struct HittingFunctional {
  std::map<StateKey, double> values;  // 0 on F
  std::vector<StateKey> unbounded_at_truncation;
  long sweeps = 0;
};

inline HittingFunctional minimal_hitting_functional(const ChainModel& model,
                                                    const std::vector<StateKey>& focus_set,
                                                    double weight, const Truncation& trunc,
                                                    double tol = 1e-12, double cap = 1e15,
                                                    long max_sweeps = 1000000) {
  bool discrete = model.kind() == ChainKind::Discrete;
  if (discrete && !(weight >= 1.0)) {
    throw ValidationError("minimal_hitting_functional: discrete weight theta must be >= 1");
  }
  if (!discrete && !(weight >= 0.0)) {
    throw ValidationError("minimal_hitting_functional: continuous weight alpha must be >= 0");
  }
  if (focus_set.empty()) throw ValidationError("minimal_hitting_functional: F must be nonempty");

  int n = trunc.size();
  std::vector<char> in_focus(std::size_t(n), 0);
  for (const StateKey& f : focus_set) {
    int i = trunc.index_of(f);
    if (i < 0) {
      throw ValidationError("minimal_hitting_functional: F state " + f.to_string() +
                            " lies outside the truncation");
    }
    in_focus[std::size_t(i)] = 1;
  }
  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc);
  if (!discrete) {
    for (int i = 0; i < n; ++i) {
      if (!in_focus[std::size_t(i)] && !(weight < rows.total_weight[std::size_t(i)])) {
        throw ValidationError("minimal_hitting_functional: alpha must be < q(x) off F; fails at " +
                              trunc.state(i).to_string());
      }
    }
  }

  std::vector<double> u(std::size_t(n), 0.0);
  std::vector<double> next(std::size_t(n), 0.0);
  std::vector<double> last_change(std::size_t(n), 0.0);
  long sweeps = 0;
  for (; sweeps < max_sweeps; ++sweeps) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      if (in_focus[std::size_t(i)]) continue;
      double sum = rows.outside_weight[std::size_t(i)] * cap;
      for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1];
           ++e) {
        int j = rows.targets[e];
        if (!in_focus[std::size_t(j)]) sum += rows.weights[e] * u[std::size_t(j)];
      }
      double updated;
      if (discrete) {
        updated = weight * (1.0 + sum);
      } else {
        updated = (1.0 + sum) / (rows.total_weight[std::size_t(i)] - weight);
      }
      updated = std::min(updated, cap);
      last_change[std::size_t(i)] = updated - u[std::size_t(i)];
      change = std::max(change, last_change[std::size_t(i)]);
      next[std::size_t(i)] = updated;
    }
    u.swap(next);
    if (change <= tol) break;
  }

  HittingFunctional out;
  out.sweeps = sweeps;
  for (int i = 0; i < n; ++i) {
    out.values[trunc.state(i)] = in_focus[std::size_t(i)] ? 0.0 : u[std::size_t(i)];
    // Capped states, and states still drifting upward when the sweep budget
    // ran out, are where unboundedness begins.
    if (!in_focus[std::size_t(i)] &&
        (u[std::size_t(i)] >= cap || last_change[std::size_t(i)] > tol)) {
      out.unbounded_at_truncation.push_back(trunc.state(i));
    }
  }
  return out;
}

}  // namespace chainkit
