#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "chainkit/detail/kernel.hpp"
#include "chainkit/errors.hpp"
#include "chainkit/model.hpp"
#include "chainkit/truncation.hpp"

namespace chainkit {

struct StateClass {
  std::vector<StateKey> members;
  /// Every outgoing transition of every member stays inside the class, so the
  /// class is closed in the full chain, not merely within the truncation.
  bool certified_closed = false;
  int period = 1;  // always 1 for continuous models
  /// "recurrent" for finite certified-closed classes, otherwise
  /// "unknown at this truncation" (recurrence of infinite chains cannot be
  /// decided from a truncation).
  std::string recurrence_label;
};

struct ClassDecomposition {
  std::vector<StateClass> classes;
  std::vector<StateKey> outside_certified_closed;
  std::vector<StateKey> boundary_states;  // truncation states with an escaping transition
};

namespace detail {

// Iterative Tarjan over the positive-transition digraph restricted to the
// truncation. Components come out in reverse topological order; we sort each
// by state key afterwards so the result is independent of traversal order.
inline std::vector<std::vector<int>> strongly_connected_components(const TruncatedRows& rows) {
  int n = rows.size();
  std::vector<int> number(std::size_t(n), -1);
  std::vector<int> low(std::size_t(n), -1);
  std::vector<int> stack_pos(std::size_t(n), -1);
  std::vector<int> stack;
  std::vector<std::vector<int>> components;
  int counter = 0;

  struct Frame {
    int vertex;
    std::size_t edge;
  };
  std::vector<Frame> call_stack;

  for (int root = 0; root < n; ++root) {
    if (number[std::size_t(root)] != -1) continue;
    call_stack.push_back({root, rows.offsets[std::size_t(root)]});
    number[std::size_t(root)] = low[std::size_t(root)] = counter++;
    stack_pos[std::size_t(root)] = static_cast<int>(stack.size());
    stack.push_back(root);

    while (!call_stack.empty()) {
      Frame& frame = call_stack.back();
      int v = frame.vertex;
      bool descended = false;
      while (frame.edge < rows.offsets[std::size_t(v) + 1]) {
        std::size_t e = frame.edge++;
        if (rows.weights[e] <= 0.0) continue;
        int w = rows.targets[e];
        if (number[std::size_t(w)] == -1) {
          call_stack.push_back({w, rows.offsets[std::size_t(w)]});
          number[std::size_t(w)] = low[std::size_t(w)] = counter++;
          stack_pos[std::size_t(w)] = static_cast<int>(stack.size());
          stack.push_back(w);
          descended = true;
          break;
        }
        if (stack_pos[std::size_t(w)] != -1) {
          low[std::size_t(v)] = std::min(low[std::size_t(v)], number[std::size_t(w)]);
        }
      }
      if (descended) continue;
      if (low[std::size_t(v)] == number[std::size_t(v)]) {
        std::vector<int> component;
        int base = stack_pos[std::size_t(v)];
        while (static_cast<int>(stack.size()) > base) {
          int w = stack.back();
          stack.pop_back();
          stack_pos[std::size_t(w)] = -1;
          component.push_back(w);
        }
        components.push_back(std::move(component));
      }
      call_stack.pop_back();
      if (!call_stack.empty()) {
        int parent = call_stack.back().vertex;
        low[std::size_t(parent)] = std::min(low[std::size_t(parent)], low[std::size_t(v)]);
      }
    }
  }
  return components;
}

// Period of one component: gcd of level(u)+1-level(v) over its internal
// edges, from a breadth-first layering. Any cycle length inside the
// component is a sum of these differences, so the gcd divides them all.
inline int component_period(const TruncatedRows& rows, const std::vector<int>& component,
                            const std::vector<int>& component_of, int component_id) {
  std::vector<int> level(rows.total_weight.size(), -1);
  std::vector<int> queue;
  queue.push_back(component.front());
  level[std::size_t(component.front())] = 0;
  long long g = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int v = queue[head];
    for (std::size_t e = rows.offsets[std::size_t(v)]; e < rows.offsets[std::size_t(v) + 1]; ++e) {
      if (rows.weights[e] <= 0.0) continue;
      int w = rows.targets[e];
      if (component_of[std::size_t(w)] != component_id) continue;
      if (level[std::size_t(w)] == -1) {
        level[std::size_t(w)] = level[std::size_t(v)] + 1;
        queue.push_back(w);
      }
      g = std::gcd(g, static_cast<long long>(level[std::size_t(v)]) + 1 - level[std::size_t(w)]);
    }
  }
  // Empty return-time set (no cycle closes inside the component): period 1.
  return g == 0 ? 1 : static_cast<int>(g);
}

}  // namespace detail

/// Communicating classes of the truncation: strongly connected components of
/// the positive-transition digraph, with closedness certified against the
/// full row oracle and periods computed for discrete models (continuous
/// chains are always aperiodic).
inline ClassDecomposition classify(const ChainModel& model, const Truncation& trunc) {
  if (trunc.size() == 0) throw ValidationError("classify: truncation must be nonempty");
  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc, true);
  std::vector<std::vector<int>> components = detail::strongly_connected_components(rows);

  std::vector<int> component_of(std::size_t(trunc.size()), -1);
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (int v : components[c]) component_of[std::size_t(v)] = static_cast<int>(c);
  }

  ClassDecomposition out;
  for (std::size_t c = 0; c < components.size(); ++c) {
    StateClass cls;
    bool closed = true;
    for (int v : components[c]) {
      if (rows.outside_weight[std::size_t(v)] > 0.0) closed = false;
      for (std::size_t e = rows.offsets[std::size_t(v)]; e < rows.offsets[std::size_t(v) + 1];
           ++e) {
        if (rows.weights[e] > 0.0 &&
            component_of[std::size_t(rows.targets[e])] != static_cast<int>(c)) {
          closed = false;
        }
      }
    }
    cls.certified_closed = closed;
    cls.period = model.kind() == ChainKind::Discrete
                     ? detail::component_period(rows, components[c], component_of,
                                                static_cast<int>(c))
                     : 1;
    cls.recurrence_label = closed ? "recurrent" : "unknown at this truncation";
    for (int v : components[c]) cls.members.push_back(trunc.state(v));
    std::sort(cls.members.begin(), cls.members.end());
    out.classes.push_back(std::move(cls));
  }
  std::sort(out.classes.begin(), out.classes.end(),
            [](const StateClass& a, const StateClass& b) { return a.members < b.members; });

  for (const StateClass& cls : out.classes) {
    if (!cls.certified_closed) {
      out.outside_certified_closed.insert(out.outside_certified_closed.end(), cls.members.begin(),
                                          cls.members.end());
    }
  }
  std::sort(out.outside_certified_closed.begin(), out.outside_certified_closed.end());
  for (int i = 0; i < trunc.size(); ++i) {
    if (rows.outside_weight[std::size_t(i)] > 0.0) out.boundary_states.push_back(trunc.state(i));
  }
  std::sort(out.boundary_states.begin(), out.boundary_states.end());
  return out;
}

/// Probabilities of ever hitting `target` (states already inside count as hit
/// at time zero), restricted to a truncation. States outside the truncation
/// are treated as never hitting, and so is the boundary layer (non-target
/// states whose rows leave the truncation): only mass that provably reaches
/// the target through fully known rows is credited. The result is therefore
/// a certified lower bound on the true hitting probability, and it never
/// decreases when the truncation grows.
///
/// Computed as the minimal nonnegative solution of the hitting-probability
/// equations by monotone value iteration from zero, which is exactly the
/// construction that proves minimality.
inline std::map<StateKey, double> hitting_probabilities(const ChainModel& model,
                                                        const std::vector<StateKey>& target,
                                                        const Truncation& trunc,
                                                        double tol = 1e-12,
                                                        long max_iters = 1000000) {
  if (model.kind() != ChainKind::Discrete) {
    throw ValidationError(
        "hitting_probabilities works on discrete models; pass the jump chain of a continuous "
        "model");
  }
  if (target.empty()) throw ValidationError("hitting_probabilities: target must be nonempty");
  std::vector<char> in_target(std::size_t(trunc.size()), 0);
  for (const StateKey& t : target) {
    int i = trunc.index_of(t);
    if (i < 0) {
      throw ValidationError("hitting_probabilities: target state " + t.to_string() +
                            " lies outside the truncation");
    }
    in_target[std::size_t(i)] = 1;
  }

  int n = trunc.size();
  detail::TruncatedRows rows = detail::build_truncated_rows(model, trunc);
  std::vector<char> missing(std::size_t(n), 0);  // boundary layer: pinned to zero
  for (int i = 0; i < n; ++i) {
    if (!in_target[std::size_t(i)] && rows.outside_weight[std::size_t(i)] > 0.0) {
      missing[std::size_t(i)] = 1;
    }
  }
  // Per live state: constant inflow into the target plus live neighbors.
  std::vector<double> constant(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (in_target[std::size_t(i)] || missing[std::size_t(i)]) continue;
    for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1]; ++e) {
      if (in_target[std::size_t(rows.targets[e])]) constant[std::size_t(i)] += rows.weights[e];
    }
  }

  std::vector<double> h(std::size_t(n), 0.0);
  std::vector<double> next(std::size_t(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (in_target[std::size_t(i)]) h[std::size_t(i)] = 1.0;
  }
  double change = 0.0;
  for (long iter = 0; iter < max_iters; ++iter) {
    change = 0.0;
    for (int i = 0; i < n; ++i) {
      if (in_target[std::size_t(i)]) {
        next[std::size_t(i)] = 1.0;
        continue;
      }
      if (missing[std::size_t(i)]) {
        next[std::size_t(i)] = 0.0;
        continue;
      }
      double sum = constant[std::size_t(i)];
      for (std::size_t e = rows.offsets[std::size_t(i)]; e < rows.offsets[std::size_t(i) + 1];
           ++e) {
        int j = rows.targets[e];
        if (!in_target[std::size_t(j)] && !missing[std::size_t(j)]) {
          sum += rows.weights[e] * h[std::size_t(j)];
        }
      }
      next[std::size_t(i)] = std::min(sum, 1.0);
      change = std::max(change, next[std::size_t(i)] - h[std::size_t(i)]);
    }
    h.swap(next);
    if (change <= tol) {
      std::map<StateKey, double> out;
      for (int i = 0; i < n; ++i) out[trunc.state(i)] = h[std::size_t(i)];
      return out;
    }
  }
  throw SolveError("hitting_probabilities did not converge within " + std::to_string(max_iters) +
                       " sweeps",
                   change);
}

}  // namespace chainkit
