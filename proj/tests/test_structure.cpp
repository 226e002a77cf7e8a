#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "chainkit/chainkit.hpp"

using namespace chainkit;

namespace {

SparseDistribution at(std::int64_t x) { return SparseDistribution::point_mass(StateKey::scalar(x)); }

ChainModel cycle_model(int k) {
  std::map<StateKey, TransitionRow> rows;
  for (int i = 0; i < k; ++i) {
    rows[StateKey::scalar(i)] = TransitionRow{{{StateKey::scalar((i + 1) % k), 1.0}}};
  }
  return make_explicit(ChainKind::Discrete, rows, at(0));
}

ChainModel identity_model(int n) {
  std::map<StateKey, TransitionRow> rows;
  for (int i = 0; i < n; ++i) {
    rows[StateKey::scalar(i)] = TransitionRow{{{StateKey::scalar(i), 1.0}}};
  }
  return make_explicit(ChainKind::Discrete, rows, at(0));
}

const StateClass* class_of(const ClassDecomposition& d, std::int64_t member) {
  for (const StateClass& cls : d.classes) {
    for (const StateKey& s : cls.members) {
      if (s == StateKey::scalar(member)) return &cls;
    }
  }
  return nullptr;
}

}  // namespace

TEST_CASE("alternating chain is one closed class of period two") {
  ClassDecomposition d = classify(cycle_model(2), Truncation::range(0, 1));
  REQUIRE(d.classes.size() == 1);
  REQUIRE(d.classes[0].members.size() == 2);
  REQUIRE(d.classes[0].certified_closed);
  REQUIRE(d.classes[0].period == 2);
  REQUIRE(d.classes[0].recurrence_label == "recurrent");
  REQUIRE(d.boundary_states.empty());
}

TEST_CASE("gambler splits into two absorbing singletons and an open interior") {
  ChainModel model = make_gambler(0.5, 6, at(3));
  ClassDecomposition d = classify(model, Truncation::range(0, 6));
  REQUIRE(d.classes.size() == 3);
  const StateClass* zero = class_of(d, 0);
  const StateClass* top = class_of(d, 6);
  const StateClass* interior = class_of(d, 3);
  REQUIRE(zero->members.size() == 1);
  REQUIRE(zero->certified_closed);
  REQUIRE(zero->period == 1);
  REQUIRE(top->members.size() == 1);
  REQUIRE(top->certified_closed);
  REQUIRE(interior->members.size() == 5);
  REQUIRE(!interior->certified_closed);
  REQUIRE(interior->recurrence_label == "unknown at this truncation");
  REQUIRE(d.outside_certified_closed.size() == 5);
}

TEST_CASE("identity matrix gives singleton closed classes of period one") {
  ClassDecomposition d = classify(identity_model(5), Truncation::range(0, 4));
  REQUIRE(d.classes.size() == 5);
  for (const StateClass& cls : d.classes) {
    REQUIRE(cls.members.size() == 1);
    REQUIRE(cls.certified_closed);
    REQUIRE(cls.period == 1);
  }
}

TEST_CASE("a k-cycle has period k") {
  for (int k = 2; k <= 6; ++k) {
    ClassDecomposition d = classify(cycle_model(k), Truncation::range(0, k - 1));
    REQUIRE(d.classes.size() == 1);
    REQUIRE(d.classes[0].period == k);
  }
}

TEST_CASE("classification is invariant under truncation reordering") {
  ChainModel model = make_gambler(0.4, 8, at(4));
  ClassDecomposition a = classify(model, Truncation::range(0, 8));
  std::vector<StateKey> reversed;
  for (std::int64_t x = 8; x >= 0; --x) reversed.push_back(StateKey::scalar(x));
  ClassDecomposition b = classify(model, Truncation(reversed));
  REQUIRE(a.classes.size() == b.classes.size());
  for (std::size_t c = 0; c < a.classes.size(); ++c) {
    REQUIRE(a.classes[c].members == b.classes[c].members);
    REQUIRE(a.classes[c].certified_closed == b.classes[c].certified_closed);
    REQUIRE(a.classes[c].period == b.classes[c].period);
  }
}

TEST_CASE("certified-closed classes really keep every transition inside") {
  ChainModel model = make_miller(at(0));
  JumpDecomposition jumps(model);
  ClassDecomposition d = classify(jumps.jump_chain(), Truncation::range(0, 15));
  for (const StateClass& cls : d.classes) {
    if (!cls.certified_closed) continue;
    std::set<StateKey> members(cls.members.begin(), cls.members.end());
    for (const StateKey& x : cls.members) {
      for (const auto& [target, weight] : jumps.jump_chain().row(x).entries) {
        if (weight > 0.0) REQUIRE(members.count(target) == 1);
      }
    }
  }
  // The whole truncation is open for the miller jump chain.
  for (const StateClass& cls : d.classes) REQUIRE(!cls.certified_closed);
  REQUIRE(!d.boundary_states.empty());
}

TEST_CASE("miller jump chain hits zero from one with probability 1/3 on {0..2}") {
  ChainModel model = make_miller(at(1));
  JumpDecomposition jumps(model);
  auto h = hitting_probabilities(jumps.jump_chain(), {StateKey::scalar(0)},
                                 Truncation::range(0, 2));
  // closed form: 1 - 1/(2 - 2^-(k-1)) at k = 2
  REQUIRE(h.at(StateKey::scalar(1)) == Catch::Approx(1.0 / 3.0).margin(1e-11));
}

TEST_CASE("states already inside the target hit at time zero") {
  ChainModel model = make_gambler(0.5, 6, at(3));
  auto h = hitting_probabilities(model, {StateKey::scalar(2)}, Truncation::range(0, 6));
  REQUIRE(h.at(StateKey::scalar(2)) == 1.0);
}

TEST_CASE("gambler hitting probabilities reproduce x/K") {
  const std::int64_t k = 10;
  ChainModel model = make_gambler(0.5, k, at(5));
  auto h = hitting_probabilities(model, {StateKey::scalar(k)}, Truncation::range(0, k));
  for (std::int64_t x = 0; x <= k; ++x) {
    REQUIRE(h.at(StateKey::scalar(x)) ==
            Catch::Approx(double(x) / double(k)).margin(1e-9));
  }
}

TEST_CASE("coarser tolerances stop below the limit, never above it") {
  ChainModel model = make_gambler(0.5, 12, at(6));
  auto coarse = hitting_probabilities(model, {StateKey::scalar(12)}, Truncation::range(0, 12),
                                      1e-3);
  auto fine = hitting_probabilities(model, {StateKey::scalar(12)}, Truncation::range(0, 12),
                                    1e-13);
  for (const auto& [state, value] : coarse) {
    REQUIRE(value <= fine.at(state) + 1e-15);
  }
}

TEST_CASE("enlarging the truncation never decreases a hitting probability") {
  ChainModel model = make_miller(at(1));
  JumpDecomposition jumps(model);
  auto small = hitting_probabilities(jumps.jump_chain(), {StateKey::scalar(0)},
                                     Truncation::range(0, 5));
  auto large = hitting_probabilities(jumps.jump_chain(), {StateKey::scalar(0)},
                                     Truncation::range(0, 15));
  for (const auto& [state, value] : small) {
    REQUIRE(value <= large.at(state) + 1e-12);
  }
}

TEST_CASE("hitting probabilities demand targets inside the truncation") {
  ChainModel model = make_gambler(0.5, 6, at(3));
  REQUIRE_THROWS_AS(
      hitting_probabilities(model, {StateKey::scalar(9)}, Truncation::range(0, 6)),
      ValidationError);
}
