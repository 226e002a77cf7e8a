#include <catch2/catch_amalgamated.hpp>

#include "chainkit/chainkit.hpp"
#include "chainkit/model_io.hpp"

using namespace chainkit;

namespace {

SparseDistribution at(std::int64_t x) { return SparseDistribution::point_mass(StateKey::scalar(x)); }

double row_weight(const TransitionRow& row, std::int64_t target) {
  for (const auto& [key, weight] : row.entries) {
    if (key == StateKey::scalar(target)) return weight;
  }
  return 0.0;
}

}  // namespace

TEST_CASE("state keys compare lexicographically and hash consistently") {
  StateKey a{1, 2};
  StateKey b{1, 3};
  StateKey c{2, 0};
  REQUIRE(a < b);
  REQUIRE(b < c);
  REQUIRE(a == StateKey({1, 2}));
  REQUIRE(StateKeyHash{}(a) == StateKeyHash{}(StateKey({1, 2})));
  REQUIRE(StateKeyHash{}(a) != StateKeyHash{}(b));
}

TEST_CASE("state indexer round-trips every discovered key") {
  StateIndexer indexer;
  std::vector<StateKey> keys = {StateKey{3}, StateKey{-1}, StateKey{0, 7}, StateKey{3}};
  for (const StateKey& k : keys) indexer.index_of(k);
  REQUIRE(indexer.size() == 3);  // duplicate collapsed
  for (int i = 0; i < indexer.size(); ++i) {
    REQUIRE(indexer.index_of(indexer.key_of(i)) == i);
  }
  REQUIRE(indexer.index_of(StateKey{3}) == 0);  // discovery order is stable
}

TEST_CASE("gambler family reproduces its transition law") {
  ChainModel model = make_gambler(0.5, 3, at(1));
  TransitionRow middle = model.row(StateKey::scalar(1));
  REQUIRE(middle.entries.size() == 2);
  REQUIRE(row_weight(middle, 0) == 0.5);
  REQUIRE(row_weight(middle, 2) == 0.5);
  TransitionRow absorbed = model.row(StateKey::scalar(0));
  REQUIRE(absorbed.entries.size() == 1);
  REQUIRE(row_weight(absorbed, 0) == 1.0);

  REQUIRE_THROWS_AS(make_gambler(1.5, 3, at(1)), ValidationError);
  REQUIRE_THROWS_AS(make_gambler(0.0, 3, at(1)), ValidationError);
}

TEST_CASE("pure birth family moves one state up per jump") {
  ChainModel model = make_pure_birth_geometric(2.0, at(0));
  TransitionRow row = model.row(StateKey::scalar(5));
  REQUIRE(row.entries.size() == 1);
  REQUIRE(row.entries[0].first == StateKey::scalar(6));
  REQUIRE(row.entries[0].second == 32.0);
  // Rates saturate rather than overflowing the finite-rate axiom.
  REQUIRE(std::isfinite(model.total_rate(StateKey::scalar(5000))));
}

TEST_CASE("explicit discrete rows must sum to one") {
  std::map<StateKey, TransitionRow> rows;
  rows[StateKey::scalar(0)] = TransitionRow{{{StateKey::scalar(0), 0.5}, {StateKey::scalar(1), 0.6}}};
  ChainModel model = make_explicit(ChainKind::Discrete, rows, at(0));
  REQUIRE_THROWS_AS(model.row(StateKey::scalar(0)), ValidationError);

  std::map<StateKey, TransitionRow> negative;
  negative[StateKey::scalar(0)] =
      TransitionRow{{{StateKey::scalar(0), 1.5}, {StateKey::scalar(1), -0.5}}};
  ChainModel bad = make_explicit(ChainKind::Discrete, negative, at(0));
  REQUIRE_THROWS_AS(bad.row(StateKey::scalar(0)), ValidationError);
}

TEST_CASE("continuous rows reject diagonal entries and duplicate targets") {
  std::map<StateKey, TransitionRow> rows;
  rows[StateKey::scalar(0)] = TransitionRow{{{StateKey::scalar(0), 1.0}}};
  ChainModel diag = make_explicit(ChainKind::Continuous, rows, at(0));
  REQUIRE_THROWS_AS(diag.row(StateKey::scalar(0)), ValidationError);

  std::map<StateKey, TransitionRow> dup;
  dup[StateKey::scalar(0)] =
      TransitionRow{{{StateKey::scalar(1), 0.5}, {StateKey::scalar(1), 0.5}}};
  ChainModel model = make_explicit(ChainKind::Continuous, dup, at(0));
  REQUIRE_THROWS_AS(model.row(StateKey::scalar(0)), ValidationError);
}

TEST_CASE("initial distributions must carry unit mass") {
  SparseDistribution short_mass;
  short_mass.set(StateKey::scalar(0), 0.5);
  REQUIRE_THROWS_AS(make_two_state(1.0, 1.0, short_mass), ValidationError);
}

TEST_CASE("jump decomposition of the miller chain") {
  ChainModel model = make_miller(at(0));
  JumpDecomposition jumps(model);
  // q(1,0) = 2, q(1,2) = 4: P(1,0) = 1/3, P(1,2) = 2/3, lambda = 6.
  TransitionRow row = jumps.jump_chain().row(StateKey::scalar(1));
  REQUIRE(row_weight(row, 0) == Catch::Approx(1.0 / 3.0).margin(1e-15));
  REQUIRE(row_weight(row, 2) == Catch::Approx(2.0 / 3.0).margin(1e-15));
  REQUIRE(jumps.jump_rate(StateKey::scalar(1)) == 6.0);
}

TEST_CASE("jump decomposition gives absorbing states the identity row and unit rate") {
  std::map<StateKey, TransitionRow> rows;
  rows[StateKey::scalar(0)] = TransitionRow{};
  ChainModel model = make_explicit(ChainKind::Continuous, rows, at(0));
  JumpDecomposition jumps(model);
  TransitionRow row = jumps.jump_chain().row(StateKey::scalar(0));
  REQUIRE(row.entries.size() == 1);
  REQUIRE(row_weight(row, 0) == 1.0);
  REQUIRE(jumps.jump_rate(StateKey::scalar(0)) == 1.0);
}

TEST_CASE("two-state decomposition is a single certain jump") {
  ChainModel model = make_two_state(1.0, 1.0, at(0));
  JumpDecomposition jumps(model);
  TransitionRow row = jumps.jump_chain().row(StateKey::scalar(0));
  REQUIRE(row.entries.size() == 1);
  REQUIRE(row_weight(row, 1) == 1.0);
  REQUIRE(jumps.jump_rate(StateKey::scalar(0)) == 1.0);
}

TEST_CASE("reconstructing rates from the jump decomposition is exact") {
  ChainModel model = make_miller(at(0));
  JumpDecomposition jumps(model);
  for (std::int64_t x = 0; x <= 12; ++x) {
    TransitionRow original = model.row(StateKey::scalar(x));
    double q = original.total_weight();
    if (q == 0.0) continue;
    TransitionRow jump_row = jumps.jump_chain().row(StateKey::scalar(x));
    double lambda = jumps.jump_rate(StateKey::scalar(x));
    for (const auto& [target, weight] : original.entries) {
      REQUIRE(lambda * row_weight(jump_row, target.value()) ==
              Catch::Approx(weight).epsilon(1e-14));
    }
  }
}

TEST_CASE("discrete rows of every family sum to one within tolerance") {
  ChainModel gambler = make_gambler(0.37, 12, at(6));
  for (std::int64_t x = 0; x <= 12; ++x) {
    REQUIRE(std::abs(gambler.row(StateKey::scalar(x)).total_weight() - 1.0) <= 1e-12);
  }
}

TEST_CASE("model specs round-trip through JSON") {
  ModelSpec spec;
  spec.kind = "gambler";
  spec.scalar_params = {{"a", 0.5}, {"K", 6}};
  spec.gamma.set(StateKey::scalar(3), 1.0);
  nlohmann::json doc = model_spec_to_json(spec);
  ModelSpec parsed = parse_model_spec(doc);
  ChainModel model = build_model(parsed);
  REQUIRE(model.kind() == ChainKind::Discrete);
  REQUIRE(model.row(StateKey::scalar(3)).entries.size() == 2);

  ModelSpec explicit_spec;
  explicit_spec.kind = "explicit-ct";
  explicit_spec.gamma.set(StateKey::scalar(0), 1.0);
  explicit_spec.rows[StateKey::scalar(0)] = TransitionRow{{{StateKey::scalar(1), 2.0}}};
  explicit_spec.rows[StateKey::scalar(1)] = TransitionRow{};
  ModelSpec reparsed = parse_model_spec(model_spec_to_json(explicit_spec));
  ChainModel rebuilt = build_model(reparsed);
  REQUIRE(rebuilt.total_rate(StateKey::scalar(0)) == 2.0);
  REQUIRE(rebuilt.total_rate(StateKey::scalar(1)) == 0.0);
}

TEST_CASE("model files reject unknown fields") {
  nlohmann::json doc = {{"kind", "miller"},
                        {"gamma", {{{0}, 1.0}}},
                        {"surprise", 1}};
  REQUIRE_THROWS_AS(parse_model_spec(doc), ValidationError);
}

TEST_CASE("two-dimensional lattice models work end to end") {
  // Deterministic cycle over the 2x2 torus (0,0) -> (0,1) -> (1,0) -> (1,1).
  std::map<StateKey, TransitionRow> rows;
  rows[StateKey{0, 0}] = TransitionRow{{{StateKey{0, 1}, 1.0}}};
  rows[StateKey{0, 1}] = TransitionRow{{{StateKey{1, 0}, 1.0}}};
  rows[StateKey{1, 0}] = TransitionRow{{{StateKey{1, 1}, 1.0}}};
  rows[StateKey{1, 1}] = TransitionRow{{{StateKey{0, 0}, 1.0}}};
  ChainModel model = make_explicit(ChainKind::Discrete, rows,
                                   SparseDistribution::point_mass(StateKey{0, 0}));
  Truncation trunc = Truncation::box({{0, 1}, {0, 1}});
  REQUIRE(trunc.size() == 4);
  auto decomposition = classify(model, trunc);
  REQUIRE(decomposition.classes.size() == 1);
  REQUIRE(decomposition.classes[0].certified_closed);
  REQUIRE(decomposition.classes[0].period == 4);
  SparseDistribution law = law_exact_dt(model, 2, trunc);
  REQUIRE(law.at(StateKey{1, 0}) == 1.0);
  PathDT path = sample_path_dt(model, 3, 0);
  REQUIRE(path.states.back() == StateKey{1, 1});
}

TEST_CASE("birth-death from polynomial coefficients") {
  ModelSpec spec;
  spec.kind = "birth-death";
  spec.vector_params["birth_coeffs"] = {1.0};       // constant birth rate 1
  spec.vector_params["death_coeffs"] = {0.0, 2.0};  // death rate 2x
  spec.gamma.set(StateKey::scalar(0), 1.0);
  ChainModel model = build_model(spec);
  TransitionRow row = model.row(StateKey::scalar(3));
  REQUIRE(row_weight(row, 2) == 6.0);
  REQUIRE(row_weight(row, 4) == 1.0);
  REQUIRE(model.row(StateKey::scalar(0)).entries.size() == 1);  // no death at zero
}
