#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "chainkit/chainkit.hpp"
#include "oracles.hpp"

using namespace chainkit;

namespace {

SparseDistribution at(std::int64_t x) { return SparseDistribution::point_mass(StateKey::scalar(x)); }

// Chain of the minimality counterexample: 1 -> 0 (absorbing), 2 self-looping
// and unreachable from 1; domain {1,2}.
ChainModel minimality_example() {
  std::map<StateKey, TransitionRow> rows;
  rows[StateKey::scalar(0)] = TransitionRow{{{StateKey::scalar(0), 1.0}}};
  rows[StateKey::scalar(1)] = TransitionRow{{{StateKey::scalar(0), 1.0}}};
  rows[StateKey::scalar(2)] = TransitionRow{{{StateKey::scalar(2), 1.0}}};
  return make_explicit(ChainKind::Discrete, rows, at(1));
}

}  // namespace

TEST_CASE("three-state example: exit lands at zero after one occupied step") {
  ChainModel model = minimality_example();
  ExitStatistics stats = exit_joint_dt(model, Domain::from_set({StateKey::scalar(1),
                                                                StateKey::scalar(2)}),
                                       5, Truncation::range(0, 2));
  REQUIRE(stats.exit_marginal.at(StateKey::scalar(0)) == 1.0);
  REQUIRE(stats.exit_marginal.mass() == 1.0);
  REQUIRE(stats.occupation_marginal.at(StateKey::scalar(1)) == 1.0);
  REQUIRE(stats.occupation_marginal.mass() == 1.0);  // mean exit time 1
  REQUIRE(stats.mean_exit_time == 1.0);
  REQUIRE(stats.error_bound == 0.0);
}

TEST_CASE("mass starting outside the domain exits at time zero") {
  ChainModel model = make_gambler(0.5, 6, at(0));
  ExitStatistics stats = exit_joint_dt(model, Domain::interval(1, 5), 3,
                                       Truncation::range(0, 6));
  REQUIRE(stats.exit_by_time[0].at(StateKey::scalar(0)) == 1.0);
  REQUIRE(stats.occupation_marginal.mass() == 0.0);
}

TEST_CASE("gambler joint exit accumulates the closed-form success probability") {
  ChainModel model = make_gambler(0.5, 6, at(3));
  ExitStatistics stats = exit_joint_dt(model, Domain::interval(1, 5), 200,
                                       Truncation::range(0, 6));
  REQUIRE(stats.exit_marginal.at(StateKey::scalar(6)) == Catch::Approx(0.5).margin(1e-9));
  REQUIRE(stats.exit_marginal.at(StateKey::scalar(0)) == Catch::Approx(0.5).margin(1e-9));
  REQUIRE(stats.error_bound <= 1e-9);
}

TEST_CASE("exit tables are supported on the right sides of the domain boundary") {
  ChainModel model = make_gambler(0.4, 8, at(4));
  Domain domain = Domain::interval(1, 7);
  ExitStatistics stats = exit_joint_dt(model, domain, 60, Truncation::range(0, 8));
  for (const auto& [state, mass] : stats.exit_marginal) {
    REQUIRE(!domain.contains(state));
  }
  for (const auto& [state, mass] : stats.occupation_marginal) {
    REQUIRE(domain.contains(state));
  }
}

TEST_CASE("joint bounds improve with the horizon and the truncation") {
  ChainModel model = make_gambler(0.5, 12, at(6));
  Domain domain = Domain::interval(1, 11);
  ExitStatistics coarse = exit_joint_dt(model, domain, 30, Truncation::range(0, 12));
  ExitStatistics fine = exit_joint_dt(model, domain, 90, Truncation::range(0, 12));
  REQUIRE(coarse.exit_probability < fine.exit_probability);
  REQUIRE(coarse.mean_exit_time < fine.mean_exit_time);
  REQUIRE(coarse.error_bound > fine.error_bound);

  ExitStatistics narrow = exit_joint_dt(model, domain, 90, Truncation::range(2, 10));
  for (const auto& [state, mass] : narrow.exit_marginal) {
    REQUIRE(mass <= fine.exit_marginal.at(state) + 1e-15);
  }
}

TEST_CASE("minimal solution picks nu_S = 1_1 and rejects the inflated family") {
  ChainModel model = minimality_example();
  Domain domain = Domain::from_set({StateKey::scalar(1), StateKey::scalar(2)});
  ExitStatistics stats = exit_marginals_minimal(model, domain, model.gamma(),
                                                Truncation::range(0, 2), 1e-14);
  REQUIRE(stats.converged);
  REQUIRE(stats.occupation_marginal.at(StateKey::scalar(1)) == 1.0);
  REQUIRE(stats.occupation_marginal.at(StateKey::scalar(2)) == 0.0);
  REQUIRE(stats.exit_marginal.at(StateKey::scalar(0)) == 1.0);

  // rho = 1_1 + alpha 1_2 also solves the equations for every alpha >= 0,
  // and the solver's answer sits below each of them.
  for (double alpha : {0.5, 1.0, 10.0}) {
    std::map<std::int64_t, double> rho = {{1, 1.0}, {2, alpha}};
    for (std::int64_t x : {1, 2}) {
      double rhs = model.gamma().at(StateKey::scalar(x));
      for (std::int64_t z : {1, 2}) {
        double weight = 0.0;
        for (const auto& [target, w] : model.row(StateKey::scalar(z)).entries) {
          if (target == StateKey::scalar(x)) weight = w;
        }
        rhs += rho[z] * weight;
      }
      REQUIRE(rhs == Catch::Approx(rho[x]).margin(1e-15));
      REQUIRE(stats.occupation_marginal.at(StateKey::scalar(x)) <= rho[x]);
    }
  }
}

TEST_CASE("continuous two-state exit: one exponential sojourn") {
  ChainModel model = make_two_state(1.0, 1.0, at(0));
  ExitStatistics stats = exit_marginals_minimal(model, Domain::interval(0, 0), model.gamma(),
                                                Truncation::range(0, 1), 1e-14);
  REQUIRE(stats.converged);
  REQUIRE(stats.occupation_marginal.at(StateKey::scalar(0)) == Catch::Approx(1.0).margin(1e-13));
  REQUIRE(stats.exit_marginal.at(StateKey::scalar(1)) == Catch::Approx(1.0).margin(1e-13));
  REQUIRE(stats.mean_exit_time == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("biased gambler marginals match the ruin closed form") {
  ChainModel model = make_gambler(1.0 / 3.0, 4, at(1));
  ExitStatistics stats = exit_marginals_minimal(model, Domain::interval(1, 3), model.gamma(),
                                                Truncation::range(0, 4), 1e-15);
  REQUIRE(stats.converged);
  REQUIRE(stats.exit_marginal.at(StateKey::scalar(4)) ==
          Catch::Approx(1.0 / 15.0).margin(1e-12));
  GamblerOutcome oracle = gambler_oracle(1.0 / 3.0, 4, model.gamma());
  REQUIRE(stats.exit_marginal.at(StateKey::scalar(4)) ==
          Catch::Approx(oracle.success).margin(1e-12));
}

TEST_CASE("balance equations hold at the returned marginals") {
  ChainModel model = make_gambler(0.4, 8, at(4));
  Domain domain = Domain::interval(1, 7);
  const double tol = 1e-13;
  ExitStatistics stats = exit_marginals_minimal(model, domain, model.gamma(),
                                                Truncation::range(0, 8), tol);
  REQUIRE(stats.converged);
  for (std::int64_t x = 0; x <= 8; ++x) {
    double lhs = stats.exit_marginal.at(StateKey::scalar(x)) +
                 stats.occupation_marginal.at(StateKey::scalar(x));
    double rhs = model.gamma().at(StateKey::scalar(x));
    for (std::int64_t z = 1; z <= 7; ++z) {
      for (const auto& [target, weight] : model.row(StateKey::scalar(z)).entries) {
        if (target == StateKey::scalar(x)) {
          rhs += stats.occupation_marginal.at(StateKey::scalar(z)) * weight;
        }
      }
    }
    REQUIRE(std::abs(lhs - rhs) <= 10.0 * tol);
  }
}

TEST_CASE("an infinite mean exit time is reported, not thrown") {
  // Unit-drift-free random walk reflected at a far boundary: the exit from
  // {1..} through 0 has infinite expected occupation under this truncation?
  // Simpler: domain with an absorbing interior state soaks up mass forever.
  std::map<StateKey, TransitionRow> rows;
  rows[StateKey::scalar(0)] = TransitionRow{{{StateKey::scalar(0), 1.0}}};
  rows[StateKey::scalar(1)] = TransitionRow{{{StateKey::scalar(1), 1.0}}};  // absorbing in domain
  ChainModel model = make_explicit(ChainKind::Discrete, rows, at(1));
  ExitStatistics stats = exit_marginals_minimal(model, Domain::interval(1, 1), model.gamma(),
                                                Truncation::range(0, 1), 1e-12, 20000);
  REQUIRE(!stats.converged);
  REQUIRE(stats.last_iterate_mass > 0.0);
}

TEST_CASE("joint and minimal marginals agree when the exit is certain") {
  ChainModel model = make_gambler(0.45, 7, at(3));
  Domain domain = Domain::interval(1, 6);
  ExitStatistics joint = exit_joint_dt(model, domain, 400, Truncation::range(0, 7));
  ExitStatistics minimal = exit_marginals_minimal(model, domain, model.gamma(),
                                                  Truncation::range(0, 7), 1e-14);
  REQUIRE(l1_distance(joint.exit_marginal, minimal.exit_marginal) <= 1e-9);
  REQUIRE(l1_distance(joint.occupation_marginal, minimal.occupation_marginal) <= 1e-9);
}

TEST_CASE("exit-time density of the two-state chain is the unit exponential") {
  ChainModel model = make_two_state(1.0, 1.0, at(0));
  const int bins = 80;
  const double horizon = 4.0;
  ExitStatistics stats = exit_density_ct(model, Domain::interval(0, 0), horizon,
                                         Truncation::range(0, 1), 1e-12, bins);
  double width = horizon / bins;
  for (int b = 0; b < bins; ++b) {
    double expected = std::exp(-b * width) - std::exp(-(b + 1) * width);
    REQUIRE(stats.exit_by_time[std::size_t(b)].mass() ==
            Catch::Approx(expected).margin(1e-10));
  }
  REQUIRE(stats.initial_atom == 0.0);
  // E[tau ^ T] = integral of exp(-t) over [0, T], up to trapezoid error.
  REQUIRE(stats.mean_exit_time == Catch::Approx(1.0 - std::exp(-horizon)).margin(1e-3));
}

TEST_CASE("gamma mass outside the domain shows up as the atom at time zero") {
  SparseDistribution gamma;
  gamma.set(StateKey::scalar(0), 0.75);
  gamma.set(StateKey::scalar(1), 0.25);
  ChainModel model = make_two_state(1.0, 1.0, gamma);
  ExitStatistics stats = exit_density_ct(model, Domain::interval(0, 0), 2.0,
                                         Truncation::range(0, 1), 1e-12, 16);
  REQUIRE(stats.initial_atom == 0.25);
  REQUIRE(stats.exit_marginal.at(StateKey::scalar(1)) >= 0.25);
}

TEST_CASE("pure-death exit probabilities match Monte Carlo") {
  // q(x, x-1) = x from 3; domain {1,2,3}; tau = time to reach 0.
  ChainModel model = make_birth_death([](std::int64_t) { return 0.0; },
                                      [](std::int64_t x) { return double(x); }, at(3));
  const double horizon = 2.0;
  ExitStatistics stats = exit_density_ct(model, Domain::interval(1, 3), horizon,
                                         Truncation::range(0, 3), 1e-12, 64);
  double certified = stats.exit_probability;

  const int paths = 100000;
  int exited = 0;
  for (int p = 0; p < paths; ++p) {
    PathCT path = sample_path_ct(model, horizon, 10, 555, std::uint64_t(p));
    if (path.states.back() == StateKey::scalar(0)) ++exited;
  }
  double estimate = double(exited) / paths;
  double se = std::sqrt(certified * (1.0 - certified) / paths);
  REQUIRE(std::abs(estimate - certified) <= 3.0 * se);
}

TEST_CASE("gambler oracle agrees with the minimal-solution solver on a grid") {
  for (double a : {0.3, 0.5, 0.7}) {
    for (std::int64_t k : {4LL, 10LL, 50LL}) {
      SparseDistribution gamma = at(k / 2);
      ChainModel model = make_gambler(a, k, gamma);
      ExitStatistics stats = exit_marginals_minimal(model, Domain::interval(1, k - 1), gamma,
                                                    Truncation::range(0, k), 1e-14);
      REQUIRE(stats.converged);
      GamblerOutcome oracle = gambler_oracle(a, k, gamma);
      REQUIRE(stats.exit_marginal.at(StateKey::scalar(k)) ==
              Catch::Approx(oracle.success).margin(1e-9));
      REQUIRE(stats.exit_marginal.at(StateKey::scalar(0)) ==
              Catch::Approx(oracle.ruin).margin(1e-9));
    }
  }
}

TEST_CASE("gambler oracle closed forms") {
  REQUIRE(gambler_oracle(0.5, 1000, at(10)).success == Catch::Approx(0.01).margin(1e-15));
  REQUIRE(gambler_oracle(0.5, 100, at(50)).success == 0.5);
  REQUIRE(gambler_oracle(1.0 / 3.0, 2, at(1)).success ==
          Catch::Approx(1.0 / 3.0).margin(1e-15));
  REQUIRE(gambler_oracle(0.3, 10, at(5)).ruin +
              gambler_oracle(0.3, 10, at(5)).success ==
          1.0);
  REQUIRE_THROWS_AS(gambler_oracle(0.5, 10, at(10)), ValidationError);
  REQUIRE_THROWS_AS(gambler_oracle(0.5, 10, at(0)), ValidationError);
}
