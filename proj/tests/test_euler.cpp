#include <catch_amalgamated.hpp>

#include <cmath>

#include "odesurro/euler.hpp"
#include "test_support.hpp"

using namespace odesurro;

namespace {

// Only B evolves: V_B = 0, gamma_B = 1 gives dB/dt = -B. kappa_A keeps the
// Z_RNA denominator away from zero.
ParameterSet decoupled_b() {
  ParameterSet p;
  p.gamma_B = 1.0;
  p.kappa_A = 1.0;
  return p;
}

double b_at_one_minute(double dt) {
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / dt));
  return integrate({0, 1.0, 0, 0, 0, 0}, decoupled_b(), {dt, steps}).states.back()[kB];
}

}  // namespace

TEST_CASE("decoupled B follows the Euler recurrence", "[euler]") {
  const double b = b_at_one_minute(0.01);
  CHECK(std::abs(b - 0.36603234127322950493) <= 1e-12);
  CHECK(std::abs(b - std::exp(-1.0)) <= 2e-3);
}

TEST_CASE("halving dt halves the error against the exponential", "[euler]") {
  const double e1 = std::abs(b_at_one_minute(0.02) - std::exp(-1.0));
  const double e2 = std::abs(b_at_one_minute(0.01) - std::exp(-1.0));
  const double e3 = std::abs(b_at_one_minute(0.005) - std::exp(-1.0));
  CHECK(e1 / e2 >= 1.8);
  CHECK(e1 / e2 <= 2.2);
  CHECK(e2 / e3 >= 1.8);
  CHECK(e2 / e3 <= 2.2);
}

TEST_CASE("exact fixed point is preserved", "[euler]") {
  // With unit parameters: A* = B* = 1/2, C_RNA from dC_p = 0 etc. Solve the
  // chain in closed form.
  const ParameterSet p = test::unit_params();
  const double a = 0.5, b = 0.5;
  const double c_p = a / (1.0 + a + b);  // dC_RNA = 0 with decay on C_p
  const double c_rna = c_p;              // dC_p = 0: kappa_A C_RNA = C_p
  const double z_rna = c_p / (1.0 + c_p);
  const double z_p = z_rna;
  const StateVector fp = {a, b, c_rna, c_p, z_rna, z_p};
  const StateVector d = rhs(fp, p);
  for (double v : d) REQUIRE(std::abs(v) <= 1e-15);
  const Trajectory t = integrate(fp, p, {0.01, 1000});
  for (const auto& s : t.states) {
    for (std::size_t k = 0; k < kNumSpecies; ++k) CHECK(std::abs(s[k] - fp[k]) <= 1e-12);
  }
  const StateVector adv = advance(fp, p, 0.01, 777);
  for (std::size_t k = 0; k < kNumSpecies; ++k) CHECK(std::abs(adv[k] - fp[k]) <= 1e-12);
}

TEST_CASE("one step is the definition of forward Euler", "[euler]") {
  const ParameterSet p = test::oracle_params();
  const StateVector s = test::kOracleState;
  const StateVector d = rhs(s, p);
  StateVector expect;
  for (std::size_t k = 0; k < kNumSpecies; ++k) expect[k] = s[k] + 0.01 * d[k];
  CHECK(integrate(s, p, {0.01, 1}).states[1] == expect);
  CHECK(advance(s, p, 0.01, 1) == expect);
}

TEST_CASE("trajectory shape and time column", "[euler]") {
  const Trajectory t = integrate(test::kOracleState, test::oracle_params(), {0.01, 5000});
  REQUIRE(t.rows() == 5001);
  CHECK(t.states[0] == test::kOracleState);
  CHECK(t.time(0) == 0.0);
  for (std::size_t k = 1; k < t.rows(); ++k) {
    CHECK(std::abs((t.time(k) - t.time(k - 1)) - 0.01) <= 1e-12);
  }
}

TEST_CASE("advance agrees with integrate and composes", "[euler]") {
  const ParameterSet p = test::oracle_params();
  const StateVector s = test::kOracleState;
  CHECK(advance(s, p, 0.01, 625) == integrate(s, p, {0.01, 625}).states.back());
  CHECK(advance(s, p, 0.01, 300 + 325) == advance(advance(s, p, 0.01, 300), p, 0.01, 325));
  CHECK_THROWS_AS(advance(s, p, 0.01, 0), ConfigError);
}

TEST_CASE("blow-up is reported with its step", "[euler]") {
  ParameterSet p = test::unit_params();
  p.gamma_A = 1e3;  // dt * gamma_A = 10: |1 - 10|^k diverges
  try {
    integrate({1, 0, 0, 0, 0, 0}, p, {0.01, 100000});
    FAIL("expected NonFiniteState");
  } catch (const NonFiniteState& e) {
    CHECK(e.step() > 0);
    CHECK(e.step() < 1000);
  }
  CHECK_THROWS_AS(advance({1, 0, 0, 0, 0, 0}, p, 0.01, 100000), NonFiniteState);
}

TEST_CASE("invalid solver configuration is rejected", "[euler]") {
  CHECK_THROWS_AS(integrate({}, test::unit_params(), {0.0, 10}), ConfigError);
  CHECK_THROWS_AS(integrate({}, test::unit_params(), {0.01, 0}), ConfigError);
}
