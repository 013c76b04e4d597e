#include <doctest.h>

#include <functional>

#include "otdp/ground_dp.hpp"
#include "systems.hpp"

using namespace otdp;
using namespace otdp::testing;

namespace {

// Minimum over every input sequence; refs holds one reference per stage
// 0..N (the stage-k entry is used at stage k and at the terminal).
ExtReal enumerate_best(const GroundSystem& sys, std::size_t x0, const std::vector<std::size_t>& refs) {
  const std::size_t n = sys.horizon();
  std::function<ExtReal(std::size_t, std::size_t)> go = [&](std::size_t k, std::size_t x) -> ExtReal {
    if (k == n) return sys.terminal_cost(x, refs[n]);
    ExtReal best = ExtReal::infinity();
    for (std::size_t u = 0; u < sys.inputs(k).size(); ++u) {
      best = min(best, sys.stage_cost(k, x, u, refs[k]) + go(k + 1, sys.next(k, x, u)));
    }
    return best;
  };
  return go(0, x0);
}

ExtReal path_cost(const GroundSystem& sys, std::size_t x, const std::vector<std::size_t>& inputs,
                  const std::vector<std::size_t>& refs) {
  ExtReal total = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    total += sys.stage_cost(k, x, inputs[k], refs[k]);
    x = sys.next(k, x, inputs[k]);
  }
  return total + sys.terminal_cost(x, refs.back());
}

GroundSystem with_terminal(const GroundSystem& sys, const std::function<ExtReal(std::size_t, std::size_t)>& g_final) {
  return GroundSystem::time_invariant(
      sys.horizon(), sys.states(0), sys.inputs(0), sys.refs(0),
      [&](std::size_t k, std::size_t x, std::size_t u) { return sys.next(k, x, u); },
      [&](std::size_t k, std::size_t x, std::size_t u, std::size_t r) { return sys.stage_cost(k, x, u, r); }, g_final);
}

const std::size_t kMinus = 0, kZero = 1, kPlus = 2;

}  // namespace

TEST_CASE("multi-marginal cost-to-go of the alternating reference") {
  const auto sys = two_marginals_not_enough();
  const auto table = dpa_multi(sys);
  const std::vector<std::size_t> refs{kPlus, kMinus, kPlus};
  CHECK(table.at(0, kPlus, refs) == ExtReal(0.0));
  CHECK(table.at(0, kMinus, std::vector<std::size_t>{kMinus, kPlus, kMinus}) == ExtReal(0.0));
  const auto roll = rollout_particle(sys, table, kPlus, refs);
  CHECK(roll.inputs == std::vector<std::size_t>{0, 0});  // u = -1 twice
  CHECK(roll.cost == ExtReal(0.0));
  CHECK(roll.states == std::vector<std::size_t>{kPlus, kMinus, kPlus});
}

TEST_CASE("frozen-reference cost-to-go of the alternating example") {
  const auto sys = two_marginals_not_enough();
  CHECK_THROWS_AS(dpa_simple(sys), ModeError);
  DpOptions frozen;
  frozen.freeze_reference = true;
  const auto table = dpa_simple(sys, frozen);
  for (std::size_t x : {kMinus, kPlus}) {
    for (std::size_t r : {kMinus, kPlus}) {
      const ExtReal oracle = enumerate_best(sys, x, {r, r, r});
      CHECK(table.at(0, x, std::vector<std::size_t>{r}) == oracle);
      CHECK(oracle == ExtReal(x == r ? 2.0 : 5.0));
    }
  }
  // Moving to the origin first costs 6 against the opposite reference.
  CHECK(path_cost(sys, kPlus, {1, 1}, {kMinus, kMinus, kMinus}) == ExtReal(6.0));
  CHECK(path_cost(sys, kPlus, {1, 1}, {kPlus, kPlus, kPlus}) == ExtReal(2.0));
  const auto roll = rollout_particle(sys, table, kPlus, std::vector<std::size_t>{kPlus});
  CHECK(roll.cost == ExtReal(2.0));
}

TEST_CASE("split-mass system has zero cost-to-go") {
  const auto sys = split_mass_system();
  const auto table = dpa_multi(sys);
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t r0 = 0; r0 < 3; ++r0)
      for (std::size_t r1 = 0; r1 < 3; ++r1) CHECK(table.at(0, x, std::vector<std::size_t>{r0, r1}) == ExtReal(0.0));
  const auto roll = rollout_particle(sys, table, kZero, std::vector<std::size_t>{kZero, kMinus});
  CHECK(roll.inputs == std::vector<std::size_t>{kMinus});
  CHECK(roll.cost == ExtReal(0.0));
  const auto simple = dpa_simple(sys);
  CHECK(rollout_particle(sys, simple, kZero, std::vector<std::size_t>{kPlus}).inputs == std::vector<std::size_t>{kPlus});
}

TEST_CASE("zero costs give zero tables") {
  Rng rng(41);
  auto base = random_system(rng);
  auto zero = GroundSystem::time_invariant(
      base.horizon(), base.states(0), base.inputs(0), base.refs(0),
      [&](std::size_t k, std::size_t x, std::size_t u) { return base.next(k, x, u); },
      [](std::size_t, std::size_t, std::size_t, std::size_t) { return ExtReal(0.0); },
      [](std::size_t, std::size_t) { return ExtReal(0.0); });
  for (const auto& table : {dpa_multi(zero), dpa_simple(zero)}) {
    for (const auto& stage : table.value)
      for (auto v : stage) CHECK(v == ExtReal(0.0));
  }
}

TEST_CASE("integrator on a three-point line") {
  const std::vector<int> pts{-1, 0, 1};
  auto sys = GroundSystem::time_invariant(
      1, int_labels(pts), int_labels(pts), int_labels(pts),
      [&](std::size_t, std::size_t x, std::size_t u) {
        const int y = std::clamp(pts[x] + pts[u], -1, 1);
        return position(pts, y);
      },
      [&](std::size_t, std::size_t x, std::size_t u, std::size_t) {
        const int y = pts[x] + pts[u];
        return y < -1 || y > 1 ? ExtReal::infinity() : ExtReal(square(pts[u]));
      },
      [](std::size_t x, std::size_t r) { return x == r ? ExtReal(0.0) : ExtReal::infinity(); });
  const auto table = dpa_simple(sys);
  for (std::size_t x = 0; x < 3; ++x) {
    for (std::size_t r = 0; r < 3; ++r) {
      const int d = pts[r] - pts[x];
      const ExtReal expected = std::abs(d) <= 1 ? ExtReal(square(d)) : ExtReal::infinity();
      CHECK(table.at(0, x, std::vector<std::size_t>{r}) == expected);
    }
  }
  CHECK(table.input_at(0, 0, std::vector<std::size_t>{2}) == -1);
  CHECK_THROWS_AS(rollout_particle(sys, table, 0, std::vector<std::size_t>{2}), InfeasibleError);
}

TEST_CASE("stochastic recursion on the noise counterexample") {
  const auto sys = noise_counterexample();
  const auto table = dpa_stochastic(sys);
  for (std::size_t x : {0u, 1u})
    for (std::size_t r : {0u, 1u}) CHECK(table.at(0, x, std::vector<std::size_t>{r}) == ExtReal(1.0));
}

TEST_CASE("degenerate noise reproduces the deterministic recursion") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    RandomSystemSpec spec;
    spec.reference_dependent = false;
    const auto sys = random_system(rng, spec);
    const auto a = dpa_simple(sys);
    const auto b = dpa_stochastic(NoisyGroundSystem::from_deterministic(sys));
    CHECK(a.value == b.value);
    CHECK(a.argmin == b.argmin);
  }
}

TEST_CASE("uniform noise with zero costs") {
  const Labels xs{"a", "b"}, us{"u"}, ys{"a", "b"};
  NoisyGroundSystem::Stage st{{"w0", "w1"}, Eigen::Vector2d(0.5, 0.5), {0, 1, 1, 0}, std::vector<ExtReal>(8, 0.0)};
  NoisyGroundSystem sys({xs, xs}, {us}, {ys, ys}, {st}, std::vector<ExtReal>(4, 0.0));
  const auto table = dpa_stochastic(sys);
  for (auto v : table.value[0]) CHECK(v == ExtReal(0.0));
}

TEST_CASE("tables follow the Bellman equation and rollouts realize them") {
  Rng rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sys = random_system(rng);
    const auto table = dpa_multi(sys);
    const std::size_t n = sys.horizon();
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<std::size_t> idx(table.shape[k].size(), 0);
      std::size_t linear = 0;
      do {
        const ExtReal v = table.value[k][linear];
        const long u = table.argmin[k][linear];
        const std::vector<std::size_t> refs(idx.begin() + 1, idx.end());
        const std::vector<std::size_t> tail(idx.begin() + 2, idx.end());
        if (v.is_finite()) {
          REQUIRE(u >= 0);
          const auto uu = static_cast<std::size_t>(u);
          CHECK(v == sys.stage_cost(k, idx[0], uu, idx[1]) + table.at(k + 1, sys.next(k, idx[0], uu), tail));
        } else {
          CHECK(u == -1);
        }
        ++linear;
      } while (next_multi_index(idx, table.shape[k]));
    }
    std::vector<std::size_t> refs(n + 1);
    for (auto& r : refs) r = pick(rng, 0, sys.refs(0).size() - 1);
    for (std::size_t x = 0; x < sys.states(0).size(); ++x) {
      const ExtReal oracle = enumerate_best(sys, x, refs);
      CHECK(table.at(0, x, refs) == oracle);
      if (oracle.is_finite()) {
        CHECK(rollout_particle(sys, table, x, refs).cost == oracle);
      } else {
        CHECK_THROWS_AS(rollout_particle(sys, table, x, refs), InfeasibleError);
      }
    }
  }
}

TEST_CASE("constant references collapse the multi-marginal table") {
  Rng rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    RandomSystemSpec spec;
    spec.reference_dependent = false;
    const auto sys = random_system(rng, spec);
    const auto multi = dpa_multi(sys);
    const auto simple = dpa_simple(sys);
    for (std::size_t k = 0; k <= sys.horizon(); ++k) {
      for (std::size_t x = 0; x < sys.states(k).size(); ++x) {
        for (std::size_t r = 0; r < sys.refs(k).size(); ++r) {
          const std::vector<std::size_t> constant(sys.horizon() - k + 1, r);
          CHECK(multi.at(k, x, constant) == simple.at(k, x, std::vector<std::size_t>{r}));
        }
      }
    }
  }
}

TEST_CASE("raising terminal costs never lowers the cost-to-go") {
  Rng rng(45);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sys = random_system(rng);
    std::vector<ExtReal> bump(sys.states(sys.horizon()).size() * sys.refs(sys.horizon()).size());
    for (auto& b : bump) b = random_cost_entry(rng, 0.1);
    const auto raised = with_terminal(sys, [&](std::size_t x, std::size_t r) {
      return sys.terminal_cost(x, r) + bump[x * sys.refs(sys.horizon()).size() + r];
    });
    const auto a = dpa_multi(sys), b = dpa_multi(raised);
    for (std::size_t k = 0; k <= sys.horizon(); ++k)
      for (std::size_t i = 0; i < a.value[k].size(); ++i) CHECK(a.value[k][i] <= b.value[k][i]);
  }
}

TEST_CASE("memory cap") {
  const auto sys = two_marginals_not_enough();
  DpOptions tight;
  tight.memory_cap = 10;
  CHECK_THROWS_AS(dpa_multi(sys, tight), CapacityError);
  tight.freeze_reference = true;
  tight.memory_cap = 1000;
  CHECK_NOTHROW(dpa_simple(sys, tight));
}

TEST_CASE("system validation") {
  const Labels xs{"a"}, us{"u"};
  GroundSystem::Stage bad{{1}, {ExtReal(0.0)}};
  CHECK_THROWS_AS(GroundSystem({xs, xs}, {us}, {xs, xs}, {bad}, {ExtReal(0.0)}), DomainError);
  GroundSystem::Stage ok{{0}, {ExtReal(0.0)}};
  CHECK_THROWS_AS(GroundSystem({xs, xs}, {us}, {xs, xs}, {ok}, {ExtReal(0.0), ExtReal(1.0)}), DomainError);
  CHECK_THROWS_AS(GroundSystem({xs}, {}, {xs}, {}, {ExtReal(0.0)}), DomainError);
  CHECK_THROWS_AS(GroundSystem({{"a", "a"}, xs}, {us}, {xs, xs}, {ok}, {ExtReal(0.0)}), DomainError);
}
