#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "otdp/lifting.hpp"
#include "otdp/random_instances.hpp"
#include "systems.hpp"
#include "test_support.hpp"

using namespace otdp;
using namespace otdp::testing;

namespace {

Eigen::VectorXd weights(std::initializer_list<double> w) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(w.size()));
  std::copy(w.begin(), w.end(), v.data());
  return v;
}

// Half the mass on -1 and half on +1 over {-1, 0, 1}.
const Eigen::VectorXd kPlusMinus = weights({0.5, 0.0, 0.5});

FleetProblem constant_problem(const Eigen::VectorXd& mu0, const Eigen::VectorXd& rho, std::size_t horizon) {
  return {mu0, std::vector<Eigen::VectorXd>(horizon + 1, rho)};
}

// Squared W2 between equal-size particle sets by enumerating permutations.
double brute_w2_sq(const Particles& a, const Particles& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[perm[i]]).squaredNorm();
    best = std::min(best, total / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Particles random_cloud(Rng& rng, std::size_t m, Eigen::Index dim) {
  Particles out(m, Eigen::VectorXd(dim));
  for (auto& p : out) {
    for (Eigen::Index i = 0; i < dim; ++i) p[i] = uniform(rng, -3.0, 3.0);
  }
  return out;
}

bool constant_refs(const FleetProblem& p) {
  return std::all_of(p.refs.begin(), p.refs.end(), [&](const Eigen::VectorXd& r) { return r == p.refs.back(); });
}

}  // namespace

TEST_CASE("lifted value: multi-marginal vs frozen two-marginal") {
  const auto sys = two_marginals_not_enough();
  const auto multi = dpa_multi(sys);
  const std::vector<Eigen::VectorXd> refs(3, kPlusMinus);
  const auto v = lifted_value(multi, kPlusMinus, refs, 0);
  CHECK(near(v.value, 0.0, 1e-12));
  CHECK(v.mode == DpMode::multi);
  CHECK(v.plan.value == v.value);

  DpOptions frozen;
  frozen.freeze_reference = true;
  const auto simple = dpa_simple(sys, frozen);
  const auto naive = lifted_value(simple, kPlusMinus, std::span(refs).last(1), 0);
  CHECK(near(naive.value, 2.0, 1e-12));
  CHECK(naive.value > v.value);

  CHECK_THROWS_AS(lifted_value(multi, kPlusMinus, std::span(refs).last(1), 0), ModeError);
  CHECK_THROWS_AS(lifted_value(simple, kPlusMinus, refs, 0), ModeError);
  CHECK_THROWS_AS(lifted_value(multi, weights({1.0}), refs, 0), ModeError);
}

TEST_CASE("lifted value: identical Dirac measures and zero costs") {
  const auto sys = GroundSystem::time_invariant(
      2, int_labels(kSigns), int_labels(kSwitchInputs), int_labels(kSigns),
      [](std::size_t, std::size_t x, std::size_t) { return x; },
      [](std::size_t, std::size_t, std::size_t, std::size_t) { return ExtReal(0.0); },
      [](std::size_t x, std::size_t r) { return x == r ? ExtReal(0.0) : ExtReal(1.0); });
  const auto table = dpa_multi(sys);
  const Eigen::VectorXd dirac = weights({0.0, 1.0, 0.0});
  const std::vector<Eigen::VectorXd> refs(3, dirac);
  CHECK(lifted_value(table, dirac, refs, 0).value == ExtReal(0.0));
}

TEST_CASE("lift input: split mass") {
  const auto sys = split_mass_system();
  const auto table = dpa_simple(sys);
  const Eigen::VectorXd dirac = weights({0.0, 1.0, 0.0});
  const std::vector<Eigen::VectorXd> refs{kPlusMinus};
  const auto v = lifted_value(table, dirac, refs, 0);
  CHECK(v.value == ExtReal(0.0));
  CHECK_FALSE(as_map(v.plan).has_value());

  const auto lambda = lift_input(v.plan, table, 0, 3);
  // Half of the mass at 0 applies -1, the other half +1.
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
  expected(1, 0) = 0.5;
  expected(1, 2) = 0.5;
  CHECK((lambda.mass - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((lambda.state_marginal() - dirac).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((push_forward(sys, 0, lambda) - kPlusMinus).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("lift input: map-induced plans give deterministic inputs") {
  const auto sys = two_marginals_not_enough();
  const auto table = dpa_multi(sys);
  const std::vector<Eigen::VectorXd> refs(3, kPlusMinus);
  const auto v = lifted_value(table, kPlusMinus, refs, 0);
  const auto map = as_map(v.plan);
  REQUIRE(map.has_value());
  const auto lambda = lift_input(v.plan, table, 0, 2);
  for (Eigen::Index x = 0; x < 3; ++x) {
    CHECK((lambda.mass.row(x).array() > 0.0).count() <= 1);
  }
  // Every particle applies u = -1.
  CHECK(lambda.mass(0, 0) == doctest::Approx(0.5));
  CHECK(lambda.mass(2, 0) == doctest::Approx(0.5));
}

TEST_CASE("lift input: infinite cost-to-go on a charged cell") {
  const auto sys = split_mass_system();
  const auto table = dpa_simple(sys);
  TransportPlan plan;
  plan.marginals = {weights({0, 1, 0}), kPlusMinus};
  plan.entries = {{{1, 0}, 1.0}};
  plan.value = 0.0;
  CostToGoTable blocked = table;
  blocked.argmin[0][table.index(0, 1, std::vector<std::size_t>{0})] = -1;
  CHECK_THROWS_AS(lift_input(plan, blocked, 0, 3), InfeasibleError);
  CHECK_THROWS_AS(lift_input(TransportPlan{}, table, 0, 3), InfeasibleError);
}

TEST_CASE("feedback rollout: changing allocations") {
  const auto sys = two_marginals_not_enough();
  const auto table = dpa_multi(sys);
  const auto problem = constant_problem(kPlusMinus, kPlusMinus, 2);
  const auto r = rollout_feedback(sys, table, problem);
  REQUIRE(r.measures.size() == 3);
  for (const auto& mu : r.measures) CHECK((mu - kPlusMinus).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(near(r.total_cost, 0.0, 1e-12));
  for (const auto& lambda : r.inputs) CHECK(lambda.input_marginal()[0] == doctest::Approx(1.0));
  // Each particle swaps reference between consecutive stages.
  for (const auto& plan : r.plans) {
    for (const auto& e : plan.entries) CHECK(e.cell[1] != e.cell[2]);
  }
  CHECK(r.attribution_mismatches().empty());
}

TEST_CASE("open-loop rollout") {
  SUBCASE("map plan") {
    const auto sys = two_marginals_not_enough();
    const auto table = dpa_multi(sys);
    const auto problem = constant_problem(kPlusMinus, kPlusMinus, 2);
    const auto r = rollout_openloop(sys, table, problem);
    CHECK(near(r.total_cost, 0.0, 1e-12));
    const auto fb = rollout_feedback(sys, table, problem);
    for (std::size_t k = 0; k < r.measures.size(); ++k) CHECK((r.measures[k] - fb.measures[k]).norm() <= 1e-12);
  }
  SUBCASE("split plan needs particles") {
    const auto sys = split_mass_system();
    const auto table = dpa_simple(sys);
    const auto problem = constant_problem(weights({0, 1, 0}), kPlusMinus, 1);
    CHECK_THROWS_AS(rollout_openloop(sys, table, problem), ModeError);
    CHECK_THROWS_AS(rollout_openloop(sys, table, problem, 3), ModeError);
    const auto r = rollout_openloop(sys, table, problem, 2);
    CHECK(near(r.total_cost, 0.0, 1e-12));
    CHECK((r.measures.back() - kPlusMinus).norm() <= 1e-12);
  }
  SUBCASE("a single particle follows the ground rollout") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      RandomFleetSpec spec;
      spec.max_particles = 1;
      spec.inf_rate = 0.0;
      const auto inst = random_fleet_instance(rng, spec);
      const auto table = dpa_multi(inst.system);
      FleetProblem problem = inst.problem;
      // Dirac references pin the reference trajectory.
      std::vector<std::size_t> refs;
      for (auto& rho : problem.refs) {
        Eigen::Index r = 0;
        rho.maxCoeff(&r);
        rho.setZero();
        rho[r] = 1.0;
        refs.push_back(static_cast<std::size_t>(r));
      }
      const auto fleet = rollout_openloop(inst.system, table, problem);
      const auto particle = rollout_particle(inst.system, table, inst.particles[0], refs);
      CHECK(near(fleet.total_cost, particle.cost, 1e-9));
      for (std::size_t k = 0; k < particle.states.size(); ++k) {
        CHECK(fleet.measures[k][static_cast<Eigen::Index>(particle.states[k])] == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("zero-cost system") {
  const auto sys = GroundSystem::time_invariant(
      3, int_labels(kSigns), int_labels(kSwitchInputs), int_labels(kSigns),
      [](std::size_t, std::size_t x, std::size_t u) { return position(kSigns, kSigns[x] * kSwitchInputs[u]); },
      [](std::size_t, std::size_t, std::size_t, std::size_t) { return ExtReal(0.0); },
      [](std::size_t, std::size_t) { return ExtReal(0.0); });
  const auto table = dpa_multi(sys);
  const auto problem = constant_problem(weights({0.2, 0.3, 0.5}), weights({0.6, 0.0, 0.4}), 3);
  const auto r = rollout_feedback(sys, table, problem);
  CHECK(r.total_cost == ExtReal(0.0));
  CHECK(r.lifted_values[0] == ExtReal(0.0));
}

TEST_CASE("random fleets: rollouts realize the lifted value") {
  Rng rng(123);
  int feasible = 0, compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_fleet_instance(rng);
    const auto& sys = inst.system;
    const auto table = dpa_multi(sys);
    const auto v0 = lifted_value(table, inst.problem.mu0, inst.problem.refs, 0).value;
    if (v0.is_infinite()) {
      CHECK_THROWS_AS(rollout_feedback(sys, table, inst.problem), InfeasibleError);
      continue;
    }
    ++feasible;
    const auto fb = rollout_feedback(sys, table, inst.problem);
    CHECK(near(fb.total_cost, v0, 1e-9));
    for (std::size_t k = 0; k < fb.inputs.size(); ++k) {
      CHECK((fb.inputs[k].state_marginal() - fb.measures[k]).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const auto ol = rollout_openloop(sys, table, inst.problem, inst.particles.size());
    CHECK(near(ol.total_cost, v0, 1e-9));
    for (std::size_t k = 0; k < ol.inputs.size(); ++k) {
      CHECK((ol.inputs[k].state_marginal() - ol.measures[k]).cwiseAbs().maxCoeff() <= 1e-12);
    }

    // The frozen two-marginal lift restricts the multi-marginal problem to
    // constant reference tuples when the references agree, and coincides with it
    // when stage costs ignore the reference.
    const bool reference_free = !sys.stage_cost_depends_on_reference();
    if (reference_free || constant_refs(inst.problem)) {
      DpOptions frozen;
      frozen.freeze_reference = true;
      const auto simple = dpa_simple(sys, frozen);
      const auto naive = lifted_value(simple, inst.problem.mu0, std::span(inst.problem.refs).last(1), 0).value;
      CHECK(at_least(naive, v0, 1e-9));
      if (reference_free) CHECK(near(naive, v0, 1e-9));
      ++compared;
    }
  }
  CHECK(feasible > 100);
  CHECK(compared > 50);
}

TEST_CASE("epsilon-degraded plans cost at most N epsilon more") {
  Rng rng(99);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    RandomFleetSpec spec;
    spec.inf_rate = 0.0;
    const auto inst = random_fleet_instance(rng, spec);
    const auto& sys = inst.system;
    const auto table = dpa_multi(sys);
    const std::size_t n = sys.horizon();
    const double eps = 0.05;
    const double v0 = lifted_value(table, inst.problem.mu0, inst.problem.refs, 0).value.value();

    // At each stage mix the optimal plan with the product coupling so that its
    // value exceeds the optimum by at most eps.
    Eigen::VectorXd mu = inst.problem.mu0;
    ExtReal total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto refs = std::span(inst.problem.refs).subspan(k);
      const LiftedValue best = lifted_value(table, mu, refs, k);
      const CostTensor cost = table.cost_tensor(k);
      TransportPlan product;
      product.marginals.push_back(mu);
      for (const auto& r : refs) product.marginals.push_back(r);
      std::vector<std::size_t> idx(cost.rank(), 0);
      do {
        double m = 1.0;
        for (std::size_t a = 0; a < idx.size(); ++a) m *= product.marginals[a][static_cast<Eigen::Index>(idx[a])];
        if (m > 0.0) product.entries.push_back({idx, m});
      } while (next_multi_index(idx, cost.shape()));
      const double gap = product.cost_of(cost).value() - best.value.value();
      const double t = gap > eps ? eps / gap : 1.0;
      TransportPlan degraded = best.plan;
      for (auto& e : degraded.entries) e.mass *= 1.0 - t;
      for (auto e : product.entries) {
        e.mass *= t;
        degraded.entries.push_back(e);
      }
      degraded.value = degraded.cost_of(cost);
      degraded.epsilon = degraded.value.value() - best.value.value();
      CHECK(degraded.epsilon <= eps + 1e-12);
      const auto lambda = lift_input(degraded, table, k, sys.inputs(k).size());
      CHECK(lambda.epsilon == degraded.epsilon);
      total += stage_discrepancy(sys, k, lambda, inst.problem.refs[k]);
      mu = push_forward(sys, k, lambda);
    }
    total += terminal_discrepancy(sys, mu, inst.problem.refs[n]);
    CHECK(total.value() <= v0 + static_cast<double>(n) * eps + 1e-9);
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("noisy lift") {
  SUBCASE("noise makes the naive lift suboptimal") {
    const auto sys = noise_counterexample();
    const Eigen::VectorXd half = weights({0.5, 0.5, 0.0, 0.0});
    const std::vector<Eigen::VectorXd> refs{half};
    const auto r = naive_noisy_lift(sys, half, refs);
    CHECK(near(r.naive, 1.0, 1e-12));
    CHECK(near(r.exact, 0.0, 1e-12));
    REQUIRE(r.measures.size() == 3);
    CHECK((r.measures[1] - weights({0, 0, 0.5, 0.5})).norm() <= 1e-12);
    CHECK((r.measures[2] - half).norm() <= 1e-12);
  }
  SUBCASE("without noise the naive lift is exact") {
    const auto sys = NoisyGroundSystem::from_deterministic(split_mass_system());
    const std::vector<Eigen::VectorXd> refs{kPlusMinus};
    const auto r = naive_noisy_lift(sys, weights({0, 1, 0}), refs);
    CHECK(near(r.naive, 0.0, 1e-12));
    CHECK(near(r.exact, 0.0, 1e-12));
  }
  SUBCASE("deterministic pipeline matches the multi-marginal lift") {
    const auto ground = two_marginals_not_enough();
    const auto sys = NoisyGroundSystem::from_deterministic(ground);
    const std::vector<Eigen::VectorXd> refs(3, kPlusMinus);
    const auto r = naive_noisy_lift(sys, kPlusMinus, refs);
    const auto multi = lifted_value(dpa_multi(ground), kPlusMinus, refs, 0);
    CHECK(near(r.exact, multi.value, 1e-12));
    CHECK(near(r.naive, 2.0, 1e-12));
  }
  SUBCASE("random deterministic systems: exact value bounded by the lifts") {
    Rng rng(17);
    for (int trial = 0; trial < 60; ++trial) {
      RandomFleetSpec spec;
      spec.max_particles = 2;
      const auto inst = random_fleet_instance(rng, spec);
      const auto sys = NoisyGroundSystem::from_deterministic(inst.system);
      const auto r = naive_noisy_lift(sys, inst.problem.mu0, inst.problem.refs);
      const auto multi = lifted_value(dpa_multi(inst.system), inst.problem.mu0, inst.problem.refs, 0);
      // Chunked allocations are feasible fleet policies; the lift is the optimum.
      CHECK(at_least(r.exact, multi.value, 1e-9));
    }
  }
  SUBCASE("argument checks") {
    const auto sys = noise_counterexample();
    const Eigen::VectorXd half = weights({0.5, 0.5, 0.0, 0.0});
    const std::vector<Eigen::VectorXd> two(2, half);
    CHECK_THROWS_AS(naive_noisy_lift(sys, half, two), DomainError);
    NoisyLiftOptions options;
    options.splits = 0;
    CHECK_THROWS_AS(naive_noisy_lift(sys, half, std::span(two).first(1), options), DomainError);
    options.splits = 8;
    options.candidate_cap = 10;
    CHECK_THROWS_AS(naive_noisy_lift(sys, half, std::span(two).first(1), options), CapacityError);
  }
}

TEST_CASE("integrator fleets") {
  Rng rng(51);
  SUBCASE("feedback lands on the targets at the predicted cost") {
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t m = pick(rng, 2, 6), horizon = pick(rng, 2, 5);
      const Particles mu0 = random_cloud(rng, m, 2), targets = random_cloud(rng, m, 2);
      const auto r = integrator_rollout(horizon, mu0, targets);
      const double w2 = brute_w2_sq(mu0, targets);
      CHECK(std::abs(r.total_cost.value() - w2 / static_cast<double>(horizon)) <= 1e-9);
      CHECK(std::abs(r.lifts[0].value.value() - w2 / static_cast<double>(horizon)) <= 1e-9);
      CHECK(std::abs(empirical_w2_sq(mu0, targets) - w2) <= 1e-9);
      CHECK(r.terminal_cost == ExtReal(0.0));
      // Final particles form the target cloud.
      CHECK(brute_w2_sq(r.states.back(), targets) <= 1e-20);
      for (std::size_t k = 0; k < horizon; ++k) {
        const double remaining = brute_w2_sq(r.states[k], targets) / static_cast<double>(horizon - k);
        CHECK(std::abs(r.lifts[k].value.value() - remaining) <= 1e-9);
      }
    }
  }
  SUBCASE("open-loop tracking reproduces the feedback trajectories") {
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t m = pick(rng, 2, 6), horizon = pick(rng, 2, 5);
      const Particles mu0 = random_cloud(rng, m, 2), targets = random_cloud(rng, m, 2);
      const auto r = integrator_rollout(horizon, mu0, targets);
      Particles x = mu0;
      const auto& sigma = r.lifts[0].assignment;
      for (std::size_t k = 0; k < horizon; ++k) {
        for (std::size_t i = 0; i < m; ++i) {
          x[i] += lqr::integrator_feedback<double>(horizon, k, x[i], targets[sigma[i]]);
          CHECK((x[i] - r.states[k + 1][i]).norm() <= 1e-12);
        }
      }
    }
  }
  SUBCASE("argument checks") {
    const Particles a{Eigen::Vector2d(0, 0)}, b{Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 1)};
    CHECK_THROWS_AS(integrator_lifted_value(2, 0, a, b), DomainError);
    CHECK_THROWS_AS(integrator_lifted_value(2, 3, a, a), DomainError);
    CHECK_THROWS_AS(integrator_rollout(0, a, a), DomainError);
  }
}

TEST_CASE("linear-quadratic fleets") {
  Rng rng(61);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = pick(rng, 2, 5);
    const std::size_t horizon = pick(rng, 1, 4);
    Eigen::Matrix2d a;
    a << uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1);
    const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(2, 2) * uniform(rng, 0.5, 2.0);
    const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(2, 2) * uniform(rng, 0.5, 2.0);
    const auto sys = lqr::System<double>::time_invariant(horizon, a, b, r, p);
    const auto cost = lqr::pair_recursion(sys);
    const Particles mu0 = random_cloud(rng, m, 2), targets = random_cloud(rng, m, 2);
    const auto out = lqr_rollout(sys, cost, mu0, targets);
    CHECK(std::abs(out.total_cost.value() - out.lifts[0].value.value()) <= 1e-8 * (1.0 + out.total_cost.value()));

    // Brute-force lifted value: best permutation of pair costs.
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) total += cost.cost(0, mu0[i], targets[perm[i]]);
      best = std::min(best, total / static_cast<double>(m));
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(std::abs(out.lifts[0].value.value() - best) <= 1e-9 * (1.0 + best));
  }
}
