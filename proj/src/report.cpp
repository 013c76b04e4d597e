#include "otdp/report.hpp"

#include <chrono>
#include <cmath>

#include "otdp/error.hpp"
#include "otdp/fleet_oracle.hpp"
#include "otdp/scenario.hpp"
#include "otdp/transport.hpp"

namespace otdp {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(json& sink) : sink_(sink) {}
  template <class F>
  auto time(const char* key, F&& f) {
    const auto start = Clock::now();
    auto result = f();
    sink_[key] = sink_.value(key, 0.0) + std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return result;
  }

 private:
  json& sink_;
};

json measure_json(const Eigen::VectorXd& w, const Labels& labels) {
  json out = json::object();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (std::abs(w[i]) > kPruneWeight) out[labels[static_cast<std::size_t>(i)]] = w[i];
  }
  return out;
}

json particles_json(const Particles& ps) {
  json out = json::array();
  for (const auto& p : ps) {
    json row = json::array();
    for (Eigen::Index i = 0; i < p.size(); ++i) row.push_back(p[i]);
    out.push_back(std::move(row));
  }
  return out;
}

// Axis labels of a stage-0 plan: state, then references r_0..r_N (multi) or r_N.
json plan_json(const TransportPlan& plan, const GroundSystem& sys, DpMode mode) {
  const std::size_t n = sys.horizon();
  std::vector<const Labels*> axes{&sys.states(0)};
  json names = json::array({"state"});
  if (mode == DpMode::multi) {
    for (std::size_t k = 0; k <= n; ++k) {
      axes.push_back(&sys.refs(k));
      names.push_back("reference " + std::to_string(k));
    }
  } else {
    axes.push_back(&sys.refs(n));
    names.push_back("reference " + std::to_string(n));
  }
  json entries = json::array();
  for (const auto& e : plan.entries) {
    json cell = json::array();
    for (std::size_t a = 0; a < e.cell.size(); ++a) cell.push_back((*axes[a])[e.cell[a]]);
    entries.push_back({{"cell", std::move(cell)}, {"mass", e.mass}});
  }
  return {{"axes", std::move(names)},
          {"entries", std::move(entries)},
          {"value", ext_json(plan.value)},
          {"is_map", as_map(plan).has_value()}};
}

json fleet_rollout_json(const FleetRollout& r, const GroundSystem& sys, RolloutKind kind) {
  const std::size_t n = sys.horizon();
  json stages = json::array();
  for (std::size_t k = 0; k < n; ++k) {
    json inputs = json::array();
    const auto& mass = r.inputs[k].mass;
    for (Eigen::Index x = 0; x < mass.rows(); ++x) {
      for (Eigen::Index u = 0; u < mass.cols(); ++u) {
        if (mass(x, u) > kPruneWeight) {
          inputs.push_back({{"state", sys.states(k)[static_cast<std::size_t>(x)]},
                            {"input", sys.inputs(k)[static_cast<std::size_t>(u)]},
                            {"mass", mass(x, u)}});
        }
      }
    }
    json stage{{"stage", k},
               {"measure", measure_json(r.measures[k], sys.states(k))},
               {"inputs", std::move(inputs)},
               {"stage_cost", ext_json(r.stage_costs[k])},
               {"integrand", ext_json(r.stage_integrands[k])}};
    if (k < r.lifted_values.size()) stage["lifted_value"] = ext_json(r.lifted_values[k]);
    stages.push_back(std::move(stage));
  }
  json mismatches = json::array();
  for (auto k : r.attribution_mismatches()) mismatches.push_back(k);
  return {{"kind", kind == RolloutKind::feedback ? "feedback" : "openloop"},
          {"stages", std::move(stages)},
          {"final_measure", measure_json(r.measures.back(), sys.states(n))},
          {"terminal_cost", ext_json(r.terminal_cost)},
          {"total_cost", ext_json(r.total_cost)},
          {"attribution_mismatches", std::move(mismatches)}};
}

std::size_t table_cells(const CostToGoTable& t) {
  std::size_t cells = 0;
  for (const auto& v : t.value) cells += v.size();
  return cells;
}

// Particle states of an empirical initial measure with M particles.
std::vector<std::size_t> fleet_of(const Eigen::VectorXd& mu, std::size_t m) {
  std::vector<std::size_t> out;
  for (Eigen::Index x = 0; x < mu.size(); ++x) {
    const double count = mu[x] * static_cast<double>(m);
    if (std::abs(count - std::round(count)) > 1e-9) {
      throw DomainError("scenario", "initial measure is not a fleet of " + std::to_string(m) + " particles");
    }
    out.insert(out.end(), static_cast<std::size_t>(std::llround(count)), static_cast<std::size_t>(x));
  }
  return out;
}

RunStatus run_finite(const FiniteScenario& p, const SolverOptions& o, RolloutKind rollout, json& report, json& times) {
  Stopwatch watch(times);
  const GroundSystem& sys = p.system;
  const FleetProblem problem{weights_over(p.initial, sys.states(0)), reference_weights(sys, p.references)};
  const bool want_multi = o.mode != LiftMode::two, want_two = o.mode != LiftMode::multi;
  DpOptions dp;
  dp.memory_cap = o.memory_cap;

  json values = json::object(), solver = json::object();
  RunStatus status = RunStatus::ok;
  std::optional<CostToGoTable> multi, simple;
  if (want_multi) {
    multi = watch.time("dp", [&] { return dpa_multi(sys, dp); });
    const auto v = watch.time("lift", [&] { return lifted_value(*multi, problem.mu0, problem.refs, 0); });
    values["multi"] = ext_json(v.value);
    report["plan"] = plan_json(v.plan, sys, DpMode::multi);
    solver["multi_table_cells"] = table_cells(*multi);
    solver["multi_lp_iterations"] = v.plan.lp_iterations;
    if (v.value.is_infinite()) status = RunStatus::infeasible;
  }
  if (want_two) {
    DpOptions frozen = dp;
    frozen.freeze_reference = sys.stage_cost_depends_on_reference();
    simple = watch.time("dp", [&] { return dpa_simple(sys, frozen); });
    const auto v = watch.time(
        "lift", [&] { return lifted_value(*simple, problem.mu0, std::span(problem.refs).last(1), 0); });
    values["two"] = ext_json(v.value);
    report["two_marginal_frozen_reference"] = frozen.freeze_reference;
    if (!want_multi) report["plan"] = plan_json(v.plan, sys, DpMode::simple);
    solver["two_table_cells"] = table_cells(*simple);
    solver["two_lp_iterations"] = v.plan.lp_iterations;
    if (v.value.is_infinite()) status = RunStatus::infeasible;
  }
  report["values"] = std::move(values);

  const CostToGoTable& table = want_multi ? *multi : *simple;
  const bool primary_finite = ext_from_json(report["values"][want_multi ? "multi" : "two"]).is_finite();
  if (primary_finite) {
    try {
      const auto r = watch.time("rollout", [&] {
        return rollout == RolloutKind::feedback ? rollout_feedback(sys, table, problem)
                                                : rollout_openloop(sys, table, problem, o.particles);
      });
      report["rollout"] = fleet_rollout_json(r, sys, rollout);
    } catch (const InfeasibleError& e) {
      status = RunStatus::infeasible;
      report["rollout"] = {{"infeasible_stage", e.stage()}, {"message", e.what()}};
    }
  } else {
    report["rollout"] = nullptr;
  }

  if (o.oracle) {
    if (!o.particles) throw DomainError("scenario", "the oracle needs options.particles");
    const auto fleet = fleet_of(problem.mu0, *o.particles);
    const auto r = watch.time("oracle", [&] { return oracle_solve(sys, fleet, problem.refs); });
    json fleet_labels = json::array();
    for (auto x : fleet) fleet_labels.push_back(sys.states(0)[x]);
    report["oracle"] = {{"value", ext_json(r.value)},
                        {"particles", std::move(fleet_labels)},
                        {"configurations", r.table.stages[0].size()},
                        {"stage_transports", r.stage_transports}};
  }
  report["solver"] = std::move(solver);
  return status;
}

RunStatus run_noisy(const NoisyScenario& p, const SolverOptions& o, json& report, json& times) {
  Stopwatch watch(times);
  const auto& sys = p.system;
  const auto refs = reference_weights(sys, p.references);
  NoisyLiftOptions options;
  options.splits = o.noise_splits;
  options.dp.memory_cap = o.memory_cap;
  const auto mu0 = weights_over(p.initial, sys.states(0));
  const std::span<const Eigen::VectorXd> used =
      p.references.size() == 1 ? std::span<const Eigen::VectorXd>(refs).last(1) : std::span<const Eigen::VectorXd>(refs);
  const auto r = watch.time("lift", [&] { return naive_noisy_lift(sys, mu0, used, options); });
  report["values"] = {{"naive", ext_json(r.naive)}, {"exact", ext_json(r.exact)}};
  json measures = json::array();
  for (std::size_t k = 0; k < r.measures.size(); ++k) measures.push_back(measure_json(r.measures[k], sys.states(k)));
  report["fleet_trajectory"] = std::move(measures);
  json naive_plan = json::array();
  for (const auto& e : r.naive_plan.entries) {
    naive_plan.push_back({{"cell", {sys.states(0)[e.cell[0]], sys.refs(sys.horizon())[e.cell[1]]}}, {"mass", e.mass}});
  }
  report["naive_plan"] = std::move(naive_plan);
  report["solver"] = {{"measures_explored", r.measures_explored}, {"noise_splits", o.noise_splits}};
  return r.exact.is_infinite() || r.naive.is_infinite() ? RunStatus::infeasible : RunStatus::ok;
}

json empirical_rollout_json(const EmpiricalRollout& r, const Particles& targets) {
  json stages = json::array();
  for (std::size_t k = 0; k < r.inputs.size(); ++k) {
    json assignment = json::array();
    for (auto j : r.lifts[k].assignment) assignment.push_back(j);
    stages.push_back({{"stage", k},
                      {"states", particles_json(r.states[k])},
                      {"inputs", particles_json(r.inputs[k])},
                      {"assignment", std::move(assignment)},
                      {"lifted_value", ext_json(r.lifts[k].value)},
                      {"stage_cost", r.stage_costs[k]}});
  }
  double landing = 0.0;
  const auto& last = r.states.back();
  const auto& sigma = r.lifts.back().assignment;
  for (std::size_t i = 0; i < last.size() && i < sigma.size(); ++i) {
    landing = std::max(landing, (last[i] - targets[sigma[i]]).norm());
  }
  return {{"kind", "feedback"},
          {"stages", std::move(stages)},
          {"final_states", particles_json(last)},
          {"terminal_cost", ext_json(r.terminal_cost)},
          {"total_cost", ext_json(r.total_cost)},
          {"landing_error", landing}};
}

RunStatus run_integrator(const IntegratorScenario& p, std::uint64_t seed, json& report, json& times) {
  Stopwatch watch(times);
  std::mt19937_64 rng(seed);
  const Particles mu0 = realize(p.initial, p.dimension, rng);
  const Particles targets = realize(p.target, p.dimension, rng);
  const auto r = watch.time("rollout", [&] { return integrator_rollout(p.horizon, mu0, targets); });
  report["values"] = {{"multi", ext_json(r.lifts[0].value)}};
  report["particles"] = {{"initial", particles_json(mu0)}, {"target", particles_json(targets)}};
  report["w2_squared"] = empirical_w2_sq(mu0, targets);
  report["rollout"] = empirical_rollout_json(r, targets);
  return r.total_cost.is_infinite() ? RunStatus::infeasible : RunStatus::ok;
}

RunStatus run_lqr(const LqrScenario& p, std::uint64_t seed, json& report, json& times) {
  Stopwatch watch(times);
  std::mt19937_64 rng(seed);
  const auto dim = static_cast<std::size_t>(p.system.state_dim());
  const Particles mu0 = realize(p.initial, dim, rng);
  const Particles targets = realize(p.target, dim, rng);
  const auto cost = watch.time("dp", [&] { return lqr::pair_recursion(p.system); });
  const auto r = watch.time("rollout", [&] { return lqr_rollout(p.system, cost, mu0, targets); });
  report["values"] = {{"multi", ext_json(r.lifts[0].value)}};
  report["particles"] = {{"initial", particles_json(mu0)}, {"target", particles_json(targets)}};
  report["rollout"] = empirical_rollout_json(r, targets);
  double drift = 0.0, residual = 0.0;
  for (auto d : cost.symmetry_drift) drift = std::max(drift, d);
  for (auto d : cost.cross_term_residual) residual = std::max(residual, d);
  report["solver"] = {{"symmetry_drift", drift}, {"cross_term_residual", residual}};
  return r.total_cost.is_infinite() ? RunStatus::infeasible : RunStatus::ok;
}

const char* mode_text(LiftMode m) {
  switch (m) {
    case LiftMode::multi:
      return "multi";
    case LiftMode::two:
      return "two";
    case LiftMode::both:
      return "both";
  }
  return "multi";
}

}  // namespace

json ext_json(ExtReal x) { return x.is_infinite() ? json("+inf") : json(x.value()); }

ExtReal ext_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "+inf") return ExtReal::infinity();
  if (j.is_number()) return j.get<double>();
  throw DomainError("report", "expected a number or \"+inf\"");
}

std::optional<LiftMode> parse_lift_mode(const std::string& s) {
  if (s == "multi") return LiftMode::multi;
  if (s == "two") return LiftMode::two;
  if (s == "both") return LiftMode::both;
  return std::nullopt;
}

std::optional<RolloutKind> parse_rollout(const std::string& s) {
  if (s == "feedback") return RolloutKind::feedback;
  if (s == "openloop") return RolloutKind::openloop;
  return std::nullopt;
}

RunResult run(const Scenario& scenario, const RunFlags& flags) {
  SolverOptions o = scenario.options;
  if (flags.mode) o.mode = *flags.mode;
  if (flags.rollout) o.rollout = *flags.rollout;
  if (flags.seed) o.seed = *flags.seed;
  if (flags.memory_cap) o.memory_cap = *flags.memory_cap;

  json report;
  report["scenario"] = {{"name", scenario.name}, {"kind", scenario.kind()}, {"hash", scenario_hash(scenario)}};
  report["options"] = {{"mode", mode_text(o.mode)},
                       {"rollout", o.rollout == RolloutKind::feedback ? "feedback" : "openloop"},
                       {"memory_cap", o.memory_cap},
                       {"seed", o.seed}};
  json times = json::object();
  const auto start = Clock::now();
  RunStatus status = std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FiniteScenario>) {
          return run_finite(p, o, o.rollout, report, times);
        } else if constexpr (std::is_same_v<T, NoisyScenario>) {
          return run_noisy(p, o, report, times);
        } else if constexpr (std::is_same_v<T, IntegratorScenario>) {
          return run_integrator(p, o.seed, report, times);
        } else {
          return run_lqr(p, o.seed, report, times);
        }
      },
      scenario.payload);
  report["status"] = status == RunStatus::ok ? "ok" : "infeasible";
  if (flags.timings) {
    times["total"] = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    report["timings_ms"] = std::move(times);
  }
  return {std::move(report), status};
}

std::string report_text(const json& report) { return report.dump(2) + "\n"; }

}  // namespace otdp
