#include "otdp/lifting.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <map>

#include "otdp/linprog.hpp"

namespace otdp {
namespace {

constexpr double kMassGrid = 1e12;

std::size_t stage_reference(const GroundSystem& sys, const CostToGoTable& table, std::span<const std::size_t> cell,
                            std::size_t k) {
  if (table.mode == DpMode::multi) return cell[1];
  return simple_stage_ref(sys.refs(k), sys.refs(sys.horizon()), cell[1], table.frozen_reference);
}

void check_problem(const GroundSystem& sys, const CostToGoTable& table, const FleetProblem& problem) {
  const std::size_t n = sys.horizon();
  if (table.horizon() != n) throw DomainError("lifting", "table horizon does not match the system");
  if (problem.mu0.size() != static_cast<Eigen::Index>(sys.states(0).size())) {
    throw DomainError("lifting", "initial measure does not match the state space");
  }
  if (problem.refs.size() != n + 1) throw DomainError("lifting", "one reference measure per stage is required");
  for (std::size_t k = 0; k <= n; ++k) {
    if (problem.refs[k].size() != static_cast<Eigen::Index>(sys.refs(k).size())) {
      throw DomainError("lifting", "reference measure does not match its reference space");
    }
  }
}

std::span<const Eigen::VectorXd> stage_refs(const CostToGoTable& table, const FleetProblem& problem, std::size_t k) {
  std::span<const Eigen::VectorXd> all(problem.refs);
  return table.mode == DpMode::multi ? all.subspan(k) : all.last(1);
}

Eigen::VectorXd normalized(Eigen::VectorXd w) { return w / w.sum(); }

}  // namespace

LiftedValue lifted_value(const CostToGoTable& table, const Eigen::VectorXd& mu, std::span<const Eigen::VectorXd> refs,
                         std::size_t k) {
  if (k > table.horizon()) throw DomainError("lifting", "stage beyond the horizon");
  const auto& shape = table.shape[k];
  if (refs.size() + 1 != shape.size()) {
    throw ModeError("lifting", table.mode == DpMode::multi ? "multi-marginal table needs references rho_k..rho_N"
                                                           : "two-marginal table needs the final reference only");
  }
  if (mu.size() != static_cast<Eigen::Index>(shape[0])) throw ModeError("lifting", "measure does not match the table");
  std::vector<Eigen::VectorXd> marginals{mu};
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].size() != static_cast<Eigen::Index>(shape[i + 1])) {
      throw ModeError("lifting", "reference measure does not match the table");
    }
    marginals.push_back(refs[i]);
  }
  LiftedValue out;
  out.stage = k;
  out.mode = table.mode;
  out.plan = mmot(marginals, table.cost_tensor(k));
  out.value = out.plan.value;
  return out;
}

StateInputDistribution lift_input(const TransportPlan& plan, const CostToGoTable& table, std::size_t k,
                                  std::size_t n_inputs) {
  if (k >= table.horizon()) throw DomainError("lifting", "no inputs at the final stage");
  if (!plan.feasible()) throw InfeasibleError("lifting", "cannot lift an infeasible plan", static_cast<long>(k));
  StateInputDistribution out;
  out.mass = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.shape[k][0]), static_cast<Eigen::Index>(n_inputs));
  out.epsilon = plan.epsilon;
  for (const auto& e : plan.entries) {
    const long u = table.input_at(k, e.cell[0], std::span(e.cell).subspan(1));
    if (u < 0) throw InfeasibleError("lifting", "plan charges a cell with infinite cost-to-go", static_cast<long>(k));
    if (static_cast<std::size_t>(u) >= n_inputs) throw DomainError("lifting", "input index out of range");
    out.mass(static_cast<Eigen::Index>(e.cell[0]), u) += e.mass;
  }
  return out;
}

Eigen::VectorXd push_forward(const GroundSystem& sys, std::size_t k, const StateInputDistribution& lambda) {
  Eigen::VectorXd next = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.states(k + 1).size()));
  for (Eigen::Index x = 0; x < lambda.mass.rows(); ++x) {
    for (Eigen::Index u = 0; u < lambda.mass.cols(); ++u) {
      if (lambda.mass(x, u) > 0.0) {
        next[static_cast<Eigen::Index>(sys.next(k, static_cast<std::size_t>(x), static_cast<std::size_t>(u)))] +=
            lambda.mass(x, u);
      }
    }
  }
  return next;
}

ExtReal stage_discrepancy(const GroundSystem& sys, std::size_t k, const StateInputDistribution& lambda,
                          const Eigen::VectorXd& rho) {
  std::vector<std::pair<std::size_t, std::size_t>> atoms;
  std::vector<double> weights;
  for (Eigen::Index x = 0; x < lambda.mass.rows(); ++x) {
    for (Eigen::Index u = 0; u < lambda.mass.cols(); ++u) {
      if (lambda.mass(x, u) > 0.0) {
        atoms.emplace_back(static_cast<std::size_t>(x), static_cast<std::size_t>(u));
        weights.push_back(lambda.mass(x, u));
      }
    }
  }
  const std::size_t ny = sys.refs(k).size();
  CostTensor cost({atoms.size(), ny});
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    for (std::size_t r = 0; r < ny; ++r) cost[i * ny + r] = sys.stage_cost(k, atoms[i].first, atoms[i].second, r);
  }
  const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return ot2(normalized(a), rho, cost).value;
}

ExtReal terminal_discrepancy(const GroundSystem& sys, const Eigen::VectorXd& mu, const Eigen::VectorXd& rho) {
  const std::size_t n = sys.horizon();
  const std::size_t nx = sys.states(n).size(), ny = sys.refs(n).size();
  CostTensor cost({nx, ny});
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t r = 0; r < ny; ++r) cost[x * ny + r] = sys.terminal_cost(x, r);
  }
  return ot2(normalized(mu), rho, cost).value;
}

std::vector<std::size_t> FleetRollout::attribution_mismatches(double tol) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < stage_costs.size() && k < stage_integrands.size(); ++k) {
    if (!near(stage_costs[k], stage_integrands[k], tol)) out.push_back(k);
  }
  return out;
}

FleetRollout rollout_feedback(const GroundSystem& sys, const CostToGoTable& table, const FleetProblem& problem) {
  check_problem(sys, table, problem);
  const std::size_t n = sys.horizon();
  FleetRollout out;
  out.mode = table.mode;
  Eigen::VectorXd mu = problem.mu0;
  out.measures.push_back(mu);
  for (std::size_t k = 0; k < n; ++k) {
    LiftedValue lv = lifted_value(table, mu, stage_refs(table, problem, k), k);
    if (lv.value.is_infinite()) {
      throw InfeasibleError("lifting", "cost-to-go is +inf at stage " + std::to_string(k), static_cast<long>(k));
    }
    StateInputDistribution lambda = lift_input(lv.plan, table, k, sys.inputs(k).size());
    ExtReal integrand = 0.0;
    for (const auto& e : lv.plan.entries) {
      const auto u = static_cast<std::size_t>(table.input_at(k, e.cell[0], std::span(e.cell).subspan(1)));
      integrand += scale(e.mass, sys.stage_cost(k, e.cell[0], u, stage_reference(sys, table, e.cell, k)));
    }
    const ExtReal stage = stage_discrepancy(sys, k, lambda, problem.refs[k]);
    out.stage_costs.push_back(stage);
    out.stage_integrands.push_back(integrand);
    out.total_cost += stage;
    out.lifted_values.push_back(lv.value);
    out.plans.push_back(std::move(lv.plan));
    mu = push_forward(sys, k, lambda);
    out.inputs.push_back(std::move(lambda));
    out.measures.push_back(mu);
  }
  out.terminal_cost = terminal_discrepancy(sys, mu, problem.refs[n]);
  out.lifted_values.push_back(out.terminal_cost);
  out.total_cost += out.terminal_cost;
  return out;
}

FleetRollout rollout_openloop(const GroundSystem& sys, const CostToGoTable& table, const FleetProblem& problem,
                              std::optional<std::size_t> particles) {
  check_problem(sys, table, problem);
  const std::size_t n = sys.horizon();
  LiftedValue lv = lifted_value(table, problem.mu0, stage_refs(table, problem, 0), 0);
  if (lv.value.is_infinite()) throw InfeasibleError("lifting", "cost-to-go is +inf at stage 0", 0);

  if (!as_map(lv.plan)) {
    if (!particles || *particles == 0) {
      throw ModeError("lifting", "open-loop rollout of a plan that splits mass needs particle identities");
    }
    for (const auto& e : lv.plan.entries) {
      const double count = e.mass * static_cast<double>(*particles);
      if (std::abs(count - std::round(count)) > 1e-9) {
        throw ModeError("lifting", "plan does not split into whole particles");
      }
    }
  }

  // Every plan cell is a group of particles sharing one reference tuple.
  struct Track {
    std::size_t x;
    std::vector<std::size_t> refs;
    double mass;
  };
  std::vector<Track> tracks;
  for (const auto& e : lv.plan.entries) tracks.push_back({e.cell[0], {e.cell.begin() + 1, e.cell.end()}, e.mass});

  FleetRollout out;
  out.mode = table.mode;
  out.measures.push_back(problem.mu0);
  out.lifted_values.push_back(lv.value);
  out.plans.push_back(std::move(lv.plan));
  for (std::size_t k = 0; k < n; ++k) {
    StateInputDistribution lambda;
    lambda.mass = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sys.states(k).size()),
                                        static_cast<Eigen::Index>(sys.inputs(k).size()));
    ExtReal integrand = 0.0;
    for (auto& t : tracks) {
      const auto tail = table.mode == DpMode::multi ? std::span<const std::size_t>(t.refs).subspan(k)
                                                    : std::span<const std::size_t>(t.refs);
      const long u = table.input_at(k, t.x, tail);
      if (u < 0) throw InfeasibleError("lifting", "no finite input along the allocation", static_cast<long>(k));
      std::vector<std::size_t> cell{t.x};
      cell.insert(cell.end(), tail.begin(), tail.end());
      integrand += scale(t.mass, sys.stage_cost(k, t.x, static_cast<std::size_t>(u), stage_reference(sys, table, cell, k)));
      lambda.mass(static_cast<Eigen::Index>(t.x), u) += t.mass;
      t.x = sys.next(k, t.x, static_cast<std::size_t>(u));
    }
    const ExtReal stage = stage_discrepancy(sys, k, lambda, problem.refs[k]);
    out.stage_costs.push_back(stage);
    out.stage_integrands.push_back(integrand);
    out.total_cost += stage;
    out.measures.push_back(push_forward(sys, k, lambda));
    out.inputs.push_back(std::move(lambda));
  }
  out.terminal_cost = terminal_discrepancy(sys, out.measures.back(), problem.refs[n]);
  out.total_cost += out.terminal_cost;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Reference measure on Y_k copied by label from rho_N.
Eigen::VectorXd relabel(const Eigen::VectorXd& rho_final, const Labels& final_labels, const Labels& stage_labels) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(stage_labels.size()));
  for (std::size_t r = 0; r < final_labels.size(); ++r) {
    const double w = rho_final[static_cast<Eigen::Index>(r)];
    if (w <= 0.0) continue;
    out[static_cast<Eigen::Index>(index_of(stage_labels, final_labels[r], "stage reference"))] = w;
  }
  return out;
}

std::vector<long long> mass_key(const Eigen::VectorXd& mu) {
  std::vector<long long> key(static_cast<std::size_t>(mu.size()));
  for (Eigen::Index i = 0; i < mu.size(); ++i) key[static_cast<std::size_t>(i)] = std::llround(mu[i] * kMassGrid);
  return key;
}

// All ways to write `total` as an ordered sum of `parts` nonnegative integers.
std::vector<std::vector<std::size_t>> compositions(std::size_t total, std::size_t parts) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current(parts, 0);
  std::function<void(std::size_t, std::size_t)> fill = [&](std::size_t i, std::size_t left) {
    if (i + 1 == parts) {
      current[i] = left;
      out.push_back(current);
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      current[i] = c;
      fill(i + 1, left - c);
    }
  };
  fill(0, total);
  return out;
}

class NoisyFleetSolver {
 public:
  NoisyFleetSolver(const NoisyGroundSystem& sys, std::vector<Eigen::VectorXd> refs, const NoisyLiftOptions& options)
      : sys_(sys), refs_(std::move(refs)), options_(options), memo_(sys.horizon() + 1) {
    for (std::size_t k = 0; k < sys.horizon(); ++k) chunks_.push_back(compositions(options.splits, sys.inputs(k).size()));
  }

  ExtReal value(std::size_t k, const Eigen::VectorXd& mu) { return solve(k, mu).value; }

  std::vector<Eigen::VectorXd> trajectory(const Eigen::VectorXd& mu0) {
    std::vector<Eigen::VectorXd> out{mu0};
    Eigen::VectorXd mu = mu0;
    for (std::size_t k = 0; k < sys_.horizon(); ++k) {
      const auto& entry = solve(k, mu);
      if (entry.value.is_infinite()) break;
      mu = entry.next;
      out.push_back(mu);
    }
    return out;
  }

  std::size_t explored() const {
    std::size_t total = 0;
    for (const auto& m : memo_) total += m.size();
    return total;
  }

 private:
  struct Entry {
    ExtReal value = ExtReal::infinity();
    Eigen::VectorXd next;
  };

  const Entry& solve(std::size_t k, const Eigen::VectorXd& mu) {
    auto key = mass_key(mu);
    if (auto it = memo_[k].find(key); it != memo_[k].end()) return it->second;
    Entry entry;
    if (k == sys_.horizon()) {
      entry.value = terminal(mu);
    } else {
      std::vector<std::size_t> support;
      for (Eigen::Index x = 0; x < mu.size(); ++x) {
        if (mu[x] > 0.0) support.push_back(static_cast<std::size_t>(x));
      }
      const auto& options = chunks_[k];
      double count = 1.0;
      for (std::size_t i = 0; i < support.size(); ++i) count *= static_cast<double>(options.size());
      if (count > static_cast<double>(options_.candidate_cap)) {
        throw CapacityError("lifting", "too many candidate state-input distributions; lower the split count");
      }
      std::vector<std::size_t> choice(support.size(), 0);
      const std::vector<std::size_t> radix(support.size(), options.size());
      do {
        Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(mu.size(), static_cast<Eigen::Index>(sys_.inputs(k).size()));
        for (std::size_t i = 0; i < support.size(); ++i) {
          const auto& split = options[choice[i]];
          const auto x = static_cast<Eigen::Index>(support[i]);
          for (std::size_t u = 0; u < split.size(); ++u) {
            lambda(x, static_cast<Eigen::Index>(u)) =
                mu[x] * static_cast<double>(split[u]) / static_cast<double>(options_.splits);
          }
        }
        Eigen::VectorXd next;
        const ExtReal stage = stage_cost(k, lambda, next);
        if (stage.is_infinite() || !(stage < entry.value)) continue;
        const ExtReal total = stage + solve(k + 1, next).value;
        if (total < entry.value) {
          entry.value = total;
          entry.next = next;
        }
      } while (!support.empty() && next_multi_index(choice, radix));
    }
    return memo_[k].emplace(std::move(key), std::move(entry)).first->second;
  }

  // K_{g_k}(Lambda x xi_k, rho_k); also returns f_k # (Lambda x xi_k).
  ExtReal stage_cost(std::size_t k, const Eigen::MatrixXd& lambda, Eigen::VectorXd& next) const {
    const auto& law = sys_.noise_law(k);
    const std::size_t nw = sys_.noise(k).size(), ny = sys_.refs(k).size();
    next = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys_.states(k + 1).size()));
    std::vector<std::array<std::size_t, 3>> atoms;
    std::vector<double> weights;
    for (Eigen::Index x = 0; x < lambda.rows(); ++x) {
      for (Eigen::Index u = 0; u < lambda.cols(); ++u) {
        if (lambda(x, u) <= 0.0) continue;
        for (std::size_t w = 0; w < nw; ++w) {
          const double m = lambda(x, u) * law[static_cast<Eigen::Index>(w)];
          if (m <= 0.0) continue;
          const std::array<std::size_t, 3> a{static_cast<std::size_t>(x), static_cast<std::size_t>(u), w};
          atoms.push_back(a);
          weights.push_back(m);
          next[static_cast<Eigen::Index>(sys_.next(k, a[0], a[1], w))] += m;
        }
      }
    }
    CostTensor cost({atoms.size(), ny});
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      for (std::size_t r = 0; r < ny; ++r) cost[i * ny + r] = sys_.stage_cost(k, atoms[i][0], atoms[i][1], atoms[i][2], r);
    }
    const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    return ot2(normalized(a), refs_[k], cost).value;
  }

  ExtReal terminal(const Eigen::VectorXd& mu) const {
    const std::size_t n = sys_.horizon();
    const std::size_t nx = sys_.states(n).size(), ny = sys_.refs(n).size();
    CostTensor cost({nx, ny});
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t r = 0; r < ny; ++r) cost[x * ny + r] = sys_.terminal_cost(x, r);
    }
    return ot2(normalized(mu), refs_[n], cost).value;
  }

  const NoisyGroundSystem& sys_;
  std::vector<Eigen::VectorXd> refs_;
  NoisyLiftOptions options_;
  std::vector<std::vector<std::vector<std::size_t>>> chunks_;
  std::vector<std::map<std::vector<long long>, Entry>> memo_;
};

}  // namespace

NoisyLiftResult naive_noisy_lift(const NoisyGroundSystem& sys, const Eigen::VectorXd& mu0,
                                 std::span<const Eigen::VectorXd> refs, const NoisyLiftOptions& options) {
  const std::size_t n = sys.horizon();
  if (options.splits == 0) throw DomainError("lifting", "split count must be positive");
  if (mu0.size() != static_cast<Eigen::Index>(sys.states(0).size())) {
    throw DomainError("lifting", "initial measure does not match the state space");
  }
  std::vector<Eigen::VectorXd> all_refs;
  if (refs.size() == 1) {
    for (std::size_t k = 0; k <= n; ++k) all_refs.push_back(relabel(refs[0], sys.refs(n), sys.refs(k)));
  } else if (refs.size() == n + 1) {
    all_refs.assign(refs.begin(), refs.end());
  } else {
    throw DomainError("lifting", "expected rho_N alone or rho_0..rho_N");
  }
  for (std::size_t k = 0; k <= n; ++k) {
    if (all_refs[k].size() != static_cast<Eigen::Index>(sys.refs(k).size())) {
      throw DomainError("lifting", "reference measure does not match its reference space");
    }
  }

  NoisyLiftResult out;
  DpOptions dp = options.dp;
  dp.freeze_reference = dp.freeze_reference || sys.stage_cost_depends_on_reference();
  const CostToGoTable table = dpa_stochastic(sys, dp);
  out.naive_plan = ot2(mu0, all_refs[n], table.cost_tensor(0));
  out.naive = out.naive_plan.value;

  NoisyFleetSolver solver(sys, all_refs, options);
  out.exact = solver.value(0, mu0);
  out.measures = solver.trajectory(mu0);
  out.measures_explored = solver.explored();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_particles(const Particles& mu, const Particles& targets) {
  if (mu.empty() || mu.size() != targets.size()) {
    throw DomainError("lifting", "particle sets must be nonempty and of equal size");
  }
  const Eigen::Index d = mu.front().size();
  for (const auto& p : mu) {
    if (p.size() != d) throw DomainError("lifting", "particles have different dimensions");
  }
  for (const auto& p : targets) {
    if (p.size() != d) throw DomainError("lifting", "targets have different dimensions");
  }
}

template <class Cost>
EmpiricalLift assign(const Particles& mu, const Particles& targets, Cost&& cost) {
  check_particles(mu, targets);
  const std::size_t m = mu.size();
  CostTensor c({m, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) c[i * m + j] = cost(i, j);
  }
  const TransportPlan plan = ot2_assignment(c);
  EmpiricalLift out;
  out.value = plan.value;
  if (plan.feasible()) {
    out.assignment.assign(m, 0);
    for (const auto& e : plan.entries) out.assignment[e.cell[0]] = e.cell[1];
  }
  return out;
}

// Pair costs are nonnegative up to rounding in the recursion.
ExtReal clamp_rounding(double c) {
  if (c >= 0.0) return c;
  if (c > -1e-9 * (1.0 + std::abs(c))) return 0.0;
  throw DomainError("lifting", "pair cost is negative; the recursion inputs violate the PSD preconditions");
}

}  // namespace

double empirical_w2_sq(const Particles& mu, const Particles& nu) {
  check_particles(mu, nu);
  const std::size_t m = mu.size();
  CostTensor c({m, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) c[i * m + j] = (mu[i] - nu[j]).squaredNorm();
  }
  return solve_assignment(c).value;
}

EmpiricalLift integrator_lifted_value(std::size_t horizon, std::size_t k, const Particles& mu, const Particles& targets) {
  if (k > horizon) throw DomainError("lifting", "stage beyond the horizon");
  return assign(mu, targets, [&](std::size_t i, std::size_t j) -> ExtReal {
    if (k < horizon) return lqr::integrator_cost_to_go<double>(horizon, k, mu[i], targets[j]);
    return (mu[i] - targets[j]).norm() <= 1e-9 * (1.0 + targets[j].norm()) ? ExtReal(0.0) : ExtReal::infinity();
  });
}

EmpiricalRollout integrator_rollout(std::size_t horizon, const Particles& mu0, const Particles& targets) {
  if (horizon == 0) throw DomainError("lifting", "horizon must be positive");
  EmpiricalRollout out;
  Particles x = mu0;
  out.states.push_back(x);
  const double m = static_cast<double>(mu0.size());
  for (std::size_t k = 0; k < horizon; ++k) {
    EmpiricalLift lift = integrator_lifted_value(horizon, k, x, targets);
    if (lift.value.is_infinite()) throw InfeasibleError("lifting", "no finite allocation", static_cast<long>(k));
    Particles u(x.size());
    double effort = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      u[i] = lqr::integrator_feedback<double>(horizon, k, x[i], targets[lift.assignment[i]]);
      effort += u[i].squaredNorm() / m;
      x[i] += u[i];
    }
    out.lifts.push_back(std::move(lift));
    out.inputs.push_back(std::move(u));
    out.stage_costs.push_back(effort);
    out.total_cost += effort;
    out.states.push_back(x);
  }
  EmpiricalLift final_lift = integrator_lifted_value(horizon, horizon, x, targets);
  out.terminal_cost = final_lift.value;
  out.total_cost += out.terminal_cost;
  out.lifts.push_back(std::move(final_lift));
  return out;
}

EmpiricalLift lqr_lifted_value(const lqr::QuadraticCostToGo<double>& cost, std::size_t k, const Particles& mu,
                               const Particles& targets) {
  if (k > cost.horizon()) throw DomainError("lifting", "stage beyond the horizon");
  return assign(mu, targets, [&](std::size_t i, std::size_t j) { return clamp_rounding(cost.cost(k, mu[i], targets[j])); });
}

EmpiricalRollout lqr_rollout(const lqr::System<double>& sys, const lqr::QuadraticCostToGo<double>& cost,
                             const Particles& mu0, const Particles& targets) {
  const std::size_t horizon = sys.horizon();
  if (cost.horizon() != horizon) throw DomainError("lifting", "cost-to-go horizon does not match the system");
  EmpiricalRollout out;
  Particles x = mu0;
  out.states.push_back(x);
  for (std::size_t k = 0; k < horizon; ++k) {
    const auto& s = sys.stages[k];
    EmpiricalLift lift = lqr_lifted_value(cost, k, x, targets);
    if (lift.value.is_infinite()) throw InfeasibleError("lifting", "no finite allocation", static_cast<long>(k));
    Particles u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = cost.input(k, x[i], targets[lift.assignment[i]]);
    // K_{g_k}(Lambda_k, rho_k) with g = u'Ru + (x - y)'Q(x - y).
    const EmpiricalLift stage = assign(x, targets, [&](std::size_t i, std::size_t j) {
      double g = u[i].dot(s.r * u[i]);
      if (s.q.size() != 0) g += (x[i] - targets[j]).dot(s.q * (x[i] - targets[j]));
      return ExtReal(g);
    });
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.a * x[i] + s.b * u[i];
    out.lifts.push_back(std::move(lift));
    out.inputs.push_back(std::move(u));
    out.stage_costs.push_back(stage.value.value());
    out.total_cost += stage.value;
    out.states.push_back(x);
  }
  const EmpiricalLift terminal = assign(x, targets, [&](std::size_t i, std::size_t j) {
    return clamp_rounding((x[i] - targets[j]).dot(sys.terminal * (x[i] - targets[j])));
  });
  out.terminal_cost = terminal.value;
  out.total_cost += out.terminal_cost;
  out.lifts.push_back(lqr_lifted_value(cost, horizon, x, targets));
  return out;
}

}  // namespace otdp
