#ifndef OTDP_LIFTING_HPP_
#define OTDP_LIFTING_HPP_

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "otdp/ext_real.hpp"
#include "otdp/ground_dp.hpp"
#include "otdp/lqr.hpp"
#include "otdp/transport.hpp"

namespace otdp {

/// Probability-space cost-to-go at stage k together with the plan attaining it.
struct LiftedValue {
  std::size_t stage = 0;
  ExtReal value = ExtReal::infinity();
  TransportPlan plan;
  DpMode mode = DpMode::multi;
};

/// Measures are weight vectors over the label indices of the matching space.
/// Multi mode takes refs rho_k..rho_N, simple (two-marginal) mode rho_N only.
/// Throws ModeError when the number or sizes of references do not fit the table.
LiftedValue lifted_value(const CostToGoTable& table, const Eigen::VectorXd& mu, std::span<const Eigen::VectorXd> refs,
                         std::size_t k);

/// Joint state-input distribution: mass(x, u) over X_k x U_k.
struct StateInputDistribution {
  Eigen::MatrixXd mass;
  double epsilon = 0.0;

  Eigen::VectorXd state_marginal() const { return mass.rowwise().sum(); }
  Eigen::VectorXd input_marginal() const { return mass.colwise().sum().transpose(); }
};

/// Pushes plan mass on (x, r...) to (x, argmin input). Throws InfeasibleError
/// when a positive-mass cell has no finite input.
StateInputDistribution lift_input(const TransportPlan& plan, const CostToGoTable& table, std::size_t k,
                                  std::size_t n_inputs);

/// mu_{k+1} = f_k # Lambda_k.
Eigen::VectorXd push_forward(const GroundSystem& sys, std::size_t k, const StateInputDistribution& lambda);

/// K_{g_k}(Lambda_k, rho_k): transport between state-input pairs and references.
ExtReal stage_discrepancy(const GroundSystem& sys, std::size_t k, const StateInputDistribution& lambda,
                          const Eigen::VectorXd& rho);

/// K_{g_N}(mu_N, rho_N).
ExtReal terminal_discrepancy(const GroundSystem& sys, const Eigen::VectorXd& mu, const Eigen::VectorXd& rho);

/// Weights over the labels of the measures in a fleet problem: mu_0 on X_0
/// and rho_0..rho_N on Y_0..Y_N.
struct FleetProblem {
  Eigen::VectorXd mu0;
  std::vector<Eigen::VectorXd> refs;
};

struct FleetRollout {
  DpMode mode = DpMode::multi;
  std::vector<Eigen::VectorXd> measures;              // mu_0..mu_N
  std::vector<StateInputDistribution> inputs;         // Lambda_0..Lambda_{N-1}
  std::vector<TransportPlan> plans;                   // feedback: one per stage; open loop: gamma_0 only
  std::vector<ExtReal> lifted_values;                 // V_k(mu_k) where a plan was solved
  std::vector<ExtReal> stage_costs;                   // K_{g_k}(Lambda_k, rho_k)
  std::vector<ExtReal> stage_integrands;              // plan-weighted g_k(x, u, r_k)
  ExtReal terminal_cost = 0.0;
  ExtReal total_cost = 0.0;

  /// Stages where the plan-weighted integrand differs from the OT stage cost.
  std::vector<std::size_t> attribution_mismatches(double tol = 1e-9) const;
};

/// Re-solves the allocation at every stage and applies the lifted input.
/// Throws InfeasibleError (with stage) when some V_k is +inf.
FleetRollout rollout_feedback(const GroundSystem& sys, const CostToGoTable& table, const FleetProblem& problem);

/// Keeps the stage-0 allocation: every plan cell (or every particle when the
/// plan splits an atom and `particles` gives the fleet size) follows its own
/// reference tuple. Throws ModeError when the plan splits mass without
/// particle identity.
FleetRollout rollout_openloop(const GroundSystem& sys, const CostToGoTable& table, const FleetProblem& problem,
                              std::optional<std::size_t> particles = std::nullopt);

struct NoisyLiftOptions {
  /// Each atom's mass is allocated to inputs in this many equal chunks.
  std::size_t splits = 2;
  /// Upper bound on candidate state-input distributions per measure.
  std::size_t candidate_cap = 1'000'000;
  DpOptions dp;
};

struct NoisyLiftResult {
  ExtReal naive = ExtReal::infinity();
  ExtReal exact = ExtReal::infinity();
  TransportPlan naive_plan;
  std::vector<Eigen::VectorXd> measures;  // optimal fleet trajectory mu_0..mu_N
  std::size_t measures_explored = 0;
};

/// Naive: the two-marginal lift of the stochastic ground cost-to-go (stage
/// references frozen at rho_N when costs depend on them). Exact: the fleet
/// problem solved on measures, where the noise acts as a known kernel and the
/// next measure is f # (Lambda x xi). `refs` holds rho_0..rho_N or rho_N alone.
NoisyLiftResult naive_noisy_lift(const NoisyGroundSystem& sys, const Eigen::VectorXd& mu0,
                                 std::span<const Eigen::VectorXd> refs, const NoisyLiftOptions& options = {});

// ---------------------------------------------------------------------------
// Empirical fleets in R^n: uniform particles, assignment-based transport.

using Particles = std::vector<Eigen::VectorXd>;

struct EmpiricalLift {
  ExtReal value = ExtReal::infinity();
  std::vector<std::size_t> assignment;  // particle i -> target assignment[i]
};

struct EmpiricalRollout {
  std::vector<Particles> states;  // x_0..x_N per particle
  std::vector<Particles> inputs;
  std::vector<EmpiricalLift> lifts;  // V_k(mu_k) per stage
  std::vector<double> stage_costs;
  ExtReal terminal_cost = 0.0;
  ExtReal total_cost = 0.0;
};

/// Integrator x+ = x + u, stage cost |u|^2, terminal constraint x_N = r.
EmpiricalLift integrator_lifted_value(std::size_t horizon, std::size_t k, const Particles& mu, const Particles& targets);
EmpiricalRollout integrator_rollout(std::size_t horizon, const Particles& mu0, const Particles& targets);

/// Linear-quadratic pair cost: c_k(x, y) from the pair recursion.
EmpiricalLift lqr_lifted_value(const lqr::QuadraticCostToGo<double>& cost, std::size_t k, const Particles& mu,
                               const Particles& targets);
EmpiricalRollout lqr_rollout(const lqr::System<double>& sys, const lqr::QuadraticCostToGo<double>& cost,
                             const Particles& mu0, const Particles& targets);

/// Squared 2-Wasserstein distance between equal-size particle sets.
double empirical_w2_sq(const Particles& mu, const Particles& nu);

}  // namespace otdp

#endif  // OTDP_LIFTING_HPP_
