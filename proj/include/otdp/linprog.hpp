#ifndef OTDP_LINPROG_HPP_
#define OTDP_LINPROG_HPP_

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "otdp/cost_tensor.hpp"
#include "otdp/ext_real.hpp"

namespace otdp {

/// min objective' x  s.t.  eq_matrix x = eq_rhs,  x >= 0.
struct LpProblem {
  Eigen::VectorXd objective;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd values;
  double objective_value = 0.0;
  /// y with objective - eq_matrix' y >= 0 at optimum; rows found redundant get 0.
  Eigen::VectorXd dual_values;
  std::size_t iterations = 0;
};

/// Dense two-phase primal simplex with Bland's rule.
///
/// Phase I minimizes the sum of artificial variables; redundant equality rows
/// are detected when an artificial cannot be pivoted out. Throws SolverFailure
/// past 50 * (rows + cols) pivots and DomainError on non-finite or mis-shaped
/// input.
LpSolution solve_lp(const LpProblem& problem);

struct Assignment {
  /// permutation[i] = column assigned to row i.
  std::vector<std::size_t> permutation;
  /// Sum of assigned costs.
  double total = 0.0;
  /// total / n: the optimum of the doubly-stochastic relaxation with uniform 1/n marginals.
  double value = 0.0;
};

/// Minimum-cost perfect matching on an n x n extended-real cost matrix (shape {n, n}).
/// Ties resolve to the lexicographically smallest optimal permutation.
/// Throws InfeasibleError when every permutation hits an infinite entry.
Assignment solve_assignment(const CostTensor& cost);

}  // namespace otdp

#endif  // OTDP_LINPROG_HPP_
