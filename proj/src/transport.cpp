#include "otdp/transport.hpp"

#include <algorithm>

#include "otdp/linprog.hpp"

namespace otdp {
namespace {

// Plan masses below this are LP round-off and are dropped from sparse output.
constexpr double kMassFloor = 1e-14;

void check_shape(std::span<const std::size_t> sizes, const CostTensor& cost) {
  if (sizes.size() < 2) throw DomainError("transport", "transport needs at least two marginals");
  if (cost.rank() != sizes.size()) throw DomainError("transport", "cost rank does not match marginal count");
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    if (cost.shape()[a] != sizes[a]) throw DomainError("transport", "cost shape does not match marginal sizes");
  }
}

void check_weights(const Eigen::VectorXd& w) {
  if (w.size() == 0) throw DomainError("transport", "empty marginal");
  if ((w.array() < 0.0).any() || !w.allFinite()) throw DomainError("transport", "marginal weights must be nonnegative");
  if (std::abs(w.sum() - 1.0) > kInternalMassTolerance) throw DomainError("transport", "marginal weights must sum to one");
}

TransportPlan infeasible_plan(std::vector<Eigen::VectorXd> marginals) {
  TransportPlan plan;
  plan.marginals = std::move(marginals);
  return plan;
}

}  // namespace

Eigen::VectorXd TransportPlan::axis_marginal(std::size_t axis) const {
  if (axis >= marginals.size()) throw DomainError("transport", "axis out of range");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(marginals[axis].size());
  for (const auto& e : entries) out[static_cast<Eigen::Index>(e.cell[axis])] += e.mass;
  return out;
}

ExtReal TransportPlan::cost_of(const CostTensor& cost) const {
  ExtReal total = 0.0;
  for (const auto& e : entries) total += scale(e.mass, cost.at(e.cell));
  return total;
}

DiscreteMeasure<std::vector<std::size_t>> TransportPlan::joint() const {
  if (entries.empty()) throw DomainError("transport", "infeasible plan has no joint measure");
  std::vector<DiscreteMeasure<std::vector<std::size_t>>::Atom> atoms;
  atoms.reserve(entries.size());
  for (const auto& e : entries) atoms.push_back({e.cell, e.mass});
  return DiscreteMeasure<std::vector<std::size_t>>::from_atoms(std::move(atoms));
}

TransportPlan mmot_partial(std::span<const std::optional<Eigen::VectorXd>> marginals, const CostTensor& cost) {
  std::vector<std::size_t> sizes;
  std::vector<Eigen::VectorXd> declared;
  bool any_fixed = false;
  for (std::size_t a = 0; a < marginals.size(); ++a) {
    if (marginals[a]) {
      check_weights(*marginals[a]);
      any_fixed = true;
      sizes.push_back(static_cast<std::size_t>(marginals[a]->size()));
      declared.push_back(*marginals[a]);
    } else {
      if (a >= cost.rank()) throw DomainError("transport", "cost rank does not match marginal count");
      sizes.push_back(cost.shape()[a]);
      declared.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cost.shape()[a])));
    }
  }
  if (!any_fixed) throw DomainError("transport", "at least one marginal must be fixed");
  check_shape(sizes, cost);

  // Variables: finite-cost cells whose fixed coordinates all carry mass.
  std::vector<std::size_t> cells;
  std::vector<std::vector<bool>> covered(marginals.size());
  for (std::size_t a = 0; a < sizes.size(); ++a) covered[a].assign(sizes[a], false);
  std::vector<std::size_t> index(sizes.size(), 0);
  std::size_t linear = 0;
  do {
    bool usable = cost[linear].is_finite();
    for (std::size_t a = 0; usable && a < sizes.size(); ++a) {
      if (marginals[a] && (*marginals[a])[static_cast<Eigen::Index>(index[a])] <= 0.0) usable = false;
    }
    if (usable) {
      cells.push_back(linear);
      for (std::size_t a = 0; a < sizes.size(); ++a) covered[a][index[a]] = true;
    }
    ++linear;
  } while (next_multi_index(index, sizes));

  for (std::size_t a = 0; a < sizes.size(); ++a) {
    if (!marginals[a]) continue;
    for (std::size_t i = 0; i < sizes[a]; ++i) {
      if ((*marginals[a])[static_cast<Eigen::Index>(i)] > 0.0 && !covered[a][i]) return infeasible_plan(declared);
    }
  }

  // One equality row per atom of each fixed marginal.
  std::vector<std::size_t> row_offset(sizes.size(), 0);
  std::size_t rows = 0;
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    row_offset[a] = rows;
    if (marginals[a]) rows += sizes[a];
  }
  LpProblem lp;
  const auto n = static_cast<Eigen::Index>(cells.size());
  lp.objective.resize(n);
  lp.eq_matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), n);
  lp.eq_rhs.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    if (!marginals[a]) continue;
    for (std::size_t i = 0; i < sizes[a]; ++i) {
      lp.eq_rhs[static_cast<Eigen::Index>(row_offset[a] + i)] = (*marginals[a])[static_cast<Eigen::Index>(i)];
    }
  }
  for (Eigen::Index v = 0; v < n; ++v) {
    const auto idx = cost.multi_index(cells[static_cast<std::size_t>(v)]);
    lp.objective[v] = cost[cells[static_cast<std::size_t>(v)]].value();
    for (std::size_t a = 0; a < sizes.size(); ++a) {
      if (marginals[a]) lp.eq_matrix(static_cast<Eigen::Index>(row_offset[a] + idx[a]), v) = 1.0;
    }
  }

  const LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::infeasible) return infeasible_plan(declared);
  if (sol.status == LpStatus::unbounded) throw SolverFailure("transport", "transport LP reported unbounded");

  TransportPlan plan;
  plan.lp_iterations = sol.iterations;
  for (Eigen::Index v = 0; v < n; ++v) {
    if (sol.values[v] <= kMassFloor) continue;
    plan.entries.push_back({cost.multi_index(cells[static_cast<std::size_t>(v)]), sol.values[v]});
  }
  plan.marginals = declared;
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    if (!marginals[a]) plan.marginals[a] = plan.axis_marginal(a);
  }
  plan.value = plan.cost_of(cost);
  plan.dual_value = lp.eq_rhs.dot(sol.dual_values);
  return plan;
}

TransportPlan mmot(std::span<const Eigen::VectorXd> marginals, const CostTensor& cost) {
  std::vector<std::optional<Eigen::VectorXd>> fixed(marginals.begin(), marginals.end());
  return mmot_partial(fixed, cost);
}

TransportPlan ot2(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, const CostTensor& cost) {
  const std::vector<Eigen::VectorXd> marginals{mu, nu};
  return mmot(marginals, cost);
}

TransportPlan ot2_assignment(const CostTensor& cost) {
  if (cost.rank() != 2 || cost.shape()[0] != cost.shape()[1]) {
    throw DomainError("transport", "assignment transport needs a square cost");
  }
  const std::size_t n = cost.shape()[0];
  const double w = 1.0 / static_cast<double>(n);
  std::vector<Eigen::VectorXd> uniform(2, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), w));
  Assignment a;
  try {
    a = solve_assignment(cost);
  } catch (const InfeasibleError&) {
    return infeasible_plan(std::move(uniform));
  }
  TransportPlan plan;
  plan.marginals = std::move(uniform);
  for (std::size_t i = 0; i < n; ++i) plan.entries.push_back({{i, a.permutation[i]}, w});
  plan.value = a.value;
  return plan;
}

std::optional<std::vector<std::vector<std::size_t>>> as_map(const TransportPlan& plan) {
  if (plan.entries.empty() || plan.marginals.empty()) return std::nullopt;
  const auto n0 = static_cast<std::size_t>(plan.marginals[0].size());
  std::vector<std::vector<std::size_t>> image(n0);
  std::vector<bool> seen(n0, false);
  for (const auto& e : plan.entries) {
    const std::size_t x = e.cell[0];
    if (seen[x]) return std::nullopt;
    seen[x] = true;
    image[x].assign(e.cell.begin() + 1, e.cell.end());
  }
  for (std::size_t x = 0; x < n0; ++x) {
    if (!seen[x] && plan.marginals[0][static_cast<Eigen::Index>(x)] > 0.0) return std::nullopt;
  }
  return image;
}

}  // namespace otdp
