#include "otdp/linprog.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "otdp/error.hpp"

namespace otdp {
namespace {

constexpr std::size_t kNoBasis = std::numeric_limits<std::size_t>::max();
constexpr double kPivotTolerance = 1e-10;

// Tableau layout: rows 0..m-1 are constraints, row m holds reduced costs
// (rhs column holds -objective). Columns 0..n-1 are structural variables,
// n..n+m-1 artificials, the last column the right-hand side.
class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, std::size_t iteration_cap)
      : m_(a.rows()), n_(a.cols()), cap_(iteration_cap) {
    t_ = Eigen::MatrixXd::Zero(m_ + 1, n_ + m_ + 1);
    t_.topLeftCorner(m_, n_) = a;
    t_.block(0, n_, m_, m_).setIdentity();
    t_.col(rhs()).head(m_) = b;
    basis_.resize(static_cast<std::size_t>(m_));
    active_.assign(static_cast<std::size_t>(m_), true);
    for (Eigen::Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = static_cast<std::size_t>(n_ + i);
  }

  Eigen::Index rhs() const { return n_ + m_; }
  Eigen::Index rows() const { return m_; }
  std::size_t iterations() const { return iterations_; }
  const std::vector<std::size_t>& basis() const { return basis_; }
  bool active(Eigen::Index i) const { return active_[static_cast<std::size_t>(i)]; }
  double objective() const { return -t_(m_, rhs()); }
  double& at(Eigen::Index i, Eigen::Index j) { return t_(i, j); }
  double at(Eigen::Index i, Eigen::Index j) const { return t_(i, j); }

  /// Installs reduced costs for cost vector `c` (size n + m) w.r.t. the current basis.
  void set_costs(const Eigen::VectorXd& c) {
    t_.row(m_).setZero();
    t_.row(m_).head(c.size()) = c.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!active(i)) continue;
      const double cb = c[static_cast<Eigen::Index>(basis_[static_cast<std::size_t>(i)])];
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    t_(r, c) = 1.0;
    basis_[static_cast<std::size_t>(r)] = static_cast<std::size_t>(c);
    if (++iterations_ > cap_) {
      throw SolverFailure("linprog", "simplex exceeded its iteration cap");
    }
  }

  void deactivate(Eigen::Index i) {
    active_[static_cast<std::size_t>(i)] = false;
    basis_[static_cast<std::size_t>(i)] = kNoBasis;
    t_.row(i).setZero();
  }

  /// Bland's rule over columns [0, allowed). Returns false when unbounded.
  bool run(Eigen::Index allowed, double cost_tolerance) {
    for (;;) {
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        if (t_(m_, j) < -cost_tolerance) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return true;

      Eigen::Index leaving = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (!active(i) || t_(i, entering) <= kPivotTolerance) continue;
        const double ratio = t_(i, rhs()) / t_(i, entering);
        const double tie = 1e-12 * std::max(1.0, std::abs(best));
        if (leaving < 0 || ratio < best - tie) {
          leaving = i;
          best = ratio;
        } else if (ratio <= best + tie &&
                   basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leaving)]) {
          leaving = i;
          best = std::min(best, ratio);
        }
      }
      if (leaving < 0) return false;
      pivot(leaving, entering);
    }
  }

 private:
  Eigen::Index m_;
  Eigen::Index n_;
  std::size_t cap_;
  std::size_t iterations_ = 0;
  Eigen::MatrixXd t_;
  std::vector<std::size_t> basis_;
  std::vector<bool> active_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
  const Eigen::MatrixXd& a0 = problem.eq_matrix;
  const Eigen::Index m = a0.rows();
  const Eigen::Index n = a0.cols();
  if (problem.eq_rhs.size() != m || problem.objective.size() != n) {
    throw DomainError("linprog", "inconsistent LP dimensions");
  }
  if (!a0.allFinite() || !problem.eq_rhs.allFinite() || !problem.objective.allFinite()) {
    throw DomainError("linprog", "LP coefficients must be finite");
  }

  Eigen::MatrixXd a = a0;
  Eigen::VectorXd b = problem.eq_rhs;
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      a.row(i) *= -1.0;
      b[i] = -b[i];
      sign[i] = -1.0;
    }
  }

  const std::size_t cap = 50 * static_cast<std::size_t>(m + n);
  Tableau tab(a, b, std::max<std::size_t>(cap, 1));
  LpSolution sol;

  // Phase I.
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  tab.set_costs(phase1);
  tab.run(n + m, 1e-11);
  const double b_scale = 1.0 + (m > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
  if (tab.objective() > 1e-9 * b_scale) {
    sol.status = LpStatus::infeasible;
    sol.iterations = tab.iterations();
    return sol;
  }

  // Drive remaining artificials out of the basis; rows where that is
  // impossible are linear combinations of the others.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!tab.active(i) || tab.basis()[static_cast<std::size_t>(i)] < static_cast<std::size_t>(n)) continue;
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(tab.at(i, j)) > 1e-9) {
        col = j;
        break;
      }
    }
    if (col >= 0) {
      tab.pivot(i, col);
    } else {
      tab.deactivate(i);
    }
  }

  // Phase II.
  const double c_scale = std::max(1.0, n > 0 ? problem.objective.cwiseAbs().maxCoeff() : 0.0);
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = problem.objective;
  tab.set_costs(phase2);
  for (Eigen::Index j = n; j < n + m; ++j) tab.at(m, j) = 0.0;
  if (!tab.run(n, 1e-11 * c_scale)) {
    sol.status = LpStatus::unbounded;
    sol.iterations = tab.iterations();
    return sol;
  }

  sol.status = LpStatus::optimal;
  sol.iterations = tab.iterations();
  sol.values = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Index> kept_rows;
  std::vector<Eigen::Index> basic_cols;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!tab.active(i)) continue;
    const auto col = static_cast<Eigen::Index>(tab.basis()[static_cast<std::size_t>(i)]);
    sol.values[col] = std::max(0.0, tab.at(i, tab.rhs()));
    kept_rows.push_back(i);
    basic_cols.push_back(col);
  }
  sol.objective_value = problem.objective.dot(sol.values);

  // Duals from B' y = c_B on the non-redundant rows.
  sol.dual_values = Eigen::VectorXd::Zero(m);
  const auto k = static_cast<Eigen::Index>(kept_rows.size());
  if (k > 0) {
    Eigen::MatrixXd basis_matrix(k, k);
    Eigen::VectorXd cb(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) basis_matrix(r, c) = a(kept_rows[r], basic_cols[c]);
      cb[r] = problem.objective[basic_cols[r]];
    }
    const Eigen::VectorXd y = basis_matrix.transpose().colPivHouseholderQr().solve(cb);
    for (Eigen::Index r = 0; r < k; ++r) sol.dual_values[kept_rows[r]] = sign[kept_rows[r]] * y[r];
  }
  return sol;
}

}  // namespace otdp
