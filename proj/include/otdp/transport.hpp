#ifndef OTDP_TRANSPORT_HPP_
#define OTDP_TRANSPORT_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "otdp/cost_tensor.hpp"
#include "otdp/error.hpp"
#include "otdp/ext_real.hpp"
#include "otdp/measures.hpp"

namespace otdp {

/// Coupling over a product of finite supports, stored sparsely by atom index.
///
/// `cells` hold one atom index per marginal; only positive-mass cells are kept,
/// in row-major order. An infeasible problem has value +inf and no cells.
struct TransportPlan {
  struct Entry {
    std::vector<std::size_t> cell;
    double mass;
  };

  std::vector<Eigen::VectorXd> marginals;
  std::vector<Entry> entries;
  ExtReal value = ExtReal::infinity();
  /// Suboptimality bound; exact solves report 0.
  double epsilon = 0.0;
  /// Dual objective of the LP (equals value at optimum); NaN when not computed.
  double dual_value = std::nan("");
  std::size_t lp_iterations = 0;

  bool feasible() const { return value.is_finite(); }
  std::size_t rank() const { return marginals.size(); }

  /// Mass of the plan projected onto one axis.
  Eigen::VectorXd axis_marginal(std::size_t axis) const;

  /// Cost-weighted mass of the plan under `cost`.
  ExtReal cost_of(const CostTensor& cost) const;

  /// Joint measure over index tuples.
  DiscreteMeasure<std::vector<std::size_t>> joint() const;
};

/// Multi-marginal transport: minimize the cost of a coupling with the given
/// marginal weight vectors. Infinite cells are removed before the LP is built.
/// Throws DomainError when shapes disagree or fewer than two marginals are given.
TransportPlan mmot(std::span<const Eigen::VectorXd> marginals, const CostTensor& cost);

/// mmot with some marginals left free (std::nullopt). At least one marginal must be fixed.
TransportPlan mmot_partial(std::span<const std::optional<Eigen::VectorXd>> marginals, const CostTensor& cost);

TransportPlan ot2(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, const CostTensor& cost);

/// Two-marginal transport between equal-size uniform marginals via assignment.
/// The plan follows the (lexicographically smallest) optimal permutation.
TransportPlan ot2_assignment(const CostTensor& cost);

/// For each first-axis atom, the unique tuple of remaining indices carrying its
/// mass, or nullopt when some atom's mass is split.
std::optional<std::vector<std::vector<std::size_t>>> as_map(const TransportPlan& plan);

template <class P>
std::vector<Eigen::VectorXd> weight_vectors(std::span<const DiscreteMeasure<P>> measures) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(measures.size());
  for (const auto& m : measures) out.push_back(m.weights());
  return out;
}

/// ot2 between measures with a cost callback c(x, y) returning an extended real.
template <class P, class Q, class F>
TransportPlan ot2(const DiscreteMeasure<P>& mu, const DiscreteMeasure<Q>& nu, F&& cost) {
  CostTensor c({mu.size(), nu.size()});
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) c[i * nu.size() + j] = ExtReal(cost(mu.point(i), nu.point(j)));
  }
  return ot2(mu.weights(), nu.weights(), c);
}

// ---------------------------------------------------------------------------
// Gaussian closed form.

namespace detail {

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
DenseMatrix<Scalar> psd_sqrt(const DenseMatrix<Scalar>& s, const char* name) {
  using std::abs;
  using std::sqrt;
  const Scalar scale = std::max<Scalar>(Scalar(1), s.cwiseAbs().maxCoeff());
  if (((s - s.transpose()).cwiseAbs().array() > Scalar(1e-10) * scale).any()) {
    throw DomainError("transport", std::string(name) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> eig(s);
  if (eig.info() != Eigen::Success) throw SolverFailure("transport", "eigendecomposition failed");
  auto values = eig.eigenvalues();
  if (values.minCoeff() < -Scalar(1e-10) * scale) {
    throw DomainError("transport", std::string(name) + " is not positive semidefinite");
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = sqrt(std::max<Scalar>(values[i], Scalar(0)));
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace detail

/// Squared 2-Wasserstein distance between N(m, s) and N(m_star, s_star):
/// |m - m*|^2 + tr(S + S* - 2 (S^1/2 S* S^1/2)^1/2).
template <class Scalar>
Scalar gaussian_w2_sq(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& m,
                      const detail::DenseMatrix<Scalar>& s,
                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& m_star,
                      const detail::DenseMatrix<Scalar>& s_star) {
  const Eigen::Index n = m.size();
  if (m_star.size() != n || s.rows() != n || s.cols() != n || s_star.rows() != n || s_star.cols() != n) {
    throw DomainError("transport", "Gaussian parameters have mismatched dimensions");
  }
  const auto root = detail::psd_sqrt<Scalar>(s, "covariance");
  detail::psd_sqrt<Scalar>(s_star, "target covariance");
  detail::DenseMatrix<Scalar> inner = root * s_star * root;
  inner = (inner + inner.transpose()) / Scalar(2);
  const auto cross = detail::psd_sqrt<Scalar>(inner, "cross term");
  const Scalar trace = s.trace() + s_star.trace() - Scalar(2) * cross.trace();
  return (m - m_star).squaredNorm() + std::max<Scalar>(trace, Scalar(0));
}

/// Scalar Gaussians given by mean and standard deviation.
inline double gaussian_w2_sq(double mean, double stddev, double mean_star, double stddev_star) {
  if (stddev < 0.0 || stddev_star < 0.0) throw DomainError("transport", "negative standard deviation");
  return (mean - mean_star) * (mean - mean_star) + (stddev - stddev_star) * (stddev - stddev_star);
}

}  // namespace otdp

#endif  // OTDP_TRANSPORT_HPP_
