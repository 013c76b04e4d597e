#ifndef OTDP_LQR_HPP_
#define OTDP_LQR_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "otdp/error.hpp"

namespace otdp::lqr {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
struct Stage {
  Matrix<Scalar> a;  // n x n
  Matrix<Scalar> b;  // n x p
  Matrix<Scalar> r;  // p x p, positive definite
  Matrix<Scalar> q;  // n x n PSD, or empty when the stage has no state cost
};

/// Linear dynamics x+ = A x + B u with input weight R, optional state weight Q
/// and terminal weight P_N.
template <class Scalar>
struct System {
  std::vector<Stage<Scalar>> stages;
  Matrix<Scalar> terminal;

  std::size_t horizon() const { return stages.size(); }
  Eigen::Index state_dim() const { return terminal.rows(); }

  static System time_invariant(std::size_t horizon, const Matrix<Scalar>& a, const Matrix<Scalar>& b,
                               const Matrix<Scalar>& r, const Matrix<Scalar>& terminal,
                               const Matrix<Scalar>& q = Matrix<Scalar>()) {
    System s{std::vector<Stage<Scalar>>(horizon, Stage<Scalar>{a, b, r, q}), terminal};
    s.validate();
    return s;
  }

  void validate() const;
};

namespace detail {

template <class Scalar>
Scalar scale_of(const Matrix<Scalar>& m) {
  return m.size() == 0 ? Scalar(1) : std::max<Scalar>(Scalar(1), m.cwiseAbs().maxCoeff());
}

template <class Scalar>
void require_symmetric(const Matrix<Scalar>& m, const char* name) {
  using std::abs;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * scale_of(m)) {
    throw DomainError("lqr", std::string(name) + " must be symmetric");
  }
}

template <class Scalar>
void require_psd(const Matrix<Scalar>& m, const char* name, bool strict) {
  require_symmetric(m, name);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(m);
  const Scalar lowest = eig.eigenvalues().minCoeff();
  const Scalar tol = Scalar(1e-10) * scale_of(m);
  if (strict ? !(lowest > tol) : lowest < -tol) {
    throw DomainError("lqr", std::string(name) + (strict ? " must be positive definite" : " must be positive semidefinite"));
  }
}

template <class Scalar>
Matrix<Scalar> symmetrized(const Matrix<Scalar>& m) {
  return (m + m.transpose()) / Scalar(2);
}

template <class Scalar>
Scalar asymmetry(const Matrix<Scalar>& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

/// Solves (R + B' P B) X = rhs with a rank check.
template <class Scalar>
Matrix<Scalar> solve_inner(const Matrix<Scalar>& inner, const Matrix<Scalar>& rhs) {
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(inner);
  if (qr.rank() < inner.rows()) throw SolverFailure("lqr", "R + B'PB is singular");
  return qr.solve(rhs);
}

template <class Scalar>
Matrix<Scalar> stage_q(const Stage<Scalar>& s, Eigen::Index n) {
  return s.q.size() == 0 ? Matrix<Scalar>::Zero(n, n) : s.q;
}

}  // namespace detail

template <class Scalar>
void System<Scalar>::validate() const {
  if (stages.empty()) throw DomainError("lqr", "horizon must be positive");
  const Eigen::Index n = terminal.rows();
  if (terminal.cols() != n || n == 0) throw DomainError("lqr", "terminal weight must be square");
  detail::require_psd(terminal, "terminal weight", false);
  for (const auto& s : stages) {
    const Eigen::Index p = s.b.cols();
    if (s.a.rows() != n || s.a.cols() != n || s.b.rows() != n || s.r.rows() != p || s.r.cols() != p || p == 0) {
      throw DomainError("lqr", "stage matrices have inconsistent dimensions");
    }
    detail::require_psd(s.r, "input weight", true);
    if (s.q.size() != 0) {
      if (s.q.rows() != n || s.q.cols() != n) throw DomainError("lqr", "state weight has the wrong size");
      detail::require_psd(s.q, "state weight", false);
    }
  }
}

// ---------------------------------------------------------------------------
// Pair recursion: transport cost between a particle state x and a target y.

/// Additive noise x+ = A x + B u + w with E[w] = mean and Cov[w] = covariance.
template <class Scalar>
struct Noise {
  Vector<Scalar> mean;
  Matrix<Scalar> covariance;
};

/// c_k(x, y) = x'P_x x + y'P_y y + 2 x'P_xy y + c_x'x + c_y'y + c_w with
/// feedback u = -K_x x - K_y y - k_w. The affine terms vanish without noise.
template <class Scalar>
struct QuadraticCostToGo {
  std::vector<Matrix<Scalar>> px, py, pxy;
  std::vector<Vector<Scalar>> cx, cy;
  std::vector<Scalar> cw;
  std::vector<Matrix<Scalar>> kx, ky;
  std::vector<Vector<Scalar>> kw;
  /// Largest |P - P'| entry of P_x and P_y before symmetrization, per stage k < N.
  std::vector<Scalar> symmetry_drift;
  /// Max-norm of -A'P_x+ B K_y + K_x'(R + B'P_x+ B) K_y, per stage k < N.
  std::vector<Scalar> cross_term_residual;

  std::size_t horizon() const { return kx.size(); }

  Scalar cost(std::size_t k, const Vector<Scalar>& x, const Vector<Scalar>& y) const {
    return x.dot(px[k] * x) + y.dot(py[k] * y) + Scalar(2) * x.dot(pxy[k] * y) + cx[k].dot(x) + cy[k].dot(y) + cw[k];
  }

  Vector<Scalar> input(std::size_t k, const Vector<Scalar>& x, const Vector<Scalar>& y) const {
    return -kx[k] * x - ky[k] * y - kw[k];
  }
};

/// Backward recursion from P_x = P_y = -P_xy = P_N. Stage cost is u'Ru plus
/// (x - y)'Q(x - y) when Q is present; `noise` adds the affine terms.
template <class Scalar>
QuadraticCostToGo<Scalar> pair_recursion(const System<Scalar>& sys, const std::optional<Noise<Scalar>>& noise) {
  sys.validate();
  const std::size_t n_stages = sys.horizon();
  const Eigen::Index n = sys.state_dim();
  if (noise && (noise->mean.size() != n || noise->covariance.rows() != n || noise->covariance.cols() != n)) {
    throw DomainError("lqr", "noise dimensions do not match the state");
  }
  if (noise) detail::require_psd(noise->covariance, "noise covariance", false);

  QuadraticCostToGo<Scalar> out;
  out.px.resize(n_stages + 1);
  out.py.resize(n_stages + 1);
  out.pxy.resize(n_stages + 1);
  out.cx.assign(n_stages + 1, Vector<Scalar>::Zero(n));
  out.cy.assign(n_stages + 1, Vector<Scalar>::Zero(n));
  out.cw.assign(n_stages + 1, Scalar(0));
  out.kx.resize(n_stages);
  out.ky.resize(n_stages);
  out.kw.resize(n_stages);
  out.symmetry_drift.resize(n_stages);
  out.cross_term_residual.resize(n_stages);
  out.px[n_stages] = sys.terminal;
  out.py[n_stages] = sys.terminal;
  out.pxy[n_stages] = -sys.terminal;

  for (std::size_t k = n_stages; k-- > 0;) {
    const auto& s = sys.stages[k];
    const Matrix<Scalar>& px1 = out.px[k + 1];
    const Matrix<Scalar>& py1 = out.py[k + 1];
    const Matrix<Scalar>& pxy1 = out.pxy[k + 1];
    const Matrix<Scalar> inner = s.r + s.b.transpose() * px1 * s.b;
    const Matrix<Scalar> gain = detail::solve_inner<Scalar>(inner, s.b.transpose());  // (R + B'P_x+ B)^-1 B'
    const Matrix<Scalar> kx = gain * px1 * s.a;
    const Matrix<Scalar> ky = gain * pxy1;
    const Matrix<Scalar> q = detail::stage_q(s, n);

    Matrix<Scalar> px = q + s.a.transpose() * px1 * s.a - s.a.transpose() * px1 * s.b * kx;
    Matrix<Scalar> py = q + py1 - (s.b * ky).transpose() * pxy1;
    const Matrix<Scalar> closed = s.a - s.b * kx;
    out.pxy[k] = -q + closed.transpose() * pxy1;
    out.symmetry_drift[k] = std::max(detail::asymmetry(px), detail::asymmetry(py));
    out.px[k] = detail::symmetrized(px);
    out.py[k] = detail::symmetrized(py);
    out.cross_term_residual[k] =
        (-s.a.transpose() * px1 * s.b * ky + kx.transpose() * inner * ky).cwiseAbs().maxCoeff();
    out.kx[k] = kx;
    out.ky[k] = ky;

    if (noise) {
      const Vector<Scalar>& m = noise->mean;
      const Vector<Scalar> shift = px1 * m + out.cx[k + 1] / Scalar(2);
      out.kw[k] = gain * shift;
      out.cx[k] = Scalar(2) * closed.transpose() * shift;
      out.cy[k] = out.cy[k + 1] + Scalar(2) * pxy1.transpose() * m - Scalar(2) * (s.b * ky).transpose() * shift;
      out.cw[k] = out.cw[k + 1] + (px1 * noise->covariance).trace() + m.dot(px1 * m) + out.cx[k + 1].dot(m) -
                  shift.dot(s.b * out.kw[k]);
    } else {
      out.kw[k] = Vector<Scalar>::Zero(s.b.cols());
    }
  }
  return out;
}

template <class Scalar>
QuadraticCostToGo<Scalar> pair_recursion(const System<Scalar>& sys) {
  return pair_recursion(sys, std::optional<Noise<Scalar>>());
}

template <class Scalar>
QuadraticCostToGo<Scalar> pair_recursion(const System<Scalar>& sys, const Noise<Scalar>& noise) {
  return pair_recursion(sys, std::optional<Noise<Scalar>>(noise));
}

// ---------------------------------------------------------------------------
// Riccati recursions.

/// P_k and the feedback u = K_k x of the standard finite-horizon LQR.
template <class Scalar>
struct RiccatiSolution {
  std::vector<Matrix<Scalar>> p;
  std::vector<Matrix<Scalar>> k;
};

namespace detail {

template <class Scalar>
RiccatiSolution<Scalar> riccati(const System<Scalar>& sys, const std::vector<Matrix<Scalar>>& q,
                                const Matrix<Scalar>& terminal) {
  const std::size_t n_stages = sys.horizon();
  RiccatiSolution<Scalar> out;
  out.p.resize(n_stages + 1);
  out.k.resize(n_stages);
  out.p[n_stages] = terminal;
  for (std::size_t k = n_stages; k-- > 0;) {
    const auto& s = sys.stages[k];
    const Matrix<Scalar>& p1 = out.p[k + 1];
    const Matrix<Scalar> inner = s.r + s.b.transpose() * p1 * s.b;
    out.k[k] = -solve_inner<Scalar>(inner, s.b.transpose() * p1 * s.a);
    out.p[k] = symmetrized<Scalar>(q[k] + s.a.transpose() * p1 * s.a + s.a.transpose() * p1 * s.b * out.k[k]);
  }
  return out;
}

}  // namespace detail

/// P_k = Q_k + A'P_{k+1}A - A'P_{k+1}B (R + B'P_{k+1}B)^-1 B'P_{k+1}A,
/// K_k = -(R + B'P_{k+1}B)^-1 B'P_{k+1}A. Missing Q counts as zero.
template <class Scalar>
RiccatiSolution<Scalar> classic(const System<Scalar>& sys) {
  sys.validate();
  std::vector<Matrix<Scalar>> q;
  for (const auto& s : sys.stages) q.push_back(detail::stage_q(s, sys.state_dim()));
  return detail::riccati(sys, q, sys.terminal);
}

/// Weights on the mean (index 1) and on the spread around it (index 2).
template <class Scalar>
struct VarianceWeights {
  std::vector<Matrix<Scalar>> q1, q2;
  Matrix<Scalar> terminal1, terminal2;
};

/// Cost-to-go m'P_1 m + tr(P_2 Sigma): two decoupled Riccati recursions.
/// The feedback is u = K_2 (x - m) + K_1 m and the mean follows (A + B K_1) m.
template <class Scalar>
struct VarianceAwareSolution {
  RiccatiSolution<Scalar> mean;
  RiccatiSolution<Scalar> spread;

  Vector<Scalar> input(std::size_t k, const Vector<Scalar>& x, const Vector<Scalar>& m) const {
    return spread.k[k] * (x - m) + mean.k[k] * m;
  }
};

template <class Scalar>
VarianceAwareSolution<Scalar> variance_aware(const System<Scalar>& sys, const VarianceWeights<Scalar>& w) {
  sys.validate();
  if (w.q1.size() != sys.horizon() || w.q2.size() != sys.horizon()) {
    throw DomainError("lqr", "one mean and one spread weight per stage are required");
  }
  const Eigen::Index n = sys.state_dim();
  auto check = [n](const Matrix<Scalar>& m, const char* name) {
    if (m.rows() != n || m.cols() != n) throw DomainError("lqr", std::string(name) + " has the wrong size");
    detail::require_psd(m, name, false);
  };
  for (std::size_t k = 0; k < sys.horizon(); ++k) {
    check(w.q1[k], "mean weight");
    check(w.q2[k], "spread weight");
  }
  check(w.terminal1, "terminal mean weight");
  check(w.terminal2, "terminal spread weight");
  return {detail::riccati(sys, w.q1, w.terminal1), detail::riccati(sys, w.q2, w.terminal2)};
}

// ---------------------------------------------------------------------------
// Integrator x+ = x + u with input effort and a terminal constraint.

/// |r - x|^2 / (N - k): N - k equal steps of (r - x) / (N - k). Along the
/// optimal path from x_0 this equals ((N - k) / N^2) |r - x_0|^2.
template <class Scalar>
Scalar integrator_cost_to_go(std::size_t horizon, std::size_t k, const Vector<Scalar>& x, const Vector<Scalar>& r) {
  if (horizon == 0 || k >= horizon) throw DomainError("lqr", "stage must satisfy 0 <= k < N");
  if (x.size() != r.size()) throw DomainError("lqr", "state and reference dimensions differ");
  return (r - x).squaredNorm() / static_cast<Scalar>(horizon - k);
}

/// (r - x) / (N - k).
template <class Scalar>
Vector<Scalar> integrator_feedback(std::size_t horizon, std::size_t k, const Vector<Scalar>& x, const Vector<Scalar>& r) {
  if (horizon == 0 || k >= horizon) throw DomainError("lqr", "stage must satisfy 0 <= k < N");
  if (x.size() != r.size()) throw DomainError("lqr", "state and reference dimensions differ");
  return (r - x) / static_cast<Scalar>(horizon - k);
}

}  // namespace otdp::lqr

#endif  // OTDP_LQR_HPP_
