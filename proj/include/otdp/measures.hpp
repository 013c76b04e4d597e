#ifndef OTDP_MEASURES_HPP_
#define OTDP_MEASURES_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "otdp/error.hpp"
#include "otdp/ext_real.hpp"

namespace otdp {

/// Weights below this are dropped after every operation (and the rest renormalized).
inline constexpr double kPruneWeight = 1e-15;
/// Euclidean points closer than this componentwise are the same atom.
inline constexpr double kPointTolerance = 1e-12;
/// Mass defect accepted from internal computations (LP output, pushforwards).
inline constexpr double kInternalMassTolerance = 1e-9;
/// Mass defect accepted for user-provided measures.
inline constexpr double kInputMassTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Point ordering. Every point type used in a DiscreteMeasure needs a
// PointOrder specialization with a strict weak `less` and a matching `equal`.
// ---------------------------------------------------------------------------

template <class P, class Enable = void>
struct PointOrder;

template <class P>
struct PointOrder<P, std::enable_if_t<std::is_integral_v<P>>> {
  static bool less(P a, P b) { return a < b; }
  static bool equal(P a, P b) { return a == b; }
};

template <>
struct PointOrder<double> {
  static bool less(double a, double b) { return a < b - kPointTolerance; }
  static bool equal(double a, double b) { return std::abs(a - b) <= kPointTolerance; }
};

template <>
struct PointOrder<std::string> {
  static bool less(const std::string& a, const std::string& b) { return a < b; }
  static bool equal(const std::string& a, const std::string& b) { return a == b; }
};

template <>
struct PointOrder<Eigen::VectorXd> {
  static bool less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index n = std::min(a.size(), b.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(a[i] - b[i]) <= kPointTolerance) continue;
      return a[i] < b[i];
    }
    return a.size() < b.size();
  }
  static bool equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    return ((a - b).array().abs() <= kPointTolerance).all();
  }
};

template <class T>
struct PointOrder<std::vector<T>> {
  static bool less(const std::vector<T>& a, const std::vector<T>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (PointOrder<T>::less(a[i], b[i])) return true;
      if (PointOrder<T>::less(b[i], a[i])) return false;
    }
    return a.size() < b.size();
  }
  static bool equal(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!PointOrder<T>::equal(a[i], b[i])) return false;
    }
    return true;
  }
};

template <class A, class B>
struct PointOrder<std::pair<A, B>> {
  static bool less(const std::pair<A, B>& a, const std::pair<A, B>& b) {
    if (PointOrder<A>::less(a.first, b.first)) return true;
    if (PointOrder<A>::less(b.first, a.first)) return false;
    return PointOrder<B>::less(a.second, b.second);
  }
  static bool equal(const std::pair<A, B>& a, const std::pair<A, B>& b) {
    return PointOrder<A>::equal(a.first, b.first) && PointOrder<B>::equal(a.second, b.second);
  }
};

// ---------------------------------------------------------------------------

/// Finitely supported probability measure.
///
/// Atoms are kept sorted by point (PointOrder), duplicates merged, weights
/// below kPruneWeight removed and the total renormalized to one. Immutable
/// after construction.
template <class P>
class DiscreteMeasure {
 public:
  struct Atom {
    P point;
    double weight;
  };

  DiscreteMeasure() = default;

  /// Canonicalizes `atoms`. Throws DomainError for negative weights or when
  /// the total deviates from one by more than `tolerance`.
  static DiscreteMeasure from_atoms(std::vector<Atom> atoms,
                                    double tolerance = kInternalMassTolerance) {
    double total = 0.0;
    for (auto& a : atoms) {
      if (!(a.weight >= -tolerance)) throw DomainError("measures", "negative atom weight");
      a.weight = std::max(a.weight, 0.0);
      total += a.weight;
    }
    if (std::abs(total - 1.0) > tolerance) {
      throw DomainError("measures", "weights sum to " + std::to_string(total) + ", expected 1");
    }
    std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
      return PointOrder<P>::less(a.point, b.point);
    });
    DiscreteMeasure m;
    for (auto& a : atoms) {
      if (!m.atoms_.empty() && PointOrder<P>::equal(m.atoms_.back().point, a.point)) {
        m.atoms_.back().weight += a.weight;
      } else {
        m.atoms_.push_back(std::move(a));
      }
    }
    std::erase_if(m.atoms_, [](const Atom& a) { return a.weight < kPruneWeight; });
    double kept = 0.0;
    for (const auto& a : m.atoms_) kept += a.weight;
    if (kept <= 0.0) throw DomainError("measures", "measure has no mass");
    for (auto& a : m.atoms_) a.weight /= kept;
    return m;
  }

  static DiscreteMeasure dirac(P point) { return from_atoms({Atom{std::move(point), 1.0}}); }

  /// Empirical measure (1/M) sum delta_{p_i}; repeated points merge.
  static DiscreteMeasure empirical(const std::vector<P>& points) {
    if (points.empty()) throw DomainError("measures", "empirical measure of no points");
    std::vector<Atom> atoms;
    atoms.reserve(points.size());
    const double w = 1.0 / static_cast<double>(points.size());
    for (const auto& p : points) atoms.push_back(Atom{p, w});
    return from_atoms(std::move(atoms));
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const P& point(std::size_t i) const { return atoms_[i].point; }
  double weight(std::size_t i) const { return atoms_[i].weight; }

  std::optional<std::size_t> find(const P& p) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), p, [](const Atom& a, const P& q) {
      return PointOrder<P>::less(a.point, q);
    });
    if (it != atoms_.end() && PointOrder<P>::equal(it->point, p)) {
      return static_cast<std::size_t>(it - atoms_.begin());
    }
    return std::nullopt;
  }

  double weight_of(const P& p) const {
    auto i = find(p);
    return i ? atoms_[*i].weight : 0.0;
  }

  Eigen::VectorXd weights() const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(atoms_.size()));
    for (std::size_t i = 0; i < atoms_.size(); ++i) w[static_cast<Eigen::Index>(i)] = atoms_[i].weight;
    return w;
  }

  std::vector<P> support() const {
    std::vector<P> s;
    s.reserve(atoms_.size());
    for (const auto& a : atoms_) s.push_back(a.point);
    return s;
  }

 private:
  std::vector<Atom> atoms_;
};

namespace detail {
template <class T>
struct is_optional : std::false_type {};
template <class T>
struct is_optional<std::optional<T>> : std::true_type {};
}  // namespace detail

/// Image measure map#m. `map` returns either a point or std::optional of one;
/// an empty optional means the map is undefined there (DomainError).
template <class P, class F>
auto pushforward(const DiscreteMeasure<P>& m, F&& map) {
  using R = std::decay_t<std::invoke_result_t<F&, const P&>>;
  if constexpr (detail::is_optional<R>::value) {
    using Q = typename R::value_type;
    std::vector<typename DiscreteMeasure<Q>::Atom> out;
    out.reserve(m.size());
    for (const auto& a : m.atoms()) {
      auto image = map(a.point);
      if (!image) throw DomainError("measures", "pushforward map undefined on an atom");
      out.push_back({std::move(*image), a.weight});
    }
    return DiscreteMeasure<Q>::from_atoms(std::move(out));
  } else {
    std::vector<typename DiscreteMeasure<R>::Atom> out;
    out.reserve(m.size());
    for (const auto& a : m.atoms()) out.push_back({map(a.point), a.weight});
    return DiscreteMeasure<R>::from_atoms(std::move(out));
  }
}

/// Projection of a measure on k-tuples onto one coordinate.
template <class P>
DiscreteMeasure<P> marginal(const DiscreteMeasure<std::vector<P>>& joint, std::size_t axis) {
  for (const auto& a : joint.atoms()) {
    if (axis >= a.point.size()) throw DomainError("measures", "marginal axis out of range");
  }
  return pushforward(joint, [axis](const std::vector<P>& t) { return t[axis]; });
}

/// Product measure over tuples (p_0, ..., p_{k-1}).
template <class P>
DiscreteMeasure<std::vector<P>> product(std::span<const DiscreteMeasure<P>> factors) {
  if (factors.empty()) throw DomainError("measures", "product of no measures");
  std::vector<typename DiscreteMeasure<std::vector<P>>::Atom> atoms{{{}, 1.0}};
  for (const auto& f : factors) {
    std::vector<typename DiscreteMeasure<std::vector<P>>::Atom> next;
    next.reserve(atoms.size() * f.size());
    for (const auto& partial : atoms) {
      for (const auto& a : f.atoms()) {
        auto tuple = partial.point;
        tuple.push_back(a.point);
        next.push_back({std::move(tuple), partial.weight * a.weight});
      }
    }
    atoms = std::move(next);
  }
  return DiscreteMeasure<std::vector<P>>::from_atoms(std::move(atoms));
}

/// E_m[v]; +inf as soon as a positive-weight atom has infinite value.
template <class P, class F>
ExtReal expected_value(const DiscreteMeasure<P>& m, F&& v) {
  ExtReal total = 0.0;
  for (const auto& a : m.atoms()) total += scale(a.weight, ExtReal(v(a.point)));
  return total;
}

/// Largest per-atom weight difference over the union of supports.
template <class P>
double max_weight_difference(const DiscreteMeasure<P>& a, const DiscreteMeasure<P>& b) {
  double worst = 0.0;
  for (const auto& atom : a.atoms()) worst = std::max(worst, std::abs(atom.weight - b.weight_of(atom.point)));
  for (const auto& atom : b.atoms()) worst = std::max(worst, std::abs(atom.weight - a.weight_of(atom.point)));
  return worst;
}

template <class P>
bool approx_equal(const DiscreteMeasure<P>& a, const DiscreteMeasure<P>& b, double tol = 1e-12) {
  return max_weight_difference(a, b) <= tol;
}

}  // namespace otdp

#endif  // OTDP_MEASURES_HPP_
