#ifndef OTDP_EXT_REAL_HPP_
#define OTDP_EXT_REAL_HPP_

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>
#include <string>

#include "otdp/error.hpp"

namespace otdp {

/// Extended real number on (-inf, +inf]: a finite double or the tagged value +inf.
///
/// Addition saturates (inf + a = inf) and scaling by a nonnegative weight follows
/// the measure-theoretic convention 0 * inf = 0. Infinity is a tag, never a large
/// sentinel float, so hard constraints cannot leak rounding into finite values.
class ExtReal {
 public:
  constexpr ExtReal() = default;

  // Implicit on purpose: finite costs are written as plain doubles throughout.
  ExtReal(double value) {  // NOLINT(google-explicit-constructor)
    if (std::isnan(value)) throw DomainError("ext_real", "NaN is not an extended real");
    if (value == -std::numeric_limits<double>::infinity()) {
      throw DomainError("ext_real", "-inf is not representable");
    }
    if (std::isinf(value)) {
      infinite_ = true;
    } else {
      value_ = value;
    }
  }

  static constexpr ExtReal infinity() {
    ExtReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }

  /// Finite value; throws for +inf.
  double value() const {
    if (infinite_) throw DomainError("ext_real", "value() on +inf");
    return value_;
  }

  /// IEEE view (+inf maps to the IEEE infinity). For printing and plotting only.
  constexpr double to_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend constexpr ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    ExtReal r;
    r.value_ = a.value_ + b.value_;
    return r;
  }
  ExtReal& operator+=(ExtReal other) { return *this = *this + other; }

  /// weight * x with weight >= 0 and 0 * inf = 0.
  friend ExtReal scale(double weight, ExtReal x) {
    if (weight < 0.0) throw DomainError("ext_real", "negative scaling weight");
    if (x.infinite_) return weight > 0.0 ? infinity() : ExtReal(0.0);
    return ExtReal(weight * x.value_);
  }

  friend constexpr bool operator==(ExtReal a, ExtReal b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }
  friend constexpr std::partial_ordering operator<=>(ExtReal a, ExtReal b) {
    if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
    if (a.infinite_) return std::partial_ordering::greater;
    if (b.infinite_) return std::partial_ordering::less;
    return a.value_ <=> b.value_;
  }

  /// "+inf" or the shortest round-trip decimal.
  std::string to_string() const;

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

inline std::ostream& operator<<(std::ostream& os, ExtReal x) { return os << x.to_string(); }

/// |a - b| <= tol, with +inf equal only to +inf.
inline bool near(ExtReal a, ExtReal b, double tol) {
  if (a.is_infinite() || b.is_infinite()) return a.is_infinite() && b.is_infinite();
  return std::abs(a.value() - b.value()) <= tol;
}

inline ExtReal min(ExtReal a, ExtReal b) { return b < a ? b : a; }

}  // namespace otdp

#endif  // OTDP_EXT_REAL_HPP_
