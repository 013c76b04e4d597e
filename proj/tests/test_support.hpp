#ifndef OTDP_TESTS_TEST_SUPPORT_HPP_
#define OTDP_TESTS_TEST_SUPPORT_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace otdp::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Strictly positive weights summing to one.
inline Eigen::VectorXd random_weights(Rng& rng, std::size_t n) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = uniform(rng, 0.05, 1.0);
  return w / w.sum();
}

/// Weights k_i / m with positive integers k_i summing to m.
inline Eigen::VectorXd random_empirical_weights(Rng& rng, std::size_t n, std::size_t m) {
  std::vector<std::size_t> counts(n, 1);
  for (std::size_t extra = n; extra < m; ++extra) ++counts[pick(rng, 0, n - 1)];
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) w[static_cast<Eigen::Index>(i)] = static_cast<double>(counts[i]) / static_cast<double>(m);
  return w;
}

}  // namespace otdp::testing

#endif  // OTDP_TESTS_TEST_SUPPORT_HPP_
