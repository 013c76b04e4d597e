#ifndef OTDP_TESTS_SYSTEMS_HPP_
#define OTDP_TESTS_SYSTEMS_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "otdp/ground_dp.hpp"
#include "test_support.hpp"

// Small systems over integer-valued spaces built independently of the
// scenario loader.
namespace otdp::testing {

inline Labels int_labels(const std::vector<int>& values) {
  Labels out;
  for (int v : values) out.push_back(std::to_string(v));
  return out;
}

inline std::size_t position(const std::vector<int>& values, int v) {
  return static_cast<std::size_t>(std::find(values.begin(), values.end(), v) - values.begin());
}

inline double square(double v) { return v * v; }

// a >= b - tol, with +inf dominating everything.
inline bool at_least(ExtReal a, ExtReal b, double tol) {
  if (a.is_infinite()) return true;
  return b.is_finite() && a.value() >= b.value() - tol;
}

// X = Y = {-1, 0, 1}, U = {-1, 0}, f = x u, stage and terminal cost (x - r)^2, N = 2.
inline const std::vector<int> kSigns{-1, 0, 1};
inline const std::vector<int> kSwitchInputs{-1, 0};

inline GroundSystem two_marginals_not_enough() {
  return GroundSystem::time_invariant(
      2, int_labels(kSigns), int_labels(kSwitchInputs), int_labels(kSigns),
      [](std::size_t, std::size_t x, std::size_t u) { return position(kSigns, kSigns[x] * kSwitchInputs[u]); },
      [](std::size_t, std::size_t x, std::size_t, std::size_t r) { return ExtReal(square(kSigns[x] - kSigns[r])); },
      [](std::size_t x, std::size_t r) { return ExtReal(square(kSigns[x] - kSigns[r])); });
}

// N = 1, X = U = Y = {-1, 0, 1}, f = u, zero stage cost, terminal (x - r)^2.
inline GroundSystem split_mass_system() {
  return GroundSystem::time_invariant(
      1, int_labels(kSigns), int_labels(kSigns), int_labels(kSigns),
      [](std::size_t, std::size_t, std::size_t u) { return u; },
      [](std::size_t, std::size_t, std::size_t, std::size_t) { return ExtReal(0.0); },
      [](std::size_t x, std::size_t r) { return ExtReal(square(kSigns[x] - kSigns[r])); });
}

// X = Y = U = {-2, -1, 1, 2}, W = {1, 2} uniform, N = 2. Negative states jump
// to the noise value, positive states move to the input; u = -x from a positive
// state costs 2; terminal cost pins x = r.
inline const std::vector<int> kNoiseStates{-2, -1, 1, 2};

inline NoisyGroundSystem noise_counterexample() {
  const std::size_t n = kNoiseStates.size();
  std::vector<NoisyGroundSystem::Stage> stages;
  for (int k = 0; k < 2; ++k) {
    NoisyGroundSystem::Stage st{{"1", "2"}, Eigen::Vector2d(0.5, 0.5), {}, {}};
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t u = 0; u < n; ++u) {
        for (int w : {1, 2}) {
          const int xv = kNoiseStates[x], uv = kNoiseStates[u];
          st.next.push_back(position(kNoiseStates, xv < 0 ? w : uv));
          const double g = (xv > 0 && uv == -xv) ? 2.0 : 0.0;
          for (std::size_t r = 0; r < n; ++r) st.cost.push_back(g);
        }
      }
    }
    stages.push_back(std::move(st));
  }
  std::vector<ExtReal> terminal;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t r = 0; r < n; ++r) terminal.push_back(x == r ? ExtReal(0.0) : ExtReal::infinity());
  }
  const Labels labels = int_labels(kNoiseStates);
  return NoisyGroundSystem(std::vector<Labels>(3, labels), std::vector<Labels>(2, labels), std::vector<Labels>(3, labels),
                           std::move(stages), std::move(terminal));
}


struct RandomSystemSpec {
  std::size_t max_states = 3;
  std::size_t max_inputs = 2;
  std::size_t max_refs = 3;
  std::size_t max_horizon = 3;
  bool reference_dependent = true;
  double inf_rate = 0.1;
};

inline ExtReal random_cost_entry(Rng& rng, double inf_rate) {
  if (uniform(rng, 0.0, 1.0) < inf_rate) return ExtReal::infinity();
  return ExtReal(static_cast<double>(pick(rng, 0, 4)));
}

inline GroundSystem random_system(Rng& rng, const RandomSystemSpec& spec = {}) {
  const std::size_t nx = pick(rng, 1, spec.max_states), nu = pick(rng, 1, spec.max_inputs);
  const std::size_t ny = pick(rng, 1, spec.max_refs), horizon = pick(rng, 1, spec.max_horizon);
  std::vector<std::size_t> next(horizon * nx * nu);
  for (auto& v : next) v = pick(rng, 0, nx - 1);
  std::vector<ExtReal> stage(horizon * nx * nu * ny), terminal(nx * ny);
  for (std::size_t i = 0; i < horizon * nx * nu; ++i) {
    const ExtReal base = random_cost_entry(rng, spec.inf_rate);
    for (std::size_t r = 0; r < ny; ++r) stage[i * ny + r] = spec.reference_dependent ? random_cost_entry(rng, spec.inf_rate) : base;
  }
  for (auto& t : terminal) t = random_cost_entry(rng, spec.inf_rate);
  Labels xs, us, ys;
  for (std::size_t i = 0; i < nx; ++i) xs.push_back("x" + std::to_string(i));
  for (std::size_t i = 0; i < nu; ++i) us.push_back("u" + std::to_string(i));
  for (std::size_t i = 0; i < ny; ++i) ys.push_back("y" + std::to_string(i));
  return GroundSystem::time_invariant(
      horizon, xs, us, ys,
      [&](std::size_t k, std::size_t x, std::size_t u) { return next[(k * nx + x) * nu + u]; },
      [&](std::size_t k, std::size_t x, std::size_t u, std::size_t r) { return stage[((k * nx + x) * nu + u) * ny + r]; },
      [&](std::size_t x, std::size_t r) { return terminal[x * ny + r]; });
}

}  // namespace otdp::testing

#endif  // OTDP_TESTS_SYSTEMS_HPP_
