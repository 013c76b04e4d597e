#include "otdp/random_instances.hpp"

namespace otdp {
namespace {

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool chance(Rng& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

ExtReal random_cost(Rng& rng, double inf_rate) {
  if (chance(rng, inf_rate)) return ExtReal::infinity();
  return static_cast<double>(pick(rng, 0, 4));
}

Labels numbered(const char* prefix, std::size_t n) {
  Labels out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

Eigen::VectorXd empirical_weights(const std::vector<std::size_t>& points, std::size_t n) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t p : points) w[static_cast<Eigen::Index>(p)] += 1.0;
  return w / static_cast<double>(points.size());
}

FleetInstance random_fleet_instance(Rng& rng, const RandomFleetSpec& spec) {
  const std::size_t nx = pick(rng, 1, spec.max_states), nu = pick(rng, 1, spec.max_inputs);
  const std::size_t ny = pick(rng, 1, spec.max_refs), horizon = pick(rng, 1, spec.max_horizon);
  const bool reference_free = chance(rng, spec.reference_free_rate);

  std::vector<std::size_t> next(horizon * nx * nu);
  for (auto& v : next) v = pick(rng, 0, nx - 1);
  std::vector<ExtReal> stage(horizon * nx * nu * ny), terminal(nx * ny);
  for (std::size_t i = 0; i < horizon * nx * nu; ++i) {
    const ExtReal shared = random_cost(rng, spec.inf_rate);
    for (std::size_t r = 0; r < ny; ++r) stage[i * ny + r] = reference_free ? shared : random_cost(rng, spec.inf_rate);
  }
  for (auto& t : terminal) t = random_cost(rng, spec.inf_rate);
  GroundSystem sys = GroundSystem::time_invariant(
      horizon, numbered("x", nx), numbered("u", nu), numbered("y", ny),
      [&](std::size_t k, std::size_t x, std::size_t u) { return next[(k * nx + x) * nu + u]; },
      [&](std::size_t k, std::size_t x, std::size_t u, std::size_t r) { return stage[((k * nx + x) * nu + u) * ny + r]; },
      [&](std::size_t x, std::size_t r) { return terminal[x * ny + r]; });

  const std::size_t m = pick(rng, 1, spec.max_particles);
  auto sample = [&](std::size_t n) {
    std::vector<std::size_t> points(m);
    for (auto& p : points) p = pick(rng, 0, n - 1);
    return points;
  };
  FleetInstance out{std::move(sys), sample(nx), {}, chance(rng, spec.constant_reference_rate)};
  out.problem.mu0 = empirical_weights(out.particles, nx);
  const Eigen::VectorXd constant = empirical_weights(sample(ny), ny);
  for (std::size_t k = 0; k <= horizon; ++k) {
    out.problem.refs.push_back(out.constant_reference ? constant : empirical_weights(sample(ny), ny));
  }
  return out;
}

}  // namespace otdp
