#ifndef OTDP_RANDOM_INSTANCES_HPP_
#define OTDP_RANDOM_INSTANCES_HPP_

#include <cstddef>
#include <random>
#include <vector>

#include "otdp/ground_dp.hpp"
#include "otdp/lifting.hpp"

namespace otdp {

using Rng = std::mt19937_64;

struct RandomFleetSpec {
  std::size_t max_states = 3;
  std::size_t max_inputs = 2;
  std::size_t max_refs = 3;
  std::size_t max_horizon = 3;
  std::size_t max_particles = 4;
  /// Probability that a cost entry is +inf.
  double inf_rate = 0.1;
  /// Probability that stage costs ignore the reference.
  double reference_free_rate = 0.25;
  /// Probability that rho_0 = ... = rho_N.
  double constant_reference_rate = 0.5;
};

/// Finite system with a uniform empirical fleet and uniform empirical
/// references of the same size, all spaces time-invariant.
struct FleetInstance {
  GroundSystem system;
  std::vector<std::size_t> particles;
  FleetProblem problem;
  bool constant_reference = false;
};

FleetInstance random_fleet_instance(Rng& rng, const RandomFleetSpec& spec = {});

/// Uniform empirical weights of the given indices over n slots.
Eigen::VectorXd empirical_weights(const std::vector<std::size_t>& points, std::size_t n);

}  // namespace otdp

#endif  // OTDP_RANDOM_INSTANCES_HPP_
