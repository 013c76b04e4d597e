#ifndef OTDP_SCENARIO_HPP_
#define OTDP_SCENARIO_HPP_

#include <Eigen/Core>
#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "otdp/ground_dp.hpp"
#include "otdp/lifting.hpp"
#include "otdp/lqr.hpp"
#include "otdp/measures.hpp"

namespace otdp {

using LabeledMeasure = DiscreteMeasure<std::string>;

enum class LiftMode { multi, two, both };
enum class RolloutKind { feedback, openloop };

struct SolverOptions {
  LiftMode mode = LiftMode::multi;
  RolloutKind rollout = RolloutKind::feedback;
  std::size_t memory_cap = kDefaultMemoryCap;
  /// Fleet size for open-loop rollouts of split plans and for the oracle.
  std::optional<std::size_t> particles;
  /// Also solve the fleet by brute force (finite scenarios within the oracle caps).
  bool oracle = false;
  /// Chunks per atom in the noisy measure-space search.
  std::size_t noise_splits = 2;
  /// Seed for sampled particle sets.
  std::uint64_t seed = 0;
};

struct FiniteScenario {
  GroundSystem system;
  LabeledMeasure initial;
  /// rho_0..rho_N, or rho_N alone (then used at every stage, matched by label).
  std::vector<LabeledMeasure> references;
};

struct NoisyScenario {
  NoisyGroundSystem system;
  LabeledMeasure initial;
  std::vector<LabeledMeasure> references;
};

/// Particles listed explicitly or drawn uniformly from [low, high]^d.
struct ParticleSource {
  struct Sample {
    std::size_t count = 0;
    double low = 0.0;
    double high = 1.0;
  };
  Particles points;
  std::optional<Sample> sample;
};

struct IntegratorScenario {
  std::size_t horizon = 1;
  std::size_t dimension = 1;
  ParticleSource initial;
  ParticleSource target;
};

struct LqrScenario {
  lqr::System<double> system;
  ParticleSource initial;
  ParticleSource target;
};

using ScenarioPayload = std::variant<FiniteScenario, NoisyScenario, IntegratorScenario, LqrScenario>;

struct Scenario {
  std::string name;
  std::string description;
  ScenarioPayload payload;
  SolverOptions options;

  std::string kind() const;
};

/// Throws ValidationError (JSON pointer + message) on any schema or consistency violation.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const Scenario& s);
/// Canonical text: two-space indentation, sorted keys, trailing newline.
std::string canonical_text(const Scenario& s);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

/// Hex SHA-256 of the canonical text.
std::string scenario_hash(const Scenario& s);

/// Weight vectors rho_0..rho_N over the reference labels of each stage.
std::vector<Eigen::VectorXd> reference_weights(const GroundSystem& sys, const std::vector<LabeledMeasure>& refs);
std::vector<Eigen::VectorXd> reference_weights(const NoisyGroundSystem& sys, const std::vector<LabeledMeasure>& refs);

/// Weights of a labeled measure over `labels`; throws DomainError for unknown labels.
Eigen::VectorXd weights_over(const LabeledMeasure& m, const Labels& labels);

/// Explicit points, or `count` uniform samples drawn from `rng`.
Particles realize(const ParticleSource& source, std::size_t dimension, std::mt19937_64& rng);

}  // namespace otdp

#endif  // OTDP_SCENARIO_HPP_
