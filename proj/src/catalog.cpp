#include "otdp/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>

#include "otdp/error.hpp"

#ifndef OTDP_SCENARIO_DIR
#define OTDP_SCENARIO_DIR "scenarios"
#endif

namespace otdp {
namespace {

Labels int_labels(const std::vector<int>& values) {
  Labels out;
  for (int v : values) out.push_back(std::to_string(v));
  return out;
}

std::size_t position(const std::vector<int>& values, int v) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == v) return i;
  }
  throw DomainError("catalog", "value outside the space");
}

LabeledMeasure labeled(std::vector<LabeledMeasure::Atom> atoms) {
  return LabeledMeasure::from_atoms(std::move(atoms), kInputMassTolerance);
}

const std::vector<int> kSigns{-1, 0, 1};

// Three cells; u = 0 sends a robot to the origin, u = -1 swaps its side.
Scenario robots_in_grid() {
  const std::vector<int> inputs{0, -1};
  const double effort = 0.1;
  auto sys = GroundSystem::time_invariant(
      2, int_labels(kSigns), int_labels(inputs), int_labels(kSigns),
      [&](std::size_t, std::size_t x, std::size_t u) { return position(kSigns, kSigns[x] * inputs[u]); },
      [&](std::size_t, std::size_t, std::size_t u, std::size_t) { return ExtReal(effort * std::abs(inputs[u])); },
      [](std::size_t x, std::size_t r) { return ExtReal(std::abs(kSigns[x] - kSigns[r])); });
  Scenario s{"robots_in_grid",
             "Robots on three cells steered to half at -1 and half at +1; terminal cost |x - r|, input effort 0.1 |u|.",
             FiniteScenario{std::move(sys), labeled({{"-1", 0.5}, {"0", 0.5}}), {labeled({{"-1", 0.5}, {"1", 0.5}})}},
             {}};
  s.options.mode = LiftMode::both;
  s.options.particles = 2;
  s.options.oracle = true;
  return s;
}

Scenario integrator_fleet() {
  IntegratorScenario p;
  p.horizon = 4;
  p.dimension = 2;
  p.initial.sample = ParticleSource::Sample{6, -3.0, 3.0};
  p.target.sample = ParticleSource::Sample{6, -3.0, 3.0};
  Scenario s{"integrator_fleet",
             "Integrator particles x+ = x + u in the plane, input effort |u|^2, terminal constraint on the target cloud.",
             std::move(p),
             {}};
  s.options.seed = 7;
  return s;
}

// One stage, f = u; the Dirac at 0 must split onto -1 and +1.
Scenario split_mass() {
  auto sys = GroundSystem::time_invariant(
      1, int_labels(kSigns), int_labels(kSigns), int_labels(kSigns),
      [](std::size_t, std::size_t, std::size_t u) { return u; },
      [](std::size_t, std::size_t, std::size_t, std::size_t) { return ExtReal(0.0); },
      [](std::size_t x, std::size_t r) { return ExtReal(std::pow(kSigns[x] - kSigns[r], 2)); });
  Scenario s{"split_mass", "All particles start at 0 and must end half at -1 and half at +1.",
             FiniteScenario{std::move(sys), labeled({{"0", 1.0}}), {labeled({{"-1", 0.5}, {"1", 0.5}})}}, {}};
  s.options.particles = 2;
  s.options.oracle = true;
  return s;
}

// f = x u with u in {-1, 0}; squared distance to the reference at every stage.
Scenario counterexample_multimarginal() {
  const std::vector<int> inputs{-1, 0};
  auto sys = GroundSystem::time_invariant(
      2, int_labels(kSigns), int_labels(inputs), int_labels(kSigns),
      [&](std::size_t, std::size_t x, std::size_t u) { return position(kSigns, kSigns[x] * inputs[u]); },
      [](std::size_t, std::size_t x, std::size_t, std::size_t r) { return ExtReal(std::pow(kSigns[x] - kSigns[r], 2)); },
      [](std::size_t x, std::size_t r) { return ExtReal(std::pow(kSigns[x] - kSigns[r], 2)); });
  const auto rho = labeled({{"-1", 0.5}, {"1", 0.5}});
  Scenario s{"counterexample_multimarginal",
             "Reference-dependent stage costs: swapping sides every stage is free for the fleet, but a frozen "
             "two-marginal lift pays 2.",
             FiniteScenario{std::move(sys), rho, {rho, rho, rho}},
             {}};
  s.options.mode = LiftMode::both;
  s.options.particles = 2;
  s.options.oracle = true;
  return s;
}

// Negative states jump to the noise value; positive states move to the input.
Scenario noise_counterexample() {
  const std::vector<int> states{-2, -1, 1, 2};
  const std::size_t n = states.size();
  std::vector<NoisyGroundSystem::Stage> stages;
  for (int k = 0; k < 2; ++k) {
    NoisyGroundSystem::Stage st{{"1", "2"}, Eigen::Vector2d(0.5, 0.5), {}, {}};
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t u = 0; u < n; ++u) {
        for (int w : {1, 2}) {
          st.next.push_back(position(states, states[x] < 0 ? w : states[u]));
          const double g = (states[x] > 0 && states[u] == -states[x]) ? 2.0 : 0.0;
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
  const Labels labels = int_labels(states);
  NoisyGroundSystem sys(std::vector<Labels>(3, labels), std::vector<Labels>(2, labels), std::vector<Labels>(3, labels),
                        std::move(stages), std::move(terminal));
  const auto half = labeled({{"-2", 0.5}, {"-1", 0.5}});
  return Scenario{"noise_counterexample",
                  "Noise scatters the fleet; the lifted stochastic cost-to-go pays 1 where the fleet can pay 0.",
                  NoisyScenario{std::move(sys), half, {half}},
                  {}};
}

// Periodic W x H grid; trees cost 100, moves 1, hovering 0. Leaving column 0
// to the left is forbidden; the terminal cost is 1000 times the Manhattan
// distance to the assigned flag.
Scenario forest_ride() {
  const int width = 6, height = 4;
  const std::size_t horizon = 7;
  const std::vector<std::pair<int, int>> trees{{2, 1}, {3, 3}, {2, 3}, {4, 0}};
  const std::vector<std::string> moves{"LEFT", "RIGHT", "UP", "DOWN", "HOVER"};
  const std::vector<std::pair<int, int>> delta{{width - 1, 0}, {1, 0}, {0, 1}, {0, height - 1}, {0, 0}};
  Labels cells;
  for (int c = 0; c < width; ++c) {
    for (int r = 0; r < height; ++r) cells.push_back(std::to_string(c) + "," + std::to_string(r));
  }
  auto col = [&](std::size_t i) { return static_cast<int>(i) / height; };
  auto row = [&](std::size_t i) { return static_cast<int>(i) % height; };
  auto cell = [&](int c, int r) { return static_cast<std::size_t>(c * height + r); };
  auto is_tree = [&](std::size_t i) {
    return std::find(trees.begin(), trees.end(), std::make_pair(col(i), row(i))) != trees.end();
  };
  auto next = [&](std::size_t x, std::size_t u) {
    return cell((col(x) + delta[u].first) % width, (row(x) + delta[u].second) % height);
  };
  auto sys = GroundSystem::time_invariant(
      horizon, cells, moves, cells, [&](std::size_t, std::size_t x, std::size_t u) { return next(x, u); },
      [&](std::size_t, std::size_t x, std::size_t u, std::size_t) {
        if (moves[u] == "LEFT" && col(x) == 0) return ExtReal::infinity();
        if (is_tree(next(x, u))) return ExtReal(100.0);
        return ExtReal(moves[u] == "HOVER" ? 0.0 : 1.0);
      },
      [&](std::size_t x, std::size_t r) {
        return ExtReal(1000.0 * (std::abs(col(x) - col(r)) + std::abs(row(x) - row(r))));
      });
  std::vector<LabeledMeasure::Atom> start, flags;
  for (int r = 0; r < height; ++r) {
    start.push_back({cells[cell(0, r)], 0.25});
    flags.push_back({cells[cell(width - 1, (r + 1) % height)], 0.25});
  }
  Scenario s{"forest_ride",
             "Quadcopters cross a periodic 6 x 4 forest from column 0 to the flags in column 5 in 7 steps.",
             FiniteScenario{std::move(sys), labeled(start), {labeled(flags)}},
             {}};
  s.options.mode = LiftMode::two;
  s.options.rollout = RolloutKind::openloop;
  s.options.particles = 4;
  return s;
}

Scenario zero_cost() {
  const Labels xs{"a", "b", "c"};
  auto sys = GroundSystem::time_invariant(
      2, xs, {"stay", "next"}, xs, [](std::size_t, std::size_t x, std::size_t u) { return u == 0 ? x : (x + 1) % 3; },
      [](std::size_t, std::size_t, std::size_t, std::size_t) { return ExtReal(0.0); },
      [](std::size_t, std::size_t) { return ExtReal(0.0); });
  const auto uniform = labeled({{"a", 0.5}, {"b", 0.25}, {"c", 0.25}});
  Scenario s{"zero_cost", "Every cost is zero, so every value is zero.",
             FiniteScenario{std::move(sys), uniform, {labeled({{"c", 1.0}})}}, {}};
  s.options.mode = LiftMode::both;
  return s;
}

Scenario lqr_pair() {
  Eigen::MatrixXd a(2, 2), b(2, 1), r(1, 1), q(2, 2), terminal(2, 2);
  a << 1.0, 0.1, 0.0, 1.0;
  b << 0.005, 0.1;
  r << 0.1;
  q << 0.1, 0.0, 0.0, 0.1;
  terminal << 10.0, 0.0, 0.0, 10.0;
  LqrScenario p{lqr::System<double>::time_invariant(10, a, b, r, terminal, q), {}, {}};
  p.initial.points = {Eigen::Vector2d(-1.0, 0.0), Eigen::Vector2d(0.0, 0.5), Eigen::Vector2d(1.0, 0.0),
                      Eigen::Vector2d(0.5, -0.5)};
  p.target.points = {Eigen::Vector2d(2.0, 0.0), Eigen::Vector2d(2.0, 1.0), Eigen::Vector2d(3.0, 0.0),
                     Eigen::Vector2d(3.0, 1.0)};
  return Scenario{"lqr_pair",
                  "Double integrators (position, velocity) assigned to four targets through the quadratic pair cost.",
                  std::move(p),
                  {}};
}

const std::map<std::string, std::function<Scenario()>>& builders() {
  static const std::map<std::string, std::function<Scenario()>> table{
      {"counterexample_multimarginal", counterexample_multimarginal},
      {"integrator_fleet", integrator_fleet},
      {"forest_ride", forest_ride},
      {"lqr_pair", lqr_pair},
      {"noise_counterexample", noise_counterexample},
      {"robots_in_grid", robots_in_grid},
      {"split_mass", split_mass},
      {"zero_cost", zero_cost},
  };
  return table;
}

}  // namespace

std::vector<std::string> catalog_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : builders()) out.push_back(name);
  return out;
}

Scenario catalog_scenario(const std::string& name) {
  auto it = builders().find(name);
  if (it == builders().end()) throw DomainError("scenario", "no bundled scenario named '" + name + "'");
  return it->second();
}

std::filesystem::path default_scenario_dir() {
  if (const char* env = std::getenv("OTDP_SCENARIO_DIR"); env != nullptr && *env != '\0') return env;
  return OTDP_SCENARIO_DIR;
}

std::filesystem::path resolve_scenario(const std::string& name, const std::filesystem::path& dir) {
  const std::filesystem::path direct(name);
  if (std::filesystem::is_regular_file(direct)) return direct;
  std::filesystem::path candidate = dir / name;
  if (candidate.extension() != ".json") candidate += ".json";
  if (std::filesystem::is_regular_file(candidate)) return candidate;
  throw DomainError("scenario", "no scenario file '" + name + "' (looked in " + dir.string() + ")");
}

}  // namespace otdp
