#include "otdp/fleet_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "otdp/transport.hpp"

namespace otdp {
namespace {

using StateInputs = std::vector<std::pair<std::size_t, std::size_t>>;

void all_configs(std::size_t particles, std::size_t states, std::vector<FleetConfig>& out) {
  FleetConfig c(particles, 0);
  if (particles == 0) {
    out.push_back(c);
    return;
  }
  while (true) {
    out.push_back(c);
    std::size_t i = particles;
    while (i > 0 && c[i - 1] == states - 1) --i;
    if (i == 0) return;
    const std::size_t v = c[i - 1] + 1;
    for (std::size_t j = i - 1; j < particles; ++j) c[j] = v;
  }
}

// Uniform empirical measure of the given points, as weights over n slots.
Eigen::VectorXd empirical_weights(std::span<const std::size_t> points, std::size_t n) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t p : points) w[static_cast<Eigen::Index>(p)] += 1.0;
  return w / static_cast<double>(points.size());
}

class Oracle {
 public:
  Oracle(const GroundSystem& sys, std::span<const Eigen::VectorXd> refs) : sys_(sys), refs_(refs) {
    stage_cache_.resize(sys.horizon());
  }

  std::size_t transports = 0;

  ExtReal terminal(const FleetConfig& c) {
    const std::size_t n = sys_.horizon();
    const std::size_t nx = sys_.states(n).size(), ny = sys_.refs(n).size();
    CostTensor cost({nx, ny});
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t r = 0; r < ny; ++r) cost[x * ny + r] = sys_.terminal_cost(x, r);
    }
    ++transports;
    return ot2(empirical_weights(c, nx), refs_[n], cost).value;
  }

  ExtReal stage(std::size_t k, StateInputs pairs) {
    std::sort(pairs.begin(), pairs.end());
    auto& cache = stage_cache_[k];
    if (auto it = cache.find(pairs); it != cache.end()) return it->second;
    StateInputs atoms;
    std::vector<double> weights;
    for (const auto& p : pairs) {
      if (!atoms.empty() && atoms.back() == p) {
        weights.back() += 1.0;
      } else {
        atoms.push_back(p);
        weights.push_back(1.0);
      }
    }
    const std::size_t ny = sys_.refs(k).size();
    CostTensor cost({atoms.size(), ny});
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      for (std::size_t r = 0; r < ny; ++r) cost[i * ny + r] = sys_.stage_cost(k, atoms[i].first, atoms[i].second, r);
    }
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    a /= static_cast<double>(pairs.size());
    ++transports;
    const ExtReal v = ot2(a, refs_[k], cost).value;
    cache.emplace(std::move(pairs), v);
    return v;
  }

 private:
  const GroundSystem& sys_;
  std::span<const Eigen::VectorXd> refs_;
  std::vector<std::map<StateInputs, ExtReal>> stage_cache_;
};

}  // namespace

const OracleEntry& OracleTable::at(std::size_t k, const FleetConfig& config) const {
  FleetConfig sorted = config;
  std::sort(sorted.begin(), sorted.end());
  auto it = stages.at(k).find(sorted);
  if (it == stages[k].end()) throw DomainError("fleet-oracle", "configuration not in the table");
  return it->second;
}

OracleResult oracle_solve(const GroundSystem& sys, std::span<const std::size_t> particles,
                          std::span<const Eigen::VectorXd> refs, const OracleCaps& caps) {
  const std::size_t n = sys.horizon();
  const std::size_t m = particles.size();
  if (m == 0) throw DomainError("fleet-oracle", "fleet must have at least one particle");
  if (refs.size() != n + 1) throw DomainError("fleet-oracle", "one reference measure per stage is required");
  if (m > caps.particles) throw CapacityError("fleet-oracle", "fleet size exceeds the oracle cap");
  if (n > caps.horizon) throw CapacityError("fleet-oracle", "horizon exceeds the oracle cap");
  for (std::size_t k = 0; k <= n; ++k) {
    if (sys.states(k).size() > caps.states) throw CapacityError("fleet-oracle", "state space exceeds the oracle cap");
    if (k < n && sys.inputs(k).size() > caps.inputs) {
      throw CapacityError("fleet-oracle", "input space exceeds the oracle cap");
    }
    if (refs[k].size() != static_cast<Eigen::Index>(sys.refs(k).size())) {
      throw DomainError("fleet-oracle", "reference measure does not match its reference space");
    }
  }
  for (std::size_t p : particles) {
    if (p >= sys.states(0).size()) throw DomainError("fleet-oracle", "particle state out of range");
  }

  Oracle oracle(sys, refs);
  OracleResult out;
  out.table.stages.resize(n + 1);
  std::vector<FleetConfig> configs;
  all_configs(m, sys.states(n).size(), configs);
  for (const auto& c : configs) out.table.stages[n][c].value = oracle.terminal(c);

  for (std::size_t k = n; k-- > 0;) {
    const std::size_t nu = sys.inputs(k).size();
    configs.clear();
    all_configs(m, sys.states(k).size(), configs);
    const auto& next_stage = out.table.stages[k + 1];
    const std::vector<std::size_t> radix(m, nu);
    for (const auto& c : configs) {
      OracleEntry best;
      std::vector<std::size_t> inputs(m, 0);
      do {
        StateInputs pairs(m);
        FleetConfig next(m);
        for (std::size_t i = 0; i < m; ++i) {
          pairs[i] = {c[i], inputs[i]};
          next[i] = sys.next(k, c[i], inputs[i]);
        }
        std::sort(next.begin(), next.end());
        const ExtReal future = next_stage.at(next).value;
        if (future.is_infinite() || !(future < best.value)) continue;
        const ExtReal total = oracle.stage(k, std::move(pairs)) + future;
        if (total < best.value) {
          best.value = total;
          best.inputs = inputs;
        }
      } while (next_multi_index(inputs, radix));
      out.table.stages[k].emplace(c, std::move(best));
    }
  }
  out.initial.assign(particles.begin(), particles.end());
  std::sort(out.initial.begin(), out.initial.end());
  out.value = out.table.stages[0].at(out.initial).value;
  out.stage_transports = oracle.transports;
  return out;
}

boost::multiprecision::cpp_int config_count(std::size_t particles, std::size_t states) {
  if (states == 0) throw DomainError("fleet-oracle", "state space must be nonempty");
  boost::multiprecision::cpp_int count = 1;
  for (std::size_t i = 1; i <= particles; ++i) {
    count *= states - 1 + i;
    count /= i;
  }
  return count;
}

bool exceeds_double(const boost::multiprecision::cpp_int& count) {
  static const boost::multiprecision::cpp_int largest(std::numeric_limits<double>::max());
  return count > largest;
}

}  // namespace otdp
