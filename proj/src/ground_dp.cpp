#include "otdp/ground_dp.hpp"

#include <algorithm>
#include <limits>

#include "otdp/error.hpp"

namespace otdp {
namespace {

void check_spaces(const std::vector<Labels>& states, const std::vector<Labels>& inputs,
                  const std::vector<Labels>& refs, std::size_t stages) {
  if (stages == 0) throw DomainError("ground-dp", "horizon must be positive");
  if (states.size() != stages + 1 || refs.size() != stages + 1 || inputs.size() != stages) {
    throw DomainError("ground-dp", "space lists do not match the horizon");
  }
  auto nonempty_unique = [](const std::vector<Labels>& spaces, const char* what) {
    for (const auto& s : spaces) {
      if (s.empty()) throw DomainError("ground-dp", std::string(what) + " space is empty");
      Labels sorted = s;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw DomainError("ground-dp", std::string("duplicate ") + what + " label");
      }
    }
  };
  nonempty_unique(states, "state");
  nonempty_unique(inputs, "input");
  nonempty_unique(refs, "reference");
}

void check_costs(const std::vector<ExtReal>& costs, std::size_t expected, const char* what) {
  if (costs.size() != expected) throw DomainError("ground-dp", std::string(what) + " table has the wrong size");
  for (auto c : costs) {
    if (c < ExtReal(0.0)) throw DomainError("ground-dp", std::string(what) + " table has a negative entry");
  }
}

std::size_t product_of(std::span<const std::size_t> sizes) {
  std::size_t p = 1;
  for (auto s : sizes) p *= s;
  return p;
}

void check_capacity(std::size_t cells, std::size_t cap, DpMode mode) {
  if (cells > cap) {
    throw CapacityError("ground-dp", "cost-to-go tables need " + std::to_string(cells) + " cells, above the cap of " +
                                         std::to_string(cap) +
                                         (mode == DpMode::multi ? "; use two-marginal (simplified) mode or raise --mem-cap"
                                                                : "; raise --mem-cap"));
  }
}

// Number of cells needed, guarding against overflow.
std::size_t table_cells(const std::vector<std::vector<std::size_t>>& shapes) {
  std::size_t total = 0;
  for (const auto& s : shapes) {
    std::size_t p = 1;
    for (auto d : s) {
      if (d != 0 && p > std::numeric_limits<std::size_t>::max() / d) return std::numeric_limits<std::size_t>::max();
      p *= d;
    }
    if (total > std::numeric_limits<std::size_t>::max() - 2 * p) return std::numeric_limits<std::size_t>::max();
    total += 2 * p;
  }
  return total;
}

}  // namespace

std::size_t index_of(const Labels& labels, const std::string& label, const char* what) {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw DomainError("ground-dp", std::string("unknown ") + what + " '" + label + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

// ---------------------------------------------------------------------------

GroundSystem::GroundSystem(std::vector<Labels> states, std::vector<Labels> inputs, std::vector<Labels> refs,
                           std::vector<Stage> stages, std::vector<ExtReal> terminal)
    : states_(std::move(states)),
      inputs_(std::move(inputs)),
      refs_(std::move(refs)),
      stages_(std::move(stages)),
      terminal_(std::move(terminal)) {
  check_spaces(states_, inputs_, refs_, stages_.size());
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    const std::size_t nx = states_[k].size(), nu = inputs_[k].size();
    if (stages_[k].next.size() != nx * nu) throw DomainError("ground-dp", "dynamics table has the wrong size");
    for (auto x1 : stages_[k].next) {
      if (x1 >= states_[k + 1].size()) throw DomainError("ground-dp", "dynamics leave the next state space");
    }
    check_costs(stages_[k].cost, nx * nu * refs_[k].size(), "stage cost");
  }
  check_costs(terminal_, states_.back().size() * refs_.back().size(), "terminal cost");
}

GroundSystem GroundSystem::time_invariant(std::size_t horizon, Labels states, Labels inputs, Labels refs,
                                          const Dynamics& f, const StageCost& g, const TerminalCost& g_final) {
  std::vector<Stage> stages(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t x = 0; x < states.size(); ++x) {
      for (std::size_t u = 0; u < inputs.size(); ++u) {
        stages[k].next.push_back(f(k, x, u));
        for (std::size_t r = 0; r < refs.size(); ++r) stages[k].cost.push_back(g(k, x, u, r));
      }
    }
  }
  std::vector<ExtReal> terminal;
  for (std::size_t x = 0; x < states.size(); ++x) {
    for (std::size_t r = 0; r < refs.size(); ++r) terminal.push_back(g_final(x, r));
  }
  return GroundSystem(std::vector<Labels>(horizon + 1, states), std::vector<Labels>(horizon, inputs),
                      std::vector<Labels>(horizon + 1, refs), std::move(stages), std::move(terminal));
}

bool GroundSystem::stage_cost_depends_on_reference() const {
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    const std::size_t ny = refs_[k].size();
    for (std::size_t base = 0; base < stages_[k].cost.size(); base += ny) {
      for (std::size_t r = 1; r < ny; ++r) {
        if (!(stages_[k].cost[base + r] == stages_[k].cost[base])) return true;
      }
    }
  }
  return false;
}

NoisyGroundSystem::NoisyGroundSystem(std::vector<Labels> states, std::vector<Labels> inputs, std::vector<Labels> refs,
                                     std::vector<Stage> stages, std::vector<ExtReal> terminal)
    : states_(std::move(states)),
      inputs_(std::move(inputs)),
      refs_(std::move(refs)),
      stages_(std::move(stages)),
      terminal_(std::move(terminal)) {
  check_spaces(states_, inputs_, refs_, stages_.size());
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    const auto& st = stages_[k];
    const std::size_t nw = st.noise.size();
    if (nw == 0 || static_cast<std::size_t>(st.noise_law.size()) != nw) {
      throw DomainError("ground-dp", "noise law does not match the noise space");
    }
    if ((st.noise_law.array() < 0.0).any() || std::abs(st.noise_law.sum() - 1.0) > 1e-12) {
      throw DomainError("ground-dp", "noise law is not a probability vector");
    }
    const std::size_t cells = states_[k].size() * inputs_[k].size() * nw;
    if (st.next.size() != cells) throw DomainError("ground-dp", "dynamics table has the wrong size");
    for (auto x1 : st.next) {
      if (x1 >= states_[k + 1].size()) throw DomainError("ground-dp", "dynamics leave the next state space");
    }
    check_costs(st.cost, cells * refs_[k].size(), "stage cost");
  }
  check_costs(terminal_, states_.back().size() * refs_.back().size(), "terminal cost");
}

NoisyGroundSystem NoisyGroundSystem::from_deterministic(const GroundSystem& sys) {
  std::vector<Labels> states, inputs, refs;
  std::vector<Stage> stages;
  for (std::size_t k = 0; k <= sys.horizon(); ++k) {
    states.push_back(sys.states(k));
    refs.push_back(sys.refs(k));
  }
  for (std::size_t k = 0; k < sys.horizon(); ++k) {
    inputs.push_back(sys.inputs(k));
    Stage st{{"0"}, Eigen::VectorXd::Ones(1), {}, {}};
    for (std::size_t x = 0; x < sys.states(k).size(); ++x) {
      for (std::size_t u = 0; u < sys.inputs(k).size(); ++u) {
        st.next.push_back(sys.next(k, x, u));
        for (std::size_t r = 0; r < sys.refs(k).size(); ++r) st.cost.push_back(sys.stage_cost(k, x, u, r));
      }
    }
    stages.push_back(std::move(st));
  }
  std::vector<ExtReal> terminal;
  const std::size_t n_final = sys.states(sys.horizon()).size();
  for (std::size_t x = 0; x < n_final; ++x) {
    for (std::size_t r = 0; r < sys.refs(sys.horizon()).size(); ++r) terminal.push_back(sys.terminal_cost(x, r));
  }
  return NoisyGroundSystem(std::move(states), std::move(inputs), std::move(refs), std::move(stages), std::move(terminal));
}

bool NoisyGroundSystem::stage_cost_depends_on_reference() const {
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    const std::size_t ny = refs_[k].size();
    for (std::size_t base = 0; base < stages_[k].cost.size(); base += ny) {
      for (std::size_t r = 1; r < ny; ++r) {
        if (!(stages_[k].cost[base + r] == stages_[k].cost[base])) return true;
      }
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

std::size_t CostToGoTable::index(std::size_t k, std::size_t x, std::span<const std::size_t> refs) const {
  const auto& s = shape.at(k);
  if (refs.size() + 1 != s.size()) throw DomainError("ground-dp", "reference tuple does not match the table mode");
  if (x >= s[0]) throw DomainError("ground-dp", "state index out of range");
  std::size_t linear = x;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i] >= s[i + 1]) throw DomainError("ground-dp", "reference index out of range");
    linear = linear * s[i + 1] + refs[i];
  }
  return linear;
}

CostTensor CostToGoTable::cost_tensor(std::size_t k) const {
  CostTensor t(shape.at(k));
  for (std::size_t i = 0; i < t.cells(); ++i) t[i] = value[k][i];
  return t;
}

std::size_t simple_stage_ref(const Labels& stage_refs, const Labels& final_refs, std::size_t r_final, bool frozen) {
  if (!frozen) return 0;
  auto it = std::find(stage_refs.begin(), stage_refs.end(), final_refs.at(r_final));
  if (it == stage_refs.end()) {
    throw ModeError("ground-dp", "frozen reference '" + final_refs[r_final] + "' is not a stage reference label");
  }
  return static_cast<std::size_t>(it - stage_refs.begin());
}

CostToGoTable dpa_multi(const GroundSystem& sys, const DpOptions& options) {
  const std::size_t n = sys.horizon();
  CostToGoTable t;
  t.mode = DpMode::multi;
  t.shape.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    t.shape[k].push_back(sys.states(k).size());
    for (std::size_t i = k; i <= n; ++i) t.shape[k].push_back(sys.refs(i).size());
  }
  check_capacity(table_cells(t.shape), options.memory_cap, DpMode::multi);

  t.value.resize(n + 1);
  t.argmin.resize(n);
  t.value[n].resize(product_of(t.shape[n]));
  for (std::size_t x = 0; x < sys.states(n).size(); ++x) {
    for (std::size_t r = 0; r < sys.refs(n).size(); ++r) t.value[n][x * sys.refs(n).size() + r] = sys.terminal_cost(x, r);
  }

  for (std::size_t k = n; k-- > 0;) {
    const std::size_t nx = sys.states(k).size(), nu = sys.inputs(k).size(), ny = sys.refs(k).size();
    const std::size_t tail = product_of(std::span(t.shape[k + 1]).subspan(1));
    auto& value = t.value[k];
    auto& arg = t.argmin[k];
    value.assign(nx * ny * tail, ExtReal::infinity());
    arg.assign(value.size(), -1);
    const auto& next_value = t.value[k + 1];
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t r = 0; r < ny; ++r) {
        for (std::size_t rest = 0; rest < tail; ++rest) {
          const std::size_t cell = (x * ny + r) * tail + rest;
          for (std::size_t u = 0; u < nu; ++u) {
            const ExtReal candidate = sys.stage_cost(k, x, u, r) + next_value[sys.next(k, x, u) * tail + rest];
            if (candidate.is_finite() && candidate < value[cell]) {
              value[cell] = candidate;
              arg[cell] = static_cast<long>(u);
            }
          }
        }
      }
    }
  }
  return t;
}

namespace {

template <class System, class Expected>
CostToGoTable simple_recursion(const System& sys, const DpOptions& options, Expected&& expected_step) {
  const std::size_t n = sys.horizon();
  const std::size_t ny = sys.refs(n).size();
  CostToGoTable t;
  t.mode = DpMode::simple;
  t.frozen_reference = options.freeze_reference;
  t.shape.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t.shape[k] = {sys.states(k).size(), ny};
  check_capacity(table_cells(t.shape), options.memory_cap, DpMode::simple);

  t.value.resize(n + 1);
  t.argmin.resize(n);
  t.value[n].resize(sys.states(n).size() * ny);
  for (std::size_t x = 0; x < sys.states(n).size(); ++x) {
    for (std::size_t r = 0; r < ny; ++r) t.value[n][x * ny + r] = sys.terminal_cost(x, r);
  }
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t nx = sys.states(k).size(), nu = sys.inputs(k).size();
    t.value[k].assign(nx * ny, ExtReal::infinity());
    t.argmin[k].assign(nx * ny, -1);
    for (std::size_t r = 0; r < ny; ++r) {
      const std::size_t stage_r = simple_stage_ref(sys.refs(k), sys.refs(n), r, options.freeze_reference);
      for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t u = 0; u < nu; ++u) {
          const ExtReal candidate = expected_step(k, x, u, stage_r, r, t.value[k + 1]);
          if (candidate.is_finite() && candidate < t.value[k][x * ny + r]) {
            t.value[k][x * ny + r] = candidate;
            t.argmin[k][x * ny + r] = static_cast<long>(u);
          }
        }
      }
    }
  }
  return t;
}

}  // namespace

CostToGoTable dpa_simple(const GroundSystem& sys, const DpOptions& options) {
  if (!options.freeze_reference && sys.stage_cost_depends_on_reference()) {
    throw ModeError("ground-dp", "stage costs depend on the reference; use the multi-marginal recursion");
  }
  const std::size_t ny = sys.refs(sys.horizon()).size();
  return simple_recursion(sys, options,
                          [&](std::size_t k, std::size_t x, std::size_t u, std::size_t stage_r, std::size_t r,
                              const std::vector<ExtReal>& next_value) {
                            return sys.stage_cost(k, x, u, stage_r) + next_value[sys.next(k, x, u) * ny + r];
                          });
}

CostToGoTable dpa_stochastic(const NoisyGroundSystem& sys, const DpOptions& options) {
  if (!options.freeze_reference && sys.stage_cost_depends_on_reference()) {
    throw ModeError("ground-dp", "stage costs depend on the reference; freeze the reference explicitly");
  }
  const std::size_t ny = sys.refs(sys.horizon()).size();
  return simple_recursion(sys, options,
                          [&](std::size_t k, std::size_t x, std::size_t u, std::size_t stage_r, std::size_t r,
                              const std::vector<ExtReal>& next_value) {
                            ExtReal expected = 0.0;
                            const auto& law = sys.noise_law(k);
                            for (std::size_t w = 0; w < sys.noise(k).size(); ++w) {
                              const ExtReal sample =
                                  sys.stage_cost(k, x, u, w, stage_r) + next_value[sys.next(k, x, u, w) * ny + r];
                              expected += scale(law[static_cast<Eigen::Index>(w)], sample);
                            }
                            return expected;
                          });
}

ParticleRollout rollout_particle(const GroundSystem& sys, const CostToGoTable& table, std::size_t x0,
                                 std::span<const std::size_t> refs) {
  const std::size_t n = sys.horizon();
  if (table.horizon() != n) throw DomainError("ground-dp", "table horizon does not match the system");
  const std::size_t expected_refs = table.mode == DpMode::multi ? n + 1 : 1;
  if (refs.size() != expected_refs) throw DomainError("ground-dp", "reference tuple does not match the table mode");
  if (table.at(0, x0, refs).is_infinite()) {
    throw InfeasibleError("ground-dp", "cost-to-go is +inf at the initial state", 0);
  }
  const std::size_t r_final = refs.back();

  ParticleRollout out;
  std::size_t x = x0;
  out.states.push_back(x);
  for (std::size_t k = 0; k < n; ++k) {
    const auto tail = table.mode == DpMode::multi ? refs.subspan(k) : refs;
    const long u = table.input_at(k, x, tail);
    if (u < 0) throw InfeasibleError("ground-dp", "no finite input along the rollout", static_cast<long>(k));
    const std::size_t stage_r =
        table.mode == DpMode::multi ? refs[k] : simple_stage_ref(sys.refs(k), sys.refs(n), r_final, table.frozen_reference);
    const ExtReal g = sys.stage_cost(k, x, static_cast<std::size_t>(u), stage_r);
    out.inputs.push_back(static_cast<std::size_t>(u));
    out.stage_costs.push_back(g);
    out.cost += g;
    x = sys.next(k, x, static_cast<std::size_t>(u));
    out.states.push_back(x);
  }
  out.terminal_cost = sys.terminal_cost(x, r_final);
  out.cost += out.terminal_cost;
  return out;
}

}  // namespace otdp
