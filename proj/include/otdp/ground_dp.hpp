#ifndef OTDP_GROUND_DP_HPP_
#define OTDP_GROUND_DP_HPP_

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "otdp/cost_tensor.hpp"
#include "otdp/ext_real.hpp"

namespace otdp {

/// Labels of a finite space, in declaration order (indices are positions).
using Labels = std::vector<std::string>;

/// Index of `label` in `labels`; throws DomainError when absent.
std::size_t index_of(const Labels& labels, const std::string& label, const char* what);

/// Deterministic finite system over stages 0..N.
///
/// State space X_k and reference space Y_k exist for k = 0..N, inputs U_k for
/// k < N. Stage tables are flat: next[x * |U| + u], stage cost
/// [(x * |U| + u) * |Y_k| + r], terminal [x * |Y_N| + r].
class GroundSystem {
 public:
  struct Stage {
    std::vector<std::size_t> next;
    std::vector<ExtReal> cost;
  };

  GroundSystem(std::vector<Labels> states, std::vector<Labels> inputs, std::vector<Labels> refs,
               std::vector<Stage> stages, std::vector<ExtReal> terminal);

  using Dynamics = std::function<std::size_t(std::size_t k, std::size_t x, std::size_t u)>;
  using StageCost = std::function<ExtReal(std::size_t k, std::size_t x, std::size_t u, std::size_t r)>;
  using TerminalCost = std::function<ExtReal(std::size_t x, std::size_t r)>;

  /// Same spaces at every stage; callbacks receive indices.
  static GroundSystem time_invariant(std::size_t horizon, Labels states, Labels inputs, Labels refs,
                                     const Dynamics& f, const StageCost& g, const TerminalCost& g_final);

  std::size_t horizon() const { return stages_.size(); }
  const Labels& states(std::size_t k) const { return states_.at(k); }
  const Labels& inputs(std::size_t k) const { return inputs_.at(k); }
  const Labels& refs(std::size_t k) const { return refs_.at(k); }

  std::size_t next(std::size_t k, std::size_t x, std::size_t u) const {
    return stages_[k].next[x * inputs_[k].size() + u];
  }
  ExtReal stage_cost(std::size_t k, std::size_t x, std::size_t u, std::size_t r) const {
    return stages_[k].cost[(x * inputs_[k].size() + u) * refs_[k].size() + r];
  }
  ExtReal terminal_cost(std::size_t x, std::size_t r) const { return terminal_[x * refs_.back().size() + r]; }

  /// True when some stage cost table varies with the reference.
  bool stage_cost_depends_on_reference() const;

 private:
  std::vector<Labels> states_, inputs_, refs_;
  std::vector<Stage> stages_;
  std::vector<ExtReal> terminal_;
};

/// Finite system driven by noise: dynamics and stage cost also take
/// a noise sample w ~ noise_law(k). Stage tables are indexed
/// next[(x * |U| + u) * |W| + w] and cost[((x * |U| + u) * |W| + w) * |Y_k| + r].
class NoisyGroundSystem {
 public:
  struct Stage {
    Labels noise;
    Eigen::VectorXd noise_law;
    std::vector<std::size_t> next;
    std::vector<ExtReal> cost;
  };

  NoisyGroundSystem(std::vector<Labels> states, std::vector<Labels> inputs, std::vector<Labels> refs,
                    std::vector<Stage> stages, std::vector<ExtReal> terminal);

  /// Deterministic system seen as a noisy one with a single noise sample.
  static NoisyGroundSystem from_deterministic(const GroundSystem& sys);

  std::size_t horizon() const { return stages_.size(); }
  const Labels& states(std::size_t k) const { return states_.at(k); }
  const Labels& inputs(std::size_t k) const { return inputs_.at(k); }
  const Labels& refs(std::size_t k) const { return refs_.at(k); }
  const Labels& noise(std::size_t k) const { return stages_.at(k).noise; }
  const Eigen::VectorXd& noise_law(std::size_t k) const { return stages_.at(k).noise_law; }

  std::size_t next(std::size_t k, std::size_t x, std::size_t u, std::size_t w) const {
    return stages_[k].next[(x * inputs_[k].size() + u) * stages_[k].noise.size() + w];
  }
  ExtReal stage_cost(std::size_t k, std::size_t x, std::size_t u, std::size_t w, std::size_t r) const {
    return stages_[k].cost[((x * inputs_[k].size() + u) * stages_[k].noise.size() + w) * refs_[k].size() + r];
  }
  ExtReal terminal_cost(std::size_t x, std::size_t r) const { return terminal_[x * refs_.back().size() + r]; }

  bool stage_cost_depends_on_reference() const;

 private:
  std::vector<Labels> states_, inputs_, refs_;
  std::vector<Stage> stages_;
  std::vector<ExtReal> terminal_;
};

enum class DpMode { multi, simple };

inline constexpr std::size_t kDefaultMemoryCap = std::size_t{1} << 26;

struct DpOptions {
  /// Upper bound on the total number of table cells over all stages.
  std::size_t memory_cap = kDefaultMemoryCap;
  /// Simplified mode only: evaluate reference-dependent stage costs at the
  /// final reference r_N (matched by label in Y_k) instead of failing.
  bool freeze_reference = false;
};

/// Per-stage cost-to-go and argmin tables.
///
/// Multi mode: stage k is indexed by (x, r_k, ..., r_N); simple mode by
/// (x, r_N). Layout is row-major over that tuple, so cost_tensor(k) is a
/// transport cost with the state axis first.
struct CostToGoTable {
  DpMode mode = DpMode::multi;
  bool frozen_reference = false;
  std::vector<std::vector<std::size_t>> shape;
  std::vector<std::vector<ExtReal>> value;
  /// Minimizing input index per stage k < N; -1 where every input costs +inf.
  std::vector<std::vector<long>> argmin;

  std::size_t horizon() const { return argmin.size(); }
  std::size_t index(std::size_t k, std::size_t x, std::span<const std::size_t> refs) const;
  ExtReal at(std::size_t k, std::size_t x, std::span<const std::size_t> refs) const {
    return value[k][index(k, x, refs)];
  }
  long input_at(std::size_t k, std::size_t x, std::span<const std::size_t> refs) const {
    return argmin[k][index(k, x, refs)];
  }
  CostTensor cost_tensor(std::size_t k) const;
};

/// j_k(x, r_k..r_N) = min_u g_k(x, u, r_k) + j_{k+1}(f_k(x, u), r_{k+1}..r_N).
/// Throws CapacityError when the tables exceed options.memory_cap.
CostToGoTable dpa_multi(const GroundSystem& sys, const DpOptions& options = {});

/// j_k(x, r_N) = min_u g_k(x, u) + j_{k+1}(f_k(x, u), r_N). Throws ModeError
/// when stage costs depend on the reference unless freeze_reference is set.
CostToGoTable dpa_simple(const GroundSystem& sys, const DpOptions& options = {});

/// j_k(x, r_N) = min_u sum_w xi_k(w) [g_k(x, u, w) + j_{k+1}(f_k(x, u, w), r_N)].
CostToGoTable dpa_stochastic(const NoisyGroundSystem& sys, const DpOptions& options = {});

struct ParticleRollout {
  std::vector<std::size_t> states;
  std::vector<std::size_t> inputs;
  std::vector<ExtReal> stage_costs;
  ExtReal terminal_cost = 0.0;
  ExtReal cost = 0.0;
};

/// Greedy rollout of the stored argmin from x0. `refs` holds r_0..r_N in
/// multi mode and r_N alone in simple mode. Throws InfeasibleError when the
/// cost-to-go at the start is +inf.
ParticleRollout rollout_particle(const GroundSystem& sys, const CostToGoTable& table, std::size_t x0,
                                 std::span<const std::size_t> refs);

/// Reference index in Y_k used for stage costs in simple mode.
std::size_t simple_stage_ref(const Labels& stage_refs, const Labels& final_refs, std::size_t r_final, bool frozen);

}  // namespace otdp

#endif  // OTDP_GROUND_DP_HPP_
