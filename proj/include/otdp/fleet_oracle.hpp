#ifndef OTDP_FLEET_ORACLE_HPP_
#define OTDP_FLEET_ORACLE_HPP_

#include <Eigen/Core>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "otdp/ext_real.hpp"
#include "otdp/ground_dp.hpp"

namespace otdp {

/// Multiset of particle states, sorted ascending.
using FleetConfig = std::vector<std::size_t>;

struct OracleCaps {
  std::size_t particles = 4;
  std::size_t states = 4;
  std::size_t inputs = 3;
  std::size_t horizon = 4;
};

struct OracleEntry {
  ExtReal value = ExtReal::infinity();
  /// Input of each particle, aligned with the sorted configuration; empty at the last stage or when infeasible.
  std::vector<std::size_t> inputs;
};

struct OracleTable {
  std::vector<std::map<FleetConfig, OracleEntry>> stages;

  const OracleEntry& at(std::size_t k, const FleetConfig& config) const;
};

struct OracleResult {
  ExtReal value = ExtReal::infinity();
  FleetConfig initial;
  OracleTable table;
  std::size_t stage_transports = 0;
};

/// Exact optimum over uniform empirical fleets of M = particles.size()
/// particles, each applying one input per stage. Stage costs are
/// K_{g_k}(Lambda, rho_k) and the terminal cost K_{g_N}(mu_N, rho_N).
/// `refs` holds rho_0..rho_N as weights over Y_0..Y_N.
OracleResult oracle_solve(const GroundSystem& sys, std::span<const std::size_t> particles,
                          std::span<const Eigen::VectorXd> refs, const OracleCaps& caps = {});

/// Number of M-particle configurations over n states: C(M + n - 1, M).
boost::multiprecision::cpp_int config_count(std::size_t particles, std::size_t states);

/// True when the count exceeds the largest finite double.
bool exceeds_double(const boost::multiprecision::cpp_int& count);

}  // namespace otdp

#endif  // OTDP_FLEET_ORACLE_HPP_
