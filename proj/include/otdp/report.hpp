#ifndef OTDP_REPORT_HPP_
#define OTDP_REPORT_HPP_

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "otdp/scenario.hpp"

namespace otdp {

/// Command-line overrides of the scenario's own options.
struct RunFlags {
  std::optional<LiftMode> mode;
  std::optional<RolloutKind> rollout;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> memory_cap;
  bool timings = false;
};

enum class RunStatus { ok = 0, infeasible = 2 };

struct RunResult {
  nlohmann::json report;
  RunStatus status = RunStatus::ok;

  int exit_code() const { return static_cast<int>(status); }
};

/// Solves the scenario and assembles the report. Infeasibility (a requested
/// value of +inf) is a status, not an error; other failures throw.
RunResult run(const Scenario& scenario, const RunFlags& flags = {});

/// Two-space indented JSON with a trailing newline.
std::string report_text(const nlohmann::json& report);

/// Extended reals as JSON: numbers, or the string "+inf".
nlohmann::json ext_json(ExtReal x);
/// Inverse of ext_json; throws DomainError for anything else.
ExtReal ext_from_json(const nlohmann::json& j);

std::optional<LiftMode> parse_lift_mode(const std::string& s);
std::optional<RolloutKind> parse_rollout(const std::string& s);

}  // namespace otdp

#endif  // OTDP_REPORT_HPP_
