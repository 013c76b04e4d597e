#ifndef OTDP_VERIFY_HPP_
#define OTDP_VERIFY_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace otdp {

struct CheckResult {
  std::string id;
  std::string name;
  bool passed = false;
  std::string summary;
  std::vector<std::string> details;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  std::filesystem::path scenario_dir;
};

/// "all", "paper-values" and one suite per acceptance criterion.
std::vector<std::string> verify_suites();

/// Runs a suite; throws DomainError for unknown names. "all" runs criteria
/// 1-9 twice and reports criterion 10 from comparing the two renderings.
std::vector<CheckResult> run_verify(const std::string& suite, const VerifyOptions& options);

/// One PASS/FAIL line per check, indented details, and a summary line.
/// Elapsed times appear only when `timings` is set, so output is reproducible.
std::string format_results(const std::vector<CheckResult>& results, bool timings);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace otdp

#endif  // OTDP_VERIFY_HPP_
