#ifndef OTDP_CATALOG_HPP_
#define OTDP_CATALOG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "otdp/scenario.hpp"

namespace otdp {

/// Names of the scenarios shipped in the scenarios/ directory.
std::vector<std::string> catalog_names();

/// Builds a bundled scenario from code; the shipped file is its canonical text.
/// Throws DomainError for unknown names.
Scenario catalog_scenario(const std::string& name);

/// $OTDP_SCENARIO_DIR if set, otherwise the source-tree scenarios/ directory.
std::filesystem::path default_scenario_dir();

/// An existing file path is returned as is; otherwise `name` (with or without
/// .json) is looked up in `dir`.
std::filesystem::path resolve_scenario(const std::string& name, const std::filesystem::path& dir);

}  // namespace otdp

#endif  // OTDP_CATALOG_HPP_
