#ifndef OTDP_MEASURES_JSON_HPP_
#define OTDP_MEASURES_JSON_HPP_

#include <json.hpp>

#include <string>

#include "otdp/measures.hpp"

namespace otdp {

// {"support":"labeled"|"euclidean","atoms":[{"point":...,"weight":...}]}.
// Doubles are written in shortest round-trip form (at most 17 significant digits).

inline nlohmann::json to_json(const DiscreteMeasure<std::string>& m) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : m.atoms()) atoms.push_back({{"point", a.point}, {"weight", a.weight}});
  return {{"support", "labeled"}, {"atoms", std::move(atoms)}};
}

inline nlohmann::json to_json(const DiscreteMeasure<Eigen::VectorXd>& m) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : m.atoms()) {
    nlohmann::json p = nlohmann::json::array();
    for (Eigen::Index i = 0; i < a.point.size(); ++i) p.push_back(a.point[i]);
    atoms.push_back({{"point", std::move(p)}, {"weight", a.weight}});
  }
  return {{"support", "euclidean"}, {"atoms", std::move(atoms)}};
}

/// Labeled points may be given as strings or numbers; numbers are stored by their JSON text.
inline std::string label_from_json(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return j.dump();
  throw DomainError("measures", "label must be a string or a number");
}

}  // namespace otdp

#endif  // OTDP_MEASURES_JSON_HPP_
