#include "otdp/bench.hpp"

#include <sstream>

#include "otdp/error.hpp"
#include "otdp/fleet_oracle.hpp"

namespace otdp {
namespace {

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw DomainError("bench", "not a number: '" + item + "'");
    }
    if (used != item.size() || v < 1.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw DomainError("bench", "expected a positive integer, got '" + item + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw DomainError("bench", "empty list in grid");
  return out;
}

}  // namespace

BenchGrid parse_bench_grid(const std::string& text) {
  BenchGrid grid;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw DomainError("bench", "grid parts look like M=... or X=...");
    const std::string key = part.substr(0, eq);
    if (key == "M") {
      grid.particles = parse_list(part.substr(eq + 1));
    } else if (key == "X") {
      grid.states = parse_list(part.substr(eq + 1));
    } else {
      throw DomainError("bench", "unknown grid axis '" + key + "'");
    }
  }
  return grid;
}

std::vector<BenchRow> bench_counts(const BenchGrid& grid) {
  std::vector<BenchRow> rows;
  for (auto m : grid.particles) {
    for (auto n : grid.states) {
      BenchRow row{m, n, config_count(m, n), n, false};
      row.overflow = exceeds_double(row.configurations);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << kBenchHeader << '\n';
  for (const auto& r : rows) {
    out << r.particles << ',' << r.states << ',' << r.configurations.str() << ',' << r.ops_per_state_input << ','
        << (r.overflow ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace otdp
