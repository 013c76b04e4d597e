#ifndef OTDP_BENCH_HPP_
#define OTDP_BENCH_HPP_

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace otdp {

/// One point of the complexity comparison: probability-space DP states
/// (fleet configurations) against ground-space work per stage and input.
struct BenchRow {
  std::size_t particles = 0;
  std::size_t states = 0;
  boost::multiprecision::cpp_int configurations;
  std::size_t ops_per_state_input = 0;
  bool overflow = false;
};

struct BenchGrid {
  std::vector<std::size_t> particles{1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
  std::vector<std::size_t> states{10, 100, 1000, 10'000, 100'000, 1'000'000, 10'000'000};
};

/// Parses "M=1,10,100;X=10,1000" (either part may be omitted).
/// Throws DomainError on malformed input.
BenchGrid parse_bench_grid(const std::string& text);

std::vector<BenchRow> bench_counts(const BenchGrid& grid);

inline constexpr const char* kBenchHeader = "M,n_states,configurations,ops_per_state_input,overflow";

/// Header plus one line per row; configurations are exact decimal integers.
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace otdp

#endif  // OTDP_BENCH_HPP_
