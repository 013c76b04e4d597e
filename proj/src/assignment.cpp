#include <cmath>
#include <limits>
#include <optional>

#include "otdp/error.hpp"
#include "otdp/linprog.hpp"

namespace otdp {
namespace {

constexpr double kUnreached = std::numeric_limits<double>::infinity();

struct Matching {
  std::vector<std::size_t> permutation;
  double total = 0.0;
};

// Shortest-augmenting-path Hungarian method over the submatrix rows x cols.
// Infinite entries are missing edges; nullopt when no perfect matching exists.
std::optional<Matching> hungarian(const CostTensor& cost, const std::vector<std::size_t>& rows,
                                  const std::vector<std::size_t>& cols) {
  const std::size_t n = rows.size();
  const std::size_t width = cost.shape()[1];
  auto c = [&](std::size_t i, std::size_t j) { return cost[rows[i - 1] * width + cols[j - 1]]; };

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kUnreached);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kUnreached;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const ExtReal cij = c(i0, j);
        if (cij.is_finite()) {
          const double cur = cij.value() - u[i0] - v[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0) return std::nullopt;
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else if (minv[j] != kUnreached) {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Matching m;
  m.permutation.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) m.permutation[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) m.total += c(i + 1, m.permutation[i] + 1).value();
  return m;
}

bool same_total(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a)); }

}  // namespace

Assignment solve_assignment(const CostTensor& cost) {
  if (cost.rank() != 2 || cost.shape()[0] != cost.shape()[1]) {
    throw DomainError("linprog", "assignment needs a square cost matrix");
  }
  const std::size_t n = cost.shape()[0];
  std::vector<std::size_t> rows(n), cols(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = cols[i] = i;

  auto best = hungarian(cost, rows, cols);
  if (!best) throw InfeasibleError("linprog", "no finite-cost permutation");

  // Lexicographic tie-breaking: fix rows in order to the smallest column that
  // still admits an optimal completion.
  Assignment out;
  out.permutation.assign(n, 0);
  double remaining = best->total;
  std::vector<std::size_t> free_cols = cols;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::size_t> rest_rows(rows.begin() + static_cast<std::ptrdiff_t>(i) + 1, rows.end());
    bool fixed = false;
    for (std::size_t k = 0; k < free_cols.size() && !fixed; ++k) {
      const std::size_t j = free_cols[k];
      const ExtReal cij = cost[i * n + j];
      if (cij.is_infinite()) continue;
      std::vector<std::size_t> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(k));
      double rest_total = 0.0;
      if (!rest_rows.empty()) {
        auto sub = hungarian(cost, rest_rows, rest_cols);
        if (!sub) continue;
        rest_total = sub->total;
      }
      if (same_total(cij.value() + rest_total, remaining)) {
        out.permutation[i] = j;
        remaining = rest_total;
        free_cols = std::move(rest_cols);
        fixed = true;
      }
    }
    if (!fixed) {
      // Rounding left no candidate within tolerance; keep the Hungarian choice.
      return Assignment{best->permutation, best->total, best->total / static_cast<double>(n)};
    }
  }
  out.total = 0.0;
  for (std::size_t i = 0; i < n; ++i) out.total += cost[i * n + out.permutation[i]].value();
  out.value = n > 0 ? out.total / static_cast<double>(n) : 0.0;
  return out;
}

}  // namespace otdp
