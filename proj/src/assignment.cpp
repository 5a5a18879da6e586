#include <limits>
#include <vector>

#include "hcace/errors.hpp"
#include "hcace/matching.hpp"

namespace hcace {

// Kuhn-Munkres with potentials and shortest augmenting paths; O(n^2 m) for an
// n x m cost matrix with n <= m.  Indices are 1-based internally, column 0 is
// the virtual source.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost.front().size();
  if (n > m) throw UsageError("assignment requires rows <= columns");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= m; ++j)
    if (match[j] != 0) row_to_col[match[j] - 1] = static_cast<int>(j - 1);
  return row_to_col;
}

std::vector<int> optimal_pair_match(const std::vector<std::vector<double>>& distance) {
  const std::size_t nt = distance.size();
  if (nt == 0) throw DataError("no treated units to match");
  const std::size_t nc = distance.front().size();
  if (nc == 0) throw DataError("no control units to match");
  for (const auto& row : distance)
    if (row.size() != nc) throw DataError("ragged distance matrix");

  if (nt <= nc) return solve_assignment(distance);

  // More treated than controls: assign every control to a treated unit.
  std::vector<std::vector<double>> transposed(nc, std::vector<double>(nt));
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nc; ++j) transposed[j][i] = distance[i][j];
  const std::vector<int> col_to_row = solve_assignment(transposed);
  std::vector<int> row_to_col(nt, -1);
  for (std::size_t j = 0; j < nc; ++j)
    if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = static_cast<int>(j);
  return row_to_col;
}

double assignment_cost(const std::vector<std::vector<double>>& distance,
                       const std::vector<int>& assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] >= 0) total += distance[i][assignment[i]];
  return total;
}

}  // namespace hcace
