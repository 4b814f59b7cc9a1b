#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "sgm/errors.hpp"

namespace sgm {

/// Exact square linear assignment (Jonker-Volgenant style shortest augmenting
/// paths with potentials, O(n^3)), minimizing. Deterministic: rows are
/// augmented in index order and column scans run in index order, so ties
/// resolve to the lowest indices.
inline std::vector<int> lap_minimize(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DomainError("lap_minimize: matrix must be square");
  if (n == 0) return {};
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

inline std::vector<int> lap_maximize(const Eigen::MatrixXd& score) {
  return lap_minimize(-score);
}

inline double assignment_value(const Eigen::MatrixXd& score, const std::vector<int>& row_to_col) {
  double total = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r)
    if (row_to_col[r] >= 0) total += score(static_cast<int>(r), row_to_col[r]);
  return total;
}

}  // namespace sgm
