#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "sgm/errors.hpp"

namespace sgm {

inline constexpr std::int32_t kUnmatched = -1;

/// Partial permutation between the padded index spaces of two graphs,
/// stored as a row -> column map with kUnmatched for empty rows.
struct PairAssignment {
  std::int32_t src = 0;
  std::int32_t dst = 0;
  std::vector<std::int32_t> map;

  std::int32_t n() const { return static_cast<std::int32_t>(map.size()); }
};

namespace detail {

inline void check_partial_permutation(const std::vector<std::int32_t>& map) {
  std::vector<char> hit(map.size(), 0);
  for (const std::int32_t c : map) {
    if (c == kUnmatched) continue;
    if (c < 0 || c >= static_cast<std::int32_t>(map.size()))
      throw DomainError("assignment column index out of range");
    if (hit[static_cast<std::size_t>(c)]++)
      throw DomainError("assignment maps two rows to one column");
  }
}

}  // namespace detail

inline std::vector<std::int32_t> transpose_map(const std::vector<std::int32_t>& map) {
  std::vector<std::int32_t> inv(map.size(), kUnmatched);
  for (std::size_t r = 0; r < map.size(); ++r)
    if (map[r] != kUnmatched) inv[static_cast<std::size_t>(map[r])] = static_cast<std::int32_t>(r);
  return inv;
}

/// (a . b)[r] = b[a[r]]; composing partial permutations drops broken chains.
inline std::vector<std::int32_t> compose_maps(const std::vector<std::int32_t>& a,
                                              const std::vector<std::int32_t>& b) {
  std::vector<std::int32_t> out(a.size(), kUnmatched);
  for (std::size_t r = 0; r < a.size(); ++r)
    if (a[r] != kUnmatched) out[r] = b[static_cast<std::size_t>(a[r])];
  return out;
}

inline std::vector<std::int32_t> identity_map(std::int32_t n) {
  std::vector<std::int32_t> id(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) id[static_cast<std::size_t>(i)] = i;
  return id;
}

/// All pairwise assignments of a population, as the block structure of the
/// bulk matrix: X_ii = I and X_ji = X_ij^T are implied, only i < j is stored.
class BulkAssignment {
 public:
  BulkAssignment(std::int32_t n_graphs, std::int32_t n_max)
      : N_(n_graphs), n_max_(n_max),
        blocks_(static_cast<std::size_t>(n_graphs) * n_graphs) {
    if (n_graphs < 2) throw DomainError("BulkAssignment: need at least 2 graphs");
    for (std::int32_t i = 0; i < N_; ++i)
      for (std::int32_t j = i + 1; j < N_; ++j)
        blocks_[index(i, j)].assign(static_cast<std::size_t>(n_max), kUnmatched);
  }

  std::int32_t n_graphs() const { return N_; }
  std::int32_t n_max() const { return n_max_; }
  std::int64_t m() const { return static_cast<std::int64_t>(N_) * n_max_; }

  void set_block(std::int32_t i, std::int32_t j, std::vector<std::int32_t> map) {
    if (i == j) throw DomainError("BulkAssignment: diagonal blocks are fixed to identity");
    if (map.size() != static_cast<std::size_t>(n_max_))
      throw DomainError("BulkAssignment: block size mismatch");
    detail::check_partial_permutation(map);
    if (i < j)
      blocks_[index(i, j)] = std::move(map);
    else
      blocks_[index(j, i)] = transpose_map(map);
  }

  /// Row -> column map of X_ij for any i, j (transpose and identity implied).
  std::vector<std::int32_t> map(std::int32_t i, std::int32_t j) const {
    if (i == j) return identity_map(n_max_);
    if (i < j) return blocks_[index(i, j)];
    return transpose_map(blocks_[index(j, i)]);
  }

  const std::vector<std::int32_t>& upper_block(std::int32_t i, std::int32_t j) const {
    return blocks_[index(i, j)];  // requires i < j
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(m(), m());
    for (std::int32_t i = 0; i < N_; ++i) {
      for (std::int32_t r = 0; r < n_max_; ++r)
        full(static_cast<std::int64_t>(i) * n_max_ + r,
             static_cast<std::int64_t>(i) * n_max_ + r) = 1.0;
      for (std::int32_t j = i + 1; j < N_; ++j) {
        const auto& blk = blocks_[index(i, j)];
        for (std::int32_t r = 0; r < n_max_; ++r) {
          if (blk[static_cast<std::size_t>(r)] == kUnmatched) continue;
          const auto row = static_cast<std::int64_t>(i) * n_max_ + r;
          const auto col = static_cast<std::int64_t>(j) * n_max_ + blk[static_cast<std::size_t>(r)];
          full(row, col) = 1.0;
          full(col, row) = 1.0;
        }
      }
    }
    return full;
  }

  Eigen::SparseMatrix<double> to_sparse() const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m()) +
                 static_cast<std::size_t>(N_) * (N_ - 1) * static_cast<std::size_t>(n_max_));
    for (std::int64_t d = 0; d < m(); ++d) trip.emplace_back(d, d, 1.0);
    for (std::int32_t i = 0; i < N_; ++i)
      for (std::int32_t j = i + 1; j < N_; ++j) {
        const auto& blk = blocks_[index(i, j)];
        for (std::int32_t r = 0; r < n_max_; ++r) {
          if (blk[static_cast<std::size_t>(r)] == kUnmatched) continue;
          const auto row = static_cast<std::int64_t>(i) * n_max_ + r;
          const auto col = static_cast<std::int64_t>(j) * n_max_ + blk[static_cast<std::size_t>(r)];
          trip.emplace_back(row, col, 1.0);
          trip.emplace_back(col, row, 1.0);
        }
      }
    Eigen::SparseMatrix<double> s(m(), m());
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
  }

 private:
  std::size_t index(std::int32_t i, std::int32_t j) const {
    return static_cast<std::size_t>(i) * N_ + j;
  }

  std::int32_t N_;
  std::int32_t n_max_;
  std::vector<std::vector<std::int32_t>> blocks_;
};

}  // namespace sgm
