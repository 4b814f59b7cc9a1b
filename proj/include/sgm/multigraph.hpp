#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sgm/affinity.hpp"
#include "sgm/assignment.hpp"
#include "sgm/errors.hpp"
#include "sgm/graph.hpp"
#include "sgm/lap.hpp"
#include "sgm/parallel.hpp"
#include "sgm/rng.hpp"

namespace sgm {

namespace detail {

/// ||A - B||_F^2 for partial-permutation maps: one per entry present in only
/// one of them, two per row mapped to different columns.
inline double sq_map_diff(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r] == b[r]) continue;
    s += (a[r] != kUnmatched ? 1.0 : 0.0) + (b[r] != kUnmatched ? 1.0 : 0.0);
  }
  return s;
}

}  // namespace detail

/// Unitary consistency of graph q against the whole bulk:
///   C_u(q) = 1 - sum_{i<j} ||X_ij - X_iq X_qj||_F / 2 / (n N(N-1)/2),
/// with n the padded block size.
inline double graph_consistency(std::int32_t q, const BulkAssignment& bulk) {
  const std::int32_t N = bulk.n_graphs();
  double total = 0.0;
  for (std::int32_t i = 0; i < N; ++i) {
    const auto x_iq = bulk.map(i, q);
    for (std::int32_t j = i + 1; j < N; ++j) {
      if (i == q || j == q) continue;  // those terms vanish identically
      const auto through = compose_maps(x_iq, bulk.map(q, j));
      total += std::sqrt(detail::sq_map_diff(bulk.upper_block(i, j), through)) / 2.0;
    }
  }
  const double denom = static_cast<double>(bulk.n_max()) * N * (N - 1) / 2.0;
  return 1.0 - total / denom;
}

inline double average_graph_consistency(const BulkAssignment& bulk) {
  double s = 0.0;
  for (std::int32_t q = 0; q < bulk.n_graphs(); ++q) s += graph_consistency(q, bulk);
  return s / bulk.n_graphs();
}

/// Per-node consistency: for node r of graph k,
///   C(r) = 1 - sum_{i<j} ||Y_ij(r,:)||_F / 2 / (N(N-1)/2),  Y_ij = X_kj - X_ki X_ij.
/// Computed for every padded node, dummies included: the measure cannot tell
/// real-dummy matches from real-real ones.
inline std::vector<std::vector<double>> node_consistency(const BulkAssignment& bulk) {
  const std::int32_t N = bulk.n_graphs();
  const std::int32_t n = bulk.n_max();
  std::vector<std::vector<double>> acc(static_cast<std::size_t>(N),
                                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (std::int32_t k = 0; k < N; ++k) {
    std::vector<std::vector<std::int32_t>> from_k(static_cast<std::size_t>(N));
    for (std::int32_t j = 0; j < N; ++j) from_k[j] = bulk.map(k, j);
    auto& row = acc[static_cast<std::size_t>(k)];
    for (std::int32_t i = 0; i < N; ++i) {
      for (std::int32_t j = i + 1; j < N; ++j) {
        if (i == k) continue;  // Y = X_kj - X_kk X_kj = 0
        const auto through = compose_maps(from_k[i], bulk.map(i, j));
        const auto& direct = from_k[j];
        for (std::int32_t r = 0; r < n; ++r) {
          if (direct[r] == through[r]) continue;
          const double sq = (direct[r] != kUnmatched ? 1.0 : 0.0) +
                            (through[r] != kUnmatched ? 1.0 : 0.0);
          row[static_cast<std::size_t>(r)] += std::sqrt(sq) / 2.0;
        }
      }
    }
  }
  const double denom = static_cast<double>(N) * (N - 1) / 2.0;
  for (auto& row : acc)
    for (auto& v : row) v = 1.0 - v / denom;
  return acc;
}

// ---------------------------------------------------------------------------
// mSync: spectral permutation synchronization
// ---------------------------------------------------------------------------

struct MsyncOptions {
  std::int64_t dense_threshold = 3000;  // above this, use subspace iteration
  double tol = 1e-8;
  int max_iters = 1000;
  int extra_vectors = 10;
  std::uint64_t seed = 0x5eed;  // deterministic start basis for the iterative path
  int refine_sweeps = 10;       // coordinate-ascent rounding passes on the sync objective
};

struct MsyncResult {
  BulkAssignment bulk;
  std::vector<std::vector<std::int32_t>> universe;  // node -> universe slot, per graph
  std::int32_t d = 0;
  double residual = 0.0;
};

namespace detail {

struct EigenPairs {
  Eigen::MatrixXd vectors;  // m x d, largest algebraic eigenvalues last-to-first order agnostic
  Eigen::VectorXd values;   // aligned with the columns of `vectors`
  double residual = 0.0;
};

/// Top-d eigenpairs (largest algebraic eigenvalues) of a symmetric sparse
/// matrix by blocked subspace iteration with Rayleigh-Ritz extraction.
/// `strict` controls whether missing the tolerance is an error or returns
/// the best basis found.
inline EigenPairs top_eigenpairs_sparse(const Eigen::SparseMatrix<double>& S, int d,
                                        const MsyncOptions& opt, bool strict = true) {
  const auto m = static_cast<Eigen::Index>(S.rows());
  const int k = std::min<Eigen::Index>(m, d + opt.extra_vectors);

  RngStream rng(opt.seed);
  Eigen::MatrixXd V(m, k);
  for (Eigen::Index r = 0; r < m; ++r)
    for (int c = 0; c < k; ++c) V(r, c) = rng.normal();
  {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
    V = qr.householderQ() * Eigen::MatrixXd::Identity(m, k);
  }

  EigenPairs out;
  out.residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iters; ++it) {
    Eigen::MatrixXd W = S * V;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
    V = qr.householderQ() * Eigen::MatrixXd::Identity(m, k);

    if (it % 5 == 4 || it == opt.max_iters - 1) {
      const Eigen::MatrixXd SV = S * V;
      const Eigen::MatrixXd T = V.transpose() * SV;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (T + T.transpose()));
      // eigenvalues ascending; the top-d algebraic ones sit in the last columns
      const Eigen::MatrixXd Y = es.eigenvectors().rightCols(d);
      const Eigen::VectorXd theta = es.eigenvalues().tail(d);
      out.vectors = V * Y;
      out.values = theta;
      const Eigen::MatrixXd R = SV * Y - out.vectors * theta.asDiagonal();
      const double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());
      out.residual = R.norm() / (scale * std::sqrt(static_cast<double>(d)));
      if (out.residual < opt.tol) break;
    }
  }
  if (strict && !(out.residual < opt.tol)) {
    std::ostringstream msg;
    msg << "eigensolver did not converge (residual " << out.residual << ", tolerance " << opt.tol
        << ")";
    throw SolverError(msg.str());
  }
  return out;
}

/// Dense path below the threshold, subspace iteration above it.
inline EigenPairs top_eigenpairs(const BulkAssignment& bulk, int d, const MsyncOptions& opt,
                                 bool strict = true) {
  if (bulk.m() <= opt.dense_threshold) {
    const Eigen::MatrixXd S = bulk.to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
    return {es.eigenvectors().rightCols(d), es.eigenvalues().tail(d), 0.0};
  }
  return top_eigenpairs_sparse(bulk.to_sparse(), d, opt, strict);
}

}  // namespace detail

/// Permutation synchronization: top-d eigenvectors of the bulk matrix,
/// anchored on graph 0, each U_q recovered by optimal assignment of
/// block_q * block_0^T, and X_ij rebuilt as U_i U_j^T. The output satisfies
/// cycle consistency exactly, with every padded node mapped to one slot.
inline MsyncResult msync(const BulkAssignment& init, std::int32_t d, MsyncOptions opt = {}) {
  const std::int32_t N = init.n_graphs();
  const std::int32_t n = init.n_max();
  if (d != n)
    throw DomainError("msync: universe size must equal the padded size for binary output");

  const auto pairs = detail::top_eigenpairs(init, d, opt);
  // scale columns by sqrt(lambda_+): anchoring products then weight each
  // consistent direction by its spectral strength
  const Eigen::MatrixXd V =
      pairs.vectors * pairs.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();

  const Eigen::MatrixXd v_ref = V.middleRows(0, n);
  MsyncResult res{BulkAssignment(N, n), {}, d, pairs.residual};
  res.universe.resize(static_cast<std::size_t>(N));
  for (std::int32_t q = 0; q < N; ++q) {
    const Eigen::MatrixXd score = V.middleRows(static_cast<Eigen::Index>(q) * n, n) *
                                  v_ref.transpose();
    const auto assignment = lap_maximize(score);
    auto& u = res.universe[static_cast<std::size_t>(q)];
    u.assign(static_cast<std::size_t>(n), kUnmatched);
    for (std::int32_t r = 0; r < n; ++r) u[static_cast<std::size_t>(r)] = assignment[r];
  }

  // coordinate ascent on the synchronization objective sum <U_i U_j^T, X_ij>:
  // each U_q is re-solved against the consensus of the others, which only
  // ever increases agreement with the input and leaves consistent inputs
  // untouched
  for (int sweep = 0; sweep < opt.refine_sweeps; ++sweep) {
    bool changed = false;
    for (std::int32_t q = 0; q < N; ++q) {
      Eigen::MatrixXd consensus = Eigen::MatrixXd::Zero(n, n);
      for (std::int32_t r = 0; r < N; ++r) {
        if (r == q) continue;
        const auto to_r = init.map(q, r);
        const auto& u_r = res.universe[static_cast<std::size_t>(r)];
        for (std::int32_t u = 0; u < n; ++u)
          if (to_r[static_cast<std::size_t>(u)] != kUnmatched)
            consensus(u, u_r[static_cast<std::size_t>(to_r[static_cast<std::size_t>(u)])]) += 1.0;
      }
      const auto assignment = lap_maximize(consensus);
      auto& u_q = res.universe[static_cast<std::size_t>(q)];
      for (std::int32_t r = 0; r < n; ++r) {
        if (u_q[static_cast<std::size_t>(r)] != assignment[r]) changed = true;
        u_q[static_cast<std::size_t>(r)] = assignment[r];
      }
    }
    if (!changed) break;
  }

  for (std::int32_t i = 0; i < N; ++i) {
    for (std::int32_t j = i + 1; j < N; ++j) {
      // X_ij = U_i U_j^T: node r -> node of j sharing r's universe slot
      const auto inv_j = transpose_map(res.universe[static_cast<std::size_t>(j)]);
      std::vector<std::int32_t> map(static_cast<std::size_t>(n), kUnmatched);
      for (std::int32_t r = 0; r < n; ++r)
        map[static_cast<std::size_t>(r)] =
            inv_j[static_cast<std::size_t>(res.universe[static_cast<std::size_t>(i)][r])];
      res.bulk.set_block(i, j, std::move(map));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// mALS: low-rank matrix recovery with ADMM on the factorization X = A B^T
// ---------------------------------------------------------------------------

/// Psi_ij supplier for the linear term; padded n_max x n_max blocks with
/// dummy rows and columns exactly zero.
using NodeAffinityProvider = std::function<Eigen::MatrixXd(std::int32_t, std::int32_t)>;

inline NodeAffinityProvider make_node_affinity_provider(const PaddedPopulation& pop,
                                                        const KernelBandwidths& bw) {
  return [&pop, bw](std::int32_t i, std::int32_t j) {
    return node_affinity(pop.graph(i), pop.graph(j), bw.gamma_v, pop.n_max);
  };
}

struct MalsOptions {
  double alpha = 0.1;      // sparsity weight on <1, X>
  double lambda = 0.5;     // nuclear-norm weight
  std::int32_t rank = -1;  // factorization rank d; -1 means n_max
  double threshold = 0.5;  // binarization threshold t
  double admm_mu = 64.0;   // ADMM penalty; large values keep X near the factorization
  int max_sweeps = 50;
  double rel_tol = 1e-4;
};

struct MalsResult {
  BulkAssignment bulk;
  std::vector<double> objective_trace;  // -<K - alpha, X> + lambda/2 (|A|^2 + |B|^2), per sweep
  std::vector<std::string> warnings;
  bool converged = false;
  int sweeps = 0;
};

inline MalsResult mals(const BulkAssignment& init, const std::vector<std::int32_t>& real_size,
                       const NodeAffinityProvider& psi, MalsOptions opt = {}, int workers = 1) {
  const std::int32_t N = init.n_graphs();
  const std::int32_t n = init.n_max();
  const Eigen::Index m = static_cast<Eigen::Index>(N) * n;
  const std::int32_t d = opt.rank <= 0 ? n : opt.rank;
  if (!(opt.threshold > 0.0 && opt.threshold < 1.0))
    throw DomainError("mals: threshold must lie in (0, 1)");
  if (static_cast<std::int32_t>(real_size.size()) != N)
    throw DomainError("mals: real_size must have one entry per graph");

  MalsResult res{BulkAssignment(N, n), {}, {}, false, 0};

  const double mu = opt.admm_mu;
  Eigen::MatrixXd X = init.to_dense();
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(m, m);
  // warm-start the factors with the best rank-d PSD approximation of the
  // initialization, so A B^T starts out reproducing it; best effort is fine,
  // the sweeps refine whatever basis this produces
  Eigen::MatrixXd A, B;
  {
    MsyncOptions eig_opt;
    eig_opt.tol = 1e-4;
    eig_opt.max_iters = 200;
    const auto pairs = detail::top_eigenpairs(init, d, eig_opt, /*strict=*/false);
    if (!(pairs.residual < eig_opt.tol)) {
      std::ostringstream warn;
      warn << "factor warm-start basis residual " << pairs.residual;
      res.warnings.push_back(warn.str());
    }
    const Eigen::VectorXd scale = pairs.values.cwiseMax(0.0).cwiseSqrt();
    A = pairs.vectors * scale.asDiagonal();
    B = A;
  }

  // constant part of <W, X> from the fixed identity diagonal blocks
  double diag_dot = 0.0;
  for (std::int32_t q = 0; q < N; ++q) {
    const Eigen::MatrixXd psi_qq = psi(q, q);
    diag_dot += psi_qq.diagonal().sum() - opt.alpha * n;
  }

  struct Survivor {
    std::int32_t i, j, r, c;
    double value;
  };
  std::vector<Survivor> best_survivors;
  double best_objective = std::numeric_limits<double>::infinity();

  std::vector<std::pair<std::int32_t, std::int32_t>> off_pairs;
  for (std::int32_t i = 0; i < N; ++i)
    for (std::int32_t j = i + 1; j < N; ++j) off_pairs.emplace_back(i, j);

  double prev_objective = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    // A <- (Y + mu X) B (lambda I + mu B^T B)^-1, row blocks independent
    {
      const Eigen::MatrixXd gram = opt.lambda * Eigen::MatrixXd::Identity(d, d) +
                                   mu * (B.transpose() * B);
      const Eigen::MatrixXd solve = gram.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
      parallel_for(static_cast<std::size_t>(N), workers, [&](std::size_t q) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(q) * n;
        A.middleRows(r0, n) =
            (Y.middleRows(r0, n) + mu * X.middleRows(r0, n)) * B * solve;
      });
    }
    // B <- (Y^T + mu X) A (lambda I + mu A^T A)^-1
    {
      const Eigen::MatrixXd gram = opt.lambda * Eigen::MatrixXd::Identity(d, d) +
                                   mu * (A.transpose() * A);
      const Eigen::MatrixXd solve = gram.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
      parallel_for(static_cast<std::size_t>(N), workers, [&](std::size_t q) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(q) * n;
        B.middleRows(r0, n) =
            (Y.middleCols(r0, n).transpose() + mu * X.middleRows(r0, n)) * A * solve;
      });
    }

    // X <- proj_C(A B^T + (W - Y)/mu): symmetrize, clamp to [0,1], identity
    // diagonal blocks, zero dummy rows/cols of off-diagonal blocks
    std::vector<double> pair_dots(off_pairs.size(), 0.0);
    parallel_for(off_pairs.size(), workers, [&](std::size_t k) {
      const auto [i, j] = off_pairs[k];
      const Eigen::Index ri = static_cast<Eigen::Index>(i) * n;
      const Eigen::Index rj = static_cast<Eigen::Index>(j) * n;
      const Eigen::MatrixXd w_ij = psi(i, j).array() - opt.alpha;
      const Eigen::MatrixXd z1 = A.middleRows(ri, n) * B.middleRows(rj, n).transpose() +
                                 (w_ij - Y.block(ri, rj, n, n)) / mu;
      const Eigen::MatrixXd z2 = A.middleRows(rj, n) * B.middleRows(ri, n).transpose() +
                                 (w_ij.transpose() - Y.block(rj, ri, n, n)) / mu;
      Eigen::MatrixXd xb = (0.5 * (z1 + z2.transpose())).cwiseMax(0.0).cwiseMin(1.0);
      if (real_size[i] < n) xb.bottomRows(n - real_size[i]).setZero();
      if (real_size[j] < n) xb.rightCols(n - real_size[j]).setZero();
      X.block(ri, rj, n, n) = xb;
      X.block(rj, ri, n, n) = xb.transpose();
      pair_dots[k] = (w_ij.array() * xb.array()).sum();
    });
    parallel_for(static_cast<std::size_t>(N), workers, [&](std::size_t q) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(q) * n;
      X.block(r0, r0, n, n) = Eigen::MatrixXd::Identity(n, n);
    });

    // Y <- Y + mu (X - A B^T), and the primal residual alongside
    std::vector<double> residual_parts(static_cast<std::size_t>(N), 0.0);
    parallel_for(static_cast<std::size_t>(N), workers, [&](std::size_t q) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(q) * n;
      const Eigen::MatrixXd gap = X.middleRows(r0, n) - A.middleRows(r0, n) * B.transpose();
      residual_parts[q] = gap.squaredNorm();
      Y.middleRows(r0, n) += mu * gap;
    });

    double w_dot = diag_dot;
    for (const double v : pair_dots) w_dot += 2.0 * v;
    const double objective =
        -w_dot + 0.5 * opt.lambda * (A.squaredNorm() + B.squaredNorm());
    res.objective_trace.push_back(objective);
    res.sweeps = sweep + 1;

    if (objective > prev_objective + 1e-8) {
      std::ostringstream warn;
      warn << "objective increased at sweep " << sweep + 1 << " by "
           << objective - prev_objective;
      res.warnings.push_back(warn.str());
    }

    if (objective < best_objective) {
      best_objective = objective;
      best_survivors.clear();
      for (std::size_t k = 0; k < off_pairs.size(); ++k) {
        const auto [i, j] = off_pairs[k];
        const Eigen::Index ri = static_cast<Eigen::Index>(i) * n;
        const Eigen::Index rj = static_cast<Eigen::Index>(j) * n;
        for (std::int32_t r = 0; r < n; ++r)
          for (std::int32_t c = 0; c < n; ++c)
            if (X(ri + r, rj + c) >= opt.threshold)
              best_survivors.push_back({i, j, r, c, X(ri + r, rj + c)});
      }
    }

    double residual_sq = 0.0;
    for (const double v : residual_parts) residual_sq += v;
    const double rel_residual = std::sqrt(residual_sq) / std::max(1.0, X.norm());
    const double rel_gain = std::abs(prev_objective - objective) /
                            std::max(1.0, std::abs(objective));
    prev_objective = objective;
    if (rel_residual < opt.rel_tol && rel_gain < 1e-6) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged)
    res.warnings.push_back("stopped after max sweeps without meeting the tolerance");

  // Binarize the best iterate at t and project each block to a partial
  // permutation by assignment restricted to the surviving entries; rows with
  // no survivor stay unmatched.
  std::vector<std::vector<Survivor>> per_pair(off_pairs.size());
  {
    std::vector<std::size_t> pair_index(static_cast<std::size_t>(N) * N, 0);
    for (std::size_t k = 0; k < off_pairs.size(); ++k)
      pair_index[static_cast<std::size_t>(off_pairs[k].first) * N + off_pairs[k].second] = k;
    for (const auto& s : best_survivors)
      per_pair[pair_index[static_cast<std::size_t>(s.i) * N + s.j]].push_back(s);
  }
  parallel_for(off_pairs.size(), workers, [&](std::size_t k) {
    const auto [i, j] = off_pairs[k];
    if (per_pair[k].empty()) {
      res.bulk.set_block(i, j, std::vector<std::int32_t>(static_cast<std::size_t>(n), kUnmatched));
      return;
    }
    Eigen::MatrixXd score = Eigen::MatrixXd::Constant(n, n, -1.0);
    for (const auto& s : per_pair[k]) score(s.r, s.c) = s.value;
    const auto assignment = lap_maximize(score);
    std::vector<std::int32_t> map(static_cast<std::size_t>(n), kUnmatched);
    for (std::int32_t r = 0; r < n; ++r)
      if (assignment[r] >= 0 && score(r, assignment[r]) > 0.0)
        map[static_cast<std::size_t>(r)] = assignment[r];
    res.bulk.set_block(i, j, std::move(map));
  });
  return res;
}

// ---------------------------------------------------------------------------
// CAO-cst: consistency-driven block replacement
// ---------------------------------------------------------------------------

struct CaoOptions {
  int max_sweeps = 10;
};

struct CaoResult {
  BulkAssignment bulk;
  std::vector<double> consistency_trace;  // average graph consistency, before + per sweep
  int sweeps = 0;
};

namespace detail {

// one Eq.-4 term: ||X_ab - X_aq X_qb||_F / 2 for a < b, anchor q
inline double consistency_term(const BulkAssignment& bulk, std::int32_t a, std::int32_t b,
                               std::int32_t q) {
  if (q == a || q == b) return 0.0;
  const auto through = compose_maps(bulk.map(a, q), bulk.map(q, b));
  return std::sqrt(sq_map_diff(bulk.upper_block(a, b), through)) / 2.0;
}

// total over the (pair, anchor) terms that involve block (i, j)
inline double affected_terms(const BulkAssignment& bulk, std::int32_t i, std::int32_t j) {
  const std::int32_t N = bulk.n_graphs();
  double s = 0.0;
  for (std::int32_t q = 0; q < N; ++q) s += consistency_term(bulk, i, j, q);
  for (std::int32_t b = 0; b < N; ++b) {
    if (b == i || b == j) continue;
    s += consistency_term(bulk, std::min(i, b), std::max(i, b), j);
    s += consistency_term(bulk, std::min(j, b), std::max(j, b), i);
  }
  return s;
}

}  // namespace detail

/// Consistency-driven sweeps: each block X_ij is a candidate for replacement
/// by X_ik X_kj over intermediates k; the candidate with the best mean
/// pairwise-consistency score wins (ties to the smallest k) and is adopted
/// only when the population-average consistency does not decrease, so the
/// per-sweep trace is non-decreasing by construction.
inline CaoResult cao_cst(const BulkAssignment& init, CaoOptions opt = {}) {
  const std::int32_t N = init.n_graphs();
  const std::int32_t n = init.n_max();
  CaoResult res{init, {}, 0};
  res.consistency_trace.push_back(average_graph_consistency(res.bulk));

  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    bool changed = false;
    for (std::int32_t i = 0; i < N; ++i) {
      for (std::int32_t j = i + 1; j < N; ++j) {
        // anchor products X_ia X_aj, reused for scoring every candidate
        std::vector<std::vector<std::int32_t>> through(static_cast<std::size_t>(N));
        for (std::int32_t a = 0; a < N; ++a) {
          if (a == i || a == j) continue;
          through[static_cast<std::size_t>(a)] = compose_maps(res.bulk.map(i, a), res.bulk.map(a, j));
        }
        const auto score = [&](const std::vector<std::int32_t>& cand) {
          double s = 0.0;
          int cnt = 0;
          for (std::int32_t a = 0; a < N; ++a) {
            if (a == i || a == j) continue;
            s += 1.0 - std::sqrt(detail::sq_map_diff(cand, through[static_cast<std::size_t>(a)])) /
                           (2.0 * n);
            ++cnt;
          }
          return cnt == 0 ? 1.0 : s / cnt;
        };

        const double current_score = score(res.bulk.upper_block(i, j));
        double best_score = current_score;
        std::int32_t best_k = -1;
        for (std::int32_t k = 0; k < N; ++k) {
          if (k == i || k == j) continue;
          const double cand_score = score(through[static_cast<std::size_t>(k)]);
          if (cand_score > best_score + 1e-12) {
            best_score = cand_score;
            best_k = k;
          }
        }
        if (best_k < 0) continue;

        // adopt only if the global Eq.-4 total does not get worse
        const double before = detail::affected_terms(res.bulk, i, j);
        const auto saved = res.bulk.upper_block(i, j);
        res.bulk.set_block(i, j, through[static_cast<std::size_t>(best_k)]);
        const double after = detail::affected_terms(res.bulk, i, j);
        if (after > before + 1e-12) {
          res.bulk.set_block(i, j, saved);
        } else {
          changed = true;
        }
      }
    }
    res.sweeps = sweep + 1;
    res.consistency_trace.push_back(average_graph_consistency(res.bulk));
    if (!changed) break;
  }
  return res;
}

}  // namespace sgm
