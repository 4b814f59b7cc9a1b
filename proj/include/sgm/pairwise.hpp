#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "sgm/affinity.hpp"
#include "sgm/affinity_cache.hpp"
#include "sgm/assignment.hpp"
#include "sgm/errors.hpp"
#include "sgm/graph.hpp"
#include "sgm/lap.hpp"
#include "sgm/parallel.hpp"

namespace sgm {

// Objective convention, fixed against the dense Lawler oracle in the tests:
//   J(X) = <Psi, X> + 2 * sum_{edge pairs} w * (X[ui,uj]X[vi,vj] + X[ui,vj]X[vi,uj])
// i.e. a matched undirected edge pair contributes twice its kernel value,
// exactly as the vectorized quadratic form counts it over both orientations.

inline double qap_objective(const Eigen::MatrixXd& X, const AffinityPair& aff) {
  double obj = (aff.psi.array() * X.array()).sum();
  for (const auto& e : aff.edges)
    obj += 2.0 * e.w * (X(e.ui, e.uj) * X(e.vi, e.vj) + X(e.ui, e.vj) * X(e.vi, e.uj));
  return obj;
}

inline double qap_objective(const PairAssignment& X, const AffinityPair& aff) {
  double obj = 0.0;
  for (std::int32_t u = 0; u < X.n(); ++u)
    if (X.map[u] != kUnmatched) obj += aff.psi(u, X.map[u]);
  for (const auto& e : aff.edges) {
    if (X.map[e.ui] == e.uj && X.map[e.vi] == e.vj) obj += 2.0 * e.w;
    if (X.map[e.ui] == e.vj && X.map[e.vi] == e.uj) obj += 2.0 * e.w;
  }
  return obj;
}

namespace detail {

inline Eigen::MatrixXd quadratic_gradient(const Eigen::MatrixXd& X, const AffinityPair& aff) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(X.rows(), X.cols());
  for (const auto& e : aff.edges) {
    const double w2 = 2.0 * e.w;
    g(e.ui, e.uj) += w2 * X(e.vi, e.vj);
    g(e.vi, e.vj) += w2 * X(e.ui, e.uj);
    g(e.ui, e.vj) += w2 * X(e.vi, e.uj);
    g(e.vi, e.uj) += w2 * X(e.ui, e.vj);
  }
  return g;
}

inline double quadratic_form(const Eigen::MatrixXd& D, const AffinityPair& aff) {
  double q = 0.0;
  for (const auto& e : aff.edges)
    q += 2.0 * e.w * (D(e.ui, e.uj) * D(e.vi, e.vj) + D(e.ui, e.vj) * D(e.vi, e.uj));
  return q;
}

}  // namespace detail

struct FwOptions {
  int max_iters = 100;
  double tol = 1e-6;
};

struct FwResult {
  Eigen::MatrixXd soft;
  std::vector<double> objective_trace;
  int iters = 0;
};

/// Uniform doubly-stochastic start over the real indices.
inline Eigen::MatrixXd barycenter_start(const AffinityPair& aff) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(aff.n_max, aff.n_max);
  if (aff.n_i > 0 && aff.n_j > 0)
    X.topLeftCorner(aff.n_i, aff.n_j)
        .setConstant(1.0 / static_cast<double>(std::max(aff.n_i, aff.n_j)));
  return X;
}

/// Frank-Wolfe ascent on the QAP objective over the doubly-stochastic
/// relaxation. The linear subproblem is an optimal assignment on the gradient
/// and the step size is the exact maximizer of the quadratic along the
/// direction, so the objective trace is non-decreasing by construction.
inline FwResult frank_wolfe_match(const AffinityPair& aff, const FwOptions& opt,
                                  Eigen::MatrixXd start) {
  const std::int32_t n = aff.n_max;
  FwResult res;
  res.soft = std::move(start);
  double obj = qap_objective(res.soft, aff);
  res.objective_trace.push_back(obj);

  for (int it = 0; it < opt.max_iters; ++it) {
    const Eigen::MatrixXd grad = aff.psi + detail::quadratic_gradient(res.soft, aff);
    const auto target = lap_maximize(grad);

    Eigen::MatrixXd dir = -res.soft;
    for (std::int32_t u = 0; u < n; ++u) {
      const int v = target[u];
      if (u < aff.n_i && v < aff.n_j) dir(u, v) += 1.0;  // dummy hits contribute nothing
    }

    const double slope = (grad.array() * dir.array()).sum();
    res.iters = it + 1;
    if (slope <= 0.0) break;  // the current iterate already maximizes the linearization

    const double curve = detail::quadratic_form(dir, aff);
    double step = 1.0;
    if (curve < 0.0) step = std::min(1.0, -slope / (2.0 * curve));

    res.soft += step * dir;
    const double next = qap_objective(res.soft, aff);
    const double gain = next - obj;
    obj = next;
    res.objective_trace.push_back(obj);
    if (gain <= opt.tol * std::max(1.0, std::abs(obj))) break;
  }
  return res;
}

inline FwResult frank_wolfe_match(const AffinityPair& aff, const FwOptions& opt = {}) {
  return frank_wolfe_match(aff, opt, barycenter_start(aff));
}

/// Round a relaxed assignment to a partial permutation: optimal linear
/// assignment on the padded square matrix; dummy-dummy matches are dropped
/// and a real node sent to a dummy is recorded as unmatched.
inline PairAssignment project_permutation(const Eigen::MatrixXd& soft, std::int32_t n_i,
                                          std::int32_t n_j) {
  const auto n = static_cast<std::int32_t>(soft.rows());
  const auto assignment = lap_maximize(soft);
  PairAssignment out;
  out.map.assign(static_cast<std::size_t>(n), kUnmatched);
  for (std::int32_t u = 0; u < n; ++u) {
    const int v = assignment[u];
    if (u < n_i && v < n_j) out.map[static_cast<std::size_t>(u)] = v;
  }
  return out;
}

namespace detail {

inline Eigen::MatrixXd map_to_matrix(const PairAssignment& X) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(X.n(), X.n());
  for (std::int32_t u = 0; u < X.n(); ++u)
    if (X.map[u] != kUnmatched) M(u, X.map[u]) = 1.0;
  return M;
}

}  // namespace detail

/// Monotone vertex ascent from a rounded assignment: repeat unit-step
/// linearizations (assignment on the gradient), accepting only strict
/// objective improvements. Escapes the interior stationary points the
/// relaxation tends to stop at.
inline PairAssignment vertex_ascent(PairAssignment X, const AffinityPair& aff,
                                    int max_steps = 50) {
  double obj = qap_objective(X, aff);
  for (int t = 0; t < max_steps; ++t) {
    const Eigen::MatrixXd grad =
        aff.psi + detail::quadratic_gradient(detail::map_to_matrix(X), aff);
    const auto assignment = lap_maximize(grad);
    PairAssignment cand;
    cand.src = X.src;
    cand.dst = X.dst;
    cand.map.assign(static_cast<std::size_t>(aff.n_max), kUnmatched);
    for (std::int32_t u = 0; u < aff.n_max; ++u)
      if (u < aff.n_i && assignment[u] < aff.n_j)
        cand.map[static_cast<std::size_t>(u)] = assignment[u];
    const double cand_obj = qap_objective(cand, aff);
    if (cand_obj <= obj + 1e-12) break;
    X = std::move(cand);
    obj = cand_obj;
  }
  return X;
}

/// Best-improvement 2-opt over column swaps of the padded assignment,
/// re-evaluating the full objective per swap. Affordable only on small
/// instances; match_pair gates it behind kTwoOptCutoff.
inline PairAssignment two_opt(PairAssignment X, const AffinityPair& aff, int max_passes = 100) {
  const std::int32_t n = aff.n_max;
  // complete the partial map to a full padded permutation so swaps can also
  // match and unmatch nodes (dummy columns stand for "unmatched")
  std::vector<std::int32_t> cols = X.map;
  {
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    for (const auto c : cols)
      if (c != kUnmatched) used[static_cast<std::size_t>(c)] = 1;
    std::int32_t next = 0;
    for (auto& c : cols) {
      if (c != kUnmatched) continue;
      while (used[static_cast<std::size_t>(next)]) ++next;
      c = next;
      used[static_cast<std::size_t>(next)] = 1;
    }
  }
  auto objective_of = [&](const std::vector<std::int32_t>& full) {
    PairAssignment tmp;
    tmp.map.assign(static_cast<std::size_t>(n), kUnmatched);
    for (std::int32_t u = 0; u < aff.n_i; ++u)
      if (full[static_cast<std::size_t>(u)] < aff.n_j)
        tmp.map[static_cast<std::size_t>(u)] = full[static_cast<std::size_t>(u)];
    return qap_objective(tmp, aff);
  };

  double obj = objective_of(cols);
  for (int pass = 0; pass < max_passes; ++pass) {
    double best_gain = 1e-12;
    std::int32_t best_a = -1, best_b = -1;
    for (std::int32_t a = 0; a < n; ++a)
      for (std::int32_t b = a + 1; b < n; ++b) {
        std::swap(cols[a], cols[b]);
        const double gain = objective_of(cols) - obj;
        std::swap(cols[a], cols[b]);
        if (gain > best_gain) {
          best_gain = gain;
          best_a = a;
          best_b = b;
        }
      }
    if (best_a < 0) break;
    std::swap(cols[best_a], cols[best_b]);
    obj += best_gain;
  }

  PairAssignment out;
  out.src = X.src;
  out.dst = X.dst;
  out.map.assign(static_cast<std::size_t>(n), kUnmatched);
  for (std::int32_t u = 0; u < aff.n_i; ++u)
    if (cols[static_cast<std::size_t>(u)] < aff.n_j)
      out.map[static_cast<std::size_t>(u)] = cols[static_cast<std::size_t>(u)];
  return out;
}

inline constexpr std::int32_t kTwoOptCutoff = 24;

/// Full pairwise solve: Frank-Wolfe from the barycenter and from the
/// node-affinity assignment (plus seeded extra starts on small instances),
/// each rounded and refined by vertex ascent and, below the cutoff, 2-opt;
/// finally one Frank-Wolfe restart from the best vertex. Deterministic.
inline PairAssignment match_pair(const AffinityPair& aff, const FwOptions& opt = {}) {
  PairAssignment best;
  best.map.assign(static_cast<std::size_t>(aff.n_max), kUnmatched);
  double best_obj = qap_objective(best, aff);
  const bool small = aff.n_max <= kTwoOptCutoff;

  auto refine = [&](PairAssignment cand) {
    cand = vertex_ascent(std::move(cand), aff);
    if (!small) return cand;
    for (int round = 0; round < 3; ++round) {
      const double before = qap_objective(cand, aff);
      cand = vertex_ascent(two_opt(std::move(cand), aff), aff);
      if (qap_objective(cand, aff) <= before + 1e-12) break;
    }
    return cand;
  };
  auto consider = [&](PairAssignment cand) {
    const double obj = qap_objective(cand, aff);
    if (obj > best_obj + 1e-12) {
      best = std::move(cand);
      best_obj = obj;
    }
  };

  const auto fw = frank_wolfe_match(aff, opt);
  consider(refine(project_permutation(fw.soft, aff.n_i, aff.n_j)));
  consider(refine(project_permutation(aff.psi, aff.n_i, aff.n_j)));

  if (small) {
    RngStream rng(0x9a1f);  // fixed: restarts are part of the deterministic solve
    for (int s = 0; s < 2; ++s) {
      PairAssignment start;
      start.map = identity_map(aff.n_max);
      for (std::int32_t k = aff.n_max - 1; k > 0; --k)
        std::swap(start.map[k], start.map[rng.uniform_index(static_cast<std::uint64_t>(k) + 1)]);
      for (std::int32_t u = 0; u < aff.n_max; ++u)
        if (u >= aff.n_i || start.map[u] >= aff.n_j) start.map[u] = kUnmatched;
      detail::check_partial_permutation(start.map);
      consider(refine(std::move(start)));
    }
  }

  const auto restart = frank_wolfe_match(aff, opt, detail::map_to_matrix(best));
  consider(refine(project_permutation(restart.soft, aff.n_i, aff.n_j)));
  return best;
}

struct BruteForceResult {
  PairAssignment assignment;
  double objective = 0.0;
};

namespace detail {

inline void enumerate_injections(std::int32_t n_small, std::int32_t n_large,
                                 std::vector<std::int32_t>& map, std::vector<char>& used,
                                 std::int32_t depth, const AffinityPair& aff, bool transposed,
                                 PairAssignment& scratch, BruteForceResult& best) {
  if (depth == n_small) {
    auto& m = scratch.map;
    std::fill(m.begin(), m.end(), kUnmatched);
    if (!transposed) {
      for (std::int32_t u = 0; u < n_small; ++u) m[u] = map[u];
    } else {
      for (std::int32_t v = 0; v < n_small; ++v) m[map[v]] = v;
    }
    const double obj = qap_objective(scratch, aff);
    if (obj > best.objective) {
      best.objective = obj;
      best.assignment = scratch;
    }
    return;
  }
  for (std::int32_t v = 0; v < n_large; ++v) {
    if (used[v]) continue;
    used[v] = 1;
    map[depth] = v;
    enumerate_injections(n_small, n_large, map, used, depth + 1, aff, transposed, scratch, best);
    used[v] = 0;
  }
}

}  // namespace detail

/// Exact maximizer by enumeration over injections of the smaller node set
/// into the larger one. Affinities are non-negative, so some full injection
/// always attains the optimum over all partial matchings.
inline BruteForceResult brute_force_match(const AffinityPair& aff) {
  if (aff.n_i > 8 || aff.n_j > 8)
    throw DomainError("brute_force_match: limited to graphs with <= 8 real nodes");
  const bool transposed = aff.n_i > aff.n_j;
  const std::int32_t n_small = transposed ? aff.n_j : aff.n_i;
  const std::int32_t n_large = transposed ? aff.n_i : aff.n_j;

  BruteForceResult best;
  best.assignment.map.assign(static_cast<std::size_t>(aff.n_max), kUnmatched);
  best.objective = qap_objective(best.assignment, aff);  // empty matching baseline

  std::vector<std::int32_t> map(static_cast<std::size_t>(n_small), kUnmatched);
  std::vector<char> used(static_cast<std::size_t>(n_large), 0);
  PairAssignment scratch;
  scratch.map.assign(static_cast<std::size_t>(aff.n_max), kUnmatched);
  detail::enumerate_injections(n_small, n_large, map, used, 0, aff, transposed, scratch, best);
  return best;
}

/// Solve all pairs i < j (Frank-Wolfe + rounding), assembling the bulk block
/// structure. Pair solves are independent, so they parallelize without
/// affecting the result. A cache, when given, stores each pair's affinity
/// block on disk for reuse across runs.
inline BulkAssignment pairwise_all(const PaddedPopulation& pop, const KernelBandwidths& bw,
                                   const FwOptions& opt = {}, int workers = 1,
                                   const AffinityCache* cache = nullptr) {
  const auto N = static_cast<std::int32_t>(pop.size());
  BulkAssignment bulk(N, pop.n_max);

  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  pairs.reserve(static_cast<std::size_t>(N) * (N - 1) / 2);
  for (std::int32_t i = 0; i < N; ++i)
    for (std::int32_t j = i + 1; j < N; ++j) pairs.emplace_back(i, j);

  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const auto aff = cache ? cache->get(pop, i, j)
                           : make_affinity_pair(pop.graph(i), pop.graph(j), bw, pop.n_max);
    auto solved = match_pair(aff, opt);
    bulk.set_block(i, j, std::move(solved.map));
  });
  return bulk;
}

}  // namespace sgm
