#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sgm/errors.hpp"
#include "sgm/graph.hpp"
#include "sgm/rng.hpp"

namespace sgm {

struct KernelBandwidths {
  double gamma_v = 0.0;  // node kernel, 1/length^2
  double gamma_e = 0.0;  // edge kernel, 1/radians^2
};

struct BandwidthEstimateInfo {
  std::uint64_t node_pairs_total = 0;
  std::uint64_t node_pairs_used = 0;
  std::uint64_t edge_pairs_total = 0;
  std::uint64_t edge_pairs_used = 0;
  std::uint64_t subsample_seed = 0;
};

namespace detail {

inline double median(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (n % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// 1 / median of the given squared distances; the kernel then maps the median
/// pair to exactly exp(-1).
inline double inverse_median_bandwidth(std::vector<double> squared_distances) {
  if (squared_distances.empty())
    throw DomainError("inverse_median_bandwidth: no distances to take a median of");
  const double med = detail::median(squared_distances);
  if (!(med > 0.0))
    throw DomainError("inverse_median_bandwidth: degenerate (zero) median distance");
  return 1.0 / med;
}

/// Median-heuristic bandwidths over all cross-graph real node pairs and edge
/// pairs, one median per attribute. When the pair count exceeds `max_pairs`
/// the median is taken over that many uniformly drawn pairs instead; the
/// subsample size and seed go into `info` for run metadata.
inline KernelBandwidths estimate_bandwidths(const PaddedPopulation& pop,
                                            std::uint64_t max_pairs = 1000000,
                                            std::uint64_t subsample_seed = 0,
                                            BandwidthEstimateInfo* info = nullptr) {
  const std::size_t N = pop.size();
  if (N < 2) throw DomainError("estimate_bandwidths: need at least 2 graphs");

  BandwidthEstimateInfo local;
  local.subsample_seed = subsample_seed;

  struct PairBlock {
    std::size_t i, j;
    std::uint64_t count;  // cross pairs contributed by this graph pair
  };

  auto collect = [&](auto item_count, auto squared_value, std::uint64_t& total_out,
                     std::uint64_t& used_out, std::uint64_t stream) {
    std::vector<PairBlock> blocks;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j) {
        const std::uint64_t c =
            static_cast<std::uint64_t>(item_count(i)) * static_cast<std::uint64_t>(item_count(j));
        if (c == 0) continue;
        blocks.push_back({i, j, c});
        total += c;
      }
    total_out = total;
    std::vector<double> values;
    if (total <= max_pairs) {
      used_out = total;
      values.reserve(static_cast<std::size_t>(total));
      for (const auto& b : blocks)
        for (std::uint64_t a = 0; a < item_count(b.i); ++a)
          for (std::uint64_t c = 0; c < item_count(b.j); ++c)
            values.push_back(squared_value(b.i, a, b.j, c));
    } else {
      used_out = max_pairs;
      values.reserve(static_cast<std::size_t>(max_pairs));
      RngStream rng(subsample_seed, stream);
      for (std::uint64_t k = 0; k < max_pairs; ++k) {
        std::uint64_t r = rng.uniform_index(total);
        std::size_t bi = 0;
        while (r >= blocks[bi].count) r -= blocks[bi++].count;
        const auto& b = blocks[bi];
        values.push_back(squared_value(b.i, r / item_count(b.j), b.j, r % item_count(b.j)));
      }
    }
    return values;
  };

  auto node_count = [&](std::size_t q) { return static_cast<std::uint64_t>(pop.real_size[q]); };
  auto node_sq = [&](std::size_t i, std::uint64_t u, std::size_t j, std::uint64_t v) {
    return (pop.graph(i).nodes()[u].vec() - pop.graph(j).nodes()[v].vec()).squaredNorm();
  };
  auto node_values = collect(node_count, node_sq, local.node_pairs_total, local.node_pairs_used, 1);

  KernelBandwidths bw;
  bw.gamma_v = inverse_median_bandwidth(std::move(node_values));

  auto edge_count = [&](std::size_t q) {
    return static_cast<std::uint64_t>(pop.graph(q).edges().size());
  };
  auto edge_sq = [&](std::size_t i, std::uint64_t a, std::size_t j, std::uint64_t b) {
    const double d = pop.graph(i).edges()[a].length - pop.graph(j).edges()[b].length;
    return d * d;
  };
  auto edge_values = collect(edge_count, edge_sq, local.edge_pairs_total, local.edge_pairs_used, 2);
  if (edge_values.empty())
    throw DomainError("estimate_bandwidths: population has no cross-graph edge pairs");
  bw.gamma_e = inverse_median_bandwidth(std::move(edge_values));

  if (info) *info = local;
  return bw;
}

/// Node-affinity block Psi for one graph pair: Gaussian kernel of the chordal
/// distance for real node pairs, exactly zero on dummy rows and columns.
inline Eigen::MatrixXd node_affinity(const SphericalGraph& gi, const SphericalGraph& gj,
                                     double gamma_v, std::int32_t n_max) {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(n_max, n_max);
  for (std::int32_t u = 0; u < gi.size(); ++u)
    for (std::int32_t v = 0; v < gj.size(); ++v)
      psi(u, v) =
          std::exp(-gamma_v * (gi.nodes()[u].vec() - gj.nodes()[v].vec()).squaredNorm());
  return psi;
}

/// One affinity entry per cross pair of real edges; the full Lawler matrix is
/// never materialized, its quadratic term is evaluated through this support.
struct EdgePairAffinity {
  std::int32_t ui, vi;  // edge of graph i (ui < vi)
  std::int32_t uj, vj;  // edge of graph j (uj < vj)
  double w;
};

inline std::vector<EdgePairAffinity> edge_affinity_sparse(const SphericalGraph& gi,
                                                          const SphericalGraph& gj,
                                                          double gamma_e) {
  std::vector<EdgePairAffinity> out;
  out.reserve(gi.edges().size() * gj.edges().size());
  for (const auto& ei : gi.edges())
    for (const auto& ej : gj.edges()) {
      const double d = ei.length - ej.length;
      out.push_back({ei.u, ei.v, ej.u, ej.v, std::exp(-gamma_e * d * d)});
    }
  return out;
}

struct AffinityPair {
  Eigen::MatrixXd psi;                   // n_max x n_max, dummies zeroed
  std::vector<EdgePairAffinity> edges;   // sparse quadratic support
  std::int32_t n_i = 0, n_j = 0;         // real sizes
  std::int32_t n_max = 0;
};

inline AffinityPair make_affinity_pair(const SphericalGraph& gi, const SphericalGraph& gj,
                                       const KernelBandwidths& bw, std::int32_t n_max) {
  return {node_affinity(gi, gj, bw.gamma_v, n_max), edge_affinity_sparse(gi, gj, bw.gamma_e),
          gi.size(), gj.size(), n_max};
}

}  // namespace sgm
