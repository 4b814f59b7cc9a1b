#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sgm/beta_binomial.hpp"
#include "sgm/errors.hpp"
#include "sgm/graph.hpp"
#include "sgm/hull.hpp"
#include "sgm/rng.hpp"
#include "sgm/sphere.hpp"

namespace sgm {

/// Parameters of the synthetic population generator. sigma_pert is a standard
/// deviation; it is squared before the beta-binomial moment match. mu_pert = 0
/// disables the outlier/suppression step entirely.
struct GenerationParams {
  int n_graphs = 137;
  int n_ref = 88;
  double kappa = 1000.0;      // vMF concentration of the node perturbation
  double mu_pert = 12.0;      // mean outlier / suppression count
  double sigma_pert = 4.0;    // std of the counts
  double edge_del_p = 0.10;   // fraction of triangulation edges to delete
  int nu = 30;                // beta-binomial support size
  int trials = 10000;         // reference-set sampling repetitions
  std::uint64_t seed = 0;

  void validate() const {
    if (n_graphs < 1) throw ConfigError("n_graphs must be >= 1");
    if (n_ref < 4) throw ConfigError("n_ref must be >= 4");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (mu_pert < 0.0) throw ConfigError("mu_pert must be >= 0");
    if (mu_pert > 0.0 && !(sigma_pert > 0.0))
      throw ConfigError("sigma_pert must be positive when mu_pert > 0");
    if (mu_pert > 0.0 && !(mu_pert < nu)) throw ConfigError("mu_pert must be < nu");
    if (!(edge_del_p >= 0.0 && edge_del_p < 1.0))
      throw ConfigError("edge_del_p must lie in [0, 1)");
    if (nu < 1) throw ConfigError("nu must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (mu_pert > 0.0 && n_ref <= nu)
      throw ConfigError("n_ref must exceed nu so suppression cannot exhaust a graph");
  }

  nlohmann::json to_json() const {
    return {{"n_graphs", n_graphs}, {"n_ref", n_ref},         {"kappa", kappa},
            {"mu_pert", mu_pert},   {"sigma_pert", sigma_pert}, {"edge_del_p", edge_del_p},
            {"nu", nu},             {"trials", trials},        {"seed", seed}};
  }

  static GenerationParams from_json(const nlohmann::json& j) {
    GenerationParams p;
    p.n_graphs = j.value("n_graphs", p.n_graphs);
    p.n_ref = j.value("n_ref", p.n_ref);
    p.kappa = j.value("kappa", p.kappa);
    p.mu_pert = j.value("mu_pert", p.mu_pert);
    p.sigma_pert = j.value("sigma_pert", p.sigma_pert);
    p.edge_del_p = j.value("edge_del_p", p.edge_del_p);
    p.nu = j.value("nu", p.nu);
    p.trials = j.value("trials", p.trials);
    p.seed = j.value("seed", p.seed);
    return p;
  }
};

struct ReferenceSet {
  std::vector<SphericalPoint> points;
  double min_distance = 0.0;
};

inline double min_pairwise_geodesic(const std::vector<SphericalPoint>& pts) {
  double best = std::numbers::pi;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::min(best, geodesic_distance(pts[i], pts[j]));
  return best;
}

/// Best of `trials` independent uniform samplings: the set maximizing the
/// minimum pairwise geodesic distance. Mimics the spacing of real node sets,
/// whose points cannot lie arbitrarily close to each other.
inline ReferenceSet make_reference_set(int n_ref, int trials, RngStream& rng) {
  if (n_ref < 2) throw DomainError("make_reference_set: n_ref must be >= 2");
  if (trials < 1) throw DomainError("make_reference_set: trials must be >= 1");
  ReferenceSet best;
  best.min_distance = -1.0;
  for (int t = 0; t < trials; ++t) {
    auto pts = sample_uniform_sphere(static_cast<std::size_t>(n_ref), rng);
    const double d = min_pairwise_geodesic(pts);
    if (d > best.min_distance) {
      best.points = std::move(pts);
      best.min_distance = d;
    }
  }
  return best;
}

struct TaggedPoint {
  SphericalPoint point;
  NodeRef ref = kOutlier;
};

/// One vMF draw per reference node; the tag preserves the ground-truth link.
inline std::vector<TaggedPoint> perturb_nodes(const ReferenceSet& ref, double kappa,
                                              RngStream& rng) {
  std::vector<TaggedPoint> out;
  out.reserve(ref.points.size());
  for (std::size_t i = 0; i < ref.points.size(); ++i)
    out.push_back({sample_vmf(ref.points[i], kappa, rng), static_cast<NodeRef>(i)});
  return out;
}

struct PerturbationLog {
  int n_outliers = 0;
  int n_suppressed = 0;
  bool suppression_clamped = false;
  bool binomial_fallback = false;
};

/// Draw n_o and n_s, delete n_s uniformly chosen tagged nodes, then append
/// n_o uniformly placed outliers. The counts follow the beta-binomial matched
/// to (mu_pert, sigma_pert^2); when the requested variance is at or below the
/// binomial floor mu(nu-mu)/nu the distribution degenerates to its
/// Binomial(nu, mu/nu) limit, which is used directly (and logged). n_s is
/// clamped to n_ref - 3 so downstream hull construction stays feasible.
inline std::vector<TaggedPoint> apply_outliers_and_suppression(std::vector<TaggedPoint> nodes,
                                                               const GenerationParams& params,
                                                               RngStream& rng,
                                                               PerturbationLog* log = nullptr) {
  PerturbationLog local;
  if (params.mu_pert > 0.0) {
    const double var = params.sigma_pert * params.sigma_pert;
    const double floor = params.mu_pert * (params.nu - params.mu_pert) / params.nu;
    auto draw = [&]() {
      if (local.binomial_fallback) {
        const double p = params.mu_pert / params.nu;
        int k = 0;
        for (int i = 0; i < params.nu; ++i)
          if (rng.uniform() < p) ++k;
        return k;
      }
      const auto bb = beta_binomial_params(params.nu, params.mu_pert, var);
      return sample_beta_binomial(params.nu, bb.alpha, bb.beta, rng);
    };
    local.binomial_fallback = var <= floor;
    local.n_outliers = draw();
    local.n_suppressed = draw();
    const int max_suppress = std::max(0, static_cast<int>(nodes.size()) - 3);
    if (local.n_suppressed > max_suppress) {
      local.n_suppressed = max_suppress;
      local.suppression_clamped = true;
    }
    // partial Fisher-Yates: the first n_s slots become the suppressed set
    std::vector<std::size_t> idx(nodes.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int k = 0; k < local.n_suppressed; ++k) {
      const std::size_t pick = k + rng.uniform_index(idx.size() - k);
      std::swap(idx[k], idx[pick]);
    }
    std::vector<bool> drop(nodes.size(), false);
    for (int k = 0; k < local.n_suppressed; ++k) drop[idx[k]] = true;
    std::vector<TaggedPoint> kept;
    kept.reserve(nodes.size() - local.n_suppressed + local.n_outliers);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (!drop[i]) kept.push_back(nodes[i]);
    nodes = std::move(kept);
    if (local.n_outliers > 0)
      for (auto& p : sample_uniform_sphere(static_cast<std::size_t>(local.n_outliers), rng))
        nodes.push_back({p, kOutlier});
  }
  if (log) *log = local;
  return nodes;
}

/// Convex-hull triangulation of the points, then deletion of floor(p * |E|)
/// edges drawn uniformly among edges whose removal keeps the graph connected.
/// Bridges hit by a draw are skipped and redrawn (counted in `redraws`).
inline std::vector<Edge> build_edges(const std::vector<SphericalPoint>& points, double p,
                                     RngStream& rng, int* redraws = nullptr) {
  if (points.size() < 4) throw GeometryError("build_edges: need at least 4 points");
  auto pairs = convex_hull_edges(points);

  const int target = static_cast<int>(p * static_cast<double>(pairs.size()));
  int removed = 0;
  int skipped = 0;
  const int n = static_cast<int>(points.size());

  auto connected_without = [&](std::size_t skip_idx) {
    std::vector<std::vector<int>> adj(n);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (k == skip_idx) continue;
      adj[pairs[k].first].push_back(pairs[k].second);
      adj[pairs[k].second].push_back(pairs[k].first);
    }
    std::vector<bool> vis(n, false);
    std::vector<int> stack{0};
    vis[0] = true;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const int v : adj[u])
        if (!vis[v]) {
          vis[v] = true;
          ++count;
          stack.push_back(v);
        }
    }
    return count == n;
  };

  while (removed < target) {
    // candidate pool resets after each successful deletion: bridges change
    std::vector<std::size_t> candidates(pairs.size());
    std::iota(candidates.begin(), candidates.end(), 0);
    bool deleted = false;
    while (!candidates.empty()) {
      const std::size_t pick = rng.uniform_index(candidates.size());
      const std::size_t edge_idx = candidates[pick];
      if (connected_without(edge_idx)) {
        pairs.erase(pairs.begin() + static_cast<std::ptrdiff_t>(edge_idx));
        ++removed;
        deleted = true;
        break;
      }
      ++skipped;
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    if (!deleted) break;  // every remaining edge is a bridge
  }
  if (redraws) *redraws = skipped;

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [u, v] : pairs)
    edges.push_back({u, v, geodesic_distance(points[u], points[v])});
  return edges;
}

/// Full pipeline: one shared reference set, then per graph an independent
/// perturb / outlier-suppress / edge-build pass on a sub-stream derived from
/// (seed, graph index), so populations are reproducible bit for bit.
inline std::pair<GraphPopulation, GroundTruth> generate_population(const GenerationParams& params) {
  params.validate();
  RngStream root(params.seed);
  RngStream ref_rng = root.derive(0);
  const ReferenceSet ref = make_reference_set(params.n_ref, params.trials, ref_rng);

  GraphPopulation pop;
  GroundTruth truth;
  pop.graphs.reserve(static_cast<std::size_t>(params.n_graphs));
  truth.refs.reserve(static_cast<std::size_t>(params.n_graphs));

  int total_redraws = 0;
  int total_clamps = 0;
  bool binomial_fallback = false;
  const int width = params.n_graphs > 1000 ? 4 : 3;
  for (int q = 0; q < params.n_graphs; ++q) {
    RngStream g_rng = root.derive(static_cast<std::uint64_t>(q) + 1);
    auto tagged = perturb_nodes(ref, params.kappa, g_rng);
    PerturbationLog log;
    tagged = apply_outliers_and_suppression(std::move(tagged), params, g_rng, &log);
    total_clamps += log.suppression_clamped ? 1 : 0;
    binomial_fallback = binomial_fallback || log.binomial_fallback;

    std::vector<SphericalPoint> points;
    std::vector<NodeRef> refs;
    points.reserve(tagged.size());
    refs.reserve(tagged.size());
    for (const auto& t : tagged) {
      points.push_back(t.point);
      refs.push_back(t.ref);
    }
    int redraws = 0;
    auto edges = build_edges(points, params.edge_del_p, g_rng, &redraws);
    total_redraws += redraws;

    std::ostringstream id;
    id << "g" << std::setw(width) << std::setfill('0') << q;
    pop.graphs.emplace_back(id.str(), std::move(points), std::move(edges));
    truth.refs.push_back(std::move(refs));
  }

  pop.provenance = {{"generator", params.to_json()},
                    {"reference_min_distance", ref.min_distance},
                    {"edge_deletion_redraws", total_redraws},
                    {"suppression_clamps", total_clamps},
                    {"count_distribution", binomial_fallback ? "binomial_limit" : "beta_binomial"}};
  truth.validate(pop);
  return {std::move(pop), std::move(truth)};
}

}  // namespace sgm
