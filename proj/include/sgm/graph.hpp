#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sgm/errors.hpp"
#include "sgm/sphere.hpp"

namespace sgm {

using NodeRef = std::int32_t;
inline constexpr NodeRef kOutlier = -1;

struct Edge {
  std::int32_t u = 0;
  std::int32_t v = 0;
  double length = 0.0;  // geodesic distance between the endpoints, radians
};

/// Undirected graph whose nodes sit on the unit sphere. The edge attribute is
/// the geodesic length between its endpoints; it is stored explicitly but
/// validated on construction, so loaded data is checked for integrity.
class SphericalGraph {
 public:
  static constexpr double kEdgeLengthTol = 1e-9;

  SphericalGraph(std::string id, std::vector<SphericalPoint> nodes, std::vector<Edge> edges)
      : id_(std::move(id)), nodes_(std::move(nodes)), edges_(std::move(edges)) {
    const auto n = static_cast<std::int32_t>(nodes_.size());
    std::set<std::pair<std::int32_t, std::int32_t>> seen;
    for (auto& e : edges_) {
      if (e.u > e.v) std::swap(e.u, e.v);
      if (e.u < 0 || e.v >= n)
        throw DomainError(describe(e, "edge endpoint out of range"));
      if (e.u == e.v) throw DomainError(describe(e, "self-loop"));
      if (!seen.insert({e.u, e.v}).second)
        throw DomainError(describe(e, "duplicate edge"));
      const double d = geodesic_distance(nodes_[e.u], nodes_[e.v]);
      if (std::abs(d - e.length) > kEdgeLengthTol)
        throw DomainError(describe(e, "stored length inconsistent with endpoint coordinates"));
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  }

  const std::string& id() const { return id_; }
  std::int32_t size() const { return static_cast<std::int32_t>(nodes_.size()); }
  const std::vector<SphericalPoint>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  std::string describe(const Edge& e, const char* what) const {
    std::ostringstream msg;
    msg << "graph '" << id_ << "', edge (" << e.u << ", " << e.v << "): " << what;
    return msg.str();
  }

  std::string id_;
  std::vector<SphericalPoint> nodes_;
  std::vector<Edge> edges_;
};

struct GraphPopulation {
  std::vector<SphericalGraph> graphs;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t size() const { return graphs.size(); }
};

/// Per graph, one entry per node: the reference-node identity the node was
/// generated from, or kOutlier. This is the correct matching by construction.
struct GroundTruth {
  std::vector<std::vector<NodeRef>> refs;

  void validate(const GraphPopulation& pop) const {
    if (refs.size() != pop.graphs.size())
      throw DomainError("ground truth does not cover the population");
    for (std::size_t q = 0; q < refs.size(); ++q) {
      if (refs[q].size() != static_cast<std::size_t>(pop.graphs[q].size()))
        throw DomainError("ground truth for graph '" + pop.graphs[q].id() +
                          "' does not match its node count");
      std::set<NodeRef> seen;
      for (const NodeRef r : refs[q]) {
        if (r == kOutlier) continue;
        if (r < 0) throw DomainError("negative reference id in ground truth");
        if (!seen.insert(r).second)
          throw DomainError("reference id repeated within graph '" + pop.graphs[q].id() + "'");
      }
    }
  }
};

/// Population padded to a common size n_max. Dummy node indices are exactly
/// [real_size[q], n_max); they carry no coordinates, only index space.
struct PaddedPopulation {
  GraphPopulation population;
  std::int32_t n_max = 0;
  std::vector<std::int32_t> real_size;

  std::size_t size() const { return population.size(); }
  const SphericalGraph& graph(std::size_t q) const { return population.graphs[q]; }
  bool is_real(std::size_t q, std::int32_t node) const { return node < real_size[q]; }
};

inline PaddedPopulation pad_with_dummies(GraphPopulation population) {
  if (population.size() < 2)
    throw DomainError("pad_with_dummies: need at least 2 graphs");
  PaddedPopulation padded;
  padded.real_size.reserve(population.size());
  for (const auto& g : population.graphs) {
    padded.real_size.push_back(g.size());
    padded.n_max = std::max(padded.n_max, g.size());
  }
  padded.population = std::move(population);
  return padded;
}

/// Histogram of node degrees; counts[d] = number of nodes with degree d.
inline std::vector<std::size_t> degree_distribution(const SphericalGraph& g) {
  std::vector<std::size_t> degree(g.size(), 0);
  for (const auto& e : g.edges()) {
    ++degree[e.u];
    ++degree[e.v];
  }
  std::size_t max_deg = 0;
  for (const auto d : degree) max_deg = std::max(max_deg, d);
  std::vector<std::size_t> counts(max_deg + 1, 0);
  for (const auto d : degree) ++counts[d];
  return counts;
}

inline double mean_degree(const SphericalGraph& g) {
  if (g.size() == 0) return 0.0;
  return 2.0 * static_cast<double>(g.edges().size()) / static_cast<double>(g.size());
}

/// Geodesic edge lengths, one entry per edge, ascending.
inline std::vector<double> edge_length_distribution(const SphericalGraph& g) {
  std::vector<double> lengths;
  lengths.reserve(g.edges().size());
  for (const auto& e : g.edges()) lengths.push_back(e.length);
  std::sort(lengths.begin(), lengths.end());
  return lengths;
}

}  // namespace sgm
