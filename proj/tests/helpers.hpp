#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sgm/graph.hpp"
#include "sgm/sphere.hpp"

namespace sgm::test {

/// Build a graph from points and endpoint pairs, filling in geodesic lengths.
inline SphericalGraph make_graph(std::string id, std::vector<SphericalPoint> points,
                                 const std::vector<std::pair<int, int>>& pairs) {
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [u, v] : pairs)
    edges.push_back({u, v, geodesic_distance(points[u], points[v])});
  return SphericalGraph(std::move(id), std::move(points), std::move(edges));
}

inline bool same_graph(const SphericalGraph& a, const SphericalGraph& b) {
  if (a.id() != b.id() || a.size() != b.size() || a.edges().size() != b.edges().size())
    return false;
  for (int i = 0; i < a.size(); ++i)
    if (a.nodes()[i].vec() != b.nodes()[i].vec()) return false;
  for (std::size_t e = 0; e < a.edges().size(); ++e) {
    const auto& ea = a.edges()[e];
    const auto& eb = b.edges()[e];
    if (ea.u != eb.u || ea.v != eb.v || ea.length != eb.length) return false;
  }
  return true;
}

inline bool same_population(const GraphPopulation& a, const GraphPopulation& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t q = 0; q < a.size(); ++q)
    if (!same_graph(a.graphs[q], b.graphs[q])) return false;
  return true;
}

}  // namespace sgm::test
