#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sgm/errors.hpp"
#include "sgm/sphere.hpp"

namespace sgm {

struct ConvexHull {
  std::vector<std::array<int, 3>> faces;       // oriented outward
  std::vector<std::pair<int, int>> edges;      // undirected, u < v, sorted
};

namespace detail {

struct HullFace {
  int a, b, c;
  Vec3 normal;     // outward, not normalized
  double offset;   // plane equation: normal . x = offset
  bool alive = true;
  bool visible = false;
};

inline std::int64_t edge_key(int n, int u, int v) {
  return static_cast<std::int64_t>(u) * n + v;
}

}  // namespace detail

/// Incremental 3D convex hull. Points sampled on the sphere are in general
/// position almost surely and every point is a hull vertex, which is the
/// regime this is used in; genuinely degenerate inputs raise GeometryError.
inline ConvexHull convex_hull(const std::vector<SphericalPoint>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 4) throw GeometryError("convex_hull: need at least 4 points");
  constexpr double kEps = 1e-10;

  auto at = [&](int i) -> const Vec3& { return points[i].vec(); };

  // initial simplex: extreme point, farthest point, farthest from line, from plane
  int i0 = 0;
  for (int i = 1; i < n; ++i)
    if (at(i).x() < at(i0).x()) i0 = i;
  int i1 = -1;
  double best = kEps;
  for (int i = 0; i < n; ++i) {
    const double d = (at(i) - at(i0)).squaredNorm();
    if (d > best) best = d, i1 = i;
  }
  if (i1 < 0) throw GeometryError("convex_hull: all points coincide");
  int i2 = -1;
  best = kEps;
  for (int i = 0; i < n; ++i) {
    const double d = (at(i1) - at(i0)).cross(at(i) - at(i0)).squaredNorm();
    if (d > best) best = d, i2 = i;
  }
  if (i2 < 0) throw GeometryError("convex_hull: points are collinear");
  int i3 = -1;
  best = kEps;
  const Vec3 base_n = (at(i1) - at(i0)).cross(at(i2) - at(i0));
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(base_n.dot(at(i) - at(i0)));
    if (d > best) best = d, i3 = i;
  }
  if (i3 < 0) throw GeometryError("convex_hull: points are coplanar");

  const Vec3 interior = (at(i0) + at(i1) + at(i2) + at(i3)) / 4.0;

  std::vector<detail::HullFace> faces;
  std::unordered_map<std::int64_t, int> edge2face;

  auto register_face = [&](int f) {
    const auto& fc = faces[f];
    edge2face[detail::edge_key(n, fc.a, fc.b)] = f;
    edge2face[detail::edge_key(n, fc.b, fc.c)] = f;
    edge2face[detail::edge_key(n, fc.c, fc.a)] = f;
  };

  auto add_face = [&](int a, int b, int c) {
    detail::HullFace f{a, b, c, Vec3::Zero(), 0.0};
    f.normal = (at(b) - at(a)).cross(at(c) - at(a));
    f.offset = f.normal.dot(at(a));
    if (f.normal.dot(interior) > f.offset) {  // flip so the normal points outward
      std::swap(f.b, f.c);
      f.normal = -f.normal;
      f.offset = -f.offset;
    }
    faces.push_back(f);
    register_face(static_cast<int>(faces.size()) - 1);
  };

  add_face(i0, i1, i2);
  add_face(i0, i1, i3);
  add_face(i0, i2, i3);
  add_face(i1, i2, i3);

  std::vector<int> visible;
  std::vector<std::pair<int, int>> horizon;
  for (int p = 0; p < n; ++p) {
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    visible.clear();
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
      if (!faces[f].alive) continue;
      if (faces[f].normal.dot(at(p)) - faces[f].offset > kEps) {
        faces[f].visible = true;
        visible.push_back(f);
      }
    }
    if (visible.empty()) continue;  // coincident point; contributes no vertex

    horizon.clear();
    for (int f : visible) {
      const std::array<std::pair<int, int>, 3> dir_edges{
          std::pair{faces[f].a, faces[f].b}, {faces[f].b, faces[f].c}, {faces[f].c, faces[f].a}};
      for (const auto& [u, v] : dir_edges) {
        const auto it = edge2face.find(detail::edge_key(n, v, u));
        if (it == edge2face.end())
          throw GeometryError("convex_hull: inconsistent face adjacency");
        if (!faces[it->second].visible) horizon.emplace_back(u, v);
      }
    }
    for (int f : visible) {
      faces[f].alive = false;
      edge2face.erase(detail::edge_key(n, faces[f].a, faces[f].b));
      edge2face.erase(detail::edge_key(n, faces[f].b, faces[f].c));
      edge2face.erase(detail::edge_key(n, faces[f].c, faces[f].a));
    }
    for (const auto& [u, v] : horizon) add_face(u, v, p);
  }

  ConvexHull hull;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    hull.faces.push_back({f.a, f.b, f.c});
    auto push = [&](int u, int v) {
      if (u > v) std::swap(u, v);
      hull.edges.emplace_back(u, v);
    };
    push(f.a, f.b);
    push(f.b, f.c);
    push(f.c, f.a);
  }
  std::sort(hull.edges.begin(), hull.edges.end());
  hull.edges.erase(std::unique(hull.edges.begin(), hull.edges.end()), hull.edges.end());
  return hull;
}

inline std::vector<std::pair<int, int>> convex_hull_edges(const std::vector<SphericalPoint>& points) {
  return convex_hull(points).edges;
}

}  // namespace sgm
