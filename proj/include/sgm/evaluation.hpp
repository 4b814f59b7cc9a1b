#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "sgm/assignment.hpp"
#include "sgm/errors.hpp"
#include "sgm/graph.hpp"
#include "sgm/multigraph.hpp"
#include "sgm/sphere.hpp"

namespace sgm {

struct MatchScore {
  std::int64_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  bool precision_defined = true;  // false when there were no predictions at all
};

/// Score a bulk against the generated truth. The counting unit is the
/// cross-graph node pair over all graph pairs i < j: a predicted real-real
/// match is a TP when both nodes share a reference id, otherwise an FP
/// (outliers can never be correctly matched); each co-reference pair with no
/// prediction is an FN. Dummy-involving matches are not predictions.
inline MatchScore match_metrics(const BulkAssignment& bulk, const GroundTruth& truth,
                                const PaddedPopulation& pop) {
  const auto N = static_cast<std::int32_t>(pop.size());
  if (bulk.n_graphs() != N || truth.refs.size() != static_cast<std::size_t>(N))
    throw DomainError("match_metrics: bulk, truth and population sizes disagree");

  MatchScore score;
  for (std::int32_t i = 0; i < N; ++i) {
    for (std::int32_t j = i + 1; j < N; ++j) {
      const auto& map = bulk.upper_block(i, j);
      std::int64_t tp_ij = 0;
      for (std::int32_t u = 0; u < pop.real_size[i]; ++u) {
        const auto v = map[static_cast<std::size_t>(u)];
        if (v == kUnmatched || v >= pop.real_size[j]) continue;
        const NodeRef ru = truth.refs[i][static_cast<std::size_t>(u)];
        const NodeRef rv = truth.refs[j][static_cast<std::size_t>(v)];
        if (ru != kOutlier && ru == rv)
          ++tp_ij;
        else
          ++score.fp;
      }
      score.tp += tp_ij;
      // ground-truth pairs for (i, j): reference ids present in both graphs
      std::int64_t common = 0;
      std::vector<char> in_i;
      for (const NodeRef r : truth.refs[i])
        if (r != kOutlier) {
          if (static_cast<std::size_t>(r) >= in_i.size()) in_i.resize(r + 1, 0);
          in_i[static_cast<std::size_t>(r)] = 1;
        }
      for (const NodeRef r : truth.refs[j])
        if (r != kOutlier && static_cast<std::size_t>(r) < in_i.size() &&
            in_i[static_cast<std::size_t>(r)])
          ++common;
      score.fn += common - tp_ij;
    }
  }
  const std::int64_t predicted = score.tp + score.fp;
  score.precision_defined = predicted > 0;
  score.precision = predicted > 0 ? static_cast<double>(score.tp) / predicted : 0.0;
  const std::int64_t actual = score.tp + score.fn;
  score.recall = actual > 0 ? static_cast<double>(score.tp) / actual : 0.0;
  score.f1 = (score.precision + score.recall) > 0.0
                 ? 2.0 * score.precision * score.recall / (score.precision + score.recall)
                 : 0.0;
  return score;
}

inline constexpr std::int32_t kUnlabeled = -1;

struct Labeling {
  std::int32_t reference = 0;  // graph chosen as the label source
  std::vector<std::vector<std::int32_t>> label;  // per graph, per real node; kUnlabeled possible
};

/// Labels from a largest graph (ties to the smallest index): node u of graph
/// q inherits the reference node it is matched to through X_{ref,q}; nodes
/// unmatched in that block (or matched to a reference dummy) stay unlabeled.
inline Labeling propagate_labels(const BulkAssignment& bulk, const PaddedPopulation& pop) {
  const auto N = static_cast<std::int32_t>(pop.size());
  Labeling out;
  out.reference = 0;
  for (std::int32_t q = 1; q < N; ++q)
    if (pop.real_size[q] > pop.real_size[out.reference]) out.reference = q;

  out.label.resize(static_cast<std::size_t>(N));
  for (std::int32_t q = 0; q < N; ++q) {
    const auto to_ref = bulk.map(q, out.reference);
    auto& lab = out.label[static_cast<std::size_t>(q)];
    lab.assign(static_cast<std::size_t>(pop.real_size[q]), kUnlabeled);
    for (std::int32_t u = 0; u < pop.real_size[q]; ++u) {
      const auto r = to_ref[static_cast<std::size_t>(u)];
      if (r != kUnmatched && r < pop.real_size[out.reference])
        lab[static_cast<std::size_t>(u)] = r;
    }
  }
  return out;
}

struct SilhouetteResult {
  std::vector<std::vector<double>> node;  // per graph, per real node
};

/// Rousseeuw silhouettes with Euclidean (chordal) distances on the embedded
/// coordinates. Members of singleton label groups get 0 by convention.
/// Unlabeled nodes are scored against the two nearest clusters so they can be
/// reported, but callers exclude them from cluster means.
inline SilhouetteResult silhouette(const Labeling& labeling, const PaddedPopulation& pop) {
  std::map<std::int32_t, std::vector<Vec3>> clusters;
  for (std::size_t q = 0; q < pop.size(); ++q)
    for (std::int32_t u = 0; u < pop.real_size[q]; ++u) {
      const auto l = labeling.label[q][static_cast<std::size_t>(u)];
      if (l != kUnlabeled) clusters[l].push_back(pop.graph(q).nodes()[u].vec());
    }
  if (clusters.size() < 2)
    throw DomainError("silhouette: need at least 2 clusters");

  SilhouetteResult res;
  res.node.resize(pop.size());
  for (std::size_t q = 0; q < pop.size(); ++q) {
    res.node[q].assign(static_cast<std::size_t>(pop.real_size[q]), 0.0);
    for (std::int32_t u = 0; u < pop.real_size[q]; ++u) {
      const Vec3 p = pop.graph(q).nodes()[u].vec();
      const auto own = labeling.label[q][static_cast<std::size_t>(u)];

      double a = std::numeric_limits<double>::quiet_NaN();
      double b = std::numeric_limits<double>::infinity();
      double second = std::numeric_limits<double>::infinity();
      for (const auto& [l, members] : clusters) {
        double sum = 0.0;
        std::size_t count = members.size();
        for (const Vec3& m : members) sum += (p - m).norm();
        if (l == own) {
          if (count <= 1) {  // singleton group: convention 0
            a = std::numeric_limits<double>::quiet_NaN();
          } else {
            a = sum / static_cast<double>(count - 1);  // distance to self is 0
          }
          continue;
        }
        const double mean = sum / static_cast<double>(count);
        if (mean < b) {
          second = b;
          b = mean;
        } else if (mean < second) {
          second = mean;
        }
      }

      double s = 0.0;
      if (own != kUnlabeled) {
        if (std::isnan(a))
          s = 0.0;  // singleton
        else
          s = (b - a) / std::max(a, b);
      } else {
        // against all clusters: nearest plays a, second-nearest plays b
        s = std::isinf(second) ? 0.0 : (second - b) / std::max(b, second);
      }
      res.node[q][static_cast<std::size_t>(u)] = s;
    }
  }
  return res;
}

/// Spherical centroid of every label group.
inline std::map<std::int32_t, SphericalPoint> cluster_centroids(const Labeling& labeling,
                                                                const PaddedPopulation& pop) {
  std::map<std::int32_t, std::vector<SphericalPoint>> clusters;
  for (std::size_t q = 0; q < pop.size(); ++q)
    for (std::int32_t u = 0; u < pop.real_size[q]; ++u) {
      const auto l = labeling.label[q][static_cast<std::size_t>(u)];
      if (l != kUnlabeled) clusters[l].push_back(pop.graph(q).nodes()[u]);
    }
  std::map<std::int32_t, SphericalPoint> out;
  for (const auto& [l, members] : clusters) out.emplace(l, spherical_centroid(members));
  return out;
}

struct ClusterInfo {
  std::int32_t label = 0;
  std::int64_t size = 0;
  SphericalPoint centroid{0.0, 0.0, 1.0};
  double mean_silhouette = 0.0;
  double mean_consistency = 0.0;
};

struct ClusterReport {
  std::vector<ClusterInfo> clusters;  // label groups with >= 2 members
  std::int64_t n_clusters = 0;
  double unmatched_frac = 0.0;
  double mean_silhouette = 0.0;      // over labeled real nodes
  double std_silhouette = 0.0;
  double mean_silhouette_all = 0.0;  // over all real nodes, unlabeled included
  double std_silhouette_all = 0.0;
  double mean_consistency = 0.0;     // over real nodes
  double std_consistency = 0.0;
  double wall_seconds = 0.0;
  std::optional<MatchScore> score;
  Labeling labeling;
  SilhouetteResult silhouettes;
  std::vector<std::vector<double>> consistency;  // per graph, padded nodes
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (const double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (const double x : v) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(v.size()))};
}

}  // namespace detail

/// The whole metric bundle for one matching result: label propagation,
/// cluster statistics, silhouettes, node consistency, unmatched fraction,
/// and ground-truth scores when the truth is available.
inline ClusterReport population_report(const BulkAssignment& bulk, const PaddedPopulation& pop,
                                       const GroundTruth* truth, double wall_seconds) {
  ClusterReport rep;
  rep.wall_seconds = wall_seconds;
  rep.labeling = propagate_labels(bulk, pop);
  rep.silhouettes = silhouette(rep.labeling, pop);
  rep.consistency = node_consistency(bulk);
  const auto centroids = cluster_centroids(rep.labeling, pop);

  std::map<std::int32_t, ClusterInfo> groups;
  std::vector<double> sil_labeled, sil_all, cons_real;
  std::int64_t real_total = 0, unlabeled_total = 0;
  std::map<std::int32_t, std::vector<double>> group_sil, group_cons;
  for (std::size_t q = 0; q < pop.size(); ++q) {
    for (std::int32_t u = 0; u < pop.real_size[q]; ++u) {
      ++real_total;
      const auto l = rep.labeling.label[q][static_cast<std::size_t>(u)];
      const double s = rep.silhouettes.node[q][static_cast<std::size_t>(u)];
      const double c = rep.consistency[q][static_cast<std::size_t>(u)];
      sil_all.push_back(s);
      cons_real.push_back(c);
      if (l == kUnlabeled) {
        ++unlabeled_total;
        continue;
      }
      sil_labeled.push_back(s);
      auto& info = groups[l];
      info.label = l;
      ++info.size;
      group_sil[l].push_back(s);
      group_cons[l].push_back(c);
    }
  }

  for (auto& [l, info] : groups) {
    if (info.size < 2) continue;  // a single node is not a cross-graph cluster
    info.centroid = centroids.at(l);
    info.mean_silhouette = detail::mean_std(group_sil[l]).first;
    info.mean_consistency = detail::mean_std(group_cons[l]).first;
    rep.clusters.push_back(info);
  }
  rep.n_clusters = static_cast<std::int64_t>(rep.clusters.size());
  rep.unmatched_frac =
      real_total > 0 ? static_cast<double>(unlabeled_total) / static_cast<double>(real_total) : 0.0;
  std::tie(rep.mean_silhouette, rep.std_silhouette) = detail::mean_std(sil_labeled);
  std::tie(rep.mean_silhouette_all, rep.std_silhouette_all) = detail::mean_std(sil_all);
  std::tie(rep.mean_consistency, rep.std_consistency) = detail::mean_std(cons_real);

  if (truth) rep.score = match_metrics(bulk, *truth, pop);
  return rep;
}

}  // namespace sgm
