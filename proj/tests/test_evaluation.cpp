#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "sgm/evaluation.hpp"
#include "sgm/generator.hpp"
#include "sgm/pairwise.hpp"
#include "sgm/run_io.hpp"

using namespace sgm;
using sgm::test::make_graph;
using Catch::Matchers::WithinAbs;

namespace {

PaddedPopulation uniform_population(int n_graphs, int nodes_per_graph, std::uint64_t seed) {
  RngStream rng(seed);
  GraphPopulation pop;
  for (int q = 0; q < n_graphs; ++q) {
    const auto pts = sample_uniform_sphere(static_cast<std::size_t>(nodes_per_graph), rng);
    std::vector<std::pair<int, int>> pairs;
    if (nodes_per_graph >= 2) pairs.emplace_back(0, 1);
    pop.graphs.push_back(make_graph("g" + std::to_string(q), pts, pairs));
  }
  return pad_with_dummies(std::move(pop));
}

BulkAssignment identity_bulk(std::int32_t N, std::int32_t n) {
  BulkAssignment bulk(N, n);
  for (std::int32_t i = 0; i < N; ++i)
    for (std::int32_t j = i + 1; j < N; ++j) bulk.set_block(i, j, identity_map(n));
  return bulk;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("sgm_eval_" + std::to_string(RngStream(std::random_device{}()).next_u64()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("match metrics on the hand-counted two-graph example") {
  auto pop = uniform_population(2, 4, 1);
  GroundTruth truth;
  truth.refs = {{0, 1, 2, kOutlier}, {0, 1, 2, kOutlier}};

  BulkAssignment bulk(2, 4);
  // correct on refs 0 and 1, node 2 wrongly matched to the outlier
  bulk.set_block(0, 1, {0, 1, 3, kUnmatched});
  const auto score = match_metrics(bulk, truth, pop);
  REQUIRE(score.tp == 2);
  REQUIRE(score.fp == 1);
  REQUIRE(score.fn == 1);
  REQUIRE_THAT(score.precision, WithinAbs(2.0 / 3.0, 1e-15));
  REQUIRE_THAT(score.recall, WithinAbs(2.0 / 3.0, 1e-15));
  REQUIRE_THAT(score.f1, WithinAbs(2.0 / 3.0, 1e-15));
}

TEST_CASE("perfect prediction scores 1 everywhere") {
  auto pop = uniform_population(3, 5, 2);
  GroundTruth truth;
  truth.refs = {{0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}};
  const auto score = match_metrics(identity_bulk(3, 5), truth, pop);
  REQUIRE(score.precision == 1.0);
  REQUIRE(score.recall == 1.0);
  REQUIRE(score.f1 == 1.0);
}

TEST_CASE("empty predictions: precision reported 0 with a flag") {
  auto pop = uniform_population(2, 3, 3);
  GroundTruth truth;
  truth.refs = {{0, 1, 2}, {0, 1, 2}};
  BulkAssignment bulk(2, 3);  // blocks default to fully unmatched
  const auto score = match_metrics(bulk, truth, pop);
  REQUIRE_FALSE(score.precision_defined);
  REQUIRE(score.precision == 0.0);
  REQUIRE(score.recall == 0.0);
  REQUIRE(score.f1 == 0.0);
  REQUIRE(score.fn == 3);  // 3 shared references over the single graph pair
}

TEST_CASE("f1 is the harmonic mean identity on random scores") {
  RngStream rng(4);
  auto pop = uniform_population(3, 4, 5);
  GroundTruth truth;
  truth.refs = {{0, 1, 2, 3}, {0, 1, 3, kOutlier}, {2, 1, 0, 3}};
  for (int t = 0; t < 20; ++t) {
    BulkAssignment bulk(3, 4);
    for (std::int32_t i = 0; i < 3; ++i)
      for (std::int32_t j = i + 1; j < 3; ++j) {
        auto map = identity_map(4);
        for (std::int32_t k = 3; k > 0; --k)
          std::swap(map[k], map[rng.uniform_index(static_cast<std::uint64_t>(k) + 1)]);
        for (auto& v : map)
          if (rng.uniform() < 0.4) v = kUnmatched;
        bulk.set_block(i, j, map);
      }
    const auto s = match_metrics(bulk, truth, pop);
    if (s.precision + s.recall > 0.0)
      REQUIRE_THAT(s.f1, WithinAbs(2.0 * s.precision * s.recall / (s.precision + s.recall), 1e-12));
    else
      REQUIRE(s.f1 == 0.0);
  }
}

TEST_CASE("label propagation from the largest graph") {
  RngStream rng(6);
  GraphPopulation pop;
  for (int q = 0; q < 3; ++q) {
    const int size = q == 1 ? 5 : 3;
    const auto pts = sample_uniform_sphere(static_cast<std::size_t>(size), rng);
    pop.graphs.push_back(make_graph("g" + std::to_string(q), pts, {{0, 1}}));
  }
  auto padded = pad_with_dummies(std::move(pop));
  const auto bulk = identity_bulk(3, 5);
  const auto labeling = propagate_labels(bulk, padded);
  REQUIRE(labeling.reference == 1);  // unique largest graph
  for (std::size_t q = 0; q < 3; ++q)
    for (std::size_t u = 0; u < labeling.label[q].size(); ++u)
      REQUIRE(labeling.label[q][u] == static_cast<std::int32_t>(u));

  // each label at most once per graph
  for (const auto& graph_labels : labeling.label) {
    std::set<std::int32_t> seen;
    for (const auto l : graph_labels)
      if (l != kUnlabeled) REQUIRE(seen.insert(l).second);
  }
}

TEST_CASE("labels flow through the transposed reference block") {
  auto pop = uniform_population(2, 3, 7);
  // sizes {3, 2}: rebuild the second graph smaller
  RngStream rng(8);
  GraphPopulation raw;
  raw.graphs.push_back(pop.graph(0));
  const auto pts = sample_uniform_sphere(2, rng);
  raw.graphs.push_back(make_graph("small", pts, {{0, 1}}));
  auto padded = pad_with_dummies(std::move(raw));

  BulkAssignment bulk(2, 3);
  bulk.set_block(0, 1, {0, 2, 1});  // ref node 1 lands on the dummy slot of graph 1
  const auto labeling = propagate_labels(bulk, padded);
  REQUIRE(labeling.reference == 0);
  REQUIRE(labeling.label[1][0] == 0);  // graph 1 node 0 <- ref node 0
  REQUIRE(labeling.label[1][1] == 2);  // graph 1 node 1 <- ref node 2
  REQUIRE(labeling.label[1].size() == 2);  // only real nodes are labeled
}

TEST_CASE("silhouettes separate two tight antipodal clusters") {
  RngStream rng(9);
  GraphPopulation pop;
  const SphericalPoint north(0, 0, 1), south(0, 0, -1);
  for (int q = 0; q < 10; ++q) {
    std::vector<SphericalPoint> pts{sample_vmf(north, 1e5, rng), sample_vmf(south, 1e5, rng)};
    pop.graphs.push_back(make_graph("g" + std::to_string(q), pts, {{0, 1}}));
  }
  auto padded = pad_with_dummies(std::move(pop));
  const auto bulk = identity_bulk(10, 2);
  const auto labeling = propagate_labels(bulk, padded);
  const auto sil = silhouette(labeling, padded);
  for (const auto& row : sil.node)
    for (const double s : row) {
      REQUIRE(s > 0.95);
      REQUIRE(s <= 1.0);
    }
}

TEST_CASE("singleton clusters take silhouette 0 by convention") {
  RngStream rng(10);
  GraphPopulation pop;
  const auto pts0 = sample_uniform_sphere(3, rng);
  const auto pts1 = sample_uniform_sphere(2, rng);
  pop.graphs.push_back(make_graph("a", pts0, {{0, 1}}));
  pop.graphs.push_back(make_graph("b", pts1, {{0, 1}}));
  auto padded = pad_with_dummies(std::move(pop));
  BulkAssignment bulk(2, 3);
  bulk.set_block(0, 1, {0, 1, kUnmatched});  // ref node 2 stays a singleton label
  const auto labeling = propagate_labels(bulk, padded);
  const auto sil = silhouette(labeling, padded);
  REQUIRE(sil.node[0][2] == 0.0);
}

TEST_CASE("silhouette requires at least two clusters") {
  auto pop = uniform_population(2, 1, 11);
  const auto bulk = identity_bulk(2, 1);
  const auto labeling = propagate_labels(bulk, pop);
  REQUIRE_THROWS_AS(silhouette(labeling, pop), DomainError);
}

TEST_CASE("propagation is reference-invariant on consistent bulks") {
  RngStream rng(12);
  const std::int32_t N = 5, n = 4;
  auto pop = uniform_population(N, n, 13);
  // consistent bulk from a random permutation family
  std::vector<std::vector<std::int32_t>> family;
  for (std::int32_t q = 0; q < N; ++q) {
    auto p = identity_map(n);
    for (std::int32_t k = n - 1; k > 0; --k)
      std::swap(p[k], p[rng.uniform_index(static_cast<std::uint64_t>(k) + 1)]);
    family.push_back(p);
  }
  BulkAssignment bulk(N, n);
  for (std::int32_t i = 0; i < N; ++i)
    for (std::int32_t j = i + 1; j < N; ++j)
      bulk.set_block(i, j, compose_maps(family[i], transpose_map(family[j])));

  // labels propagated through any reference graph induce the same partition
  auto partition_key = [&](std::int32_t ref) {
    std::vector<std::vector<std::int32_t>> labels(N);
    for (std::int32_t q = 0; q < N; ++q) labels[q] = bulk.map(q, ref);
    std::vector<std::pair<int, int>> same;
    for (std::int32_t q1 = 0; q1 < N; ++q1)
      for (std::int32_t u1 = 0; u1 < n; ++u1)
        for (std::int32_t q2 = 0; q2 < N; ++q2)
          for (std::int32_t u2 = 0; u2 < n; ++u2)
            if (labels[q1][u1] == labels[q2][u2])
              same.push_back({q1 * n + u1, q2 * n + u2});
    return same;
  };
  const auto base = partition_key(0);
  for (std::int32_t ref = 1; ref < N; ++ref) REQUIRE(partition_key(ref) == base);
}

TEST_CASE("centroids of known clusters") {
  RngStream rng(14);
  GraphPopulation pop;
  const SphericalPoint ex(1, 0, 0), ey(0, 1, 0), ez(0, 0, 1);
  pop.graphs.push_back(make_graph("a", {ex, ez}, {{0, 1}}));
  pop.graphs.push_back(make_graph("b", {ey, ez}, {{0, 1}}));
  auto padded = pad_with_dummies(std::move(pop));
  const auto bulk = identity_bulk(2, 2);
  const auto labeling = propagate_labels(bulk, padded);
  const auto centroids = cluster_centroids(labeling, padded);
  const double s = 1.0 / std::sqrt(2.0);
  REQUIRE_THAT(centroids.at(0).x(), WithinAbs(s, 1e-12));   // bisector of ex, ey
  REQUIRE_THAT(centroids.at(0).y(), WithinAbs(s, 1e-12));
  REQUIRE_THAT(centroids.at(1).z(), WithinAbs(1.0, 1e-12));  // two identical points
}

TEST_CASE("zero-noise composite report: everything perfect") {
  GenerationParams params;
  params.n_graphs = 5;
  params.n_ref = 12;
  params.kappa = 1e9;
  params.mu_pert = 0.0;
  params.edge_del_p = 0.0;
  params.trials = 30;
  params.seed = 77;
  auto [pop, truth] = generate_population(params);
  auto padded = pad_with_dummies(std::move(pop));
  const auto bulk = identity_bulk(5, 12);

  const auto report = population_report(bulk, padded, &truth, 1.5);
  REQUIRE(report.n_clusters == 12);
  REQUIRE(report.unmatched_frac == 0.0);
  REQUIRE(report.mean_consistency == 1.0);
  REQUIRE(report.score.has_value());
  REQUIRE(report.score->f1 == 1.0);
  REQUIRE(report.wall_seconds == 1.5);

  // cluster centroids hug the reference nodes at this concentration
  RngStream ref_rng = RngStream(params.seed).derive(0);
  const auto ref = make_reference_set(params.n_ref, params.trials, ref_rng);
  const auto centroids = cluster_centroids(report.labeling, padded);
  for (const auto& [label, centroid] : centroids)
    REQUIRE(geodesic_distance(centroid, ref.points[static_cast<std::size_t>(label)]) < 0.02);
}

TEST_CASE("metrics CSV round-trips") {
  TempDir tmp;
  MetricsRow a;
  a.population_id = "kappa200_rep0";
  a.method = "mals";
  a.kappa = 200.0;
  a.repetition = 0;
  a.precision = 0.920000000000000373;
  a.recall = 0.85;
  a.f1 = 2.0 * (*a.precision) * (*a.recall) / (*a.precision + *a.recall);
  a.n_clusters = 11;
  a.unmatched_frac = 0.125;
  a.mean_silhouette = 0.5523;
  a.std_silhouette = 0.21;
  a.mean_consistency = 0.97;
  a.std_consistency = 0.01;
  a.wall_seconds = 3.25;
  MetricsRow b = a;
  b.method = "msync";
  b.precision.reset();
  b.recall.reset();
  b.f1.reset();

  const auto file = tmp.path / "metrics.csv";
  write_metrics_csv({a, b}, file, "deadbeef");
  const auto rows = read_metrics_csv(file);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].population_id == a.population_id);
  REQUIRE(rows[0].precision.has_value());
  REQUIRE(*rows[0].precision == *a.precision);  // exact: 17 significant digits
  REQUIRE(rows[0].wall_seconds == a.wall_seconds);
  REQUIRE_FALSE(rows[1].precision.has_value());
  REQUIRE(rows[1].method == "msync");
}

TEST_CASE("assignment triplets round-trip and reject malformed input") {
  auto pop = uniform_population(3, 4, 15);
  RngStream rng(16);
  BulkAssignment bulk(3, 4);
  bulk.set_block(0, 1, {1, 0, kUnmatched, 2});
  bulk.set_block(0, 2, {0, 1, 2, 3});
  bulk.set_block(1, 2, {kUnmatched, 3, 0, kUnmatched});

  TempDir tmp;
  const auto file = tmp.path / "assign.csv";
  save_assignment_triplets(bulk, pop, file, "cafe");
  const auto loaded = load_assignment_triplets(file, pop);
  for (std::int32_t i = 0; i < 3; ++i)
    for (std::int32_t j = i + 1; j < 3; ++j) REQUIRE(loaded.map(i, j) == bulk.map(i, j));

  const auto bad = tmp.path / "bad.csv";
  {
    std::ofstream out(bad);
    out << "graph_i,graph_j,node_u,node_v\n0,1,0,1\nnot,a,number\n";
  }
  REQUIRE_THROWS_WITH(load_assignment_triplets(bad, pop),
                      Catch::Matchers::ContainsSubstring(":3"));
}

TEST_CASE("bulk json round-trip preserves dummy matches") {
  BulkAssignment bulk(2, 3);
  bulk.set_block(0, 1, {2, 0, 1});  // includes matches into the dummy range
  const auto j = bulk_to_json(bulk);
  const auto back = bulk_from_json(j);
  REQUIRE(back.map(0, 1) == bulk.map(0, 1));
  REQUIRE(back.n_max() == 3);
}
