#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include <filesystem>

#include "helpers.hpp"
#include "sgm/affinity.hpp"
#include "sgm/affinity_cache.hpp"
#include "sgm/generator.hpp"

using namespace sgm;
using sgm::test::make_graph;
using Catch::Matchers::WithinAbs;

namespace {

PaddedPopulation synthetic_population(int n_graphs, int n_ref, double kappa, std::uint64_t seed) {
  GenerationParams params;
  params.n_graphs = n_graphs;
  params.n_ref = n_ref;
  params.kappa = kappa;
  params.mu_pert = 5.0;
  params.sigma_pert = 2.0;
  params.nu = 10;
  params.trials = 50;
  params.edge_del_p = 0.1;
  params.seed = seed;
  auto [pop, truth] = generate_population(params);
  return pad_with_dummies(std::move(pop));
}

}  // namespace

TEST_CASE("inverse median bandwidth") {
  REQUIRE_THAT(inverse_median_bandwidth({1.0, 4.0, 9.0}), WithinAbs(0.25, 1e-15));
  REQUIRE_THAT(inverse_median_bandwidth({4.0}), WithinAbs(0.25, 1e-15));
  REQUIRE_THAT(inverse_median_bandwidth({1.0, 3.0, 5.0, 7.0}), WithinAbs(0.25, 1e-15));
  REQUIRE_THROWS_AS(inverse_median_bandwidth({0.0, 0.0, 0.0}), DomainError);
  REQUIRE_THROWS_AS(inverse_median_bandwidth({}), DomainError);
}

TEST_CASE("identical graphs degenerate the node median") {
  const SphericalPoint p(0.0, 0.0, 1.0);
  GraphPopulation pop;
  pop.graphs.emplace_back("a", std::vector<SphericalPoint>{p}, std::vector<Edge>{});
  pop.graphs.emplace_back("b", std::vector<SphericalPoint>{p}, std::vector<Edge>{});
  const auto padded = pad_with_dummies(std::move(pop));
  REQUIRE_THROWS_AS(estimate_bandwidths(padded), DomainError);
}

TEST_CASE("node affinity kernel values") {
  const SphericalPoint north(0, 0, 1), south(0, 0, -1), ex(1, 0, 0);
  const auto gi = make_graph("i", {north, ex}, {{0, 1}});
  const auto gj = make_graph("j", {north, south}, {{0, 1}});

  const auto psi = node_affinity(gi, gj, 1.0, 4);
  REQUIRE(psi.rows() == 4);
  REQUIRE_THAT(psi(0, 0), WithinAbs(1.0, 1e-15));                 // identical coordinates
  REQUIRE_THAT(psi(0, 1), WithinAbs(std::exp(-4.0), 1e-15));      // antipodal, |a-b|^2 = 4
  for (int u = 0; u < 4; ++u) {
    REQUIRE(psi(u, 2) == 0.0);  // dummy columns
    REQUIRE(psi(u, 3) == 0.0);
    REQUIRE(psi(2, u) == 0.0);  // dummy rows
    REQUIRE(psi(3, u) == 0.0);
  }
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) {
      REQUIRE(psi(u, v) > 0.0);
      REQUIRE(psi(u, v) <= 1.0);
    }
}

TEST_CASE("edge affinity support and kernel values") {
  RngStream rng(77);
  const auto pi = sample_uniform_sphere(5, rng);
  const auto pj = sample_uniform_sphere(6, rng);
  const auto gi = make_graph("i", pi, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  const auto gj = make_graph("j", pj, {{0, 1}, {1, 2}, {2, 3}});

  const double gamma_e = 2.0;
  const auto edges = edge_affinity_sparse(gi, gj, gamma_e);
  REQUIRE(edges.size() == gi.edges().size() * gj.edges().size());
  for (const auto& e : edges) {
    double li = 0.0, lj = 0.0;
    for (const auto& ge : gi.edges())
      if (ge.u == e.ui && ge.v == e.vi) li = ge.length;
    for (const auto& ge : gj.edges())
      if (ge.u == e.uj && ge.v == e.vj) lj = ge.length;
    REQUIRE_THAT(e.w, WithinAbs(std::exp(-gamma_e * (li - lj) * (li - lj)), 1e-15));
  }

  // equal lengths -> kernel exactly 1; standardized unit difference -> 1/e
  const auto self_edges = edge_affinity_sparse(gi, gi, gamma_e);
  for (const auto& e : self_edges)
    if (e.ui == e.uj && e.vi == e.vj) REQUIRE_THAT(e.w, WithinAbs(1.0, 1e-15));
}

TEST_CASE("affinity symmetry under pair swap") {
  const auto pop = synthetic_population(3, 15, 200.0, 5);
  const KernelBandwidths bw{3.0, 7.0};
  for (std::size_t i = 0; i < pop.size(); ++i)
    for (std::size_t j = i + 1; j < pop.size(); ++j) {
      const auto psi_ij = node_affinity(pop.graph(i), pop.graph(j), bw.gamma_v, pop.n_max);
      const auto psi_ji = node_affinity(pop.graph(j), pop.graph(i), bw.gamma_v, pop.n_max);
      REQUIRE((psi_ij - psi_ji.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("median heuristic maps the median pair to exp(-1)") {
  const auto pop = synthetic_population(10, 20, 400.0, 9);
  BandwidthEstimateInfo info;
  const auto bw = estimate_bandwidths(pop, 1000000, 0, &info);
  REQUIRE(bw.gamma_v > 0.0);
  REQUIRE(bw.gamma_e > 0.0);
  REQUIRE(info.node_pairs_used == info.node_pairs_total);  // small population, no subsample

  std::vector<double> kernels;
  for (std::size_t i = 0; i < pop.size(); ++i)
    for (std::size_t j = i + 1; j < pop.size(); ++j) {
      const auto psi = node_affinity(pop.graph(i), pop.graph(j), bw.gamma_v, pop.n_max);
      for (std::int32_t u = 0; u < pop.real_size[i]; ++u)
        for (std::int32_t v = 0; v < pop.real_size[j]; ++v) kernels.push_back(psi(u, v));
    }
  std::nth_element(kernels.begin(), kernels.begin() + kernels.size() / 2, kernels.end());
  REQUIRE_THAT(kernels[kernels.size() / 2], WithinAbs(std::exp(-1.0), 0.05));
}

TEST_CASE("bandwidth estimation ignores graph order") {
  auto pop = synthetic_population(4, 15, 200.0, 11);
  const auto bw = estimate_bandwidths(pop);

  PaddedPopulation reversed;
  reversed.n_max = pop.n_max;
  for (std::size_t q = pop.size(); q-- > 0;) {
    reversed.population.graphs.push_back(pop.graph(q));
    reversed.real_size.push_back(pop.real_size[q]);
  }
  const auto bw2 = estimate_bandwidths(reversed);
  REQUIRE_THAT(bw.gamma_v, WithinAbs(bw2.gamma_v, 1e-12));
  REQUIRE_THAT(bw.gamma_e, WithinAbs(bw2.gamma_e, 1e-12));
}

TEST_CASE("affinity cache round-trips pair blocks bit-exactly") {
  const auto pop = synthetic_population(3, 12, 300.0, 21);
  const auto bw = estimate_bandwidths(pop);
  const auto dir = std::filesystem::temp_directory_path() /
                   ("sgm_aff_cache_" + std::to_string(RngStream(std::random_device{}()).next_u64()));

  {
    AffinityCache cache(dir, population_hash(pop.population), bw);
    REQUIRE_FALSE(cache.load(0, 1).has_value());  // cold
    const auto fresh = make_affinity_pair(pop.graph(0), pop.graph(1), bw, pop.n_max);
    const auto via_cache = cache.get(pop, 0, 1);
    REQUIRE(via_cache.psi == fresh.psi);
    REQUIRE(via_cache.edges.size() == fresh.edges.size());

    const auto hit = cache.load(0, 1);
    REQUIRE(hit.has_value());
    REQUIRE(hit->psi == fresh.psi);
    for (std::size_t e = 0; e < fresh.edges.size(); ++e) {
      REQUIRE(hit->edges[e].w == fresh.edges[e].w);
      REQUIRE(hit->edges[e].ui == fresh.edges[e].ui);
    }

    // different bandwidths key different entries
    AffinityCache other(dir, population_hash(pop.population), {bw.gamma_v * 2.0, bw.gamma_e});
    REQUIRE_FALSE(other.load(0, 1).has_value());

    // matching through the cache gives the same bulk
    const auto direct = pairwise_all(pop, bw, {}, 1);
    const auto cached = pairwise_all(pop, bw, {}, 1, &cache);
    for (std::int32_t i = 0; i < 3; ++i)
      for (std::int32_t j = i + 1; j < 3; ++j) REQUIRE(direct.map(i, j) == cached.map(i, j));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("population hash tracks content") {
  const auto a = synthetic_population(2, 10, 300.0, 31);
  const auto b = synthetic_population(2, 10, 300.0, 32);
  REQUIRE(population_hash(a.population) == population_hash(a.population));
  REQUIRE(population_hash(a.population) != population_hash(b.population));
}

TEST_CASE("subsampled median stays close to the full median") {
  const auto pop = synthetic_population(8, 25, 200.0, 13);
  BandwidthEstimateInfo full_info, sub_info;
  const auto full = estimate_bandwidths(pop, 100000000ULL, 0, &full_info);
  const auto sub = estimate_bandwidths(pop, 5000, 123, &sub_info);
  REQUIRE(sub_info.node_pairs_used == 5000);
  REQUIRE(sub_info.node_pairs_total > sub_info.node_pairs_used);
  REQUIRE(sub_info.subsample_seed == 123);
  REQUIRE_THAT(sub.gamma_v / full.gamma_v, WithinAbs(1.0, 0.1));
  REQUIRE_THAT(sub.gamma_e / full.gamma_e, WithinAbs(1.0, 0.1));
}
