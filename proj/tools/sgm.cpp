// Command-line driver: synthetic population generation, pairwise and
// multi-graph matching, evaluation, and full benchmark sweeps.
//
// Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O error.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgm/affinity_cache.hpp"
#include "sgm/benchmark.hpp"
#include "sgm/version.hpp"

namespace fs = std::filesystem;
using namespace sgm;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::vector<double>> kappas;
  std::optional<int> n_graphs;
  std::optional<int> n_ref;
  std::optional<double> mu_pert;
  std::optional<double> sigma_pert;
  std::optional<double> edge_del_p;
  std::optional<int> workers;
  std::optional<int> repetitions;
  std::optional<std::vector<std::string>> methods;
  std::optional<double> mals_threshold;
  std::optional<double> mals_alpha;
  std::optional<double> mals_lambda;
  std::optional<std::string> affinity_cache;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "benchmark config file (JSON)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--kappa", f.kappas, "vMF concentration sweep values")->delimiter(',');
  cmd->add_option("--n-graphs", f.n_graphs, "graphs per population");
  cmd->add_option("--n-ref", f.n_ref, "reference node count");
  cmd->add_option("--mu-pert", f.mu_pert, "mean outlier/suppression count");
  cmd->add_option("--sigma-pert", f.sigma_pert, "std of outlier/suppression counts");
  cmd->add_option("--edge-del-p", f.edge_del_p, "edge deletion fraction");
  cmd->add_option("--workers", f.workers, "worker threads");
  cmd->add_option("--repetitions", f.repetitions, "repetitions per kappa");
  cmd->add_option("--methods", f.methods, "methods to run")->delimiter(',');
  cmd->add_option("--mals-threshold", f.mals_threshold, "mals binarization threshold");
  cmd->add_option("--mals-alpha", f.mals_alpha, "mals sparsity weight");
  cmd->add_option("--mals-lambda", f.mals_lambda, "mals nuclear-norm weight");
  cmd->add_option("--affinity-cache", f.affinity_cache, "directory for per-pair affinity blocks");
}

BenchmarkConfig resolve_config(const CommonFlags& f) {
  BenchmarkConfig config;
  if (!f.config_path.empty()) config = BenchmarkConfig::load(f.config_path);
  if (f.seed) config.seed = *f.seed;
  if (f.out) config.out_dir = *f.out;
  if (f.kappas) config.kappas = *f.kappas;
  if (f.n_graphs) config.gen.n_graphs = *f.n_graphs;
  if (f.n_ref) config.gen.n_ref = *f.n_ref;
  if (f.mu_pert) config.gen.mu_pert = *f.mu_pert;
  if (f.sigma_pert) config.gen.sigma_pert = *f.sigma_pert;
  if (f.edge_del_p) config.gen.edge_del_p = *f.edge_del_p;
  if (f.workers) config.workers = *f.workers;
  if (f.repetitions) config.repetitions = *f.repetitions;
  if (f.methods) config.methods = *f.methods;
  if (f.mals_threshold) config.params.mals.threshold = *f.mals_threshold;
  if (f.mals_alpha) config.params.mals.alpha = *f.mals_alpha;
  if (f.mals_lambda) config.params.mals.lambda = *f.mals_lambda;
  return config;
}

int cmd_generate(const CommonFlags& flags) {
  const auto config = resolve_config(flags);
  const auto files = run_generate(config);
  for (const auto& f : files) std::cout << f.string() << "\n";
  std::cout << files.size() << " population file(s) in " << config.out_dir << "/populations\n";
  return 0;
}

int cmd_match(const std::string& population_path, const std::string& method,
              const CommonFlags& flags) {
  auto config = resolve_config(flags);
  if (std::find(kKnownMethods.begin(), kKnownMethods.end(), method) == kKnownMethods.end())
    throw ConfigError("unknown method '" + method + "'");

  auto [pop, truth] = load_population(population_path);
  const auto padded = pad_with_dummies(std::move(pop));
  BandwidthEstimateInfo bw_info;
  const auto bw = estimate_bandwidths(padded, 1000000, config.seed, &bw_info);

  std::optional<AffinityCache> cache;
  if (flags.affinity_cache)
    cache.emplace(*flags.affinity_cache, population_hash(padded.population), bw);

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto init = pairwise_all(padded, bw, config.params.fw, config.workers,
                                 cache ? &*cache : nullptr);
  const double pairwise_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  auto outcome =
      run_method(method, padded, bw, init, pairwise_seconds, config.params, config.workers);

  if (method == "msync") {
    // explicit verification pass: synchronization must be exactly consistent
    for (std::int32_t q = 0; q < outcome.bulk.n_graphs(); ++q)
      if (graph_consistency(q, outcome.bulk) != 1.0)
        throw SolverError("msync output failed the consistency verification");
    outcome.metadata["consistency_verified"] = true;
  }

  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  const auto stem = fs::path(population_path).stem().string() + "_" + method;
  const auto hash = config.hash();
  save_assignment_triplets(outcome.bulk, padded, out_dir / (stem + ".assign.csv"), hash);
  outcome.metadata["population"] = population_path;
  outcome.metadata["config_hash"] = hash;
  outcome.metadata["bandwidth_info"] = {{"node_pairs_total", bw_info.node_pairs_total},
                                        {"node_pairs_used", bw_info.node_pairs_used},
                                        {"edge_pairs_total", bw_info.edge_pairs_total},
                                        {"edge_pairs_used", bw_info.edge_pairs_used},
                                        {"subsample_seed", bw_info.subsample_seed}};
  outcome.metadata["bulk"] = bulk_to_json(outcome.bulk);
  save_run_metadata(outcome.metadata, out_dir / (stem + ".meta.json"));
  std::cout << "assignments: " << (out_dir / (stem + ".assign.csv")).string() << "\n"
            << "metadata:    " << (out_dir / (stem + ".meta.json")).string() << "\n"
            << "wall_seconds: " << outcome.wall_seconds << "\n";
  return 0;
}

int cmd_eval(const std::string& assignment_path, const std::string& population_path,
             const CommonFlags& flags) {
  const auto config = resolve_config(flags);
  auto [pop, truth] = load_population(population_path);
  const auto provenance = pop.provenance;
  const auto padded = pad_with_dummies(std::move(pop));

  // prefer the metadata's full padded blocks (dummy matches included); the
  // triplet file only carries real-real pairs
  std::optional<BulkAssignment> bulk;
  std::string method = "unknown";
  double wall = 0.0;
  if (assignment_path.size() > 5 &&
      assignment_path.substr(assignment_path.size() - 5) == ".json") {
    const auto meta = load_run_metadata(assignment_path);
    if (!meta.contains("bulk")) throw IoError("metadata has no 'bulk' record");
    bulk = bulk_from_json(meta["bulk"]);
    method = meta.value("method", method);
    wall = meta.value("wall_seconds", 0.0);
  } else {
    bulk = load_assignment_triplets(assignment_path, padded);
  }

  const auto report = population_report(*bulk, padded, truth ? &*truth : nullptr, wall);

  double kappa = 0.0;
  int repetition = 0;
  if (provenance.contains("kappa")) kappa = provenance["kappa"].get<double>();
  if (provenance.contains("repetition")) repetition = provenance["repetition"].get<int>();
  const auto population_id = fs::path(population_path).stem().string();

  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  const auto metrics_path = out_dir / (population_id + "_" + method + "_metrics.csv");
  const auto details_path = out_dir / (population_id + "_" + method + "_nodes.csv");
  write_metrics_csv({make_metrics_row(report, population_id, method, kappa, repetition)},
                    metrics_path, config.hash());
  write_node_details(report, padded, details_path, config.hash());
  std::cout << "metrics: " << metrics_path.string() << "\n"
            << "details: " << details_path.string() << "\n";
  return 0;
}

int cmd_benchmark(const CommonFlags& flags) {
  const auto config = resolve_config(flags);
  const auto summary = run_benchmark(config);
  std::cout << kSummaryHeader << "\n";
  for (const auto& row : summary)
    std::cout << row.kappa << ',' << row.method << ',' << row.repetitions << ','
              << row.precision_mean << ',' << row.precision_std << ',' << row.recall_mean << ','
              << row.recall_std << ',' << row.f1_mean << ',' << row.f1_std << ','
              << row.n_clusters_mean << ',' << row.unmatched_frac_mean << ','
              << row.mean_silhouette_mean << ',' << row.mean_consistency_mean << ','
              << row.wall_seconds_mean << "\n";
  std::cout << "outputs in " << config.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spherical graph population generation, matching and evaluation"};
  app.set_version_flag("--version", std::string("sgm ") + kVersion);
  app.require_subcommand(1);

  CommonFlags flags;
  std::string population_path, assignment_path, method = "pairwise";

  auto* generate = app.add_subcommand("generate", "generate synthetic populations");
  add_common_flags(generate, flags);

  auto* match = app.add_subcommand("match", "match one population");
  match->add_option("population", population_path, "population file")->required();
  match->add_option("--method", method, "pairwise | msync | mals | cao");
  add_common_flags(match, flags);

  auto* eval = app.add_subcommand("eval", "evaluate an assignment against a population");
  eval->add_option("assignment", assignment_path, "assignment triplets or run metadata")
      ->required();
  eval->add_option("population", population_path, "population file")->required();
  add_common_flags(eval, flags);

  auto* benchmark = app.add_subcommand("benchmark", "full kappa sweep");
  add_common_flags(benchmark, flags);

  try {
    app.parse(argc, argv);
    if (generate->parsed()) return cmd_generate(flags);
    if (match->parsed()) return cmd_match(population_path, method, flags);
    if (eval->parsed()) return cmd_eval(assignment_path, population_path, flags);
    if (benchmark->parsed()) return cmd_benchmark(flags);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {  // solver, geometry, domain failures
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
