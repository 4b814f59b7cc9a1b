#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sgm/affinity.hpp"
#include "sgm/errors.hpp"
#include "sgm/evaluation.hpp"
#include "sgm/generator.hpp"
#include "sgm/graph.hpp"
#include "sgm/io.hpp"
#include "sgm/multigraph.hpp"
#include "sgm/pairwise.hpp"
#include "sgm/run_io.hpp"
#include "sgm/version.hpp"

namespace sgm {

inline const std::vector<std::string> kKnownMethods{"pairwise", "msync", "mals", "cao"};

struct MethodParams {
  FwOptions fw;
  MsyncOptions msync;
  MalsOptions mals;
  CaoOptions cao;

  nlohmann::json to_json() const {
    return {{"fw", {{"max_iters", fw.max_iters}, {"tol", fw.tol}}},
            {"msync",
             {{"dense_threshold", msync.dense_threshold},
              {"tol", msync.tol},
              {"max_iters", msync.max_iters}}},
            {"mals",
             {{"alpha", mals.alpha},
              {"lambda", mals.lambda},
              {"rank", mals.rank},
              {"threshold", mals.threshold},
              {"admm_mu", mals.admm_mu},
              {"max_sweeps", mals.max_sweeps},
              {"rel_tol", mals.rel_tol}}},
            {"cao", {{"max_sweeps", cao.max_sweeps}}}};
  }

  static MethodParams from_json(const nlohmann::json& j) {
    MethodParams p;
    if (j.contains("fw")) {
      p.fw.max_iters = j["fw"].value("max_iters", p.fw.max_iters);
      p.fw.tol = j["fw"].value("tol", p.fw.tol);
    }
    if (j.contains("msync")) {
      p.msync.dense_threshold = j["msync"].value("dense_threshold", p.msync.dense_threshold);
      p.msync.tol = j["msync"].value("tol", p.msync.tol);
      p.msync.max_iters = j["msync"].value("max_iters", p.msync.max_iters);
    }
    if (j.contains("mals")) {
      p.mals.alpha = j["mals"].value("alpha", p.mals.alpha);
      p.mals.lambda = j["mals"].value("lambda", p.mals.lambda);
      p.mals.rank = j["mals"].value("rank", p.mals.rank);
      p.mals.threshold = j["mals"].value("threshold", p.mals.threshold);
      p.mals.admm_mu = j["mals"].value("admm_mu", p.mals.admm_mu);
      p.mals.max_sweeps = j["mals"].value("max_sweeps", p.mals.max_sweeps);
      p.mals.rel_tol = j["mals"].value("rel_tol", p.mals.rel_tol);
    }
    if (j.contains("cao")) p.cao.max_sweeps = j["cao"].value("max_sweeps", p.cao.max_sweeps);
    return p;
  }
};

/// One declarative file drives a whole benchmark; flags override fields.
struct BenchmarkConfig {
  GenerationParams gen;  // kappa and seed are overridden per cell
  std::vector<double> kappas{100.0, 200.0, 400.0, 1000.0};
  int repetitions = 10;
  std::vector<std::string> methods{"pairwise", "msync", "mals", "cao"};
  MethodParams params;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int workers = 1;

  void validate() const {
    gen.validate();
    if (kappas.empty()) throw ConfigError("kappa list must not be empty");
    for (const double k : kappas)
      if (!(k > 0.0)) throw ConfigError("kappa values must be positive");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (methods.empty()) throw ConfigError("methods list must not be empty");
    for (const auto& m : methods)
      if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end())
        throw ConfigError("unknown method '" + m + "'");
    if (workers < 1) throw ConfigError("workers must be >= 1");
  }

  nlohmann::json to_json() const {
    return {{"generation", gen.to_json()}, {"kappas", kappas},   {"repetitions", repetitions},
            {"methods", methods},          {"params", params.to_json()}, {"seed", seed},
            {"out_dir", out_dir},          {"workers", workers}};
  }

  static BenchmarkConfig from_json(const nlohmann::json& j) {
    BenchmarkConfig c;
    if (j.contains("generation")) c.gen = GenerationParams::from_json(j["generation"]);
    c.kappas = j.value("kappas", c.kappas);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.methods = j.value("methods", c.methods);
    if (j.contains("params")) c.params = MethodParams::from_json(j["params"]);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.workers = j.value("workers", c.workers);
    return c;
  }

  static BenchmarkConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    try {
      nlohmann::json j;
      in >> j;
      return from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
  }

  /// Fingerprint of the scientific configuration; out_dir and workers do not
  /// affect results, so they stay out of the hash.
  std::string hash() const {
    nlohmann::json j = to_json();
    j.erase("out_dir");
    j.erase("workers");
    return fnv1a_hex(j.dump());
  }

  /// Population seed for one (kappa, repetition) cell; scheduling-independent.
  std::uint64_t cell_seed(std::size_t kappa_index, int repetition) const {
    return splitmix64(seed + 0x9e3779b97f4a7c15ULL *
                                 (static_cast<std::uint64_t>(kappa_index) * 1048576 +
                                  static_cast<std::uint64_t>(repetition) + 1));
  }

  GenerationParams cell_params(std::size_t kappa_index, int repetition) const {
    GenerationParams p = gen;
    p.kappa = kappas[kappa_index];
    p.seed = cell_seed(kappa_index, repetition);
    return p;
  }
};

namespace detail {

inline std::string kappa_tag(double kappa) {
  std::ostringstream s;
  s << kappa;
  std::string tag = s.str();
  for (auto& c : tag)
    if (c == '.') c = 'p';
  return tag;
}

}  // namespace detail

inline std::string population_stem(double kappa, int repetition) {
  return "kappa" + detail::kappa_tag(kappa) + "_rep" + std::to_string(repetition);
}

/// Generate (or reuse, when the file already exists: the content is a pure
/// function of the config) every population of the sweep.
inline std::vector<std::filesystem::path> run_generate(const BenchmarkConfig& config) {
  config.validate();
  const auto dir = std::filesystem::path(config.out_dir) / "populations";
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  for (std::size_t k = 0; k < config.kappas.size(); ++k)
    for (int rep = 0; rep < config.repetitions; ++rep) {
      const auto file = dir / (population_stem(config.kappas[k], rep) + ".json");
      files.push_back(file);
      if (std::filesystem::exists(file)) continue;
      auto [pop, truth] = generate_population(config.cell_params(k, rep));
      pop.provenance["kappa"] = config.kappas[k];
      pop.provenance["repetition"] = rep;
      pop.provenance["config_hash"] = config.hash();
      pop.provenance["version"] = kVersion;
      save_population(pop, truth, file);
    }
  return files;
}

struct MatchOutcome {
  BulkAssignment bulk;
  double wall_seconds = 0.0;
  nlohmann::json metadata;
};

/// Run one matching method. Multi-graph methods start from the supplied
/// pairwise initialization; its wall time is reported separately in the
/// metadata, mirroring how the methods are benchmarked.
inline MatchOutcome run_method(const std::string& method, const PaddedPopulation& pop,
                               const KernelBandwidths& bw, const BulkAssignment& pairwise_init,
                               double pairwise_seconds, const MethodParams& params, int workers) {
  using clock = std::chrono::steady_clock;
  nlohmann::json meta{{"method", method},
                      {"version", kVersion},
                      {"bandwidths", {{"gamma_v", bw.gamma_v}, {"gamma_e", bw.gamma_e}}},
                      {"pairwise_init_seconds", pairwise_seconds},
                      {"hyperparameters", params.to_json()}};
  const auto t0 = clock::now();
  std::optional<BulkAssignment> result;
  if (method == "pairwise") {
    result = pairwise_init;
    meta["wall_seconds"] = pairwise_seconds;
  } else if (method == "msync") {
    auto res = msync(pairwise_init, pop.n_max, params.msync);
    meta["residual"] = res.residual;
    result = std::move(res.bulk);
  } else if (method == "mals") {
    auto res = mals(pairwise_init, pop.real_size, make_node_affinity_provider(pop, bw),
                    params.mals, workers);
    meta["objective_trace"] = res.objective_trace;
    meta["sweeps"] = res.sweeps;
    meta["converged"] = res.converged;
    meta["warnings"] = res.warnings;
    result = std::move(res.bulk);
  } else if (method == "cao") {
    auto res = cao_cst(pairwise_init, params.cao);
    meta["consistency_trace"] = res.consistency_trace;
    meta["sweeps"] = res.sweeps;
    result = std::move(res.bulk);
  } else {
    throw ConfigError("unknown method '" + method + "'");
  }
  const double secs = std::chrono::duration<double>(clock::now() - t0).count();
  if (method != "pairwise") meta["wall_seconds"] = secs;
  return {std::move(*result), method == "pairwise" ? pairwise_seconds : secs, std::move(meta)};
}

struct SummaryRow {
  double kappa = 0.0;
  std::string method;
  int repetitions = 0;
  double precision_mean = 0.0, precision_std = 0.0;
  double recall_mean = 0.0, recall_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
  double n_clusters_mean = 0.0;
  double unmatched_frac_mean = 0.0;
  double mean_silhouette_mean = 0.0;
  double mean_consistency_mean = 0.0;
  double wall_seconds_mean = 0.0;
};

inline constexpr const char* kSummaryHeader =
    "kappa,method,repetitions,precision_mean,precision_std,recall_mean,recall_std,f1_mean,"
    "f1_std,n_clusters_mean,unmatched_frac_mean,mean_silhouette_mean,mean_consistency_mean,"
    "wall_seconds_mean";

inline std::vector<SummaryRow> aggregate_rows(const BenchmarkConfig& config,
                                              const std::vector<MetricsRow>& rows) {
  std::vector<SummaryRow> out;
  for (const double kappa : config.kappas) {
    for (const auto& method : config.methods) {
      std::vector<double> precision, recall, f1, ncl, unm, sil, cons, wall;
      for (const auto& r : rows) {
        if (r.method != method || r.kappa != kappa) continue;
        if (r.precision) precision.push_back(*r.precision);
        if (r.recall) recall.push_back(*r.recall);
        if (r.f1) f1.push_back(*r.f1);
        ncl.push_back(static_cast<double>(r.n_clusters));
        unm.push_back(r.unmatched_frac);
        sil.push_back(r.mean_silhouette);
        cons.push_back(r.mean_consistency);
        wall.push_back(r.wall_seconds);
      }
      if (ncl.empty()) continue;
      SummaryRow s;
      s.kappa = kappa;
      s.method = method;
      s.repetitions = static_cast<int>(ncl.size());
      std::tie(s.precision_mean, s.precision_std) = detail::mean_std(precision);
      std::tie(s.recall_mean, s.recall_std) = detail::mean_std(recall);
      std::tie(s.f1_mean, s.f1_std) = detail::mean_std(f1);
      s.n_clusters_mean = detail::mean_std(ncl).first;
      s.unmatched_frac_mean = detail::mean_std(unm).first;
      s.mean_silhouette_mean = detail::mean_std(sil).first;
      s.mean_consistency_mean = detail::mean_std(cons).first;
      s.wall_seconds_mean = detail::mean_std(wall).first;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows,
                              const std::filesystem::path& path,
                              const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "# sgm " << kVersion << " config=" << config_hash << "\n" << kSummaryHeader << "\n";
  for (const auto& r : rows) {
    out << detail::format_double(r.kappa) << ',' << r.method << ',' << r.repetitions << ','
        << detail::format_double(r.precision_mean) << ',' << detail::format_double(r.precision_std)
        << ',' << detail::format_double(r.recall_mean) << ','
        << detail::format_double(r.recall_std) << ',' << detail::format_double(r.f1_mean) << ','
        << detail::format_double(r.f1_std) << ',' << detail::format_double(r.n_clusters_mean)
        << ',' << detail::format_double(r.unmatched_frac_mean) << ','
        << detail::format_double(r.mean_silhouette_mean) << ','
        << detail::format_double(r.mean_consistency_mean) << ','
        << detail::format_double(r.wall_seconds_mean) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

/// Full sweep: generate -> match -> eval for every (kappa, repetition,
/// method), then aggregate. Completed cells (their metrics file exists) are
/// skipped, so interrupted runs resume. Cells run concurrently when workers
/// allow; per-cell seeds keep the output independent of scheduling.
inline std::vector<SummaryRow> run_benchmark(const BenchmarkConfig& config) {
  config.validate();
  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir / "cells");
  {
    std::ofstream cfg(out_dir / "config.json");
    nlohmann::json j = config.to_json();
    j["config_hash"] = config.hash();
    j["version"] = kVersion;
    cfg << j.dump(2) << '\n';
  }
  run_generate(config);

  struct Cell {
    std::size_t kappa_index;
    int repetition;
  };
  std::vector<Cell> cells;
  for (std::size_t k = 0; k < config.kappas.size(); ++k)
    for (int rep = 0; rep < config.repetitions; ++rep) cells.push_back({k, rep});

  const int outer = std::max(1, std::min<int>(config.workers, static_cast<int>(cells.size())));
  const int inner = std::max(1, config.workers / outer);

  parallel_for(cells.size(), outer, [&](std::size_t c) {
    const auto [k, rep] = cells[c];
    const double kappa = config.kappas[k];
    const auto stem = population_stem(kappa, rep);

    bool missing = false;
    for (const auto& method : config.methods)
      missing = missing ||
                !std::filesystem::exists(out_dir / "cells" / (stem + "_" + method + ".csv"));
    if (!missing) return;

    auto [pop, truth] =
        load_population(out_dir / "populations" / (stem + ".json"));
    const auto padded = pad_with_dummies(std::move(pop));
    const auto bw = estimate_bandwidths(padded);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const auto init = pairwise_all(padded, bw, config.params.fw, inner);
    const double pairwise_seconds = std::chrono::duration<double>(clock::now() - t0).count();

    for (const auto& method : config.methods) {
      const auto cell_file = out_dir / "cells" / (stem + "_" + method + ".csv");
      if (std::filesystem::exists(cell_file)) continue;
      auto outcome = run_method(method, padded, bw, init, pairwise_seconds, config.params, inner);
      const auto report =
          population_report(outcome.bulk, padded, truth ? &*truth : nullptr, outcome.wall_seconds);
      write_metrics_csv({make_metrics_row(report, stem, method, kappa, rep)}, cell_file,
                        config.hash());
    }
  });

  std::vector<MetricsRow> rows;
  for (const auto& [k, rep] : cells) {
    const auto stem = population_stem(config.kappas[k], rep);
    for (const auto& method : config.methods) {
      const auto cell_file = out_dir / "cells" / (stem + "_" + method + ".csv");
      for (auto& row : read_metrics_csv(cell_file)) rows.push_back(std::move(row));
    }
  }
  write_metrics_csv(rows, out_dir / "metrics.csv", config.hash());
  const auto summary = aggregate_rows(config, rows);
  write_summary_csv(summary, out_dir / "summary.csv", config.hash());
  return summary;
}

}  // namespace sgm
