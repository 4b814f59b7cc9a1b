#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgm/assignment.hpp"
#include "sgm/errors.hpp"
#include "sgm/evaluation.hpp"
#include "sgm/graph.hpp"
#include "sgm/hash.hpp"
#include "sgm/version.hpp"

namespace sgm {

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// assignment triplets: one `graph_i,graph_j,node_u,node_v` line per matched
// real-node pair, i < j
// ---------------------------------------------------------------------------

inline void save_assignment_triplets(const BulkAssignment& bulk, const PaddedPopulation& pop,
                                     const std::filesystem::path& path,
                                     const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "# sgm " << kVersion << " config=" << config_hash << "\n";
  out << "graph_i,graph_j,node_u,node_v\n";
  for (std::int32_t i = 0; i < bulk.n_graphs(); ++i)
    for (std::int32_t j = i + 1; j < bulk.n_graphs(); ++j) {
      const auto& map = bulk.upper_block(i, j);
      for (std::int32_t u = 0; u < pop.real_size[i]; ++u) {
        const auto v = map[static_cast<std::size_t>(u)];
        if (v == kUnmatched || v >= pop.real_size[j]) continue;
        out << i << ',' << j << ',' << u << ',' << v << '\n';
      }
    }
  if (!out) throw IoError("write failed: " + path.string());
}

inline BulkAssignment load_assignment_triplets(const std::filesystem::path& path,
                                               const PaddedPopulation& pop) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  const auto N = static_cast<std::int32_t>(pop.size());
  std::vector<std::vector<std::int32_t>> maps(static_cast<std::size_t>(N) * N);
  for (auto& m : maps) m.assign(static_cast<std::size_t>(pop.n_max), kUnmatched);

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.rfind("graph_i", 0) == 0) continue;
    long i, j, u, v;
    if (std::sscanf(line.c_str(), "%ld,%ld,%ld,%ld", &i, &j, &u, &v) != 4)
      throw IoError("assignment parse error at " + path.string() + ":" +
                    std::to_string(line_no));
    if (i < 0 || j < 0 || i >= N || j >= N || i >= j || u < 0 || v < 0 ||
        u >= pop.real_size[i] || v >= pop.real_size[j])
      throw IoError("assignment index out of range at " + path.string() + ":" +
                    std::to_string(line_no));
    auto& m = maps[static_cast<std::size_t>(i) * N + j];
    if (m[static_cast<std::size_t>(u)] != kUnmatched)
      throw IoError("duplicate row assignment at " + path.string() + ":" +
                    std::to_string(line_no));
    m[static_cast<std::size_t>(u)] = static_cast<std::int32_t>(v);
  }

  BulkAssignment bulk(N, pop.n_max);
  for (std::int32_t i = 0; i < N; ++i)
    for (std::int32_t j = i + 1; j < N; ++j)
      bulk.set_block(i, j, std::move(maps[static_cast<std::size_t>(i) * N + j]));
  return bulk;
}

// ---------------------------------------------------------------------------
// run metadata: method, hyperparameters, traces, and the complete padded
// block maps (dummy matches included, which the triplet format cannot carry)
// ---------------------------------------------------------------------------

inline nlohmann::json bulk_to_json(const BulkAssignment& bulk) {
  nlohmann::json blocks = nlohmann::json::array();
  for (std::int32_t i = 0; i < bulk.n_graphs(); ++i)
    for (std::int32_t j = i + 1; j < bulk.n_graphs(); ++j)
      blocks.push_back({{"i", i}, {"j", j}, {"map", bulk.upper_block(i, j)}});
  return {{"n_graphs", bulk.n_graphs()}, {"n_max", bulk.n_max()}, {"blocks", std::move(blocks)}};
}

inline BulkAssignment bulk_from_json(const nlohmann::json& j) {
  BulkAssignment bulk(j.at("n_graphs").get<std::int32_t>(), j.at("n_max").get<std::int32_t>());
  for (const auto& blk : j.at("blocks"))
    bulk.set_block(blk.at("i").get<std::int32_t>(), blk.at("j").get<std::int32_t>(),
                   blk.at("map").get<std::vector<std::int32_t>>());
  return bulk;
}

inline void save_run_metadata(const nlohmann::json& meta, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline nlohmann::json load_run_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("parse error in " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// metrics CSV: one row per (population-id, method, kappa, repetition)
// ---------------------------------------------------------------------------

struct MetricsRow {
  std::string population_id;
  std::string method;
  double kappa = 0.0;
  int repetition = 0;
  std::optional<double> precision, recall, f1;  // empty without ground truth
  std::int64_t n_clusters = 0;
  double unmatched_frac = 0.0;
  double mean_silhouette = 0.0;
  double std_silhouette = 0.0;
  double mean_consistency = 0.0;
  double std_consistency = 0.0;
  double wall_seconds = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "population_id,method,kappa,repetition,precision,recall,f1,n_clusters,unmatched_frac,"
    "mean_silhouette,std_silhouette,mean_consistency,std_consistency,wall_seconds";

inline MetricsRow make_metrics_row(const ClusterReport& rep, std::string population_id,
                                   std::string method, double kappa, int repetition) {
  MetricsRow row;
  row.population_id = std::move(population_id);
  row.method = std::move(method);
  row.kappa = kappa;
  row.repetition = repetition;
  if (rep.score) {
    row.precision = rep.score->precision;
    row.recall = rep.score->recall;
    row.f1 = rep.score->f1;
  }
  row.n_clusters = rep.n_clusters;
  row.unmatched_frac = rep.unmatched_frac;
  row.mean_silhouette = rep.mean_silhouette;
  row.std_silhouette = rep.std_silhouette;
  row.mean_consistency = rep.mean_consistency;
  row.std_consistency = rep.std_consistency;
  row.wall_seconds = rep.wall_seconds;
  return row;
}

inline void write_metrics_csv(const std::vector<MetricsRow>& rows,
                              const std::filesystem::path& path,
                              const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "# sgm " << kVersion << " config=" << config_hash << "\n" << kMetricsHeader << "\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? detail::format_double(*v) : std::string{};
  };
  for (const auto& r : rows) {
    out << r.population_id << ',' << r.method << ',' << detail::format_double(r.kappa) << ','
        << r.repetition << ',' << opt(r.precision) << ',' << opt(r.recall) << ',' << opt(r.f1)
        << ',' << r.n_clusters << ',' << detail::format_double(r.unmatched_frac) << ','
        << detail::format_double(r.mean_silhouette) << ','
        << detail::format_double(r.std_silhouette) << ','
        << detail::format_double(r.mean_consistency) << ','
        << detail::format_double(r.std_consistency) << ','
        << detail::format_double(r.wall_seconds) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<MetricsRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.rfind("population_id", 0) == 0) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == 13) cells.push_back("");  // trailing empty column
    if (cells.size() != 14)
      throw IoError("metrics parse error at " + path.string() + ":" + std::to_string(line_no));
    MetricsRow r;
    try {
      r.population_id = cells[0];
      r.method = cells[1];
      r.kappa = std::stod(cells[2]);
      r.repetition = std::stoi(cells[3]);
      if (!cells[4].empty()) r.precision = std::stod(cells[4]);
      if (!cells[5].empty()) r.recall = std::stod(cells[5]);
      if (!cells[6].empty()) r.f1 = std::stod(cells[6]);
      r.n_clusters = std::stoll(cells[7]);
      r.unmatched_frac = std::stod(cells[8]);
      r.mean_silhouette = std::stod(cells[9]);
      r.std_silhouette = std::stod(cells[10]);
      r.mean_consistency = std::stod(cells[11]);
      r.std_consistency = std::stod(cells[12]);
      r.wall_seconds = cells[13].empty() ? 0.0 : std::stod(cells[13]);
    } catch (const std::exception&) {
      throw IoError("metrics parse error at " + path.string() + ":" + std::to_string(line_no));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Per-node detail: `graph_id,node_id,label,silhouette,consistency`, one row
/// per real node; the label cell is empty for unlabeled nodes.
inline void write_node_details(const ClusterReport& rep, const PaddedPopulation& pop,
                               const std::filesystem::path& path,
                               const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "# sgm " << kVersion << " config=" << config_hash << "\n";
  out << "graph_id,node_id,label,silhouette,consistency\n";
  for (std::size_t q = 0; q < pop.size(); ++q)
    for (std::int32_t u = 0; u < pop.real_size[q]; ++u) {
      const auto l = rep.labeling.label[q][static_cast<std::size_t>(u)];
      out << pop.graph(q).id() << ',' << u << ','
          << (l == kUnlabeled ? std::string{} : std::to_string(l)) << ','
          << detail::format_double(rep.silhouettes.node[q][static_cast<std::size_t>(u)]) << ','
          << detail::format_double(rep.consistency[q][static_cast<std::size_t>(u)]) << '\n';
    }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace sgm
