#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sgm/errors.hpp"
#include "sgm/graph.hpp"

namespace sgm {

/// Population file layout:
///   {"graphs":[{"id":str,"nodes":[[x,y,z],...],"edges":[[u,v,length],...]},...],
///    "ground_truth":[[ref_or_null,...],...],   // optional, null marks outliers
///    "provenance":{...}}                        // optional free-form metadata
/// Doubles round-trip exactly (shortest-representation serialization).
inline void save_population(const GraphPopulation& pop,
                            const std::optional<GroundTruth>& truth,
                            const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["graphs"] = nlohmann::json::array();
  for (const auto& g : pop.graphs) {
    nlohmann::json jg;
    jg["id"] = g.id();
    auto& nodes = jg["nodes"] = nlohmann::json::array();
    for (const auto& p : g.nodes()) nodes.push_back({p.x(), p.y(), p.z()});
    auto& edges = jg["edges"] = nlohmann::json::array();
    for (const auto& e : g.edges()) edges.push_back({e.u, e.v, e.length});
    doc["graphs"].push_back(std::move(jg));
  }
  if (truth) {
    auto& jt = doc["ground_truth"] = nlohmann::json::array();
    for (const auto& graph_refs : truth->refs) {
      nlohmann::json row = nlohmann::json::array();
      for (const NodeRef r : graph_refs) {
        if (r == kOutlier)
          row.push_back(nullptr);
        else
          row.push_back(r);
      }
      jt.push_back(std::move(row));
    }
  }
  if (!pop.provenance.is_null() && !pop.provenance.empty()) doc["provenance"] = pop.provenance;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::pair<GraphPopulation, std::optional<GroundTruth>> load_population(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("parse error in " + path.string() + ": " + e.what());
  }

  GraphPopulation pop;
  try {
    if (!doc.contains("graphs") || !doc["graphs"].is_array())
      throw IoError("missing 'graphs' array");
    for (const auto& jg : doc["graphs"]) {
      const std::string id = jg.at("id").get<std::string>();
      std::vector<SphericalPoint> nodes;
      for (const auto& jn : jg.at("nodes")) {
        if (!jn.is_array() || jn.size() != 3)
          throw IoError("graph '" + id + "': node is not an [x,y,z] triple");
        nodes.emplace_back(jn[0].get<double>(), jn[1].get<double>(), jn[2].get<double>());
      }
      std::vector<Edge> edges;
      for (const auto& je : jg.at("edges")) {
        if (!je.is_array() || je.size() != 3)
          throw IoError("graph '" + id + "': edge is not a [u,v,length] triple");
        edges.push_back({je[0].get<std::int32_t>(), je[1].get<std::int32_t>(),
                         je[2].get<double>()});
      }
      pop.graphs.emplace_back(id, std::move(nodes), std::move(edges));
    }
    if (doc.contains("provenance")) pop.provenance = doc["provenance"];
  } catch (const DomainError& e) {
    throw IoError("invariant violation in " + path.string() + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("parse error in " + path.string() + ": " + e.what());
  }

  std::optional<GroundTruth> truth;
  if (doc.contains("ground_truth")) {
    GroundTruth gt;
    for (const auto& row : doc["ground_truth"]) {
      std::vector<NodeRef> refs;
      for (const auto& r : row) refs.push_back(r.is_null() ? kOutlier : r.get<NodeRef>());
      gt.refs.push_back(std::move(refs));
    }
    try {
      gt.validate(pop);
    } catch (const DomainError& e) {
      throw IoError("invariant violation in " + path.string() + ": " + e.what());
    }
    truth = std::move(gt);
  }
  return {std::move(pop), std::move(truth)};
}

}  // namespace sgm
