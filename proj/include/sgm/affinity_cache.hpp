#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "sgm/affinity.hpp"
#include "sgm/errors.hpp"
#include "sgm/graph.hpp"
#include "sgm/hash.hpp"

namespace sgm {

/// Content fingerprint of a population: node coordinates and edge attributes.
inline std::string population_hash(const GraphPopulation& pop) {
  std::string buf;
  buf.reserve(pop.size() * 1024);
  char tmp[64];
  for (const auto& g : pop.graphs) {
    buf += g.id();
    for (const auto& p : g.nodes()) {
      std::snprintf(tmp, sizeof(tmp), "%.17g,%.17g,%.17g;", p.x(), p.y(), p.z());
      buf += tmp;
    }
    for (const auto& e : g.edges()) {
      std::snprintf(tmp, sizeof(tmp), "%d-%d:%.17g;", e.u, e.v, e.length);
      buf += tmp;
    }
  }
  return fnv1a_hex(buf);
}

/// On-disk cache of per-pair affinity blocks, keyed by population content,
/// pair indices and bandwidth values. Purely an accelerator: entries are
/// bit-exact copies of what make_affinity_pair computes.
class AffinityCache {
 public:
  AffinityCache(std::filesystem::path dir, std::string population_hash, KernelBandwidths bw)
      : dir_(std::move(dir)), pop_hash_(std::move(population_hash)), bw_(bw) {
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path entry_path(std::int32_t i, std::int32_t j) const {
    char key[160];
    std::snprintf(key, sizeof(key), "%s_%d_%d_%.17g_%.17g", pop_hash_.c_str(), i, j, bw_.gamma_v,
                  bw_.gamma_e);
    return dir_ / (fnv1a_hex(key) + ".aff");
  }

  std::optional<AffinityPair> load(std::int32_t i, std::int32_t j) const {
    const auto path = entry_path(i, j);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    auto read_i32 = [&in] {
      std::int32_t v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      return v;
    };
    const std::int32_t magic = read_i32();
    if (magic != kMagic) return std::nullopt;
    AffinityPair aff;
    aff.n_i = read_i32();
    aff.n_j = read_i32();
    aff.n_max = read_i32();
    const std::int32_t edge_count = read_i32();
    aff.psi.resize(aff.n_max, aff.n_max);
    in.read(reinterpret_cast<char*>(aff.psi.data()),
            static_cast<std::streamsize>(sizeof(double)) * aff.n_max * aff.n_max);
    aff.edges.resize(static_cast<std::size_t>(edge_count));
    in.read(reinterpret_cast<char*>(aff.edges.data()),
            static_cast<std::streamsize>(sizeof(EdgePairAffinity)) * edge_count);
    if (!in) return std::nullopt;
    return aff;
  }

  void store(std::int32_t i, std::int32_t j, const AffinityPair& aff) const {
    const auto path = entry_path(i, j);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("affinity cache: cannot write " + path.string());
    auto write_i32 = [&out](std::int32_t v) {
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    write_i32(kMagic);
    write_i32(aff.n_i);
    write_i32(aff.n_j);
    write_i32(aff.n_max);
    write_i32(static_cast<std::int32_t>(aff.edges.size()));
    out.write(reinterpret_cast<const char*>(aff.psi.data()),
              static_cast<std::streamsize>(sizeof(double)) * aff.n_max * aff.n_max);
    out.write(reinterpret_cast<const char*>(aff.edges.data()),
              static_cast<std::streamsize>(sizeof(EdgePairAffinity)) * aff.edges.size());
    if (!out) throw IoError("affinity cache: write failed for " + path.string());
  }

  /// Fetch or compute-and-store one pair block.
  AffinityPair get(const PaddedPopulation& pop, std::int32_t i, std::int32_t j) const {
    if (auto hit = load(i, j)) return std::move(*hit);
    auto aff = make_affinity_pair(pop.graph(i), pop.graph(j), bw_, pop.n_max);
    store(i, j, aff);
    return aff;
  }

 private:
  static constexpr std::int32_t kMagic = 0x53474d41;  // "SGMA"
  std::filesystem::path dir_;
  std::string pop_hash_;
  KernelBandwidths bw_;
};

}  // namespace sgm
