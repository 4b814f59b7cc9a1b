#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace sgm {

/// FNV-1a: stable across platforms, used to fingerprint configurations
/// and cache keys.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sgm
