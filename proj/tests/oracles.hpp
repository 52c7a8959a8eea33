#pragma once
// Independent reference implementations used only by tests.

#include <arpa/inet.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hitlist/addr.hpp"
#include "hitlist/eui64.hpp"

namespace oracle {

using hitlist::Ipv6Address;
using hitlist::uint128;

// Seeded value generator for property tests.
struct Gen {
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  std::mt19937_64 rng;

  std::uint64_t u64() { return rng(); }
  std::uint64_t below(std::uint64_t n) { return rng() % n; }
  int between(int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); }
  Ipv6Address addr() { return Ipv6Address::from_halves(rng(), rng()); }
  // Addresses with runs of zero hextets, to exercise compression.
  Ipv6Address sparse_addr() {
    uint128 v = 0;
    for (int i = 0; i < 8; ++i) {
      const std::uint64_t r = rng();
      const std::uint16_t h = (r & 3) == 0 ? static_cast<std::uint16_t>(r >> 16) : (r & 3) == 1 ? 1 : 0;
      v = (v << 16) | h;
    }
    return Ipv6Address(v);
  }
  hitlist::MacAddress mac() { return hitlist::MacAddress(rng() & 0xFFFFFFFFFFFFull); }
};

// Address parsing through the C library.
inline std::optional<Ipv6Address> pton(const std::string& text) {
  unsigned char buf[16];
  if (inet_pton(AF_INET6, text.c_str(), buf) != 1) return std::nullopt;
  uint128 v = 0;
  for (unsigned char b : buf) v = (v << 8) | b;
  return Ipv6Address(v);
}

// RFC 5952 rendering written from the rules: longest run (>= 2) of zero
// hextets compressed, first run on ties, lowercase, no leading zeros.
inline std::string rfc5952(Ipv6Address a) {
  std::array<unsigned, 8> h{};
  for (int i = 0; i < 8; ++i) h[i] = static_cast<unsigned>((a.bits() >> (112 - 16 * i)) & 0xFFFF);
  int best = -1, best_len = 0;
  for (int i = 0; i < 8;) {
    if (h[i] != 0) {
      ++i;
      continue;
    }
    int j = i;
    while (j < 8 && h[j] == 0) ++j;
    if (j - i > best_len) {
      best = i;
      best_len = j - i;
    }
    i = j;
  }
  if (best_len < 2) best = -1;
  std::string out;
  char buf[8];
  for (int i = 0; i < 8; ++i) {
    if (i == best) {
      out += "::";
      i += best_len - 1;
      continue;
    }
    if (!out.empty() && out.back() != ':') out += ':';
    std::snprintf(buf, sizeof buf, "%x", h[i]);
    out += buf;
  }
  return out;
}

// Nibble entropy from the hex text.
inline double entropy(std::uint64_t iid) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(iid));
  std::map<char, int> f;
  for (int i = 0; i < 16; ++i) ++f[buf[i]];
  double h = 0.0;
  for (const auto& [c, n] : f) h += (n / 16.0) * std::log2(16.0 / n);
  return h / 4.0;
}

// Longest-containing-prefix by scanning every entry.
template <class V>
struct LinearLpm {
  std::vector<std::pair<hitlist::Prefix, V>> entries;

  void insert(const hitlist::Prefix& p, V v) {
    for (auto& e : entries) {
      if (e.first == p) {
        e.second = v;
        return;
      }
    }
    entries.emplace_back(p, v);
  }
  std::optional<V> lookup(Ipv6Address a) const {
    int best = -1;
    std::optional<V> out;
    for (const auto& [p, v] : entries) {
      const uint128 mask = p.length() == 0 ? uint128{0} : ~uint128{0} << (128 - p.length());
      if ((a.bits() & mask) == p.base().bits() && p.length() > best) {
        best = p.length();
        out = v;
      }
    }
    return out;
  }
};

// MAC <-> IID following the RFC 4291 appendix procedure byte by byte.
inline std::uint64_t eui64_from_bytes(const std::array<std::uint8_t, 6>& m) {
  const std::array<std::uint8_t, 8> b = {static_cast<std::uint8_t>(m[0] ^ 0x02), m[1], m[2], 0xFF, 0xFE, m[3], m[4], m[5]};
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("hitlist_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
