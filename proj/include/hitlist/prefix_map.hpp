#pragma once

// Longest-prefix-match tables. Each address family gets its own per-bit
// binary trie; IPv4 keys live in the top 32 bits of the 128-bit key space.
// Tables are built single-threaded, then frozen and shared read-only.

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hitlist/addr.hpp"
#include "hitlist/error.hpp"

namespace hitlist {

struct Asn {
  std::uint32_t value = 0;
  constexpr auto operator<=>(const Asn&) const = default;
};

/// ISO-3166-1 alpha-2, stored uppercase.
struct CountryCode {
  std::array<char, 2> code{};
  constexpr auto operator<=>(const CountryCode&) const = default;
  std::string str() const { return std::string(code.data(), 2); }
};

CountryCode parse_country(std::string_view text);

inline std::string to_string(Asn asn) { return std::to_string(asn.value); }
inline std::string to_string(const CountryCode& cc) { return cc.str(); }
inline std::string to_string(bool flag) { return flag ? "true" : "false"; }

template <class V>
class BinaryTrie {
 public:
  enum class Insert { Added, Duplicate, Replaced };

  /// `key` holds the prefix bits left-aligned; `length` in [0, 128].
  Insert insert(uint128 key, int length, V value) {
    std::int32_t node = 0;
    for (int depth = 0; depth < length; ++depth) {
      const int bit = static_cast<int>((key >> (127 - depth)) & 1u);
      std::int32_t next = nodes_[node].child[bit];
      if (next < 0) {
        next = static_cast<std::int32_t>(nodes_.size());
        nodes_[node].child[bit] = next;
        nodes_.push_back(Node{});
      }
      node = next;
    }
    Node& n = nodes_[node];
    if (n.value < 0) {
      n.value = static_cast<std::int32_t>(values_.size());
      values_.push_back(Slot{std::move(value)});
      return Insert::Added;
    }
    if (values_[n.value].value == value) return Insert::Duplicate;
    values_[n.value].value = std::move(value);
    return Insert::Replaced;
  }

  /// Value of the deepest valued node on the path of `key`, walking at most `max_depth` bits.
  const V* lookup(uint128 key, int max_depth) const {
    const V* best = nullptr;
    std::int32_t node = 0;
    for (int depth = 0;; ++depth) {
      const Node& n = nodes_[node];
      if (n.value >= 0) best = &values_[n.value].value;
      if (depth == max_depth) break;
      const int bit = static_cast<int>((key >> (127 - depth)) & 1u);
      node = n.child[bit];
      if (node < 0) break;
    }
    return best;
  }

  std::size_t size() const { return values_.size(); }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::int32_t child[2] = {-1, -1};
    std::int32_t value = -1;
  };
  // Wrapped so that V = bool does not hit the vector<bool> proxy.
  struct Slot {
    V value;
  };
  std::vector<Node> nodes_{Node{}};
  std::vector<Slot> values_;
};

template <class V>
class PrefixTable {
 public:
  void insert(const Prefix& prefix, V value) {
    check_mutable();
    note(v6_.insert(prefix.base().bits(), prefix.length(), std::move(value)), to_string(prefix));
  }

  void insert(const Ipv4Prefix& prefix, V value) {
    check_mutable();
    note(v4_.insert(uint128{prefix.base().bits()} << 96, prefix.length(), std::move(value)),
         to_string(prefix));
  }

  /// After freezing, further inserts throw Error(Argument).
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  std::optional<V> lookup_longest(Ipv6Address addr) const {
    const V* v = v6_.lookup(addr.bits(), 128);
    return v ? std::optional<V>(*v) : std::nullopt;
  }

  std::optional<V> lookup_longest(Ipv4Address addr) const {
    const V* v = v4_.lookup(uint128{addr.bits()} << 96, 32);
    return v ? std::optional<V>(*v) : std::nullopt;
  }

  std::size_t size() const { return v6_.size() + v4_.size(); }
  std::size_t v6_size() const { return v6_.size(); }
  std::size_t v4_size() const { return v4_.size(); }
  std::size_t conflicts() const { return conflicts_; }
  bool empty() const { return size() == 0; }

 private:
  void check_mutable() const {
    if (frozen_) throw Error(ErrorKind::Argument, "insert into a frozen prefix table");
  }

  void note(typename BinaryTrie<V>::Insert outcome, const std::string& prefix) {
    if (outcome == BinaryTrie<V>::Insert::Replaced) {
      ++conflicts_;
      warn("conflicting value for prefix " + prefix + "; last write wins");
    }
  }

  BinaryTrie<V> v6_;
  BinaryTrie<V> v4_;
  std::size_t conflicts_ = 0;
  bool frozen_ = false;
};

/// Builds a frozen table from (prefix text, value) pairs; either family is accepted.
/// Throws Error(Parse) naming the 1-based entry number of the first bad prefix.
template <class V>
PrefixTable<V> build_table(const std::vector<std::pair<std::string, V>>& entries) {
  PrefixTable<V> table;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [text, value] = entries[i];
    try {
      if (looks_like_ipv4(text)) {
        table.insert(parse_ipv4_prefix(text), value);
      } else {
        table.insert(parse_prefix(text), value);
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, "entry " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  table.freeze();
  return table;
}

enum class PrefixValueKind { Asn, Country, Alias };

struct PrefixFileReport {
  std::size_t lines = 0;    ///< physical lines read
  std::size_t entries = 0;  ///< prefixes inserted
  std::size_t skipped = 0;  ///< blank and comment lines
};

/// `prefix asn` per line, whitespace separated.
PrefixTable<Asn> load_asn_table(std::istream& in, PrefixFileReport* report = nullptr);
PrefixTable<Asn> load_asn_table(const std::string& path, PrefixFileReport* report = nullptr);

/// CSV `prefix,iso2`.
PrefixTable<CountryCode> load_country_table(std::istream& in, PrefixFileReport* report = nullptr);
PrefixTable<CountryCode> load_country_table(const std::string& path,
                                            PrefixFileReport* report = nullptr);

/// One prefix per line; every listed prefix is aliased.
PrefixTable<bool> load_alias_table(std::istream& in, PrefixFileReport* report = nullptr);
PrefixTable<bool> load_alias_table(const std::string& path, PrefixFileReport* report = nullptr);

}  // namespace hitlist
