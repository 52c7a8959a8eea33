#pragma once

// Core IPv6 value types: addresses, prefixes, interface identifiers and the
// nibble-entropy score used throughout the classifiers.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace hitlist {

using uint128 = unsigned __int128;

/// Mask with the top `length` bits of a 128-bit word set. `length` in [0, 128].
constexpr uint128 high_mask128(int length) {
  return length <= 0 ? uint128{0} : (~uint128{0}) << (128 - length);
}

class Ipv6Address {
 public:
  constexpr Ipv6Address() = default;
  constexpr explicit Ipv6Address(uint128 bits) : bits_(bits) {}

  static constexpr Ipv6Address from_halves(std::uint64_t high, std::uint64_t low) {
    return Ipv6Address((uint128{high} << 64) | low);
  }

  constexpr uint128 bits() const { return bits_; }
  constexpr std::uint64_t high64() const { return static_cast<std::uint64_t>(bits_ >> 64); }
  constexpr std::uint64_t low64() const { return static_cast<std::uint64_t>(bits_); }

  /// Hextet `i` counted from the most significant (0..7).
  constexpr std::uint16_t hextet(int i) const {
    return static_cast<std::uint16_t>(bits_ >> (112 - 16 * i));
  }

  constexpr auto operator<=>(const Ipv6Address&) const = default;

 private:
  uint128 bits_ = 0;
};

/// Parses any RFC 4291 textual form (zero compression, embedded dotted quad).
/// Throws Error(Parse) naming the character offset of the offending token.
Ipv6Address parse_ipv6(std::string_view text);

/// Non-throwing variant for hot ingestion loops.
std::optional<Ipv6Address> try_parse_ipv6(std::string_view text) noexcept;

/// RFC 5952 canonical form: lowercase, no leading zeros, longest zero run compressed.
std::string to_string(Ipv6Address addr);

class Ipv4Address {
 public:
  constexpr Ipv4Address() = default;
  constexpr explicit Ipv4Address(std::uint32_t bits) : bits_(bits) {}
  constexpr std::uint32_t bits() const { return bits_; }
  constexpr auto operator<=>(const Ipv4Address&) const = default;

 private:
  std::uint32_t bits_ = 0;
};

Ipv4Address parse_ipv4(std::string_view text);
std::optional<Ipv4Address> try_parse_ipv4(std::string_view text) noexcept;
std::string to_string(Ipv4Address addr);

/// The low 64 bits of an address.
struct InterfaceId {
  std::uint64_t bits = 0;
  constexpr auto operator<=>(const InterfaceId&) const = default;
};

constexpr InterfaceId iid_of(Ipv6Address addr) { return InterfaceId{addr.low64()}; }

/// An IPv6 prefix whose host bits are always zero.
class Prefix {
 public:
  constexpr Prefix() = default;

  /// Masks `addr` to `length` bits. Throws Error(Argument) if length is outside [0, 128].
  Prefix(Ipv6Address addr, int length);

  constexpr Ipv6Address base() const { return base_; }
  constexpr int length() const { return length_; }

  constexpr bool contains(Ipv6Address addr) const {
    const uint128 mask = high_mask128(length_);
    return (addr.bits() & mask) == base_.bits();
  }

  constexpr auto operator<=>(const Prefix&) const = default;

 private:
  Ipv6Address base_{};
  int length_ = 0;
};

Prefix prefix_of(Ipv6Address addr, int length);

/// Parses "addr/len". A bare address is rejected; host bits must be zero
/// unless `allow_host_bits` is set, in which case they are masked off.
Prefix parse_prefix(std::string_view text, bool allow_host_bits = false);
std::string to_string(const Prefix& prefix);

class Ipv4Prefix {
 public:
  constexpr Ipv4Prefix() = default;
  Ipv4Prefix(Ipv4Address addr, int length);

  constexpr Ipv4Address base() const { return base_; }
  constexpr int length() const { return length_; }
  bool contains(Ipv4Address addr) const;

  constexpr auto operator<=>(const Ipv4Prefix&) const = default;

 private:
  Ipv4Address base_{};
  int length_ = 0;
};

Ipv4Prefix parse_ipv4_prefix(std::string_view text, bool allow_host_bits = false);
std::string to_string(const Ipv4Prefix& prefix);

/// True if `text` looks like an IPv4 literal or prefix (contains a dot, no colon).
bool looks_like_ipv4(std::string_view text);

struct EntropyScore {
  double value = 0.0;
};

enum class EntropyBand { Low, Medium, High };

std::string_view to_string(EntropyBand band);

/// Shannon entropy of the IID's 16 hex nibbles, divided by 4 bits.
EntropyScore normalized_iid_entropy(InterfaceId iid);

/// Low below 0.25, High above 0.75, Medium otherwise (both boundaries are Medium).
EntropyBand entropy_band(EntropyScore score);

struct Ipv6Hash {
  std::size_t operator()(Ipv6Address a) const noexcept {
    std::uint64_t x = a.high64() * 0x9E3779B97F4A7C15ull ^ a.low64();
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    return static_cast<std::size_t>(x);
  }
};

struct PrefixHash {
  std::size_t operator()(const Prefix& p) const noexcept {
    return Ipv6Hash{}(p.base()) ^ static_cast<std::size_t>(p.length());
  }
};

}  // namespace hitlist
