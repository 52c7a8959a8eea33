#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hitlist/addr.hpp"

namespace hitlist {

/// IEEE Organizationally Unique Identifier: the top 24 bits of a MAC.
struct Oui {
  std::uint32_t bits = 0;
  constexpr auto operator<=>(const Oui&) const = default;
};

class MacAddress {
 public:
  constexpr MacAddress() = default;
  /// Only the low 48 bits of `bits` are kept.
  constexpr explicit MacAddress(std::uint64_t bits) : bits_(bits & 0xFFFF'FFFF'FFFFull) {}
  static constexpr MacAddress from_parts(Oui oui, std::uint32_t nic) {
    return MacAddress((std::uint64_t{oui.bits} << 24) | (nic & 0xFFFFFFu));
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr Oui oui() const { return Oui{static_cast<std::uint32_t>(bits_ >> 24)}; }
  /// Vendor-assigned low 24 bits.
  constexpr std::uint32_t nic() const { return static_cast<std::uint32_t>(bits_ & 0xFFFFFFu); }

  constexpr auto operator<=>(const MacAddress&) const = default;

 private:
  std::uint64_t bits_ = 0;
};

/// Lowercase colon-separated, e.g. "00:11:22:33:44:55".
std::string to_string(MacAddress mac);
std::string to_string(Oui oui);
/// Accepts ':' or '-' separators, either case.
MacAddress parse_mac(std::string_view text);
/// Accepts "00:11:22", "00-11-22" or "001122".
Oui parse_oui(std::string_view text);

/// Bytes 3 and 4 of the IID (from the most significant) are FF FE.
constexpr bool is_apparent_eui64(InterfaceId iid) {
  return ((iid.bits >> 24) & 0xFFFFu) == 0xFFFEu;
}

/// Removes the FF:FE filler and flips the Universal/Local bit (0x02 of the first octet).
/// Throws Error(NotEui64) if the IID does not carry the filler.
MacAddress extract_mac(InterfaceId iid);

constexpr InterfaceId embed_mac(MacAddress mac) {
  const std::uint64_t m = mac.bits() ^ (std::uint64_t{0x02} << 40);
  const std::uint64_t upper = m >> 24;
  const std::uint64_t lower = m & 0xFFFFFFu;
  return InterfaceId{(upper << 40) | (std::uint64_t{0xFFFE} << 24) | lower};
}

/// Expected number of random IIDs that happen to carry FF:FE at bytes 3-4.
constexpr double expected_random_apparent(std::uint64_t corpus_size) {
  return static_cast<double>(corpus_size) / 65536.0;
}

inline constexpr std::string_view kUnlisted = "Unlisted";

class OuiDatabase {
 public:
  void insert(Oui oui, std::string organization);
  /// Organization name, or nullopt when the OUI is not registered.
  std::optional<std::string_view> find(Oui oui) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::uint32_t, std::string> entries_;
};

/// Loads the IEEE MA-L CSV layout (Registry, Assignment, Organization Name, ...).
OuiDatabase load_oui_csv(std::istream& in);
OuiDatabase load_oui_csv(const std::string& path);

/// Organization name or "Unlisted".
std::string resolve_vendor(MacAddress mac, const OuiDatabase& db);

struct MacCount {
  MacAddress mac;
  std::uint64_t count = 0;
};

/// Writes `mac,oui,vendor,count`, most frequent first (ties by MAC).
void write_mac_report(std::ostream& out, std::vector<MacCount> counts, const OuiDatabase& db);

}  // namespace hitlist
