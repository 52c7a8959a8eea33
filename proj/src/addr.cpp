#include "hitlist/addr.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "hitlist/error.hpp"

namespace hitlist {

namespace {

struct ParseFailure {
  std::size_t position;
  const char* reason;
};

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Parses dotted-quad into `out`. Returns the offset of the bad character, or npos.
std::size_t parse_dotted(std::string_view text, std::uint32_t& out) {
  std::uint32_t value = 0;
  int octets = 0;
  std::size_t i = 0;
  while (true) {
    if (i >= text.size() || text[i] < '0' || text[i] > '9') return i;
    const std::size_t start = i;
    unsigned octet = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      octet = octet * 10 + static_cast<unsigned>(text[i] - '0');
      if (octet > 255 || i - start >= 3) return start;
      ++i;
    }
    // Leading zeros are ambiguous (octal in some parsers); reject them.
    if (i - start > 1 && text[start] == '0') return start;
    value = (value << 8) | octet;
    ++octets;
    if (octets == 4) break;
    if (i >= text.size() || text[i] != '.') return i;
    ++i;
  }
  if (i != text.size()) return i;
  out = value;
  return std::string_view::npos;
}

struct GroupBuffer {
  std::array<std::uint16_t, 10> values{};
  std::size_t count = 0;
  void push_back(std::uint16_t v) {
    if (count < values.size()) values[count] = v;
    ++count;
  }
  std::size_t size() const { return count; }
  std::uint16_t operator[](std::size_t i) const { return values[i]; }
};

// Splits one side of a (possibly) compressed address into 16-bit groups.
std::optional<ParseFailure> parse_groups(std::string_view text, std::size_t offset,
                                         bool may_end_with_ipv4,
                                         GroupBuffer& groups) {
  if (text.empty()) return std::nullopt;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    const std::string_view group =
        text.substr(start, colon == std::string_view::npos ? std::string_view::npos
                                                           : colon - start);
    const bool last = colon == std::string_view::npos;
    if (group.empty()) return ParseFailure{offset + start, "empty group"};
    if (group.find('.') != std::string_view::npos) {
      if (!last || !may_end_with_ipv4) {
        return ParseFailure{offset + start, "embedded IPv4 must be the final group"};
      }
      std::uint32_t v4 = 0;
      const std::size_t bad = parse_dotted(group, v4);
      if (bad != std::string_view::npos) {
        return ParseFailure{offset + start + bad, "bad embedded IPv4"};
      }
      groups.push_back(static_cast<std::uint16_t>(v4 >> 16));
      groups.push_back(static_cast<std::uint16_t>(v4));
    } else {
      if (group.size() > 4) return ParseFailure{offset + start + 4, "group longer than 4 digits"};
      unsigned value = 0;
      for (std::size_t k = 0; k < group.size(); ++k) {
        const int h = hex_value(group[k]);
        if (h < 0) return ParseFailure{offset + start + k, "invalid hex digit"};
        value = (value << 4) | static_cast<unsigned>(h);
      }
      groups.push_back(static_cast<std::uint16_t>(value));
    }
    if (last) break;
    start = colon + 1;
    if (start == text.size()) return ParseFailure{offset + colon, "trailing colon"};
  }
  return std::nullopt;
}


struct Parsed {
  std::optional<Ipv6Address> addr;
  ParseFailure failure{0, ""};
};

Parsed parse_core(std::string_view text) {
  Parsed result;
  if (text.empty()) {
    result.failure = {0, "empty address"};
    return result;
  }
  GroupBuffer left;
  GroupBuffer right;
  const std::size_t dc = text.find("::");
  if (dc != std::string_view::npos) {
    const std::size_t again = text.find("::", dc + 1);
    if (again != std::string_view::npos) {
      result.failure = {again, "more than one '::'"};
      return result;
    }
    if (auto f = parse_groups(text.substr(0, dc), 0, false, left)) {
      result.failure = *f;
      return result;
    }
    if (auto f = parse_groups(text.substr(dc + 2), dc + 2, true, right)) {
      result.failure = *f;
      return result;
    }
    if (left.size() + right.size() > 7) {
      result.failure = {dc, "too many groups around '::'"};
      return result;
    }
  } else {
    if (text.front() == ':') {
      result.failure = {0, "leading colon"};
      return result;
    }
    if (auto f = parse_groups(text, 0, true, left)) {
      result.failure = *f;
      return result;
    }
    if (left.size() != 8) {
      result.failure = {text.size(), left.size() < 8 ? "too few groups" : "too many groups"};
      return result;
    }
  }
  std::array<std::uint16_t, 8> hextets{};
  for (std::size_t i = 0; i < left.size(); ++i) hextets[i] = left[i];
  for (std::size_t i = 0; i < right.size(); ++i) hextets[8 - right.size() + i] = right[i];
  uint128 bits = 0;
  for (auto h : hextets) bits = (bits << 16) | h;
  result.addr = Ipv6Address(bits);
  return result;
}

}  // namespace

Ipv6Address parse_ipv6(std::string_view text) {
  Parsed p = parse_core(text);
  if (!p.addr) {
    throw Error(ErrorKind::Parse, "malformed IPv6 address '" + std::string(text) +
                                      "' at position " + std::to_string(p.failure.position) +
                                      ": " + p.failure.reason);
  }
  return *p.addr;
}

std::optional<Ipv6Address> try_parse_ipv6(std::string_view text) noexcept {
  return parse_core(text).addr;
}

std::string to_string(Ipv6Address addr) {
  std::array<std::uint16_t, 8> h{};
  for (int i = 0; i < 8; ++i) h[i] = addr.hextet(i);
  int best_start = -1;
  int best_len = 0;
  for (int i = 0; i < 8;) {
    if (h[i] != 0) {
      ++i;
      continue;
    }
    int j = i;
    while (j < 8 && h[j] == 0) ++j;
    if (j - i > best_len) {
      best_start = i;
      best_len = j - i;
    }
    i = j;
  }
  if (best_len < 2) best_start = -1;

  std::string out;
  out.reserve(39);
  char buf[8];
  for (int i = 0; i < 8; ++i) {
    if (i == best_start) {
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

Ipv4Address parse_ipv4(std::string_view text) {
  std::uint32_t v = 0;
  const std::size_t bad = parse_dotted(text, v);
  if (bad != std::string_view::npos) {
    throw Error(ErrorKind::Parse, "malformed IPv4 address '" + std::string(text) +
                                      "' at position " + std::to_string(bad));
  }
  return Ipv4Address(v);
}

std::optional<Ipv4Address> try_parse_ipv4(std::string_view text) noexcept {
  std::uint32_t v = 0;
  if (parse_dotted(text, v) != std::string_view::npos) return std::nullopt;
  return Ipv4Address(v);
}

std::string to_string(Ipv4Address addr) {
  const std::uint32_t v = addr.bits();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", v >> 24, (v >> 16) & 0xff, (v >> 8) & 0xff,
                v & 0xff);
  return buf;
}

Prefix::Prefix(Ipv6Address addr, int length) {
  if (length < 0 || length > 128) {
    throw Error(ErrorKind::Argument, "prefix length " + std::to_string(length) +
                                         " outside [0, 128]");
  }
  base_ = Ipv6Address(addr.bits() & high_mask128(length));
  length_ = length;
}

Prefix prefix_of(Ipv6Address addr, int length) { return Prefix(addr, length); }

namespace {

int parse_length(std::string_view text, int max, std::string_view whole) {
  if (text.empty() || text.size() > 3) {
    throw Error(ErrorKind::Parse, "malformed prefix length in '" + std::string(whole) + "'");
  }
  int len = 0;
  for (char c : text) {
    if (c < '0' || c > '9') {
      throw Error(ErrorKind::Parse, "malformed prefix length in '" + std::string(whole) + "'");
    }
    len = len * 10 + (c - '0');
  }
  if (len > max) {
    throw Error(ErrorKind::Parse, "prefix length out of range in '" + std::string(whole) + "'");
  }
  return len;
}

}  // namespace

Prefix parse_prefix(std::string_view text, bool allow_host_bits) {
  const std::size_t slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw Error(ErrorKind::Parse, "missing '/len' in prefix '" + std::string(text) + "'");
  }
  const Ipv6Address addr = parse_ipv6(text.substr(0, slash));
  const int len = parse_length(text.substr(slash + 1), 128, text);
  Prefix p(addr, len);
  if (!allow_host_bits && p.base() != addr) {
    throw Error(ErrorKind::Parse, "host bits set in prefix '" + std::string(text) + "'");
  }
  return p;
}

std::string to_string(const Prefix& prefix) {
  return to_string(prefix.base()) + "/" + std::to_string(prefix.length());
}

Ipv4Prefix::Ipv4Prefix(Ipv4Address addr, int length) {
  if (length < 0 || length > 32) {
    throw Error(ErrorKind::Argument, "IPv4 prefix length " + std::to_string(length) +
                                         " outside [0, 32]");
  }
  const std::uint32_t mask = length == 0 ? 0u : ~0u << (32 - length);
  base_ = Ipv4Address(addr.bits() & mask);
  length_ = length;
}

bool Ipv4Prefix::contains(Ipv4Address addr) const {
  const std::uint32_t mask = length_ == 0 ? 0u : ~0u << (32 - length_);
  return (addr.bits() & mask) == base_.bits();
}

Ipv4Prefix parse_ipv4_prefix(std::string_view text, bool allow_host_bits) {
  const std::size_t slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw Error(ErrorKind::Parse, "missing '/len' in prefix '" + std::string(text) + "'");
  }
  const Ipv4Address addr = parse_ipv4(text.substr(0, slash));
  const int len = parse_length(text.substr(slash + 1), 32, text);
  Ipv4Prefix p(addr, len);
  if (!allow_host_bits && p.base() != addr) {
    throw Error(ErrorKind::Parse, "host bits set in prefix '" + std::string(text) + "'");
  }
  return p;
}

std::string to_string(const Ipv4Prefix& prefix) {
  return to_string(prefix.base()) + "/" + std::to_string(prefix.length());
}

bool looks_like_ipv4(std::string_view text) {
  return text.find(':') == std::string_view::npos && text.find('.') != std::string_view::npos;
}

std::string_view to_string(EntropyBand band) {
  switch (band) {
    case EntropyBand::Low: return "low";
    case EntropyBand::Medium: return "medium";
    case EntropyBand::High: return "high";
  }
  return "?";
}

EntropyScore normalized_iid_entropy(InterfaceId iid) {
  std::array<int, 16> counts{};
  for (int i = 0; i < 16; ++i) ++counts[(iid.bits >> (4 * i)) & 0xf];
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = c / 16.0;
    h -= p * std::log2(p);
  }
  // -0.0 for the single-symbol case.
  return EntropyScore{h <= 0.0 ? 0.0 : h / 4.0};
}

EntropyBand entropy_band(EntropyScore score) {
  if (score.value < 0.25) return EntropyBand::Low;
  if (score.value > 0.75) return EntropyBand::High;
  return EntropyBand::Medium;
}

}  // namespace hitlist
