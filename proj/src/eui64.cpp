#include "hitlist/eui64.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "hitlist/csv.hpp"
#include "hitlist/error.hpp"

namespace hitlist {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Parses `octets` hex octets, optionally separated by a uniform ':' or '-'.
std::optional<std::uint64_t> parse_octets(std::string_view text, int octets) {
  std::string digits;
  digits.reserve(2 * octets);
  char sep = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == ':' || c == '-') {
      if (sep == 0) sep = c;
      if (c != sep || digits.size() % 2 != 0 || digits.empty()) return std::nullopt;
      continue;
    }
    if (hex_value(c) < 0) return std::nullopt;
    digits += c;
  }
  if (static_cast<int>(digits.size()) != 2 * octets) return std::nullopt;
  if (sep != 0 && std::count(text.begin(), text.end(), sep) != octets - 1) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : digits) v = (v << 4) | static_cast<std::uint64_t>(hex_value(c));
  return v;
}

}  // namespace

std::string to_string(MacAddress mac) {
  const std::uint64_t b = mac.bits();
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x",
                static_cast<unsigned>((b >> 40) & 0xff), static_cast<unsigned>((b >> 32) & 0xff),
                static_cast<unsigned>((b >> 24) & 0xff), static_cast<unsigned>((b >> 16) & 0xff),
                static_cast<unsigned>((b >> 8) & 0xff), static_cast<unsigned>(b & 0xff));
  return buf;
}

std::string to_string(Oui oui) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x", (oui.bits >> 16) & 0xff,
                (oui.bits >> 8) & 0xff, oui.bits & 0xff);
  return buf;
}

MacAddress parse_mac(std::string_view text) {
  auto v = parse_octets(text, 6);
  if (!v) throw Error(ErrorKind::Parse, "malformed MAC address '" + std::string(text) + "'");
  return MacAddress(*v);
}

Oui parse_oui(std::string_view text) {
  auto v = parse_octets(text, 3);
  if (!v) throw Error(ErrorKind::Parse, "malformed OUI '" + std::string(text) + "'");
  return Oui{static_cast<std::uint32_t>(*v)};
}

MacAddress extract_mac(InterfaceId iid) {
  if (!is_apparent_eui64(iid)) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(iid.bits));
    throw Error(ErrorKind::NotEui64, std::string("IID ") + buf + " has no FF:FE filler");
  }
  const std::uint64_t upper = iid.bits >> 40;
  const std::uint64_t lower = iid.bits & 0xFFFFFFu;
  return MacAddress(((upper << 24) | lower) ^ (std::uint64_t{0x02} << 40));
}

void OuiDatabase::insert(Oui oui, std::string organization) {
  entries_[oui.bits] = std::move(organization);
}

std::optional<std::string_view> OuiDatabase::find(Oui oui) const {
  auto it = entries_.find(oui.bits);
  if (it == entries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

OuiDatabase load_oui_csv(std::istream& in) {
  OuiDatabase db;
  std::string line;
  if (!std::getline(in, line)) return db;
  auto header = csv::split_record(csv::chomp(line));
  int assignment_col = -1;
  int org_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name(csv::trim(header[i]));
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (name == "assignment") assignment_col = static_cast<int>(i);
    if (name == "organization name") org_col = static_cast<int>(i);
  }
  if (assignment_col < 0 || org_col < 0) {
    throw Error(ErrorKind::Malformed,
                "OUI registry header must name 'Assignment' and 'Organization Name' columns");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = csv::chomp(line);
    if (csv::trim(view).empty()) continue;
    auto fields = csv::split_record(view);
    if (static_cast<int>(fields.size()) <= std::max(assignment_col, org_col)) {
      throw Error(ErrorKind::Malformed, "OUI registry line " + std::to_string(line_no) +
                                            ": too few columns");
    }
    const std::string_view assignment = csv::trim(fields[assignment_col]);
    // MA-M / MA-S blocks carry longer assignments; only 24-bit OUIs are kept.
    if (assignment.size() != 6) continue;
    auto v = parse_octets(assignment, 3);
    if (!v) {
      throw Error(ErrorKind::Malformed, "OUI registry line " + std::to_string(line_no) +
                                            ": bad assignment '" + std::string(assignment) + "'");
    }
    db.insert(Oui{static_cast<std::uint32_t>(*v)}, std::string(csv::trim(fields[org_col])));
  }
  return db;
}

OuiDatabase load_oui_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open OUI registry '" + path + "'");
  return load_oui_csv(in);
}

std::string resolve_vendor(MacAddress mac, const OuiDatabase& db) {
  auto name = db.find(mac.oui());
  return name ? std::string(*name) : std::string(kUnlisted);
}

void write_mac_report(std::ostream& out, std::vector<MacCount> counts, const OuiDatabase& db) {
  std::sort(counts.begin(), counts.end(), [](const MacCount& a, const MacCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.mac < b.mac;
  });
  out << "mac,oui,vendor,count\n";
  for (const auto& c : counts) {
    out << to_string(c.mac) << ',' << to_string(c.mac.oui()) << ','
        << csv::quote(resolve_vendor(c.mac, db)) << ',' << c.count << '\n';
  }
}

}  // namespace hitlist
