#include "hitlist/prefix_map.hpp"

#include <fstream>
#include <istream>

#include "hitlist/csv.hpp"

namespace hitlist {

CountryCode parse_country(std::string_view text) {
  text = csv::trim(text);
  if (text.size() != 2) {
    throw Error(ErrorKind::Parse, "country code must be two letters: '" + std::string(text) + "'");
  }
  CountryCode cc;
  for (int i = 0; i < 2; ++i) {
    char c = text[i];
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    if (c < 'A' || c > 'Z') {
      throw Error(ErrorKind::Parse, "country code must be two letters: '" + std::string(text) + "'");
    }
    cc.code[i] = c;
  }
  return cc;
}

namespace {

template <class V>
void insert_text(PrefixTable<V>& table, std::string_view prefix, V value) {
  if (looks_like_ipv4(prefix)) {
    table.insert(parse_ipv4_prefix(prefix), std::move(value));
  } else {
    table.insert(parse_prefix(prefix), std::move(value));
  }
}

std::uint32_t parse_asn(std::string_view text) {
  if (text.size() > 2 && (text[0] == 'A' || text[0] == 'a') && (text[1] == 'S' || text[1] == 's')) {
    text.remove_prefix(2);
  }
  if (text.empty() || text.size() > 10) {
    throw Error(ErrorKind::Parse, "bad ASN '" + std::string(text) + "'");
  }
  std::uint64_t v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') throw Error(ErrorKind::Parse, "bad ASN '" + std::string(text) + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  if (v > 0xFFFFFFFFull) throw Error(ErrorKind::Parse, "ASN out of range '" + std::string(text) + "'");
  return static_cast<std::uint32_t>(v);
}

// Shared line loop: strips comments/blank lines, collects offenders, throws
// listing the first ten if any line failed.
template <class V, class LineFn>
PrefixTable<V> load_lines(std::istream& in, const char* what, PrefixFileReport* report,
                          LineFn&& parse_line) {
  PrefixTable<V> table;
  PrefixFileReport rep;
  std::vector<std::string> offenders;
  std::size_t bad = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++rep.lines;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = csv::trim(view);
    if (view.empty()) {
      ++rep.skipped;
      continue;
    }
    try {
      if (parse_line(table, view)) {
        ++rep.entries;
      } else {
        ++rep.skipped;
      }
    } catch (const Error& e) {
      ++bad;
      if (offenders.size() < 10) {
        offenders.push_back("line " + std::to_string(rep.lines) + ": " + e.what());
      }
    }
  }
  if (bad > 0) {
    std::string msg = std::to_string(bad) + " malformed line(s) in " + what + " file";
    for (const auto& o : offenders) msg += "\n  " + o;
    throw Error(ErrorKind::Malformed, msg);
  }
  table.freeze();
  if (report) *report = rep;
  return table;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open prefix file '" + path + "'");
  return in;
}

}  // namespace

PrefixTable<Asn> load_asn_table(std::istream& in, PrefixFileReport* report) {
  return load_lines<Asn>(in, "ASN", report, [](PrefixTable<Asn>& t, std::string_view line) {
    auto fields = csv::split_whitespace(line);
    if (fields.size() != 2) {
      throw Error(ErrorKind::Parse, "expected 'prefix asn', got '" + std::string(line) + "'");
    }
    insert_text(t, fields[0], Asn{parse_asn(fields[1])});
    return true;
  });
}

PrefixTable<Asn> load_asn_table(const std::string& path, PrefixFileReport* report) {
  auto in = open_or_throw(path);
  return load_asn_table(in, report);
}

PrefixTable<CountryCode> load_country_table(std::istream& in, PrefixFileReport* report) {
  return load_lines<CountryCode>(
      in, "country", report, [](PrefixTable<CountryCode>& t, std::string_view line) {
        auto fields = csv::split_record(line);
        if (fields.size() != 2) {
          throw Error(ErrorKind::Parse, "expected 'prefix,iso2', got '" + std::string(line) + "'");
        }
        if (csv::trim(fields[0]) == "prefix") return false;  // header
        insert_text(t, csv::trim(fields[0]), parse_country(fields[1]));
        return true;
      });
}

PrefixTable<CountryCode> load_country_table(const std::string& path, PrefixFileReport* report) {
  auto in = open_or_throw(path);
  return load_country_table(in, report);
}

PrefixTable<bool> load_alias_table(std::istream& in, PrefixFileReport* report) {
  return load_lines<bool>(in, "alias", report, [](PrefixTable<bool>& t, std::string_view line) {
    insert_text(t, line, true);
    return true;
  });
}

PrefixTable<bool> load_alias_table(const std::string& path, PrefixFileReport* report) {
  auto in = open_or_throw(path);
  return load_alias_table(in, report);
}

}  // namespace hitlist
