#include "hitlist/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hitlist/error.hpp"

namespace hitlist {

std::string_view to_string(AddressCategory c) {
  switch (c) {
    case AddressCategory::Zeroes: return "zeroes";
    case AddressCategory::LowByte: return "low_byte";
    case AddressCategory::Low2Bytes: return "low_2_bytes";
    case AddressCategory::Ipv4Mapped: return "ipv4_mapped";
    case AddressCategory::HighEntropy: return "high_entropy";
    case AddressCategory::MediumEntropy: return "medium_entropy";
    case AddressCategory::LowEntropy: return "low_entropy";
  }
  return "?";
}

AddressCategory parse_category(std::string_view text) {
  for (auto c : kAllCategories) {
    if (to_string(c) == text) return c;
  }
  throw Error(ErrorKind::Parse, "unknown address category '" + std::string(text) + "'");
}

std::string_view to_string(Ipv4Encoding e) {
  switch (e) {
    case Ipv4Encoding::HexLow32: return "hex_low32";
    case Ipv4Encoding::DecimalHextets: return "decimal_hextets";
    case Ipv4Encoding::HexHigh32: return "hex_high32";
  }
  return "?";
}

std::optional<AddressCategory> structural_category(InterfaceId iid) {
  if (iid.bits == 0) return AddressCategory::Zeroes;
  if (iid.bits < 0x100) return AddressCategory::LowByte;
  if (iid.bits < 0x10000) return AddressCategory::Low2Bytes;
  return std::nullopt;
}

namespace {

// A hextet whose hex rendering is all decimal digits with value <= 255.
std::optional<std::uint32_t> decimal_octet(std::uint16_t hextet) {
  if (hextet > 0x255) return std::nullopt;
  std::uint32_t value = 0;
  for (int shift = 8; shift >= 0; shift -= 4) {
    const unsigned digit = (hextet >> shift) & 0xf;
    if (digit > 9) return std::nullopt;
    value = value * 10 + digit;
  }
  if (value > 255) return std::nullopt;
  return value;
}

}  // namespace

std::vector<Ipv4Candidate> detect_ipv4_candidates(Ipv6Address addr) {
  std::vector<Ipv4Candidate> out;
  const std::uint64_t iid = addr.low64();

  const auto low = static_cast<std::uint32_t>(iid);
  if (low != 0) out.push_back({addr, Ipv4Address(low), Ipv4Encoding::HexLow32});

  std::uint32_t dotted = 0;
  bool decimal_ok = true;
  for (int i = 4; i < 8 && decimal_ok; ++i) {
    auto octet = decimal_octet(addr.hextet(i));
    if (!octet) {
      decimal_ok = false;
    } else {
      dotted = (dotted << 8) | *octet;
    }
  }
  if (decimal_ok && dotted != 0) {
    out.push_back({addr, Ipv4Address(dotted), Ipv4Encoding::DecimalHextets});
  }

  const auto high = static_cast<std::uint32_t>(iid >> 32);
  if (high != 0) out.push_back({addr, Ipv4Address(high), Ipv4Encoding::HexHigh32});
  return out;
}

Ipv4Validation validate_ipv4_mapped(const std::map<Asn, std::vector<Ipv4Candidate>>& candidates,
                                    const std::map<Asn, std::uint64_t>& totals,
                                    const PrefixTable<Asn>& v4table,
                                    const Ipv4Thresholds& thresholds) {
  Ipv4Validation result;
  for (const auto& [asn, list] : candidates) {
    std::unordered_set<Ipv6Address, Ipv6Hash> consistent;
    for (const auto& cand : list) {
      auto owner = v4table.lookup_longest(cand.embedded);
      if (owner && *owner == asn) consistent.insert(cand.source);
    }
    AsIpv4Stats stats;
    auto t = totals.find(asn);
    stats.total = t == totals.end() ? 0 : t->second;
    stats.consistent = consistent.size();
    stats.accepted = stats.consistent >= thresholds.min_count &&
                     static_cast<double>(stats.consistent) >
                         thresholds.min_fraction * static_cast<double>(stats.total);
    if (stats.accepted) result.accepted.insert(consistent.begin(), consistent.end());
    result.per_as[asn] = stats;
  }
  for (const auto& [asn, total] : totals) {
    if (!result.per_as.contains(asn)) result.per_as[asn] = AsIpv4Stats{total, 0, false};
  }
  return result;
}

AddressCategory categorize(Ipv6Address addr, EntropyScore entropy, bool ipv4_accepted) {
  if (auto s = structural_category(iid_of(addr))) return *s;
  if (ipv4_accepted) return AddressCategory::Ipv4Mapped;
  switch (entropy_band(entropy)) {
    case EntropyBand::High: return AddressCategory::HighEntropy;
    case EntropyBand::Medium: return AddressCategory::MediumEntropy;
    case EntropyBand::Low: return AddressCategory::LowEntropy;
  }
  return AddressCategory::LowEntropy;
}

CorpusClassification classify_corpus(std::span<const Ipv6Address> addresses,
                                     const PrefixTable<Asn>& asmap,
                                     const PrefixTable<Asn>& v4table,
                                     const Ipv4Thresholds& thresholds) {
  CorpusClassification out;
  out.asns.reserve(addresses.size());
  std::map<Asn, std::vector<Ipv4Candidate>> candidates;
  std::map<Asn, std::uint64_t> totals;
  for (const auto& addr : addresses) {
    auto asn = asmap.lookup_longest(addr);
    out.asns.push_back(asn);
    if (!asn) {
      ++out.unattributed;
      continue;
    }
    ++totals[*asn];
    // Structural IIDs never reach the IPv4 category, so their candidates are irrelevant.
    if (structural_category(iid_of(addr))) continue;
    auto found = detect_ipv4_candidates(addr);
    if (!found.empty()) {
      auto& bucket = candidates[*asn];
      bucket.insert(bucket.end(), found.begin(), found.end());
    }
  }
  out.validation = validate_ipv4_mapped(candidates, totals, v4table, thresholds);
  out.categories.reserve(addresses.size());
  for (const auto& addr : addresses) {
    out.categories.push_back(categorize(addr, normalized_iid_entropy(iid_of(addr)),
                                        out.validation.accepted.contains(addr)));
  }
  return out;
}

std::size_t entropy_bin(EntropyScore score) {
  const double scaled = std::floor(score.value * 100.0 + 1e-9);
  if (scaled <= 0.0) return 0;
  return std::min<std::size_t>(kEntropyBins - 1, static_cast<std::size_t>(scaled));
}

double AsProfile::fraction(AddressCategory c) const {
  if (total == 0) return 0.0;
  return static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(total);
}

void AsProfile::add(AddressCategory c, EntropyScore e) {
  ++counts[static_cast<std::size_t>(c)];
  ++total;
  ++entropy_histogram[entropy_bin(e)];
}

CategoryDistribution profile_distribution(std::span<const Ipv6Address> addresses,
                                          std::span<const AddressCategory> categories,
                                          std::span<const std::optional<Asn>> asns) {
  if (addresses.empty()) throw Error(ErrorKind::EmptyInput, "cannot profile an empty corpus");
  if (categories.size() != addresses.size() || asns.size() != addresses.size()) {
    throw Error(ErrorKind::Argument, "addresses, categories and ASNs must be parallel");
  }
  CategoryDistribution dist;
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    const EntropyScore e = normalized_iid_entropy(iid_of(addresses[i]));
    dist.global.add(categories[i], e);
    if (asns[i]) {
      auto& p = dist.per_as[*asns[i]];
      p.asn = asns[i];
      p.add(categories[i], e);
    } else {
      dist.unattributed.add(categories[i], e);
    }
  }
  return dist;
}

void write_dataset_report(std::ostream& out, std::string_view dataset, const AsProfile& profile,
                          bool header) {
  if (header) out << "dataset,category,count,fraction\n";
  for (auto c : kAllCategories) {
    out << dataset << ',' << to_string(c) << ',' << profile.counts[static_cast<std::size_t>(c)]
        << ',' << profile.fraction(c) << '\n';
  }
}

void write_as_report(std::ostream& out, const CategoryDistribution& dist) {
  out << "asn,category,count,fraction\n";
  for (const auto& [asn, profile] : dist.per_as) {
    for (auto c : kAllCategories) {
      out << asn.value << ',' << to_string(c) << ','
          << profile.counts[static_cast<std::size_t>(c)] << ',' << profile.fraction(c) << '\n';
    }
  }
}

void write_entropy_cdf(std::ostream& out, const AsProfile& profile) {
  out << "entropy_bin,cumulative_fraction\n";
  std::uint64_t running = 0;
  for (std::size_t k = 0; k < kEntropyBins; ++k) {
    running += profile.entropy_histogram[k];
    const double frac =
        profile.total == 0 ? 0.0 : static_cast<double>(running) / static_cast<double>(profile.total);
    char bin[8];
    std::snprintf(bin, sizeof bin, "%.2f", static_cast<double>(k) / 100.0);
    out << bin << ',' << frac << '\n';
  }
}

}  // namespace hitlist
