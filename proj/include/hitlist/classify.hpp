#pragma once

// Seven-way addressing-pattern classifier with IPv4-embedding detection and
// per-AS validation of embedded IPv4 addresses.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hitlist/addr.hpp"
#include "hitlist/prefix_map.hpp"

namespace hitlist {

enum class AddressCategory {
  Zeroes,
  LowByte,
  Low2Bytes,
  Ipv4Mapped,
  HighEntropy,
  MediumEntropy,
  LowEntropy,
};

inline constexpr std::size_t kCategoryCount = 7;
inline constexpr std::array<AddressCategory, kCategoryCount> kAllCategories = {
    AddressCategory::Zeroes,        AddressCategory::LowByte,    AddressCategory::Low2Bytes,
    AddressCategory::Ipv4Mapped,    AddressCategory::HighEntropy, AddressCategory::MediumEntropy,
    AddressCategory::LowEntropy,
};

std::string_view to_string(AddressCategory c);
AddressCategory parse_category(std::string_view text);

/// Zeroes, LowByte or Low2Bytes when the IID is that small; nullopt otherwise.
std::optional<AddressCategory> structural_category(InterfaceId iid);

enum class Ipv4Encoding {
  HexLow32,        ///< low 4 IID bytes
  DecimalHextets,  ///< last four hextets read as decimal octets
  HexHigh32,       ///< high 4 IID bytes
};

std::string_view to_string(Ipv4Encoding e);

struct Ipv4Candidate {
  Ipv6Address source;
  Ipv4Address embedded;
  Ipv4Encoding encoding;
};

/// All syntactically valid embeddings. 0.0.0.0 never counts as an embedding.
std::vector<Ipv4Candidate> detect_ipv4_candidates(Ipv6Address addr);

struct Ipv4Thresholds {
  std::uint64_t min_count = 100;  ///< consistent addresses needed, inclusive
  double min_fraction = 0.10;     ///< share of the AS's addresses, strict
};

struct AsIpv4Stats {
  std::uint64_t total = 0;       ///< addresses observed in the AS
  std::uint64_t consistent = 0;  ///< addresses with an embedding routed by the same AS
  bool accepted = false;
};

struct Ipv4Validation {
  std::unordered_set<Ipv6Address, Ipv6Hash> accepted;
  std::map<Asn, AsIpv4Stats> per_as;
};

/// An AS's consistent candidates are accepted all-or-nothing when
/// consistent >= min_count and consistent > min_fraction * total.
Ipv4Validation validate_ipv4_mapped(const std::map<Asn, std::vector<Ipv4Candidate>>& candidates,
                                    const std::map<Asn, std::uint64_t>& totals,
                                    const PrefixTable<Asn>& v4table,
                                    const Ipv4Thresholds& thresholds = {});

/// Structural > IPv4-mapped > entropy band.
AddressCategory categorize(Ipv6Address addr, EntropyScore entropy, bool ipv4_accepted);

struct CorpusClassification {
  std::vector<AddressCategory> categories;  ///< parallel to the input addresses
  std::vector<std::optional<Asn>> asns;
  std::uint64_t unattributed = 0;  ///< addresses excluded from IPv4 validation (no ASN)
  Ipv4Validation validation;
};

/// Classifies distinct addresses end to end.
CorpusClassification classify_corpus(std::span<const Ipv6Address> addresses,
                                     const PrefixTable<Asn>& asmap,
                                     const PrefixTable<Asn>& v4table,
                                     const Ipv4Thresholds& thresholds = {});

inline constexpr std::size_t kEntropyBins = 101;  // 0.00 .. 1.00 in steps of 0.01

std::size_t entropy_bin(EntropyScore score);

struct AsProfile {
  std::optional<Asn> asn;  ///< nullopt for the global or unattributed profile
  std::array<std::uint64_t, kCategoryCount> counts{};
  std::uint64_t total = 0;
  std::array<std::uint64_t, kEntropyBins> entropy_histogram{};

  double fraction(AddressCategory c) const;
  void add(AddressCategory c, EntropyScore e);
};

struct CategoryDistribution {
  AsProfile global;
  std::map<Asn, AsProfile> per_as;
  AsProfile unattributed;
};

/// Throws Error(EmptyInput) when `addresses` is empty.
CategoryDistribution profile_distribution(std::span<const Ipv6Address> addresses,
                                          std::span<const AddressCategory> categories,
                                          std::span<const std::optional<Asn>> asns);

/// `dataset,category,count,fraction`
void write_dataset_report(std::ostream& out, std::string_view dataset, const AsProfile& profile,
                          bool header = true);
/// `asn,category,count,fraction`
void write_as_report(std::ostream& out, const CategoryDistribution& dist);
/// `entropy_bin,cumulative_fraction`
void write_entropy_cdf(std::ostream& out, const AsProfile& profile);

}  // namespace hitlist
