#pragma once

// Wired-MAC to WiFi-BSSID offset inference within an OUI, and geolocation of
// EUI-64 derived MACs through the inferred offsets.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hitlist/eui64.hpp"
#include "hitlist/prefix_map.hpp"

namespace hitlist {

inline constexpr std::uint64_t kDefaultMinPairs = 500;

struct GeoBssid {
  MacAddress bssid;
  double lat = 0.0;
  double lon = 0.0;
};

/// Throws Error(Argument) when the coordinates are out of range.
GeoBssid make_geo_bssid(MacAddress bssid, double lat, double lon);

/// Sorted (offset, count) pairs over signed NIC differences bssid - wired.
class OffsetHistogram {
 public:
  OffsetHistogram() = default;
  explicit OffsetHistogram(std::vector<std::pair<std::int32_t, std::uint64_t>> bins);

  const std::vector<std::pair<std::int32_t, std::uint64_t>>& bins() const { return bins_; }
  std::uint64_t count_at(std::int32_t offset) const;
  std::uint64_t total() const;

 private:
  std::vector<std::pair<std::int32_t, std::uint64_t>> bins_;
};

struct OffsetTally {
  Oui oui;
  OffsetHistogram histogram;
  std::uint64_t pair_count = 0;  ///< |wired| x |bssids| within the OUI
};

/// Every (wired, bssid) pair inside `oui`; entries from other OUIs are ignored.
OffsetTally tally_offsets(std::span<const MacAddress> wired, std::span<const GeoBssid> geo,
                          Oui oui);

struct OffsetModel {
  Oui oui;
  std::int32_t offset = 0;
  std::uint64_t support = 0;
  std::uint64_t pair_count = 0;

  auto operator<=>(const OffsetModel&) const = default;
};

/// Best positive vs best negative offset; ties go to the smaller magnitude,
/// then to the positive side. Absent below `min_pairs` or with no nonzero offset.
std::optional<OffsetModel> infer_offset(Oui oui, const OffsetHistogram& histogram,
                                        std::uint64_t pair_count,
                                        std::uint64_t min_pairs = kDefaultMinPairs);

/// Tallies and infers per OUI present in `wired`.
std::vector<OffsetModel> infer_models(std::span<const MacAddress> wired,
                                      std::span<const GeoBssid> geo,
                                      std::uint64_t min_pairs = kDefaultMinPairs);

/// NIC + offset inside the same OUI; nullopt if it leaves [0, 2^24).
/// Throws Error(Argument) on an OUI mismatch.
std::optional<MacAddress> apply_offset(MacAddress mac, const OffsetModel& model);

/// Rectangular lat/lon cells mapped to countries; first matching cell wins.
class CountryGrid {
 public:
  struct Cell {
    double lat_min, lon_min, lat_max, lon_max;
    CountryCode country;
  };

  void add(const Cell& cell) { cells_.push_back(cell); }
  std::optional<CountryCode> lookup(double lat, double lon) const;
  std::size_t size() const { return cells_.size(); }

 private:
  std::vector<Cell> cells_;
};

/// `lat_min,lon_min,lat_max,lon_max,iso2`
CountryGrid read_country_grid(std::istream& in);

struct GeoResult {
  MacAddress mac;
  MacAddress matched_bssid;
  double lat = 0.0;
  double lon = 0.0;
  OffsetModel model;
};

struct Geolocation {
  std::vector<GeoResult> results;
  std::map<CountryCode, std::uint64_t> per_country;
  std::uint64_t outside_grid = 0;
};

Geolocation geolocate_corpus(std::span<const MacAddress> macs, std::span<const GeoBssid> geo,
                             std::span<const OffsetModel> models,
                             const CountryGrid* grid = nullptr);

/// `bssid,lat,lon`
std::vector<GeoBssid> read_geo_csv(std::istream& in);
void write_geo_csv(std::ostream& out, std::span<const GeoBssid> geo);
/// `oui,offset,support,pair_count`
void write_models_csv(std::ostream& out, std::span<const OffsetModel> models);
std::vector<OffsetModel> read_models_csv(std::istream& in);
/// `mac,bssid,lat,lon,oui,offset`
void write_results_csv(std::ostream& out, std::span<const GeoResult> results);
/// `offset,count`
void write_histogram_csv(std::ostream& out, const OffsetHistogram& histogram);

}  // namespace hitlist
