#pragma once

// Synthetic observation corpora with planted ground truth. The generator
// carries its own textual re-statement of the classification rules so that
// end-to-end tests compare two independent implementations.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hitlist/addr.hpp"
#include "hitlist/classify.hpp"
#include "hitlist/eui64.hpp"
#include "hitlist/geolink.hpp"
#include "hitlist/prefix_map.hpp"
#include "hitlist/tracking.hpp"

namespace hitlist::synth {

enum class Strategy {
  Eui64Slaac,
  RandomPrivacy,
  LowByte,
  Low2Bytes,
  Zeroes,
  Ipv4EmbeddedHexLow32,
  Ipv4EmbeddedDecimalHextets,
};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

struct AsSpec {
  Asn asn;
  CountryCode country;
  std::vector<Prefix> v6_pool;  ///< each no longer than /64
  std::vector<Ipv4Prefix> v4_pool;
  std::vector<std::pair<Strategy, double>> strategies;  ///< weights sum to 1
  std::optional<std::int64_t> rotation_period;          ///< prefix reassignment, seconds
  std::uint64_t devices = 0;
  std::vector<Oui> ouis;  ///< vendors for EUI-64 devices
};

struct MobilityStep {
  Asn asn;
  std::int64_t at = 0;  ///< offset from the scenario start (or cycle start when repeating)
};

/// EUI-64 devices whose AS membership follows a schedule.
struct MobilitySpec {
  std::uint64_t count = 1;
  std::vector<MobilityStep> schedule;
  std::optional<std::int64_t> repeat;
  std::optional<Oui> oui;
  std::optional<std::int64_t> sighting_period;
};

/// One MAC present simultaneously in several ASes.
struct MacReuseSpec {
  std::uint64_t count = 1;
  std::vector<Asn> ases;
  std::optional<Oui> oui;
  std::optional<std::int64_t> sighting_period;
};

/// Static EUI-64 devices in `asn` whose WiFi BSSID sits at MAC + offset.
struct GeoSpec {
  Oui oui;
  std::int32_t offset = 1;
  std::uint64_t devices = 0;
  Asn asn;
  double decoy_factor = 10.0;
};

struct VendorSpec {
  Oui oui;
  std::string name;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  std::int64_t start = 1656633600;  // 2022-07-01T00:00:00Z
  std::int64_t duration = 30 * 86400;
  double sighting_rate = 24.0;  ///< mean sightings per device per day (Poisson)
  std::optional<std::int64_t> sighting_period;  ///< periodic sightings instead of Poisson
  std::int64_t privacy_period = 86400;          ///< temporary-address lifetime
  double singleton_fraction = 0.0;              ///< per-AS share of one-sighting devices
  std::vector<AsSpec> ases;
  std::vector<MobilitySpec> mobility;
  std::vector<MacReuseSpec> mac_reuse;
  std::vector<GeoSpec> geo;
  std::vector<VendorSpec> vendors;
  std::uint64_t aliased_64s = 0;
  double external_alias_coverage = 1.0;
};

ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& s);

/// Throws Error(Validation) for overlapping prefixes, empty or unnormalized
/// strategy mixes, unknown ASNs and similar inconsistencies.
void validate_scenario(const ScenarioSpec& s);

struct DeviceTruth {
  std::uint64_t id = 0;
  Strategy strategy = Strategy::Eui64Slaac;
  Asn home_asn;
  std::optional<MacAddress> mac;
  std::uint64_t sightings = 0;
};

struct MacTruth {
  TrackClass track_class = TrackClass::NotTrackable;
  FeatureVector features;
};

struct GeoTruth {
  MacAddress bssid;
  double lat = 0.0;
  double lon = 0.0;
};

struct GroundTruth {
  std::vector<DeviceTruth> devices;
  std::map<Ipv6Address, AddressCategory> categories;  ///< per distinct address
  std::map<Asn, bool> ipv4_accepted;                   ///< per AS with IPv4-embedding devices
  std::map<MacAddress, MacTruth> macs;
  std::vector<Prefix> aliased_64s;
  std::vector<Prefix> external_aliased;  ///< subset written to the external list
  std::map<Oui, std::int32_t> offsets;
  std::map<MacAddress, GeoTruth> geolocated;
  std::uint64_t sighting_draws = 0;
  std::uint64_t singleton_devices = 0;
};

struct SyntheticCorpus {
  std::vector<Observation> observations;  ///< ordered by (timestamp, address)
  GroundTruth truth;
  std::vector<GeoBssid> geo;
  std::vector<std::string> asn_lines;      ///< `prefix asn`
  std::vector<std::string> country_lines;  ///< `prefix,iso2`
  std::vector<std::string> grid_lines;     ///< `lat_min,lon_min,lat_max,lon_max,iso2`
  std::vector<VendorSpec> vendors;
};

SyntheticCorpus generate_corpus(const ScenarioSpec& scenario);

/// Writes every input file the pipeline consumes plus the ground-truth files.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace hitlist::synth
