#pragma once

// Longitudinal per-MAC timelines and the tracking-behavior classifier.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hitlist/addr.hpp"
#include "hitlist/eui64.hpp"
#include "hitlist/prefix_map.hpp"

namespace hitlist {

struct Observation {
  std::int64_t timestamp = 0;  ///< unix seconds
  Ipv6Address addr;
  std::string vantage;
};

/// Parses `unix_seconds,ipv6,vantage_id`. Returns nullopt for malformed lines.
std::optional<Observation> parse_observation(std::string_view line);
std::string format_observation(const Observation& obs);

struct Sighting {
  std::int64_t timestamp = 0;
  Prefix prefix64;
  std::optional<Asn> asn;
  std::optional<CountryCode> country;

  auto operator<=>(const Sighting&) const = default;
};

struct MacTimeline {
  MacAddress mac;
  std::vector<Sighting> sightings;  ///< ordered by (timestamp, /64)
};

struct TimelineSet {
  std::map<MacAddress, MacTimeline> timelines;
  std::uint64_t skipped_non_eui64 = 0;
};

/// Accumulates observations one at a time; timelines are sorted on finish().
class TimelineBuilder {
 public:
  TimelineBuilder(const PrefixTable<Asn>& asmap, const PrefixTable<CountryCode>& countrymap)
      : asmap_(asmap), countrymap_(countrymap) {}

  void add(const Observation& obs) { add(obs.timestamp, obs.addr); }
  void add(std::int64_t timestamp, Ipv6Address addr);
  TimelineSet finish() &&;

 private:
  const PrefixTable<Asn>& asmap_;
  const PrefixTable<CountryCode>& countrymap_;
  TimelineSet set_;
};

TimelineSet build_timelines(std::span<const Observation> observations,
                            const PrefixTable<Asn>& asmap,
                            const PrefixTable<CountryCode>& countrymap);

/// Number of adjacent sightings whose /64 differs.
std::uint64_t count_transitions(const MacTimeline& timeline);

struct FeatureVector {
  std::uint64_t as_count = 0;
  std::uint64_t country_count = 0;
  std::uint64_t transitions = 0;
  std::uint64_t prefix64_count = 0;

  auto operator<=>(const FeatureVector&) const = default;
};

/// Throws Error(EmptyInput) for a timeline without sightings.
FeatureVector feature_vector(const MacTimeline& timeline);

enum class TrackClass {
  NotTrackable,
  MostlyStatic,
  PrefixReassignment,
  MacReuse,
  ChangingProviders,
  UserMovement,
  Ambiguous,
};

std::string_view to_string(TrackClass c);
TrackClass parse_track_class(std::string_view text);

struct TrackThresholds {
  std::uint64_t as_high_above = 1;
  std::uint64_t country_high_above = 1;
  std::uint64_t transitions_high_above = 10;
};

TrackClass classify_track(const FeatureVector& fv, const TrackThresholds& t = {});

/// `mac,class,as_count,country_count,transitions,prefix64_count,first_seen,last_seen`
void write_tracking_report(std::ostream& out, const TimelineSet& set,
                           const TrackThresholds& t = {});

enum class LifetimeKey { Address, Iid, Mac };

LifetimeKey parse_lifetime_key(std::string_view text);

struct LifetimeStats {
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  std::uint64_t sightings = 0;
  std::int64_t lifetime() const { return last_seen - first_seen; }
};

struct U128Hash {
  std::size_t operator()(uint128 v) const noexcept {
    return Ipv6Hash{}(Ipv6Address(v));
  }
};

/// Keyed by the address bits, the IID, or the embedded MAC (non-EUI-64 skipped).
class LifetimeTracker {
 public:
  explicit LifetimeTracker(LifetimeKey key) : key_(key) {}
  void add(std::int64_t timestamp, Ipv6Address addr);
  const std::unordered_map<uint128, LifetimeStats, U128Hash>& stats() const { return stats_; }
  std::uint64_t skipped() const { return skipped_; }

 private:
  LifetimeKey key_;
  std::unordered_map<uint128, LifetimeStats, U128Hash> stats_;
  std::uint64_t skipped_ = 0;
};

LifetimeTracker lifetimes(std::span<const Observation> observations, LifetimeKey key);

struct CcdfPoint {
  double x = 0.0;
  double ccdf = 0.0;  ///< fraction of samples strictly greater than x
};

/// One point per distinct value, ascending. `include_zero` adds x = 0 when absent.
std::vector<CcdfPoint> make_ccdf(std::vector<std::int64_t> values, bool include_zero = false);
std::vector<CcdfPoint> lifetime_ccdf(const LifetimeTracker& tracker);
/// Share of keys seen at more than one timestamp.
double ccdf_above_zero(const LifetimeTracker& tracker);

/// `x,ccdf`
void write_ccdf(std::ostream& out, std::span<const CcdfPoint> points);

struct PrefixSpread {
  std::vector<CcdfPoint> ccdf;  ///< over /64 counts per MAC
  std::uint64_t macs = 0;
  std::uint64_t trackable = 0;  ///< MACs seen in two or more /64s
  double trackable_fraction = 0.0;
};

/// Throws Error(EmptyInput) when there are no timelines.
PrefixSpread prefix_spread(const TimelineSet& set);

}  // namespace hitlist
