#include "hitlist/tracking.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "hitlist/csv.hpp"
#include "hitlist/error.hpp"

namespace hitlist {

std::optional<Observation> parse_observation(std::string_view line) {
  line = csv::chomp(line);
  const std::size_t c1 = line.find(',');
  if (c1 == std::string_view::npos) return std::nullopt;
  const std::size_t c2 = line.find(',', c1 + 1);
  if (c2 == std::string_view::npos) return std::nullopt;
  if (line.find(',', c2 + 1) != std::string_view::npos) return std::nullopt;

  const std::string_view ts = line.substr(0, c1);
  if (ts.empty() || ts.size() > 18) return std::nullopt;
  std::int64_t t = 0;
  for (char c : ts) {
    if (c < '0' || c > '9') return std::nullopt;
    t = t * 10 + (c - '0');
  }
  auto addr = try_parse_ipv6(line.substr(c1 + 1, c2 - c1 - 1));
  if (!addr) return std::nullopt;
  return Observation{t, *addr, std::string(line.substr(c2 + 1))};
}

std::string format_observation(const Observation& obs) {
  return std::to_string(obs.timestamp) + "," + to_string(obs.addr) + "," + obs.vantage;
}

void TimelineBuilder::add(std::int64_t timestamp, Ipv6Address addr) {
  const InterfaceId iid = iid_of(addr);
  if (!is_apparent_eui64(iid)) {
    ++set_.skipped_non_eui64;
    return;
  }
  const MacAddress mac = extract_mac(iid);
  auto [it, inserted] = set_.timelines.try_emplace(mac);
  if (inserted) it->second.mac = mac;
  it->second.sightings.push_back(Sighting{timestamp, prefix_of(addr, 64),
                                          asmap_.lookup_longest(addr),
                                          countrymap_.lookup_longest(addr)});
}

TimelineSet TimelineBuilder::finish() && {
  for (auto& [mac, tl] : set_.timelines) std::sort(tl.sightings.begin(), tl.sightings.end());
  return std::move(set_);
}

TimelineSet build_timelines(std::span<const Observation> observations,
                            const PrefixTable<Asn>& asmap,
                            const PrefixTable<CountryCode>& countrymap) {
  TimelineBuilder builder(asmap, countrymap);
  for (const auto& obs : observations) builder.add(obs);
  return std::move(builder).finish();
}

std::uint64_t count_transitions(const MacTimeline& timeline) {
  std::uint64_t n = 0;
  for (std::size_t i = 1; i < timeline.sightings.size(); ++i) {
    if (timeline.sightings[i].prefix64 != timeline.sightings[i - 1].prefix64) ++n;
  }
  return n;
}

FeatureVector feature_vector(const MacTimeline& timeline) {
  if (timeline.sightings.empty()) {
    throw Error(ErrorKind::EmptyInput, "timeline for " + to_string(timeline.mac) + " is empty");
  }
  std::set<Asn> ases;
  std::set<CountryCode> countries;
  std::set<Prefix> prefixes;
  for (const auto& s : timeline.sightings) {
    if (s.asn) ases.insert(*s.asn);
    if (s.country) countries.insert(*s.country);
    prefixes.insert(s.prefix64);
  }
  return FeatureVector{ases.size(), countries.size(), count_transitions(timeline),
                       prefixes.size()};
}

std::string_view to_string(TrackClass c) {
  switch (c) {
    case TrackClass::NotTrackable: return "not_trackable";
    case TrackClass::MostlyStatic: return "mostly_static";
    case TrackClass::PrefixReassignment: return "prefix_reassignment";
    case TrackClass::MacReuse: return "mac_reuse";
    case TrackClass::ChangingProviders: return "changing_providers";
    case TrackClass::UserMovement: return "user_movement";
    case TrackClass::Ambiguous: return "ambiguous";
  }
  return "?";
}

TrackClass parse_track_class(std::string_view text) {
  for (auto c : {TrackClass::NotTrackable, TrackClass::MostlyStatic,
                 TrackClass::PrefixReassignment, TrackClass::MacReuse,
                 TrackClass::ChangingProviders, TrackClass::UserMovement, TrackClass::Ambiguous}) {
    if (to_string(c) == text) return c;
  }
  throw Error(ErrorKind::Parse, "unknown track class '" + std::string(text) + "'");
}

TrackClass classify_track(const FeatureVector& fv, const TrackThresholds& t) {
  if (fv.prefix64_count <= 1) return TrackClass::NotTrackable;
  const bool as_high = fv.as_count > t.as_high_above;
  const bool cc_high = fv.country_count > t.country_high_above;
  const bool tr_high = fv.transitions > t.transitions_high_above;
  if (!as_high && !cc_high) {
    return tr_high ? TrackClass::PrefixReassignment : TrackClass::MostlyStatic;
  }
  if (as_high && !cc_high) {
    return tr_high ? TrackClass::UserMovement : TrackClass::ChangingProviders;
  }
  if (as_high && cc_high && tr_high) return TrackClass::MacReuse;
  // (low AS, high country, *) and (high AS, high country, low transitions)
  return TrackClass::Ambiguous;
}

void write_tracking_report(std::ostream& out, const TimelineSet& set, const TrackThresholds& t) {
  out << "mac,class,as_count,country_count,transitions,prefix64_count,first_seen,last_seen\n";
  for (const auto& [mac, tl] : set.timelines) {
    if (tl.sightings.empty()) continue;
    const FeatureVector fv = feature_vector(tl);
    out << to_string(mac) << ',' << to_string(classify_track(fv, t)) << ',' << fv.as_count << ','
        << fv.country_count << ',' << fv.transitions << ',' << fv.prefix64_count << ','
        << tl.sightings.front().timestamp << ',' << tl.sightings.back().timestamp << '\n';
  }
}

LifetimeKey parse_lifetime_key(std::string_view text) {
  if (text == "address") return LifetimeKey::Address;
  if (text == "iid") return LifetimeKey::Iid;
  if (text == "mac") return LifetimeKey::Mac;
  throw Error(ErrorKind::Argument, "lifetime key must be address, iid or mac");
}

void LifetimeTracker::add(std::int64_t timestamp, Ipv6Address addr) {
  uint128 key = 0;
  switch (key_) {
    case LifetimeKey::Address: key = addr.bits(); break;
    case LifetimeKey::Iid: key = addr.low64(); break;
    case LifetimeKey::Mac: {
      const InterfaceId iid = iid_of(addr);
      if (!is_apparent_eui64(iid)) {
        ++skipped_;
        return;
      }
      key = extract_mac(iid).bits();
      break;
    }
  }
  auto [it, inserted] = stats_.try_emplace(key, LifetimeStats{timestamp, timestamp, 0});
  auto& s = it->second;
  s.first_seen = std::min(s.first_seen, timestamp);
  s.last_seen = std::max(s.last_seen, timestamp);
  ++s.sightings;
}

LifetimeTracker lifetimes(std::span<const Observation> observations, LifetimeKey key) {
  LifetimeTracker tracker(key);
  for (const auto& obs : observations) tracker.add(obs.timestamp, obs.addr);
  return tracker;
}

std::vector<CcdfPoint> make_ccdf(std::vector<std::int64_t> values, bool include_zero) {
  std::vector<CcdfPoint> points;
  if (values.empty()) return points;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  if (include_zero && values.front() > 0) points.push_back({0.0, 1.0});
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    points.push_back({static_cast<double>(values[i]), static_cast<double>(values.size() - j) / n});
    i = j;
  }
  return points;
}

std::vector<CcdfPoint> lifetime_ccdf(const LifetimeTracker& tracker) {
  std::vector<std::int64_t> values;
  values.reserve(tracker.stats().size());
  for (const auto& [key, s] : tracker.stats()) values.push_back(s.lifetime());
  return make_ccdf(std::move(values), true);
}

double ccdf_above_zero(const LifetimeTracker& tracker) {
  if (tracker.stats().empty()) return 0.0;
  std::uint64_t above = 0;
  for (const auto& [key, s] : tracker.stats()) above += s.lifetime() > 0 ? 1 : 0;
  return static_cast<double>(above) / static_cast<double>(tracker.stats().size());
}

void write_ccdf(std::ostream& out, std::span<const CcdfPoint> points) {
  out << "x,ccdf\n";
  for (const auto& p : points) out << static_cast<std::int64_t>(p.x) << ',' << p.ccdf << '\n';
}

PrefixSpread prefix_spread(const TimelineSet& set) {
  if (set.timelines.empty()) throw Error(ErrorKind::EmptyInput, "no MAC timelines to spread");
  PrefixSpread spread;
  std::vector<std::int64_t> counts;
  counts.reserve(set.timelines.size());
  for (const auto& [mac, tl] : set.timelines) {
    std::set<Prefix> distinct;
    for (const auto& s : tl.sightings) distinct.insert(s.prefix64);
    counts.push_back(static_cast<std::int64_t>(distinct.size()));
    if (distinct.size() >= 2) ++spread.trackable;
  }
  spread.macs = counts.size();
  spread.trackable_fraction =
      static_cast<double>(spread.trackable) / static_cast<double>(spread.macs);
  spread.ccdf = make_ccdf(std::move(counts));
  return spread;
}

}  // namespace hitlist
