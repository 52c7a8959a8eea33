// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "hitlist/alias.hpp"
#include "hitlist/classify.hpp"
#include "hitlist/error.hpp"
#include "hitlist/eui64.hpp"
#include "hitlist/geolink.hpp"
#include "hitlist/store.hpp"
#include "hitlist/synth.hpp"
#include "hitlist/tracking.hpp"
#include "oracles.hpp"

using namespace hitlist;

namespace {

struct Verdict {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <class T>
T table_from(const std::vector<std::string>& lines, T (*load)(std::istream&, PrefixFileReport*)) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  std::istringstream in(text);
  return load(in, nullptr);
}

synth::AsSpec make_as(std::uint32_t asn, const char* cc, const char* v6, const char* v4,
                      std::vector<std::pair<synth::Strategy, std::uint64_t>> counts) {
  synth::AsSpec a;
  a.asn = Asn{asn};
  a.country = parse_country(cc);
  a.v6_pool = {parse_prefix(v6)};
  if (v4) a.v4_pool = {parse_ipv4_prefix(v4)};
  for (const auto& [s, n] : counts) a.devices += n;
  for (const auto& [s, n] : counts) {
    a.strategies.emplace_back(s, static_cast<double>(n) / static_cast<double>(a.devices));
  }
  return a;
}

// ---------------------------------------------------------------------------

Verdict entropy_anchor() {
  const double one = normalized_iid_entropy(InterfaceId{0x0123456789abcdefull}).value;
  const double zero = normalized_iid_entropy(InterfaceId{0}).value;
  return {std::abs(one - 1.0) <= 1e-12 && zero == 0.0, fmt("H(0123:4567:89ab:cdef)=%.15f H(0)=%g", one, zero)};
}

Verdict eui64_round_trip() {
  oracle::Gen g(1001);
  std::uint64_t failures = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const MacAddress m = g.mac();
    if (extract_mac(embed_mac(m)) != m) ++failures;
  }
  return {failures == 0, fmt("10^6 MACs, %llu failures", static_cast<unsigned long long>(failures))};
}

Verdict random_apparent() {
  oracle::Gen g(1002);
  std::uint64_t apparent = 0;
  for (std::uint64_t i = 0; i < (std::uint64_t{1} << 20); ++i) {
    if (is_apparent_eui64(InterfaceId{g.u64()})) ++apparent;
  }
  const double expected = expected_random_apparent(7'914'066'999ull);
  return {apparent >= 2 && apparent <= 40 && expected < 121000.0,
          fmt("%llu apparent in 2^20 random IIDs; expected over 7,914,066,999 = %.1f",
              static_cast<unsigned long long>(apparent), expected)};
}

Verdict category_recovery() {
  using S = synth::Strategy;
  synth::ScenarioSpec s;
  s.seed = 404;
  s.duration = 2 * 86400;
  s.sighting_period = 86400;
  s.ases.push_back(make_as(64500, "US", "2001:db8:100::/40", "198.51.100.0/24",
                           {{S::Eui64Slaac, 1800}, {S::RandomPrivacy, 2700}, {S::Ipv4EmbeddedHexLow32, 1350},
                            {S::Ipv4EmbeddedDecimalHextets, 450}, {S::LowByte, 900}, {S::Low2Bytes, 900},
                            {S::Zeroes, 900}}));
  // Threshold edges: (consistent, total) = (100, 999) accept, (99, 100) reject,
  // (100, 1000) reject, (101, 1000) accept.
  s.ases.push_back(make_as(64510, "DE", "2001:db8:200::/40", "203.0.113.0/24",
                           {{S::Ipv4EmbeddedHexLow32, 100}, {S::LowByte, 899}}));
  s.ases.push_back(make_as(64511, "DE", "2001:db8:300::/40", "1.0.0.0/24",
                           {{S::Ipv4EmbeddedHexLow32, 99}, {S::LowByte, 1}}));
  s.ases.push_back(make_as(64512, "FR", "2001:db8:400::/40", "1.0.1.0/24",
                           {{S::Ipv4EmbeddedHexLow32, 100}, {S::LowByte, 900}}));
  s.ases.push_back(make_as(64513, "FR", "2001:db8:500::/40", "192.0.2.0/24",
                           {{S::Ipv4EmbeddedHexLow32, 101}, {S::LowByte, 899}}));
  const auto corpus = synth::generate_corpus(s);
  const auto asmap = table_from(corpus.asn_lines, &load_asn_table);

  std::vector<Ipv6Address> addrs;
  for (const auto& [a, c] : corpus.truth.categories) addrs.push_back(a);
  const auto cc = classify_corpus(addrs, asmap, asmap);
  std::map<std::pair<AddressCategory, AddressCategory>, std::uint64_t> confusion;
  std::uint64_t off_diagonal = 0;
  std::set<AddressCategory> present;
  for (std::size_t i = 0; i < addrs.size(); ++i) {
    const AddressCategory truth = corpus.truth.categories.at(addrs[i]);
    ++confusion[{truth, cc.categories[i]}];
    if (truth != cc.categories[i]) ++off_diagonal;
    present.insert(truth);
  }
  const std::map<std::uint32_t, bool> want = {{64500, true}, {64510, true}, {64511, false}, {64512, false}, {64513, true}};
  bool flips = true;
  for (const auto& [asn, accepted] : want) {
    const auto t = corpus.truth.ipv4_accepted.find(Asn{asn});
    const auto l = cc.validation.per_as.find(Asn{asn});
    flips = flips && t != corpus.truth.ipv4_accepted.end() && l != cc.validation.per_as.end() &&
            t->second == accepted && l->second.accepted == accepted;
  }
  const auto& e999 = cc.validation.per_as.at(Asn{64510});
  const auto& e1000 = cc.validation.per_as.at(Asn{64512});
  const bool edges = e999.consistent == 100 && e999.total == 999 && e1000.consistent == 100 && e1000.total == 1000 &&
                     cc.validation.per_as.at(Asn{64511}).consistent == 99 &&
                     cc.validation.per_as.at(Asn{64513}).consistent == 101;
  return {addrs.size() >= 10000 && off_diagonal == 0 && present.size() == kCategoryCount && flips && edges,
          fmt("%zu addresses, %llu off-diagonal, %zu/7 categories planted, threshold flips %s",
              addrs.size(), static_cast<unsigned long long>(off_diagonal), present.size(),
              flips && edges ? "ok" : "wrong")};
}

Verdict tracking_recovery() {
  using S = synth::Strategy;
  synth::ScenarioSpec s;
  s.seed = 505;
  s.duration = 30 * 86400;
  s.sighting_period = 3600;
  const Oui reassign{0x0000A1}, still{0x0000A2}, untrackable{0x0000A3}, providers{0x0000A4}, movement{0x0000A5},
      ambiguous{0x0000A6}, reuse{0x0000A7};
  auto rotating = make_as(64601, "US", "2001:db8:1000::/40", nullptr, {{S::Eui64Slaac, 10}});
  rotating.rotation_period = 86400;
  rotating.ouis = {reassign};
  auto slow = make_as(64602, "US", "2001:db8:2000::/40", nullptr, {{S::Eui64Slaac, 10}});
  slow.rotation_period = 3 * 86400;
  slow.ouis = {still};
  auto home = make_as(64603, "US", "2001:db8:3000::/40", nullptr, {{S::Eui64Slaac, 10}});
  home.ouis = {untrackable};
  auto other = make_as(64604, "US", "2001:db8:4000::/40", nullptr, {{S::RandomPrivacy, 1}});
  auto abroad = make_as(64605, "DE", "2001:db8:5000::/40", nullptr, {{S::RandomPrivacy, 1}});
  s.ases = {rotating, slow, home, other, abroad};
  s.mobility.push_back({10, {{Asn{64603}, 0}, {Asn{64604}, 15 * 86400}}, std::nullopt, providers, std::nullopt});
  s.mobility.push_back({10, {{Asn{64603}, 0}, {Asn{64604}, 21600}}, 43200, movement, std::nullopt});
  s.mobility.push_back({10, {{Asn{64603}, 0}, {Asn{64605}, 15 * 86400}}, std::nullopt, ambiguous, std::nullopt});
  s.mac_reuse.push_back({10, {Asn{64603}, Asn{64605}}, reuse, std::nullopt});
  const std::map<Oui, TrackClass> planted = {
      {reassign, TrackClass::PrefixReassignment}, {still, TrackClass::MostlyStatic},
      {untrackable, TrackClass::NotTrackable},    {providers, TrackClass::ChangingProviders},
      {movement, TrackClass::UserMovement},       {ambiguous, TrackClass::Ambiguous},
      {reuse, TrackClass::MacReuse}};

  const auto corpus = synth::generate_corpus(s);
  const auto asmap = table_from(corpus.asn_lines, &load_asn_table);
  const auto cmap = table_from(corpus.country_lines, &load_country_table);
  const auto set = build_timelines(corpus.observations, asmap, cmap);
  std::uint64_t wrong = 0;
  std::map<TrackClass, std::uint64_t> per_class;
  for (const auto& [mac, tl] : set.timelines) {
    const TrackClass got = classify_track(feature_vector(tl));
    if (!planted.contains(mac.oui()) || planted.at(mac.oui()) != got) ++wrong;
    ++per_class[got];
  }
  bool all_ten = per_class.size() == 7;
  for (const auto& [c, n] : per_class) all_ten = all_ten && n == 10;

  // 30 days of daily rotation with hourly sightings: 720 sightings over 30
  // prefixes, 29 changes.
  const std::uint64_t sightings = static_cast<std::uint64_t>(s.duration / *s.sighting_period);
  const std::uint64_t expected_transitions = static_cast<std::uint64_t>(s.duration / *rotating.rotation_period) - 1;
  bool schedule = expected_transitions == 29 && sightings == 720;
  for (const auto& [mac, tl] : set.timelines) {
    if (mac.oui() != reassign) continue;
    schedule = schedule && tl.sightings.size() == sightings && count_transitions(tl) == expected_transitions;
  }
  return {wrong == 0 && all_ten && schedule,
          fmt("%zu MACs, %llu misclassified, %zu classes planted, daily-rotation transitions %s",
              set.timelines.size(), static_cast<unsigned long long>(wrong), per_class.size(),
              schedule ? "29" : "wrong")};
}

Verdict lifetime_semantics() {
  LifetimeTracker one(LifetimeKey::Address);
  one.add(1656633600, parse_ipv6("2001:db8::1"));
  const bool zero = one.stats().size() == 1 && one.stats().begin()->second.lifetime() == 0;

  using S = synth::Strategy;
  synth::ScenarioSpec s;
  s.seed = 606;
  s.duration = 7 * 86400;
  s.sighting_rate = 24.0;
  s.singleton_fraction = 0.3;
  s.ases.push_back(make_as(64700, "NL", "2001:db8:100::/40", nullptr, {{S::Eui64Slaac, 5000}}));
  const auto corpus = synth::generate_corpus(s);
  const auto tracker = lifetimes(corpus.observations, LifetimeKey::Mac);
  const double at_zero = 1.0 - ccdf_above_zero(tracker);
  const double planted =
      static_cast<double>(corpus.truth.singleton_devices) / static_cast<double>(corpus.truth.devices.size());
  return {zero && std::abs(at_zero - planted) <= 0.01,
          fmt("single sighting lifetime %s; lifetime-0 mass %.4f vs planted singletons %.4f",
              zero ? "0" : "nonzero", at_zero, planted)};
}

Verdict lpm_oracle() {
  oracle::Gen g(707);
  PrefixTable<std::uint32_t> trie;
  oracle::LinearLpm<std::uint32_t> linear;
  std::vector<Prefix> prefixes;
  std::set<Prefix> seen;
  while (prefixes.size() < 10000) {
    const int len = g.between(0, 20) == 0 ? g.between(1, 16) : g.between(16, 64);
    const Prefix p = prefix_of(Ipv6Address::from_halves(0x2000000000000000ull | (g.u64() >> 36 << 20), g.u64()), len);
    if (!seen.insert(p).second) continue;
    const auto v = static_cast<std::uint32_t>(prefixes.size());
    prefixes.push_back(p);
    trie.insert(p, v);
    linear.entries.emplace_back(p, v);
  }
  trie.freeze();
  std::uint64_t mismatches = 0, hits = 0;
  for (int i = 0; i < 100000; ++i) {
    Ipv6Address a = g.addr();
    if (g.below(4) != 0) {
      const Prefix& p = prefixes[g.below(prefixes.size())];
      const uint128 mask = p.length() == 0 ? uint128{0} : ~uint128{0} << (128 - p.length());
      a = Ipv6Address(p.base().bits() | (a.bits() & ~mask));
    }
    const auto t = trie.lookup_longest(a);
    if (t != linear.lookup(a)) ++mismatches;
    if (t) ++hits;
  }
  return {mismatches == 0, fmt("10^4 prefixes x 10^5 lookups (%llu hits), %llu mismatches",
                               static_cast<unsigned long long>(hits), static_cast<unsigned long long>(mismatches))};
}

Verdict alias_inference() {
  oracle::Gen g(808);
  PrefixTable<bool> aliased;
  std::set<Prefix> planted;
  std::vector<Ipv6Address> clients;
  for (std::uint64_t n = 0; n < 500; ++n) {
    const std::uint64_t net = 0x20010db800000000ull | (n << 12);
    for (int k = 0; k < 4; ++k) clients.push_back(Ipv6Address::from_halves(net, g.u64()));
    if (n % 10 == 3) {
      const Prefix p(Ipv6Address::from_halves(net, 0), 64);
      planted.insert(p);
      aliased.insert(p, true);
    }
  }
  aliased.freeze();
  MockResponder mock(aliased, 0.5, 0.0, 31);
  const auto plan = plan_interval(clients, 1656633600, 77);
  const auto inf = infer_aliased(plan, mock.probe(plan));
  bool exact = planted.size() == 50 && inf.verdicts.size() == 50;
  for (const auto& v : inf.verdicts) exact = exact && planted.contains(v.prefix);

  std::vector<AliasVerdict> ten;
  PrefixTable<bool> external;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto net = Ipv6Address::from_halves(0x20010db8ff000000ull | i, 0);
    ten.push_back({Prefix(net, 64), true, Ipv6Address::from_halves(net.high64(), 0xabcdef)});
    if (i < 8) external.insert(Prefix(net, 64), true);
  }
  external.freeze();
  const auto cmp = compare_alias_lists(ten, external);

  std::vector<Ipv6Address> shuffled = clients;
  std::shuffle(shuffled.begin(), shuffled.end(), g.rng);
  const auto again = plan_interval(shuffled, 1656633600, 77);
  bool deterministic = again.targets.size() == plan.targets.size();
  for (std::size_t i = 0; deterministic && i < plan.targets.size(); ++i) {
    deterministic = plan.targets[i].addr == again.targets[i].addr && plan.targets[i].kind == again.targets[i].kind;
  }
  std::set<Ipv6Address> unique;
  for (const auto& t : plan.targets) unique.insert(t.addr);
  const bool no_repeat = unique.size() == plan.targets.size();
  return {exact && cmp.known == 8 && cmp.fresh == 2 && deterministic && no_repeat,
          fmt("%zu verdicts for 50 planted; known=%llu new=%llu; plan deterministic=%d, %zu targets, no repeats=%d",
              inf.verdicts.size(), static_cast<unsigned long long>(cmp.known),
              static_cast<unsigned long long>(cmp.fresh), deterministic, plan.targets.size(), no_repeat)};
}

Verdict offset_recovery() {
  oracle::Gen g(909);
  struct Plant {
    Oui oui;
    std::int32_t offset;
  };
  const std::vector<Plant> plants = {{Oui{0x3C22FB}, 1}, {Oui{0xF4F5D8}, -5}, {Oui{0x001A2B}, 4096}};
  std::vector<MacAddress> wired;
  std::vector<GeoBssid> geo;
  std::map<MacAddress, std::pair<double, double>> where;
  for (const auto& p : plants) {
    std::set<std::uint64_t> bssids;
    std::set<std::uint32_t> used;
    const std::int64_t lo = std::max<std::int64_t>(0, -std::int64_t{p.offset});
    const std::int64_t hi = (1 << 24) - std::max<std::int64_t>(0, p.offset);
    while (used.size() < 600) {
      const auto n = static_cast<std::uint32_t>(lo + static_cast<std::int64_t>(g.below(static_cast<std::uint64_t>(hi - lo))));
      if (!used.insert(n).second) continue;
      const MacAddress m = MacAddress::from_parts(p.oui, n);
      const MacAddress b = MacAddress::from_parts(p.oui, static_cast<std::uint32_t>(static_cast<std::int64_t>(n) + p.offset));
      const double lat = std::round((g.below(160'000'000) / 1e6 - 80.0) * 1e6) / 1e6;
      const double lon = std::round((g.below(360'000'000) / 1e6 - 180.0) * 1e6) / 1e6;
      wired.push_back(m);
      geo.push_back(make_geo_bssid(b, lat, lon));
      bssids.insert(b.bits());
      where[m] = {lat, lon};
    }
    for (int d = 0; d < 6000;) {
      const MacAddress b = MacAddress::from_parts(p.oui, static_cast<std::uint32_t>(g.below(1 << 24)));
      if (!bssids.insert(b.bits()).second) continue;
      geo.push_back(make_geo_bssid(b, 0.0, 0.0));
      ++d;
    }
  }
  // 1 wired MAC x 499 BSSIDs: just under the pair floor.
  const Oui thin{0x0C0FFE};
  wired.push_back(MacAddress::from_parts(thin, 100));
  geo.push_back(make_geo_bssid(MacAddress::from_parts(thin, 101), 1.0, 1.0));
  for (std::uint32_t d = 0; d < 498; ++d) geo.push_back(make_geo_bssid(MacAddress::from_parts(thin, 5000 + d * 7), 0.0, 0.0));

  const auto models = infer_models(wired, geo);
  bool exact = models.size() == plants.size();
  for (const auto& p : plants) {
    const auto it = std::find_if(models.begin(), models.end(), [&](const OffsetModel& m) { return m.oui == p.oui; });
    exact = exact && it != models.end() && it->offset == p.offset;
  }
  const auto thin_tally = tally_offsets(wired, geo, thin);
  const bool floor = thin_tally.pair_count == 499 &&
                     !infer_offset(thin, thin_tally.histogram, thin_tally.pair_count).has_value() &&
                     std::none_of(models.begin(), models.end(), [&](const OffsetModel& m) { return m.oui == thin; });

  const auto loc = geolocate_corpus(wired, geo, models);
  std::uint64_t placed = 0;
  for (const auto& r : loc.results) {
    const auto it = where.find(r.mac);
    if (it != where.end() && it->second == std::pair{r.lat, r.lon}) ++placed;
  }
  return {exact && floor && placed == where.size() && loc.results.size() == where.size(),
          fmt("offsets +1/-5/+4096 %s; 499-pair OUI %s; %llu/%zu devices placed exactly",
              exact ? "recovered" : "wrong", floor ? "rejected" : "accepted",
              static_cast<unsigned long long>(placed), where.size())};
}

Verdict release_safety() {
  oracle::TempDir tmp("acceptance_release");
  oracle::Gen g(1010);
  std::uint64_t corpora = 0, failures = 0, lines = 0;
  for (int round = 0; round < 20; ++round) {
    std::string text;
    const int n = 1 + static_cast<int>(g.below(20000));
    const std::uint64_t nets = 1 + g.below(5000);
    for (int i = 0; i < n; ++i) {
      const Ipv6Address a = round % 2 == 0 ? g.addr() : Ipv6Address::from_halves(0x20010db800000000ull | (g.below(nets) << 16) | g.below(4), g.u64());
      text += std::to_string(i) + "," + to_string(a) + ",v\n";
    }
    std::istringstream in(text);
    IngestOptions opts;
    opts.keep_observations = false;
    const auto store = ingest(in, tmp / ("s" + std::to_string(round)), opts);
    std::ostringstream out;
    export_release(store, out);
    std::istringstream back(out.str());
    const auto c = verify_release(back, store);
    ++corpora;
    lines += c.lines;
    if (!c.only_48s || !c.covers_all || c.leaks_address || !c.sorted_unique || c.lines != store.counters().unique_48s) {
      ++failures;
    }
  }
  return {failures == 0, fmt("%llu corpora, %llu /48 lines, %llu failures", static_cast<unsigned long long>(corpora),
                             static_cast<unsigned long long>(lines), static_cast<unsigned long long>(failures))};
}

Verdict streaming_dedup() {
  oracle::TempDir tmp("acceptance_stream");
  oracle::Gen g(1111);
  constexpr std::size_t kLines = 10'000'000;
  constexpr std::size_t kUnique = 7'000'000;
  std::vector<Ipv6Address> stream;
  stream.reserve(kLines);
  for (std::size_t i = 0; i < kUnique; ++i) stream.push_back(g.addr());
  for (std::size_t i = kUnique; i < kLines; ++i) stream.push_back(stream[g.below(kUnique)]);
  std::shuffle(stream.begin(), stream.end(), g.rng);

  IngestOptions opts;
  opts.keep_observations = false;
  opts.max_buffer_addresses = std::size_t{1} << 20;
  std::uint64_t runs = 0, peak = 0;
  {
    Ingestor ing(tmp / "store", opts);
    std::string line;
    for (std::size_t i = 0; i < stream.size(); ++i) {
      line = std::to_string(1656633600 + static_cast<std::int64_t>(i / 1000));
      line += ',';
      line += to_string(stream[i]);
      line += ",vp";
      ing.feed_line(line);
    }
    const auto store = ing.finish();
    runs = store.counters().runs;
    peak = store.counters().peak_buffered;
  }
  std::sort(stream.begin(), stream.end());
  stream.erase(std::unique(stream.begin(), stream.end()), stream.end());
  const auto store = CorpusStore::open(tmp / "store");
  bool same = store.counters().unique_addresses == stream.size();
  auto reader = store.reader();
  std::size_t k = 0;
  while (auto a = reader.next()) {
    if (k >= stream.size() || *a != stream[k]) {
      same = false;
      break;
    }
    ++k;
  }
  same = same && k == stream.size();
  const double dup = 1.0 - static_cast<double>(stream.size()) / static_cast<double>(kLines);
  return {same && runs > 1 && peak <= opts.max_buffer_addresses,
          fmt("%zu lines, %.1f%% duplicates, %llu unique vs oracle %zu, %llu runs, peak buffer %llu of %zu",
              kLines, dup * 100.0, static_cast<unsigned long long>(store.counters().unique_addresses), stream.size(),
              static_cast<unsigned long long>(runs), static_cast<unsigned long long>(peak),
              opts.max_buffer_addresses)};
}

}  // namespace

int main() {
  set_warnings_enabled(false);
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"entropy anchor", entropy_anchor},
      {"EUI-64 round trip", eui64_round_trip},
      {"random-apparent baseline", random_apparent},
      {"seven-category recovery", category_recovery},
      {"tracking class recovery", tracking_recovery},
      {"lifetime semantics", lifetime_semantics},
      {"LPM oracle equivalence", lpm_oracle},
      {"alias inference", alias_inference},
      {"offset recovery", offset_recovery},
      {"release safety", release_safety},
      {"streaming dedup", streaming_dedup},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.ok) ++failed;
    std::printf("%s %2zu %s: %s (%.1fs)\n", v.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
