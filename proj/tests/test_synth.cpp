#include "doctest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "hitlist/classify.hpp"
#include "hitlist/error.hpp"
#include "hitlist/synth.hpp"
#include "hitlist/tracking.hpp"
#include "oracles.hpp"

using namespace hitlist;
using namespace hitlist::synth;

namespace {

ScenarioSpec from_text(const std::string& text) { return scenario_from_json(nlohmann::json::parse(text)); }

ScenarioSpec mixed() {
  return from_text(R"({
    "seed": 11, "duration": 259200, "sighting_rate": 8, "singleton_fraction": 0.1,
    "aliased_64s": 5, "external_alias_coverage": 0.6,
    "ases": [
      {"asn": 64500, "country": "US", "v6_pool": ["2001:db8:100::/40"], "v4_pool": ["198.51.100.0/24"],
       "strategies": {"Eui64Slaac": 0.3, "RandomPrivacy": 0.3, "Ipv4EmbeddedHexLow32": 0.3, "LowByte": 0.1},
       "devices": 500},
      {"asn": 64501, "country": "DE", "v6_pool": ["2001:db8:200::/40"], "v4_pool": ["203.0.113.0/24"],
       "strategies": {"RandomPrivacy": 0.5, "Ipv4EmbeddedDecimalHextets": 0.05, "Low2Bytes": 0.2, "Zeroes": 0.05, "Eui64Slaac": 0.2},
       "rotation_period": 43200, "devices": 400},
      {"asn": 64502, "country": "US", "v6_pool": ["2001:db8:300::/40"], "strategies": {"RandomPrivacy": 1.0}, "devices": 50}
    ],
    "mobility": [
      {"count": 3, "schedule": [{"asn": 64500, "at": 0}, {"asn": 64501, "at": 43200}], "repeat": 86400, "sighting_period": 3600},
      {"count": 3, "schedule": [{"asn": 64500, "at": 0}, {"asn": 64502, "at": 10800}], "repeat": 21600, "sighting_period": 3600}
    ],
    "mac_reuse": [{"count": 2, "ases": [64500, 64501], "sighting_period": 3600}],
    "geo": [{"oui": "3c:22:fb", "offset": -7, "devices": 20, "asn": 64500}]
  })");
}

template <class T>
T table_from(const std::vector<std::string>& lines, T (*load)(std::istream&, PrefixFileReport*)) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  std::istringstream in(text);
  return load(in, nullptr);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("scenario validation") {
  const auto base = mixed();
  CHECK_NOTHROW(validate_scenario(base));
  auto check_invalid = [](ScenarioSpec s) {
    try {
      validate_scenario(s);
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Validation);
    }
  };
  auto s = base;
  s.ases[1].v6_pool = {parse_prefix("2001:db8:100::/48")};
  check_invalid(s);
  s = base;
  s.ases[0].strategies = {{Strategy::LowByte, 0.5}};
  check_invalid(s);
  s = base;
  s.ases[0].strategies = {};
  check_invalid(s);
  s = base;
  s.ases[1].v4_pool = {};
  check_invalid(s);
  s = base;
  s.mobility[0].schedule[1].asn = Asn{1};
  check_invalid(s);
  s = base;
  s.geo[0].offset = 0;
  check_invalid(s);
  CHECK_THROWS_AS(parse_strategy("Sideways"), Error);
}

TEST_CASE("scenario json round trip") {
  const auto s = mixed();
  const auto j = scenario_to_json(s);
  CHECK(scenario_to_json(scenario_from_json(j)) == j);
}

TEST_CASE("generation is deterministic and conserves sightings") {
  const auto s = mixed();
  const auto a = generate_corpus(s);
  const auto b = generate_corpus(s);
  CHECK(a.observations.size() == a.truth.sighting_draws);
  std::uint64_t per_device = 0;
  for (const auto& d : a.truth.devices) per_device += d.sightings;
  CHECK(per_device == a.truth.sighting_draws);

  oracle::TempDir tmp("synth_determinism");
  write_corpus(a, tmp / "a");
  write_corpus(b, tmp / "b");
  for (const auto& entry : std::filesystem::directory_iterator(tmp / "a")) {
    const auto name = entry.path().filename();
    CAPTURE(name.string());
    CHECK(slurp(entry.path()) == slurp(tmp / "b" / name));
  }
  for (const char* f : {"observations.csv", "asn.txt", "country.csv", "alias_list.txt", "aliased_truth.txt",
                        "geo.csv", "oui.csv", "ground_truth.json", "country_grid.csv"}) {
    CHECK(std::filesystem::exists(tmp / "a" / f));
  }

  auto other = s;
  other.seed = 12;
  CHECK(generate_corpus(other).observations.size() != 0);
}

TEST_CASE("single low-byte device") {
  const auto s = from_text(R"({"seed": 3, "sighting_period": 86400, "duration": 86400,
    "ases": [{"asn": 64500, "country": "US", "v6_pool": ["2001:db8::/32"], "strategies": {"LowByte": 1.0}, "devices": 1}]})");
  const auto c = generate_corpus(s);
  REQUIRE(c.observations.size() == 1);
  CHECK(c.truth.categories.size() == 1);
  CHECK(c.truth.categories.begin()->second == AddressCategory::LowByte);
  CHECK(iid_of(c.observations[0].addr).bits <= 0xff);
}

TEST_CASE("daily rotation over thirty days") {
  const auto s = from_text(R"({"seed": 5, "sighting_period": 3600, "duration": 2592000,
    "ases": [{"asn": 64500, "country": "US", "v6_pool": ["2001:db8::/32"], "strategies": {"Eui64Slaac": 1.0},
              "rotation_period": 86400, "devices": 1}]})");
  const auto c = generate_corpus(s);
  CHECK(c.observations.size() == 720);
  REQUIRE(c.truth.macs.size() == 1);
  const auto& t = c.truth.macs.begin()->second;
  CHECK(t.features.transitions == 29);
  CHECK(t.features.prefix64_count == 30);
  CHECK(t.track_class == TrackClass::PrefixReassignment);

  const auto asmap = table_from(c.asn_lines, &load_asn_table);
  const auto cmap = table_from(c.country_lines, &load_country_table);
  const auto set = build_timelines(c.observations, asmap, cmap);
  REQUIRE(set.timelines.size() == 1);
  CHECK(count_transitions(set.timelines.begin()->second) == 29);
}

TEST_CASE("generator truth agrees with the library") {
  const auto c = generate_corpus(mixed());
  const auto asmap = table_from(c.asn_lines, &load_asn_table);
  const auto cmap = table_from(c.country_lines, &load_country_table);

  std::vector<Ipv6Address> addrs;
  for (const auto& [a, cat] : c.truth.categories) addrs.push_back(a);
  const auto cc = classify_corpus(addrs, asmap, asmap);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < addrs.size(); ++i) {
    if (cc.categories[i] != c.truth.categories.at(addrs[i])) ++mismatches;
  }
  CHECK(mismatches == 0);
  for (const auto& [asn, ok] : c.truth.ipv4_accepted) {
    REQUIRE(cc.validation.per_as.contains(asn));
    CHECK(cc.validation.per_as.at(asn).accepted == ok);
  }

  const auto set = build_timelines(c.observations, asmap, cmap);
  CHECK(set.timelines.size() == c.truth.macs.size());
  std::set<TrackClass> seen;
  for (const auto& [mac, tl] : set.timelines) {
    REQUIRE(c.truth.macs.contains(mac));
    const auto& truth = c.truth.macs.at(mac);
    CHECK(feature_vector(tl) == truth.features);
    CHECK(classify_track(feature_vector(tl)) == truth.track_class);
    seen.insert(truth.track_class);
  }
  CHECK(seen.contains(TrackClass::MacReuse));
  CHECK(seen.contains(TrackClass::UserMovement));
  CHECK(seen.contains(TrackClass::NotTrackable));
  CHECK(seen.contains(TrackClass::Ambiguous));

  CHECK(c.truth.aliased_64s.size() == 5);
  CHECK(c.truth.external_aliased.size() == 3);
  CHECK(c.truth.offsets.at(Oui{0x3C22FB}) == -7);
  CHECK(c.truth.geolocated.size() == 20);
}
