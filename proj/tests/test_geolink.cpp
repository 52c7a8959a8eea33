#include "doctest.h"

#include <set>
#include <sstream>

#include "hitlist/error.hpp"
#include "hitlist/geolink.hpp"
#include "oracles.hpp"

using namespace hitlist;

namespace {

constexpr Oui kOui{0x3C22FB};

MacAddress nic(std::uint32_t n, Oui oui = kOui) { return MacAddress::from_parts(oui, n); }

GeoBssid at(MacAddress m, double lat = 1.0, double lon = 2.0) { return make_geo_bssid(m, lat, lon); }

// Planted population: `devices` wired MACs with BSSID = MAC + offset, plus
// `decoys` uniformly random BSSIDs in the same OUI.
struct Planted {
  std::vector<MacAddress> wired;
  std::vector<GeoBssid> geo;
};

Planted plant(Oui oui, std::int32_t offset, std::size_t devices, std::size_t decoys, oracle::Gen& g) {
  Planted p;
  std::set<std::uint32_t> used;
  while (p.wired.size() < devices) {
    const std::int64_t lo = std::max<std::int64_t>(0, -std::int64_t{offset});
    const std::int64_t hi = (1 << 24) - std::max<std::int64_t>(0, offset);
    const auto n = static_cast<std::uint32_t>(lo + static_cast<std::int64_t>(g.below(static_cast<std::uint64_t>(hi - lo))));
    if (!used.insert(n).second) continue;
    p.wired.push_back(nic(n, oui));
    p.geo.push_back(at(nic(static_cast<std::uint32_t>(static_cast<std::int64_t>(n) + offset), oui),
                       -60.0 + static_cast<double>(g.below(120)), -170.0 + static_cast<double>(g.below(340))));
  }
  std::set<std::uint64_t> bssids;
  for (const auto& b : p.geo) bssids.insert(b.bssid.bits());
  for (std::size_t d = 0; d < decoys;) {
    const MacAddress b = nic(static_cast<std::uint32_t>(g.below(1 << 24)), oui);
    if (!bssids.insert(b.bits()).second) continue;
    p.geo.push_back(at(b));
    ++d;
  }
  return p;
}

}  // namespace

TEST_CASE("tally_offsets") {
  const MacAddress x = nic(1000);
  std::vector<MacAddress> wired = {x};
  std::vector<GeoBssid> g1 = {at(nic(1001))};
  const auto t1 = tally_offsets(wired, g1, kOui);
  CHECK(t1.histogram.bins() == std::vector<std::pair<std::int32_t, std::uint64_t>>{{1, 1}});
  CHECK(t1.pair_count == 1);
  std::vector<GeoBssid> g2 = {at(nic(1001)), at(nic(998))};
  const auto t2 = tally_offsets(wired, g2, kOui);
  CHECK(t2.histogram.count_at(1) == 1);
  CHECK(t2.histogram.count_at(-2) == 1);
  CHECK(t2.histogram.total() == 2);
  // other OUIs are ignored
  std::vector<GeoBssid> g3 = {at(nic(1001)), at(nic(1001, Oui{0x001122}))};
  CHECK(tally_offsets(wired, g3, kOui).pair_count == 1);
}

TEST_CASE("tally matches a direct pair count") {
  oracle::Gen g(71);
  std::vector<MacAddress> wired;
  std::vector<GeoBssid> geo;
  for (int i = 0; i < 300; ++i) wired.push_back(nic(static_cast<std::uint32_t>(g.below(5000))));
  for (int i = 0; i < 200; ++i) geo.push_back(at(nic(static_cast<std::uint32_t>(g.below(5000)))));
  std::map<std::int32_t, std::uint64_t> direct;
  for (const auto& w : wired)
    for (const auto& b : geo) ++direct[static_cast<std::int32_t>(b.bssid.nic()) - static_cast<std::int32_t>(w.nic())];
  const auto t = tally_offsets(wired, geo, kOui);
  CHECK(t.pair_count == 60000);
  CHECK(t.histogram.bins().size() == direct.size());
  for (const auto& [o, n] : direct) REQUIRE(t.histogram.count_at(o) == n);
}

TEST_CASE("infer_offset") {
  const OffsetHistogram h1({{1, 800}, {-3, 200}});
  const auto m1 = infer_offset(kOui, h1, 1000);
  REQUIRE(m1.has_value());
  CHECK(m1->offset == 1);
  CHECK(m1->support == 800);
  CHECK_FALSE(infer_offset(kOui, h1, 499).has_value());
  CHECK(infer_offset(kOui, OffsetHistogram({{1, 300}}), 500).has_value());
  CHECK_FALSE(infer_offset(kOui, OffsetHistogram({{1, 300}}), 499).has_value());
  const OffsetHistogram h2({{2, 300}, {-2, 300}});
  CHECK(infer_offset(kOui, h2, 600)->offset == 2);
  const OffsetHistogram h3({{5, 300}, {-2, 300}});
  CHECK(infer_offset(kOui, h3, 600)->offset == -2);
  const OffsetHistogram h4({{0, 900}, {7, 10}});
  CHECK(infer_offset(kOui, h4, 1000)->offset == 7);
  const OffsetHistogram h5({{9, 10}, {3, 10}, {-1, 4}});
  CHECK(infer_offset(kOui, h5, 1000)->offset == 3);
  CHECK_FALSE(infer_offset(kOui, OffsetHistogram({{0, 50}}), 1000).has_value());
}

TEST_CASE("apply_offset") {
  const OffsetModel plus1{kOui, 1, 0, 0};
  CHECK(apply_offset(nic(0x10), plus1) == nic(0x11));
  CHECK_FALSE(apply_offset(nic(0xFFFFFF), plus1).has_value());
  CHECK_FALSE(apply_offset(nic(0), OffsetModel{kOui, -1, 0, 0}).has_value());
  CHECK(apply_offset(nic(0x42), OffsetModel{kOui, 0, 0, 0}) == nic(0x42));
  CHECK_THROWS_AS(apply_offset(nic(1, Oui{0x001122}), plus1), Error);
  // injective on its domain
  oracle::Gen g(72);
  std::set<std::uint64_t> seen;
  const OffsetModel m{kOui, -4096, 0, 0};
  for (int i = 0; i < 20000; ++i) {
    const MacAddress mac = nic(static_cast<std::uint32_t>(g.below(1 << 24)));
    if (auto r = apply_offset(mac, m)) {
      CHECK(r->nic() + 4096 == mac.nic());
    }
  }
}

TEST_CASE("planted offsets are recovered exactly under decoys") {
  oracle::Gen g(73);
  const std::vector<std::pair<Oui, std::int32_t>> plants = {{Oui{0x3C22FB}, 1}, {Oui{0xF4F5D8}, -5}, {Oui{0x001A2B}, 4096}};
  std::vector<MacAddress> wired;
  std::vector<GeoBssid> geo;
  for (const auto& [oui, off] : plants) {
    const auto p = plant(oui, off, 600, 6000, g);
    wired.insert(wired.end(), p.wired.begin(), p.wired.end());
    geo.insert(geo.end(), p.geo.begin(), p.geo.end());
  }
  const auto models = infer_models(wired, geo);
  REQUIRE(models.size() == 3);
  for (const auto& m : models) {
    bool matched = false;
    for (const auto& [oui, off] : plants) {
      if (m.oui == oui) {
        CHECK(m.offset == off);
        CHECK(m.support >= 600);
        CHECK(m.support <= m.pair_count);
        matched = true;
      }
    }
    CHECK(matched);
  }
  const auto loc = geolocate_corpus(wired, geo, models);
  CHECK(loc.results.size() >= 1800);
}

TEST_CASE("geolocate_corpus") {
  const std::vector<MacAddress> macs = {nic(10), nic(20), nic(30, Oui{0x001122})};
  const std::vector<GeoBssid> geo = {at(nic(11), 52.5, 13.4), at(nic(40), 0, 0)};
  const std::vector<OffsetModel> models = {{kOui, 1, 1, 600}};
  CountryGrid grid;
  grid.add({50.0, 10.0, 55.0, 15.0, parse_country("DE")});
  const auto loc = geolocate_corpus(macs, geo, models, &grid);
  REQUIRE(loc.results.size() == 1);
  CHECK(loc.results[0].mac == nic(10));
  CHECK(loc.results[0].matched_bssid == nic(11));
  CHECK(loc.results[0].lat == 52.5);
  CHECK(loc.per_country.at(parse_country("DE")) == 1);
  for (const auto& r : loc.results) CHECK(apply_offset(r.mac, r.model) == r.matched_bssid);
}

TEST_CASE("geo files") {
  std::stringstream in("bssid,lat,lon\n3c:22:fb:00:00:0b,52.5,13.4\n");
  const auto geo = read_geo_csv(in);
  REQUIRE(geo.size() == 1);
  CHECK(geo[0].bssid == nic(11));
  std::stringstream bad("bssid,lat,lon\n3c:22:fb:00:00:0b,95,13.4\n");
  CHECK_THROWS_AS(read_geo_csv(bad), Error);
  CHECK_THROWS_AS(make_geo_bssid(nic(1), 0, 181), Error);

  const std::vector<OffsetModel> models = {{kOui, -5, 700, 3000}};
  std::stringstream ms;
  write_models_csv(ms, models);
  CHECK(ms.str() == "oui,offset,support,pair_count\n3c:22:fb,-5,700,3000\n");
  CHECK(read_models_csv(ms) == models);

  std::stringstream grid_text("lat_min,lon_min,lat_max,lon_max,iso2\n-10,-10,10,10,BR\n");
  const CountryGrid grid = read_country_grid(grid_text);
  CHECK(grid.lookup(0, 0) == parse_country("BR"));
  CHECK_FALSE(grid.lookup(20, 0).has_value());

  std::vector<GeoResult> results = {{nic(10), nic(11), 1.5, 2.5, {kOui, 1, 1, 600}}};
  std::stringstream rs;
  write_results_csv(rs, results);
  CHECK(rs.str().rfind("mac,bssid,lat,lon,oui,offset\n3c:22:fb:00:00:0a,3c:22:fb:00:00:0b,", 0) == 0);
}
