#include "doctest.h"

#include <sstream>

#include "hitlist/error.hpp"
#include "hitlist/eui64.hpp"
#include "oracles.hpp"

using namespace hitlist;

TEST_CASE("is_apparent_eui64") {
  CHECK(is_apparent_eui64(InterfaceId{0x021122FFFE334455ull}));
  CHECK_FALSE(is_apparent_eui64(InterfaceId{0x0123456789abcdefull}));
  CHECK_FALSE(is_apparent_eui64(InterfaceId{0xFFFEFFFEFFFEFFFEull}));
}

TEST_CASE("extract_mac") {
  CHECK(to_string(extract_mac(InterfaceId{0x021122FFFE334455ull})) == "00:11:22:33:44:55");
  CHECK(to_string(extract_mac(InterfaceId{0xA8BBCCFFFEDDEEFFull})) == "aa:bb:cc:dd:ee:ff");
  try {
    extract_mac(InterfaceId{0x0123456789abcdefull});
    FAIL("expected not-eui64");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotEui64);
  }
}

TEST_CASE("embed_mac") {
  CHECK(embed_mac(parse_mac("00:11:22:33:44:55")).bits == 0x021122FFFE334455ull);
  CHECK(embed_mac(parse_mac("aa:bb:cc:dd:ee:ff")).bits == 0xA8BBCCFFFEDDEEFFull);
  CHECK(embed_mac(parse_mac("02:00:00:00:00:00")).bits == 0x000000FFFE000000ull);
}

TEST_CASE("embed matches the byte-level procedure and round-trips") {
  oracle::Gen g(21);
  for (int i = 0; i < 200000; ++i) {
    const MacAddress m = g.mac();
    std::array<std::uint8_t, 6> bytes{};
    for (int k = 0; k < 6; ++k) bytes[k] = static_cast<std::uint8_t>(m.bits() >> (40 - 8 * k));
    const InterfaceId iid = embed_mac(m);
    REQUIRE(iid.bits == oracle::eui64_from_bytes(bytes));
    REQUIRE(is_apparent_eui64(iid));
    REQUIRE(extract_mac(iid) == m);
    REQUIRE(m.bits() == ((std::uint64_t{m.oui().bits} << 24) | m.nic()));
  }
}

TEST_CASE("U/L flip is an involution on the first byte") {
  for (unsigned b = 0; b < 256; ++b) CHECK((((b ^ 0x02u) ^ 0x02u)) == b);
  const MacAddress m = parse_mac("f4:f5:d8:01:02:03");
  const std::uint8_t first = static_cast<std::uint8_t>(embed_mac(m).bits >> 56);
  CHECK(first == (0xf4 ^ 0x02));
}

TEST_CASE("MAC and OUI text") {
  CHECK(parse_mac("AA-BB-CC-DD-EE-FF") == parse_mac("aa:bb:cc:dd:ee:ff"));
  CHECK(to_string(parse_oui("F0:02:20")) == "f0:02:20");
  CHECK(parse_oui("f00220") == parse_oui("f0:02:20"));
  CHECK_THROWS_AS(parse_mac("aa:bb:cc:dd:ee"), Error);
  CHECK_THROWS_AS(parse_mac("aa:bb:cc:dd:ee:fg"), Error);
}

TEST_CASE("expected_random_apparent") {
  CHECK(expected_random_apparent(7914066999ull) == doctest::Approx(7914066999.0 / 65536.0).epsilon(1e-12));
  CHECK(expected_random_apparent(7914066999ull) < 121000.0);
  CHECK(expected_random_apparent(65536) == 1.0);
  CHECK(expected_random_apparent(0) == 0.0);
}

TEST_CASE("random IIDs hit FF:FE at the expected rate") {
  oracle::Gen g(22);
  const std::uint64_t n = 1u << 22;
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) hits += is_apparent_eui64(InterfaceId{g.u64()}) ? 1 : 0;
  const double lambda = expected_random_apparent(n);
  CHECK(std::abs(static_cast<double>(hits) - lambda) <= 6.0 * std::sqrt(lambda));
}

TEST_CASE("OUI registry and vendor resolution") {
  std::istringstream csv(
      "Registry,Assignment,Organization Name,Organization Address\n"
      "MA-L,000E58,\"Sonos, Inc.\",\"614 Chapala St Santa Barbara CA US 93101\"\n"
      "MA-L,f4f5d8,Google Inc.,\"1600 Amphitheatre Parkway\"\n"
      "MA-L,0050C2,IEEE Registration Authority,\"\"\n");
  const OuiDatabase db = load_oui_csv(csv);
  CHECK(db.size() == 3);
  CHECK(resolve_vendor(parse_mac("00:0e:58:12:34:56"), db) == "Sonos, Inc.");
  CHECK(resolve_vendor(parse_mac("f4:f5:d8:00:00:01"), db) == "Google Inc.");
  CHECK(resolve_vendor(parse_mac("f0:02:20:aa:bb:cc"), db) == "Unlisted");
  CHECK(resolve_vendor(parse_mac("f0:02:20:aa:bb:cc"), OuiDatabase{}) == "Unlisted");
  // two MACs sharing an OUI resolve identically
  oracle::Gen g(23);
  for (int i = 0; i < 1000; ++i) {
    const MacAddress a = MacAddress::from_parts(Oui{0x000E58}, static_cast<std::uint32_t>(g.u64()));
    const MacAddress b = MacAddress::from_parts(Oui{0x000E58}, static_cast<std::uint32_t>(g.u64()));
    CHECK(resolve_vendor(a, db) == resolve_vendor(b, db));
  }
}

TEST_CASE("OUI registry without the expected header is rejected") {
  std::istringstream csv("foo,bar\n1,2\n");
  CHECK_THROWS_AS(load_oui_csv(csv), Error);
}

TEST_CASE("MAC report sorts by count") {
  std::istringstream csv("Registry,Assignment,Organization Name,Organization Address\nMA-L,000E58,\"Sonos, Inc.\",x\n");
  const OuiDatabase db = load_oui_csv(csv);
  std::ostringstream out;
  write_mac_report(out,
                   {{parse_mac("f0:02:20:00:00:01"), 2},
                    {parse_mac("00:0e:58:00:00:01"), 5},
                    {parse_mac("00:0e:58:00:00:00"), 2}},
                   db);
  CHECK(out.str() ==
        "mac,oui,vendor,count\n"
        "00:0e:58:00:00:01,00:0e:58,\"Sonos, Inc.\",5\n"
        "00:0e:58:00:00:00,00:0e:58,\"Sonos, Inc.\",2\n"
        "f0:02:20:00:00:01,f0:02:20,Unlisted,2\n");
}
