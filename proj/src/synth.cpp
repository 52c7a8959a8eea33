#include "hitlist/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

#include "hitlist/error.hpp"
#include "hitlist/rng.hpp"

namespace hitlist::synth {

namespace {

constexpr std::array<std::pair<Strategy, std::string_view>, 7> kStrategyNames = {{
    {Strategy::Eui64Slaac, "Eui64Slaac"},
    {Strategy::RandomPrivacy, "RandomPrivacy"},
    {Strategy::LowByte, "LowByte"},
    {Strategy::Low2Bytes, "Low2Bytes"},
    {Strategy::Zeroes, "Zeroes"},
    {Strategy::Ipv4EmbeddedHexLow32, "Ipv4EmbeddedHexLow32"},
    {Strategy::Ipv4EmbeddedDecimalHextets, "Ipv4EmbeddedDecimalHextets"},
}};

constexpr Oui kDefaultOui{0x001A2B};

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorKind::Validation, "scenario: " + msg);
}

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& [k, name] : kStrategyNames) {
    if (k == s) return name;
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  for (const auto& [k, name] : kStrategyNames) {
    if (name == text) return k;
  }
  invalid("unknown strategy '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Scenario (de)serialization and validation

namespace {

template <class T>
std::optional<T> opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  try {
    ScenarioSpec s;
    s.seed = j.value("seed", s.seed);
    s.start = j.value("start", s.start);
    s.duration = j.value("duration", s.duration);
    s.sighting_rate = j.value("sighting_rate", s.sighting_rate);
    s.sighting_period = opt<std::int64_t>(j, "sighting_period");
    s.privacy_period = j.value("privacy_period", s.privacy_period);
    s.singleton_fraction = j.value("singleton_fraction", s.singleton_fraction);
    s.aliased_64s = j.value("aliased_64s", s.aliased_64s);
    s.external_alias_coverage = j.value("external_alias_coverage", s.external_alias_coverage);
    for (const auto& a : j.value("ases", nlohmann::json::array())) {
      AsSpec as;
      as.asn = Asn{a.at("asn").get<std::uint32_t>()};
      as.country = parse_country(a.at("country").get<std::string>());
      for (const auto& p : a.value("v6_pool", nlohmann::json::array())) {
        as.v6_pool.push_back(parse_prefix(p.get<std::string>()));
      }
      for (const auto& p : a.value("v4_pool", nlohmann::json::array())) {
        as.v4_pool.push_back(parse_ipv4_prefix(p.get<std::string>()));
      }
      for (const auto& [name, w] : a.at("strategies").items()) {
        as.strategies.emplace_back(parse_strategy(name), w.get<double>());
      }
      as.rotation_period = opt<std::int64_t>(a, "rotation_period");
      as.devices = a.value("devices", std::uint64_t{0});
      for (const auto& o : a.value("ouis", nlohmann::json::array())) {
        as.ouis.push_back(parse_oui(o.get<std::string>()));
      }
      s.ases.push_back(std::move(as));
    }
    for (const auto& m : j.value("mobility", nlohmann::json::array())) {
      MobilitySpec ms;
      ms.count = m.value("count", std::uint64_t{1});
      for (const auto& step : m.at("schedule")) {
        ms.schedule.push_back({Asn{step.at("asn").get<std::uint32_t>()},
                               step.at("at").get<std::int64_t>()});
      }
      ms.repeat = opt<std::int64_t>(m, "repeat");
      if (auto o = opt<std::string>(m, "oui")) ms.oui = parse_oui(*o);
      ms.sighting_period = opt<std::int64_t>(m, "sighting_period");
      s.mobility.push_back(std::move(ms));
    }
    for (const auto& m : j.value("mac_reuse", nlohmann::json::array())) {
      MacReuseSpec rs;
      rs.count = m.value("count", std::uint64_t{1});
      for (const auto& a : m.at("ases")) rs.ases.push_back(Asn{a.get<std::uint32_t>()});
      if (auto o = opt<std::string>(m, "oui")) rs.oui = parse_oui(*o);
      rs.sighting_period = opt<std::int64_t>(m, "sighting_period");
      s.mac_reuse.push_back(std::move(rs));
    }
    for (const auto& g : j.value("geo", nlohmann::json::array())) {
      GeoSpec gs;
      gs.oui = parse_oui(g.at("oui").get<std::string>());
      gs.offset = g.at("offset").get<std::int32_t>();
      gs.devices = g.at("devices").get<std::uint64_t>();
      gs.asn = Asn{g.at("asn").get<std::uint32_t>()};
      gs.decoy_factor = g.value("decoy_factor", gs.decoy_factor);
      s.geo.push_back(gs);
    }
    for (const auto& v : j.value("vendors", nlohmann::json::array())) {
      s.vendors.push_back({parse_oui(v.at("oui").get<std::string>()), v.at("name").get<std::string>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    invalid(e.what());
  }
}

nlohmann::json scenario_to_json(const ScenarioSpec& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["start"] = s.start;
  j["duration"] = s.duration;
  j["sighting_rate"] = s.sighting_rate;
  j["sighting_period"] = s.sighting_period ? nlohmann::json(*s.sighting_period) : nlohmann::json(nullptr);
  j["privacy_period"] = s.privacy_period;
  j["singleton_fraction"] = s.singleton_fraction;
  j["aliased_64s"] = s.aliased_64s;
  j["external_alias_coverage"] = s.external_alias_coverage;
  j["ases"] = nlohmann::json::array();
  for (const auto& a : s.ases) {
    nlohmann::json ja;
    ja["asn"] = a.asn.value;
    ja["country"] = a.country.str();
    ja["v6_pool"] = nlohmann::json::array();
    for (const auto& p : a.v6_pool) ja["v6_pool"].push_back(to_string(p));
    ja["v4_pool"] = nlohmann::json::array();
    for (const auto& p : a.v4_pool) ja["v4_pool"].push_back(to_string(p));
    ja["strategies"] = nlohmann::json::object();
    for (const auto& [k, w] : a.strategies) ja["strategies"][std::string(to_string(k))] = w;
    ja["rotation_period"] = a.rotation_period ? nlohmann::json(*a.rotation_period) : nlohmann::json(nullptr);
    ja["devices"] = a.devices;
    ja["ouis"] = nlohmann::json::array();
    for (const auto& o : a.ouis) ja["ouis"].push_back(to_string(o));
    j["ases"].push_back(ja);
  }
  j["mobility"] = nlohmann::json::array();
  for (const auto& m : s.mobility) {
    nlohmann::json jm;
    jm["count"] = m.count;
    jm["schedule"] = nlohmann::json::array();
    for (const auto& st : m.schedule) jm["schedule"].push_back({{"asn", st.asn.value}, {"at", st.at}});
    jm["repeat"] = m.repeat ? nlohmann::json(*m.repeat) : nlohmann::json(nullptr);
    jm["oui"] = m.oui ? nlohmann::json(to_string(*m.oui)) : nlohmann::json(nullptr);
    jm["sighting_period"] = m.sighting_period ? nlohmann::json(*m.sighting_period) : nlohmann::json(nullptr);
    j["mobility"].push_back(jm);
  }
  j["mac_reuse"] = nlohmann::json::array();
  for (const auto& m : s.mac_reuse) {
    nlohmann::json jm;
    jm["count"] = m.count;
    jm["ases"] = nlohmann::json::array();
    for (const auto& a : m.ases) jm["ases"].push_back(a.value);
    jm["oui"] = m.oui ? nlohmann::json(to_string(*m.oui)) : nlohmann::json(nullptr);
    jm["sighting_period"] = m.sighting_period ? nlohmann::json(*m.sighting_period) : nlohmann::json(nullptr);
    j["mac_reuse"].push_back(jm);
  }
  j["geo"] = nlohmann::json::array();
  for (const auto& g : s.geo) {
    j["geo"].push_back({{"oui", to_string(g.oui)},
                        {"offset", g.offset},
                        {"devices", g.devices},
                        {"asn", g.asn.value},
                        {"decoy_factor", g.decoy_factor}});
  }
  j["vendors"] = nlohmann::json::array();
  for (const auto& v : s.vendors) j["vendors"].push_back({{"oui", to_string(v.oui)}, {"name", v.name}});
  return j;
}

void validate_scenario(const ScenarioSpec& s) {
  if (s.ases.empty()) invalid("at least one AS is required");
  if (s.duration <= 0) invalid("duration must be positive");
  if (s.privacy_period <= 0) invalid("privacy_period must be positive");
  if (s.sighting_period && *s.sighting_period <= 0) invalid("sighting_period must be positive");
  if (s.sighting_rate < 0.0) invalid("sighting_rate must be non-negative");
  if (s.singleton_fraction < 0.0 || s.singleton_fraction > 1.0) {
    invalid("singleton_fraction must lie in [0, 1]");
  }
  if (s.external_alias_coverage < 0.0 || s.external_alias_coverage > 1.0) {
    invalid("external_alias_coverage must lie in [0, 1]");
  }
  std::set<Asn> asns;
  std::vector<std::pair<Prefix, Asn>> v6;
  std::vector<std::pair<Ipv4Prefix, Asn>> v4;
  for (const auto& a : s.ases) {
    if (!asns.insert(a.asn).second) invalid("ASN " + to_string(a.asn) + " listed twice");
    if (a.v6_pool.empty()) invalid("AS " + to_string(a.asn) + " has no IPv6 pool");
    if (a.strategies.empty()) invalid("AS " + to_string(a.asn) + " has an empty strategy mix");
    double total = 0.0;
    for (const auto& [k, w] : a.strategies) {
      if (w < 0.0) invalid("negative strategy weight in AS " + to_string(a.asn));
      total += w;
      const bool embeds_v4 =
          k == Strategy::Ipv4EmbeddedHexLow32 || k == Strategy::Ipv4EmbeddedDecimalHextets;
      if (embeds_v4 && w > 0.0 && a.v4_pool.empty()) {
        invalid("AS " + to_string(a.asn) + " embeds IPv4 but has no IPv4 pool");
      }
    }
    if (std::abs(total - 1.0) > 1e-9) invalid("strategy weights of AS " + to_string(a.asn) + " do not sum to 1");
    if (a.rotation_period && *a.rotation_period <= 0) invalid("rotation_period must be positive");
    for (const auto& p : a.v6_pool) {
      if (p.length() > 64) invalid("IPv6 pool " + to_string(p) + " is longer than /64");
      v6.emplace_back(p, a.asn);
    }
    for (const auto& p : a.v4_pool) v4.emplace_back(p, a.asn);
  }
  for (std::size_t i = 0; i < v6.size(); ++i) {
    for (std::size_t k = i + 1; k < v6.size(); ++k) {
      if (v6[i].first.contains(v6[k].first.base()) || v6[k].first.contains(v6[i].first.base())) {
        invalid("overlapping prefixes " + to_string(v6[i].first) + " and " + to_string(v6[k].first));
      }
    }
  }
  for (std::size_t i = 0; i < v4.size(); ++i) {
    for (std::size_t k = i + 1; k < v4.size(); ++k) {
      if (v4[i].first.contains(v4[k].first.base()) || v4[k].first.contains(v4[i].first.base())) {
        invalid("overlapping prefixes " + to_string(v4[i].first) + " and " + to_string(v4[k].first));
      }
    }
  }
  for (const auto& m : s.mobility) {
    if (m.schedule.empty() || m.schedule.front().at != 0) invalid("mobility schedule must start at 0");
    for (std::size_t i = 0; i < m.schedule.size(); ++i) {
      if (!asns.contains(m.schedule[i].asn)) invalid("mobility references unknown ASN");
      if (i > 0 && m.schedule[i].at <= m.schedule[i - 1].at) invalid("mobility steps must ascend");
    }
    if (m.repeat && *m.repeat <= m.schedule.back().at) invalid("mobility repeat shorter than schedule");
    if (m.sighting_period && *m.sighting_period <= 0) invalid("sighting_period must be positive");
  }
  for (const auto& r : s.mac_reuse) {
    if (r.ases.empty()) invalid("mac_reuse needs at least one AS");
    for (const auto& a : r.ases) {
      if (!asns.contains(a)) invalid("mac_reuse references unknown ASN");
    }
  }
  for (const auto& g : s.geo) {
    if (!asns.contains(g.asn)) invalid("geo references unknown ASN");
    if (g.offset == 0 || g.offset <= -(1 << 23) || g.offset >= (1 << 23)) {
      invalid("geo offset must be nonzero and smaller than 2^23 in magnitude");
    }
    if (g.decoy_factor < 0.0) invalid("decoy_factor must be non-negative");
  }
}

// ---------------------------------------------------------------------------
// Independent ground-truth rules. Deliberately written against hex text and
// plain integers rather than the library's classifier code paths.

namespace {

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double truth_entropy(std::uint64_t iid) {
  std::map<char, int> freq;
  for (char c : hex16(iid)) ++freq[c];
  double h = 0.0;
  for (const auto& [c, n] : freq) {
    const double p = n / 16.0;
    h -= p * std::log2(p);
  }
  return h <= 0.0 ? 0.0 : h / 4.0;
}

bool truth_in_pool(std::uint32_t v4, const std::vector<Ipv4Prefix>& pool) {
  for (const auto& p : pool) {
    const int len = p.length();
    const std::uint64_t span = std::uint64_t{1} << (32 - len);
    const std::uint64_t lo = p.base().bits();
    if (v4 >= lo && v4 < lo + span) return true;
  }
  return false;
}

// The three embeddings, re-derived from the hex text of the IID.
std::vector<std::uint32_t> truth_embeddings(std::uint64_t iid) {
  std::vector<std::uint32_t> out;
  const std::string text = hex16(iid);
  const auto low = static_cast<std::uint32_t>(std::stoul(text.substr(8, 8), nullptr, 16));
  const auto high = static_cast<std::uint32_t>(std::stoul(text.substr(0, 8), nullptr, 16));
  if (low != 0) out.push_back(low);
  std::uint32_t dotted = 0;
  bool ok = true;
  for (int h = 0; h < 4 && ok; ++h) {
    std::string group = text.substr(4 * h, 4);
    group.erase(0, std::min(group.find_first_not_of('0'), group.size() - 1));
    ok = group.find_first_not_of("0123456789") == std::string::npos;
    if (ok) {
      const int octet = std::stoi(group);
      ok = octet <= 255;
      dotted = dotted * 256 + static_cast<std::uint32_t>(octet);
    }
  }
  if (ok && dotted != 0) out.push_back(dotted);
  if (high != 0) out.push_back(high);
  return out;
}

AddressCategory truth_category(std::uint64_t iid, bool v4_accepted) {
  if (iid == 0) return AddressCategory::Zeroes;
  if (iid <= 0xff) return AddressCategory::LowByte;
  if (iid <= 0xffff) return AddressCategory::Low2Bytes;
  if (v4_accepted) return AddressCategory::Ipv4Mapped;
  const double e = truth_entropy(iid);
  if (e > 0.75) return AddressCategory::HighEntropy;
  if (e < 0.25) return AddressCategory::LowEntropy;
  return AddressCategory::MediumEntropy;
}

struct TruthSighting {
  std::int64_t t;
  std::uint64_t slash64;
  std::uint32_t asn;
  std::string country;
};

MacTruth truth_track(std::vector<TruthSighting> s) {
  std::sort(s.begin(), s.end(), [](const TruthSighting& a, const TruthSighting& b) {
    return a.t != b.t ? a.t < b.t : a.slash64 < b.slash64;
  });
  std::set<std::uint32_t> ases;
  std::set<std::string> countries;
  std::set<std::uint64_t> nets;
  std::uint64_t transitions = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ases.insert(s[i].asn);
    countries.insert(s[i].country);
    nets.insert(s[i].slash64);
    if (i > 0 && s[i].slash64 != s[i - 1].slash64) ++transitions;
  }
  MacTruth t;
  t.features = FeatureVector{ases.size(), countries.size(), transitions, nets.size()};
  const bool many_as = ases.size() > 1;
  const bool many_cc = countries.size() > 1;
  const bool moves = transitions > 10;
  if (nets.size() < 2) {
    t.track_class = TrackClass::NotTrackable;
  } else if (!many_as && !many_cc && !moves) {
    t.track_class = TrackClass::MostlyStatic;
  } else if (!many_as && !many_cc && moves) {
    t.track_class = TrackClass::PrefixReassignment;
  } else if (many_as && many_cc && moves) {
    t.track_class = TrackClass::MacReuse;
  } else if (many_as && !many_cc && !moves) {
    t.track_class = TrackClass::ChangingProviders;
  } else if (many_as && !many_cc && moves) {
    t.track_class = TrackClass::UserMovement;
  } else {
    t.track_class = TrackClass::Ambiguous;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Generation

struct Instance {
  std::uint64_t device = 0;
  Strategy strategy = Strategy::Eui64Slaac;
  std::size_t home = 0;  // index into ases
  std::optional<MacAddress> mac;
  const MobilitySpec* mobility = nullptr;
  std::optional<std::int64_t> sighting_period;
  bool singleton = false;
  std::uint64_t fixed_iid = 0;  // LowByte, Low2Bytes, IPv4 embeddings
};

class Generator {
 public:
  explicit Generator(const ScenarioSpec& s) : s_(s), rng_(s.seed) {
    for (std::size_t i = 0; i < s.ases.size(); ++i) as_index_[s.ases[i].asn] = i;
  }

  SyntheticCorpus run();

 private:
  MacAddress fresh_mac(Oui oui, std::int32_t keep_room = 0);
  std::uint64_t fixed_iid_for(Strategy st, const AsSpec& as);
  std::uint64_t privacy_iid(std::uint64_t device, std::int64_t epoch) const;
  std::uint64_t slash64_for(std::uint64_t device, std::size_t as, std::int64_t epoch) const;
  std::size_t as_at(const Instance& in, std::int64_t t) const;
  std::vector<std::int64_t> draw_times(const Instance& in);
  void emit(const Instance& in);

  const ScenarioSpec& s_;
  std::mt19937_64 rng_;
  std::map<Asn, std::size_t> as_index_;
  std::unordered_set<std::uint64_t> used_macs_;
  std::vector<Instance> instances_;
  SyntheticCorpus out_;
  std::map<MacAddress, std::vector<TruthSighting>> mac_sightings_;
  std::map<Ipv6Address, std::size_t> address_as_;
};

MacAddress Generator::fresh_mac(Oui oui, std::int32_t keep_room) {
  // NICs are drawn so that NIC + keep_room stays inside the OUI.
  const std::int64_t lo = std::max<std::int64_t>(0, -std::int64_t{keep_room});
  const std::int64_t hi = (std::int64_t{1} << 24) - std::max<std::int64_t>(0, keep_room);
  while (true) {
    const auto nic = static_cast<std::uint32_t>(lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo)));
    const MacAddress mac = MacAddress::from_parts(oui, nic);
    if (used_macs_.insert(mac.bits()).second) return mac;
  }
}

std::uint64_t Generator::fixed_iid_for(Strategy st, const AsSpec& as) {
  switch (st) {
    case Strategy::LowByte: return 1 + rng_() % 255;
    case Strategy::Low2Bytes: return 0x100 + rng_() % (0x10000 - 0x100);
    case Strategy::Zeroes: return 0;
    case Strategy::Ipv4EmbeddedHexLow32:
    case Strategy::Ipv4EmbeddedDecimalHextets: {
      const Ipv4Prefix& p = as.v4_pool[rng_() % as.v4_pool.size()];
      const std::uint64_t span = std::uint64_t{1} << (32 - p.length());
      std::uint32_t v4 = p.base().bits() + static_cast<std::uint32_t>(rng_() % span);
      if (v4 < 0x01000000u) v4 |= 0x01000000u;  // keep clear of the structural range
      if (st == Strategy::Ipv4EmbeddedHexLow32) return v4;
      std::uint64_t iid = 0;
      for (int k = 3; k >= 0; --k) {
        const unsigned octet = (v4 >> (8 * k)) & 0xff;
        // Decimal digits written as hex nibbles: 192 -> 0x192.
        const std::uint64_t hextet = ((octet / 100) << 8) | (((octet / 10) % 10) << 4) | (octet % 10);
        iid = (iid << 16) | hextet;
      }
      return iid;
    }
    default: return 0;
  }
}

std::uint64_t Generator::privacy_iid(std::uint64_t device, std::int64_t epoch) const {
  std::mt19937_64 r(mix64(s_.seed ^ mix64(device * 0x100000001B3ull + static_cast<std::uint64_t>(epoch))));
  while (true) {
    const std::uint64_t iid = r();
    // Unambiguous by construction: clearly high entropy, no accidental FF:FE.
    if (((iid >> 24) & 0xFFFF) == 0xFFFE) continue;
    if (truth_entropy(iid) < 0.76) continue;
    return iid;
  }
}

std::uint64_t Generator::slash64_for(std::uint64_t device, std::size_t as, std::int64_t epoch) const {
  const AsSpec& spec = s_.ases[as];
  const std::uint64_t h = mix64(mix64(s_.seed ^ 0x5EEDull) ^ mix64(device) ^
                                mix64((std::uint64_t{spec.asn.value} << 32) ^ static_cast<std::uint64_t>(epoch)));
  const Prefix& pool = spec.v6_pool[h % spec.v6_pool.size()];
  const int free_bits = 64 - pool.length();
  const std::uint64_t sub = free_bits == 0 ? 0 : (mix64(h) & (free_bits == 64 ? ~0ull : ((1ull << free_bits) - 1)));
  return pool.base().high64() | sub;
}

std::size_t Generator::as_at(const Instance& in, std::int64_t t) const {
  if (!in.mobility) return in.home;
  std::int64_t phase = t - s_.start;
  if (in.mobility->repeat) phase %= *in.mobility->repeat;
  std::size_t pick = 0;
  for (std::size_t i = 0; i < in.mobility->schedule.size(); ++i) {
    if (in.mobility->schedule[i].at <= phase) pick = i;
  }
  return as_index_.at(in.mobility->schedule[pick].asn);
}

std::vector<std::int64_t> Generator::draw_times(const Instance& in) {
  std::vector<std::int64_t> times;
  const auto span = static_cast<std::uint64_t>(s_.duration);
  if (in.singleton) {
    times.push_back(s_.start + static_cast<std::int64_t>(rng_() % span));
    return times;
  }
  const auto period = in.sighting_period ? in.sighting_period : s_.sighting_period;
  if (period) {
    for (std::int64_t t = s_.start; t < s_.start + s_.duration; t += *period) times.push_back(t);
    return times;
  }
  std::poisson_distribution<std::uint64_t> count(s_.sighting_rate * static_cast<double>(s_.duration) / 86400.0);
  const std::uint64_t n = count(rng_);
  for (std::uint64_t k = 0; k < n; ++k) times.push_back(s_.start + static_cast<std::int64_t>(rng_() % span));
  std::sort(times.begin(), times.end());
  return times;
}

void Generator::emit(const Instance& in) {
  const std::vector<std::int64_t> times = draw_times(in);
  out_.truth.sighting_draws += times.size();
  out_.truth.devices.push_back(
      DeviceTruth{in.device, in.strategy, s_.ases[in.home].asn, in.mac, times.size()});
  if (in.singleton) ++out_.truth.singleton_devices;
  for (std::int64_t t : times) {
    const std::size_t as = as_at(in, t);
    const AsSpec& spec = s_.ases[as];
    const std::int64_t epoch = spec.rotation_period ? (t - s_.start) / *spec.rotation_period : 0;
    const std::uint64_t net = slash64_for(in.device, as, epoch);
    std::uint64_t iid = in.fixed_iid;
    if (in.strategy == Strategy::Eui64Slaac) {
      iid = embed_mac(*in.mac).bits;
      mac_sightings_[*in.mac].push_back({t, net, spec.asn.value, spec.country.str()});
    } else if (in.strategy == Strategy::RandomPrivacy) {
      iid = privacy_iid(in.device, (t - s_.start) / s_.privacy_period);
    }
    const Ipv6Address addr = Ipv6Address::from_halves(net, iid);
    address_as_.emplace(addr, as);
    out_.observations.push_back(
        Observation{t, addr, "vp" + std::to_string(mix64(in.device ^ static_cast<std::uint64_t>(t)) % 4)});
  }
}

SyntheticCorpus Generator::run() {
  validate_scenario(s_);
  std::uint64_t next_id = 0;

  // Population devices, with exact per-strategy counts (largest remainder).
  for (std::size_t a = 0; a < s_.ases.size(); ++a) {
    const AsSpec& as = s_.ases[a];
    std::vector<std::uint64_t> counts(as.strategies.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::uint64_t assigned = 0;
    for (std::size_t k = 0; k < as.strategies.size(); ++k) {
      const double exact = as.strategies[k].second * static_cast<double>(as.devices);
      counts[k] = static_cast<std::uint64_t>(std::floor(exact + 1e-9));
      assigned += counts[k];
      remainders.emplace_back(exact - static_cast<double>(counts[k]), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (std::size_t r = 0; assigned < as.devices && r < remainders.size(); ++r, ++assigned) {
      ++counts[remainders[r].second];
    }
    std::vector<bool> singleton(as.devices, false);
    const auto n_single = static_cast<std::uint64_t>(std::llround(s_.singleton_fraction * static_cast<double>(as.devices)));
    std::fill(singleton.begin(), singleton.begin() + static_cast<std::ptrdiff_t>(n_single), true);
    std::shuffle(singleton.begin(), singleton.end(), rng_);

    std::uint64_t j = 0;
    for (std::size_t k = 0; k < as.strategies.size(); ++k) {
      for (std::uint64_t c = 0; c < counts[k]; ++c, ++j) {
        Instance in;
        in.device = next_id++;
        in.strategy = as.strategies[k].first;
        in.home = a;
        in.singleton = singleton[j];
        if (in.strategy == Strategy::Eui64Slaac) {
          const Oui oui = as.ouis.empty() ? kDefaultOui : as.ouis[rng_() % as.ouis.size()];
          in.mac = fresh_mac(oui);
        } else {
          in.fixed_iid = fixed_iid_for(in.strategy, as);
        }
        instances_.push_back(in);
      }
    }
  }

  // Geolocatable devices: BSSID = MAC + offset in the same OUI.
  std::vector<std::pair<MacAddress, const GeoSpec*>> geo_devices;
  for (const auto& g : s_.geo) {
    for (std::uint64_t c = 0; c < g.devices; ++c) {
      Instance in;
      in.device = next_id++;
      in.strategy = Strategy::Eui64Slaac;
      in.home = as_index_.at(g.asn);
      in.mac = fresh_mac(g.oui, g.offset);
      geo_devices.emplace_back(*in.mac, &g);
      instances_.push_back(in);
    }
    out_.truth.offsets[g.oui] = g.offset;
  }

  for (const auto& m : s_.mobility) {
    for (std::uint64_t c = 0; c < m.count; ++c) {
      Instance in;
      in.device = next_id++;
      in.strategy = Strategy::Eui64Slaac;
      in.home = as_index_.at(m.schedule.front().asn);
      in.mac = fresh_mac(m.oui.value_or(kDefaultOui));
      in.mobility = &m;
      in.sighting_period = m.sighting_period;
      instances_.push_back(in);
    }
  }

  for (const auto& r : s_.mac_reuse) {
    for (std::uint64_t c = 0; c < r.count; ++c) {
      const MacAddress shared = fresh_mac(r.oui.value_or(kDefaultOui));
      for (const auto& asn : r.ases) {
        Instance in;
        in.device = next_id++;
        in.strategy = Strategy::Eui64Slaac;
        in.home = as_index_.at(asn);
        in.mac = shared;
        in.sighting_period = r.sighting_period;
        instances_.push_back(in);
      }
    }
  }

  for (const auto& in : instances_) emit(in);

  std::sort(out_.observations.begin(), out_.observations.end(),
            [](const Observation& a, const Observation& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              if (a.addr != b.addr) return a.addr < b.addr;
              return a.vantage < b.vantage;
            });

  GroundTruth& truth = out_.truth;

  // Address categories, with the per-AS IPv4 acceptance rule applied on integers.
  std::map<std::size_t, std::uint64_t> as_total;
  std::map<std::size_t, std::vector<Ipv6Address>> as_consistent;
  for (const auto& [addr, as] : address_as_) {
    ++as_total[as];
    const std::uint64_t iid = addr.low64();
    if (iid <= 0xffff) continue;
    for (std::uint32_t v4 : truth_embeddings(iid)) {
      if (truth_in_pool(v4, s_.ases[as].v4_pool)) {
        as_consistent[as].push_back(addr);
        break;
      }
    }
  }
  std::set<Ipv6Address> accepted;
  for (const auto& [as, list] : as_consistent) {
    const std::uint64_t n = list.size();
    const bool ok = n >= 100 && n * 10 > as_total[as];
    truth.ipv4_accepted[s_.ases[as].asn] = ok;
    if (ok) accepted.insert(list.begin(), list.end());
  }
  for (const auto& [addr, as] : address_as_) {
    truth.categories[addr] = truth_category(addr.low64(), accepted.contains(addr));
  }

  for (auto& [mac, sightings] : mac_sightings_) truth.macs[mac] = truth_track(std::move(sightings));

  // Aliased /64s are drawn from the /64s that actually carry clients.
  std::vector<std::uint64_t> nets;
  for (const auto& [addr, as] : address_as_) nets.push_back(addr.high64());
  std::sort(nets.begin(), nets.end());
  nets.erase(std::unique(nets.begin(), nets.end()), nets.end());
  std::shuffle(nets.begin(), nets.end(), rng_);
  if (nets.size() > s_.aliased_64s) nets.resize(s_.aliased_64s);
  const auto n_external = static_cast<std::size_t>(std::llround(s_.external_alias_coverage * static_cast<double>(nets.size())));
  for (std::size_t i = 0; i < nets.size(); ++i) {
    const Prefix p(Ipv6Address::from_halves(nets[i], 0), 64);
    truth.aliased_64s.push_back(p);
    if (i < n_external) truth.external_aliased.push_back(p);
  }
  std::sort(truth.aliased_64s.begin(), truth.aliased_64s.end());
  std::sort(truth.external_aliased.begin(), truth.external_aliased.end());

  // Country grid: one 10x20 degree cell per country.
  std::set<CountryCode> countries;
  for (const auto& a : s_.ases) countries.insert(a.country);
  std::map<CountryCode, std::array<double, 4>> boxes;
  std::size_t k = 0;
  for (const auto& cc : countries) {
    const double lat_min = -80.0 + 10.0 * static_cast<double>(k % 16);
    const double lon_min = -180.0 + 20.0 * static_cast<double>(k / 16);
    boxes[cc] = {lat_min, lon_min, lat_min + 10.0, lon_min + 20.0};
    char line[96];
    std::snprintf(line, sizeof line, "%.1f,%.1f,%.1f,%.1f,%s", lat_min, lon_min, lat_min + 10.0,
                  lon_min + 20.0, cc.str().c_str());
    out_.grid_lines.push_back(line);
    ++k;
  }
  auto coord_in = [&](const CountryCode& cc) {
    const auto& b = boxes.at(cc);
    const double lat = b[0] + 0.5 + unit_interval(rng_()) * 9.0;
    const double lon = b[1] + 0.5 + unit_interval(rng_()) * 19.0;
    // Round to the precision of the written CSV so truth and file agree.
    return std::pair{std::round(lat * 1e6) / 1e6, std::round(lon * 1e6) / 1e6};
  };

  std::unordered_set<std::uint64_t> bssids;
  for (const auto& [mac, g] : geo_devices) {
    const MacAddress bssid = MacAddress::from_parts(g->oui, static_cast<std::uint32_t>(static_cast<std::int64_t>(mac.nic()) + g->offset));
    const auto [lat, lon] = coord_in(s_.ases[as_index_.at(g->asn)].country);
    out_.geo.push_back(make_geo_bssid(bssid, lat, lon));
    bssids.insert(bssid.bits());
    truth.geolocated[mac] = GeoTruth{bssid, lat, lon};
  }
  // Decoys avoid every BSSID that some corpus MAC would map onto.
  for (const auto& g : s_.geo) {
    std::unordered_set<std::uint64_t> forbidden;
    for (std::uint64_t m : used_macs_) {
      const MacAddress mac(m);
      if (mac.oui() != g.oui) continue;
      const std::int64_t nic = static_cast<std::int64_t>(mac.nic()) + g.offset;
      if (nic >= 0 && nic < (1 << 24)) forbidden.insert(MacAddress::from_parts(g.oui, static_cast<std::uint32_t>(nic)).bits());
    }
    const auto decoys = static_cast<std::uint64_t>(std::llround(g.decoy_factor * static_cast<double>(g.devices)));
    const CountryCode cc = s_.ases[as_index_.at(g.asn)].country;
    for (std::uint64_t d = 0; d < decoys;) {
      const MacAddress b = MacAddress::from_parts(g.oui, static_cast<std::uint32_t>(rng_() & 0xFFFFFF));
      if (forbidden.contains(b.bits()) || !bssids.insert(b.bits()).second) continue;
      const auto [lat, lon] = coord_in(cc);
      out_.geo.push_back(make_geo_bssid(b, lat, lon));
      ++d;
    }
  }

  for (const auto& a : s_.ases) {
    for (const auto& p : a.v6_pool) {
      out_.asn_lines.push_back(to_string(p) + " " + to_string(a.asn));
      out_.country_lines.push_back(to_string(p) + "," + a.country.str());
    }
    for (const auto& p : a.v4_pool) {
      out_.asn_lines.push_back(to_string(p) + " " + to_string(a.asn));
      out_.country_lines.push_back(to_string(p) + "," + a.country.str());
    }
  }
  out_.vendors = s_.vendors;
  return std::move(out_);
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines,
                 const char* header = nullptr) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  if (header) out << header << '\n';
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

SyntheticCorpus generate_corpus(const ScenarioSpec& scenario) {
  return Generator(scenario).run();
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "observations.csv", std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write observations in '" + dir.string() + "'");
    for (const auto& o : corpus.observations) out << format_observation(o) << '\n';
  }
  write_lines(dir / "asn.txt", corpus.asn_lines);
  write_lines(dir / "country.csv", corpus.country_lines, "prefix,iso2");
  write_lines(dir / "country_grid.csv", corpus.grid_lines, "lat_min,lon_min,lat_max,lon_max,iso2");
  {
    std::vector<std::string> lines{"# aliased prefixes (external list)"};
    for (const auto& p : corpus.truth.external_aliased) lines.push_back(to_string(p));
    write_lines(dir / "alias_list.txt", lines);
    lines = {"# planted aliased /64s"};
    for (const auto& p : corpus.truth.aliased_64s) lines.push_back(to_string(p));
    write_lines(dir / "aliased_truth.txt", lines);
  }
  {
    std::ofstream out(dir / "geo.csv", std::ios::trunc);
    write_geo_csv(out, corpus.geo);
  }
  {
    std::ofstream out(dir / "oui.csv", std::ios::trunc);
    out << "Registry,Assignment,Organization Name,Organization Address\n";
    for (const auto& v : corpus.vendors) {
      std::string hex = to_string(v.oui);
      hex.erase(std::remove(hex.begin(), hex.end(), ':'), hex.end());
      for (auto& c : hex) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      out << "MA-L," << hex << ",\"" << v.name << "\",\"\"\n";
    }
  }
  const GroundTruth& t = corpus.truth;
  {
    std::ofstream out(dir / "gt_addresses.csv", std::ios::trunc);
    out << "address,category\n";
    for (const auto& [addr, c] : t.categories) out << to_string(addr) << ',' << to_string(c) << '\n';
  }
  {
    std::ofstream out(dir / "gt_macs.csv", std::ios::trunc);
    out << "mac,class,as_count,country_count,transitions,prefix64_count\n";
    for (const auto& [mac, m] : t.macs) {
      out << to_string(mac) << ',' << to_string(m.track_class) << ',' << m.features.as_count << ','
          << m.features.country_count << ',' << m.features.transitions << ','
          << m.features.prefix64_count << '\n';
    }
  }
  {
    std::ofstream out(dir / "gt_geo.csv", std::ios::trunc);
    out << "mac,bssid,lat,lon\n";
    char buf[64];
    for (const auto& [mac, g] : t.geolocated) {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f", g.lat, g.lon);
      out << to_string(mac) << ',' << to_string(g.bssid) << ',' << buf << '\n';
    }
  }
  nlohmann::json j;
  j["observations"] = corpus.observations.size();
  j["sighting_draws"] = t.sighting_draws;
  j["devices"] = t.devices.size();
  j["singleton_devices"] = t.singleton_devices;
  j["distinct_addresses"] = t.categories.size();
  j["eui64_macs"] = t.macs.size();
  j["aliased_64s"] = t.aliased_64s.size();
  j["external_aliased"] = t.external_aliased.size();
  j["offsets"] = nlohmann::json::object();
  for (const auto& [oui, off] : t.offsets) j["offsets"][to_string(oui)] = off;
  j["ipv4_accepted"] = nlohmann::json::object();
  for (const auto& [asn, ok] : t.ipv4_accepted) j["ipv4_accepted"][to_string(asn)] = ok;
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [mac, m] : t.macs) classes[std::string(to_string(m.track_class))] = classes.value(std::string(to_string(m.track_class)), 0) + 1;
  j["track_classes"] = classes;
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [addr, c] : t.categories) cats[std::string(to_string(c))] = cats.value(std::string(to_string(c)), 0) + 1;
  j["categories"] = cats;
  std::ofstream out(dir / "ground_truth.json", std::ios::trunc);
  out << j.dump(2) << '\n';
}

}  // namespace hitlist::synth
