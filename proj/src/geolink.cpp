#include "hitlist/geolink.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "hitlist/csv.hpp"
#include "hitlist/error.hpp"

namespace hitlist {

namespace {

using Bins = std::vector<std::pair<std::int32_t, std::uint64_t>>;

// Sorts raw offsets and folds them into `acc` (both sorted by offset).
void fold_offsets(std::vector<std::int32_t>& raw, Bins& acc) {
  std::sort(raw.begin(), raw.end());
  Bins run;
  for (std::size_t i = 0; i < raw.size();) {
    std::size_t j = i;
    while (j < raw.size() && raw[j] == raw[i]) ++j;
    run.emplace_back(raw[i], j - i);
    i = j;
  }
  raw.clear();
  Bins merged;
  merged.reserve(acc.size() + run.size());
  std::size_t a = 0;
  std::size_t b = 0;
  while (a < acc.size() || b < run.size()) {
    if (b == run.size() || (a < acc.size() && acc[a].first < run[b].first)) {
      merged.push_back(acc[a++]);
    } else if (a == acc.size() || run[b].first < acc[a].first) {
      merged.push_back(run[b++]);
    } else {
      merged.emplace_back(acc[a].first, acc[a].second + run[b].second);
      ++a;
      ++b;
    }
  }
  acc = std::move(merged);
}

double parse_coord(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (...) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw Error(ErrorKind::Parse, "bad coordinate '" + text + "'");
  }
  return v;
}

}  // namespace

GeoBssid make_geo_bssid(MacAddress bssid, double lat, double lon) {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
    throw Error(ErrorKind::Argument, "coordinates out of range for " + to_string(bssid));
  }
  return GeoBssid{bssid, lat, lon};
}

OffsetHistogram::OffsetHistogram(Bins bins) : bins_(std::move(bins)) {
  std::sort(bins_.begin(), bins_.end());
}

std::uint64_t OffsetHistogram::count_at(std::int32_t offset) const {
  auto it = std::lower_bound(bins_.begin(), bins_.end(), offset,
                             [](const auto& bin, std::int32_t o) { return bin.first < o; });
  return it != bins_.end() && it->first == offset ? it->second : 0;
}

std::uint64_t OffsetHistogram::total() const {
  std::uint64_t n = 0;
  for (const auto& [o, c] : bins_) n += c;
  return n;
}

OffsetTally tally_offsets(std::span<const MacAddress> wired, std::span<const GeoBssid> geo,
                          Oui oui) {
  std::vector<std::int32_t> wired_nics;
  std::vector<std::int32_t> bssid_nics;
  for (const auto& m : wired) {
    if (m.oui() == oui) wired_nics.push_back(static_cast<std::int32_t>(m.nic()));
  }
  for (const auto& g : geo) {
    if (g.bssid.oui() == oui) bssid_nics.push_back(static_cast<std::int32_t>(g.bssid.nic()));
  }
  OffsetTally tally;
  tally.oui = oui;
  tally.pair_count = static_cast<std::uint64_t>(wired_nics.size()) * bssid_nics.size();

  // Raw offsets are folded in chunks so memory stays bounded by distinct offsets.
  constexpr std::size_t kChunk = std::size_t{1} << 22;
  Bins acc;
  std::vector<std::int32_t> raw;
  raw.reserve(std::min<std::uint64_t>(kChunk, tally.pair_count));
  for (std::int32_t w : wired_nics) {
    for (std::int32_t b : bssid_nics) {
      raw.push_back(b - w);
      if (raw.size() == kChunk) fold_offsets(raw, acc);
    }
  }
  if (!raw.empty()) fold_offsets(raw, acc);
  tally.histogram = OffsetHistogram(std::move(acc));
  return tally;
}

std::optional<OffsetModel> infer_offset(Oui oui, const OffsetHistogram& histogram,
                                        std::uint64_t pair_count, std::uint64_t min_pairs) {
  if (pair_count < min_pairs) return std::nullopt;
  std::optional<std::pair<std::int32_t, std::uint64_t>> best_pos;
  std::optional<std::pair<std::int32_t, std::uint64_t>> best_neg;
  // Bins ascend, so a strict '>' keeps the smallest positive on ties and the
  // walk from the top of the negatives keeps the one closest to zero.
  for (const auto& bin : histogram.bins()) {
    if (bin.first > 0 && (!best_pos || bin.second > best_pos->second)) best_pos = bin;
  }
  for (auto it = histogram.bins().rbegin(); it != histogram.bins().rend(); ++it) {
    if (it->first < 0 && (!best_neg || it->second > best_neg->second)) best_neg = *it;
  }
  std::optional<std::pair<std::int32_t, std::uint64_t>> chosen;
  if (best_pos && best_neg) {
    if (best_pos->second != best_neg->second) {
      chosen = best_pos->second > best_neg->second ? best_pos : best_neg;
    } else if (best_pos->first != -best_neg->first) {
      chosen = best_pos->first < -best_neg->first ? best_pos : best_neg;
    } else {
      chosen = best_pos;
    }
  } else {
    chosen = best_pos ? best_pos : best_neg;
  }
  if (!chosen) return std::nullopt;
  if (chosen->second > pair_count) {
    throw Error(ErrorKind::Validation, "offset support exceeds the evaluated pair count");
  }
  return OffsetModel{oui, chosen->first, chosen->second, pair_count};
}

std::vector<OffsetModel> infer_models(std::span<const MacAddress> wired,
                                      std::span<const GeoBssid> geo, std::uint64_t min_pairs) {
  std::map<Oui, std::vector<MacAddress>> wired_by_oui;
  std::map<Oui, std::vector<GeoBssid>> geo_by_oui;
  for (const auto& m : wired) wired_by_oui[m.oui()].push_back(m);
  for (const auto& g : geo) geo_by_oui[g.bssid.oui()].push_back(g);
  std::vector<OffsetModel> models;
  for (const auto& [oui, macs] : wired_by_oui) {
    auto g = geo_by_oui.find(oui);
    if (g == geo_by_oui.end()) continue;
    const OffsetTally tally = tally_offsets(macs, g->second, oui);
    if (auto model = infer_offset(oui, tally.histogram, tally.pair_count, min_pairs)) {
      models.push_back(*model);
    }
  }
  return models;
}

std::optional<MacAddress> apply_offset(MacAddress mac, const OffsetModel& model) {
  if (mac.oui() != model.oui) {
    throw Error(ErrorKind::Argument, "MAC " + to_string(mac) + " is not in OUI " +
                                         to_string(model.oui));
  }
  const std::int64_t nic = static_cast<std::int64_t>(mac.nic()) + model.offset;
  if (nic < 0 || nic >= (std::int64_t{1} << 24)) return std::nullopt;
  return MacAddress::from_parts(model.oui, static_cast<std::uint32_t>(nic));
}

std::optional<CountryCode> CountryGrid::lookup(double lat, double lon) const {
  for (const auto& c : cells_) {
    const bool lat_in = lat >= c.lat_min && (lat < c.lat_max || (c.lat_max >= 90.0 && lat <= 90.0));
    const bool lon_in =
        lon >= c.lon_min && (lon < c.lon_max || (c.lon_max >= 180.0 && lon <= 180.0));
    if (lat_in && lon_in) return c.country;
  }
  return std::nullopt;
}

CountryGrid read_country_grid(std::istream& in) {
  CountryGrid grid;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = csv::trim(line);
    if (view.empty() || view.front() == '#' || (line_no == 1 && view.starts_with("lat_min"))) {
      continue;
    }
    auto f = csv::split_record(view);
    if (f.size() != 5) {
      throw Error(ErrorKind::Malformed, "grid line " + std::to_string(line_no) +
                                            ": expected lat_min,lon_min,lat_max,lon_max,iso2");
    }
    grid.add({parse_coord(f[0]), parse_coord(f[1]), parse_coord(f[2]), parse_coord(f[3]),
              parse_country(f[4])});
  }
  return grid;
}

Geolocation geolocate_corpus(std::span<const MacAddress> macs, std::span<const GeoBssid> geo,
                             std::span<const OffsetModel> models, const CountryGrid* grid) {
  std::unordered_map<std::uint64_t, const GeoBssid*> by_bssid;
  by_bssid.reserve(geo.size());
  for (const auto& g : geo) by_bssid.try_emplace(g.bssid.bits(), &g);
  std::map<Oui, OffsetModel> model_by_oui;
  for (const auto& m : models) model_by_oui.emplace(m.oui, m);

  Geolocation out;
  for (const auto& mac : macs) {
    auto m = model_by_oui.find(mac.oui());
    if (m == model_by_oui.end()) continue;
    auto target = apply_offset(mac, m->second);
    if (!target) continue;
    auto hit = by_bssid.find(target->bits());
    if (hit == by_bssid.end()) continue;
    const GeoBssid& g = *hit->second;
    out.results.push_back({mac, g.bssid, g.lat, g.lon, m->second});
    if (grid) {
      if (auto cc = grid->lookup(g.lat, g.lon)) {
        ++out.per_country[*cc];
      } else {
        ++out.outside_grid;
      }
    }
  }
  return out;
}

std::vector<GeoBssid> read_geo_csv(std::istream& in) {
  std::vector<GeoBssid> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = csv::trim(line);
    if (view.empty() || (line_no == 1 && view.starts_with("bssid"))) continue;
    auto f = csv::split_record(view);
    if (f.size() != 3) {
      throw Error(ErrorKind::Malformed, "geo line " + std::to_string(line_no) +
                                            ": expected bssid,lat,lon");
    }
    try {
      out.push_back(make_geo_bssid(parse_mac(f[0]), parse_coord(f[1]), parse_coord(f[2])));
    } catch (const Error& e) {
      throw Error(ErrorKind::Malformed, "geo line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_geo_csv(std::ostream& out, std::span<const GeoBssid> geo) {
  out << "bssid,lat,lon\n";
  char buf[64];
  for (const auto& g : geo) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", g.lat, g.lon);
    out << to_string(g.bssid) << ',' << buf << '\n';
  }
}

void write_models_csv(std::ostream& out, std::span<const OffsetModel> models) {
  out << "oui,offset,support,pair_count\n";
  for (const auto& m : models) {
    out << to_string(m.oui) << ',' << m.offset << ',' << m.support << ',' << m.pair_count << '\n';
  }
}

std::vector<OffsetModel> read_models_csv(std::istream& in) {
  std::vector<OffsetModel> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = csv::trim(line);
    if (view.empty() || (line_no == 1 && view.starts_with("oui"))) continue;
    auto f = csv::split_record(view);
    if (f.size() != 4) {
      throw Error(ErrorKind::Malformed, "model line " + std::to_string(line_no) +
                                            ": expected oui,offset,support,pair_count");
    }
    try {
      const long long offset = std::stoll(f[1]);
      if (offset <= -(1LL << 24) || offset >= (1LL << 24)) {
        throw Error(ErrorKind::Malformed, "offset out of range");
      }
      out.push_back({parse_oui(f[0]), static_cast<std::int32_t>(offset), std::stoull(f[2]),
                     std::stoull(f[3])});
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error(ErrorKind::Malformed, "model line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

void write_results_csv(std::ostream& out, std::span<const GeoResult> results) {
  out << "mac,bssid,lat,lon,oui,offset\n";
  char buf[64];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.lat, r.lon);
    out << to_string(r.mac) << ',' << to_string(r.matched_bssid) << ',' << buf << ','
        << to_string(r.model.oui) << ',' << r.model.offset << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const OffsetHistogram& histogram) {
  out << "offset,count\n";
  for (const auto& [o, c] : histogram.bins()) out << o << ',' << c << '\n';
}

}  // namespace hitlist
