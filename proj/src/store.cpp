#include "hitlist/store.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <set>

#include "json.hpp"

#include "hitlist/csv.hpp"
#include "hitlist/error.hpp"

namespace hitlist {

namespace {

constexpr std::size_t kRecordSize = 16;

void encode(Ipv6Address a, unsigned char* out) {
  const uint128 v = a.bits();
  for (int i = 0; i < 16; ++i) out[i] = static_cast<unsigned char>(v >> (120 - 8 * i));
}

Ipv6Address decode(const unsigned char* in) {
  uint128 v = 0;
  for (int i = 0; i < 16; ++i) v = (v << 8) | in[i];
  return Ipv6Address(v);
}

// Writes a sorted stream while counting distinct addresses, /48s and /64s.
class CountingSink {
 public:
  explicit CountingSink(const fs::path& path) : writer_(path) {}

  void push(Ipv6Address a) {
    if (last_ && *last_ == a) return;
    const std::uint64_t hi = a.high64();
    if (!last_ || (last_->high64() >> 16) != (hi >> 16)) ++slash48s;
    if (!last_ || last_->high64() != hi) ++slash64s;
    ++unique;
    writer_.write(a);
    last_ = a;
  }

  void close() { writer_.close(); }

  std::uint64_t unique = 0;
  std::uint64_t slash48s = 0;
  std::uint64_t slash64s = 0;

 private:
  IndexWriter writer_;
  std::optional<Ipv6Address> last_;
};

nlohmann::json counters_to_json(const StoreCounters& c, bool has_log) {
  nlohmann::json j;
  j["index_format"] = "sorted-unique-128bit-be";
  j["lines"] = c.lines;
  j["observations"] = c.observations;
  j["malformed"] = c.malformed;
  j["unique_addresses"] = c.unique_addresses;
  j["unique_48s"] = c.unique_48s;
  j["unique_64s"] = c.unique_64s;
  j["runs"] = c.runs;
  j["peak_buffered"] = c.peak_buffered;
  j["first_seen"] = c.first_seen ? nlohmann::json(*c.first_seen) : nlohmann::json(nullptr);
  j["last_seen"] = c.last_seen ? nlohmann::json(*c.last_seen) : nlohmann::json(nullptr);
  j["observation_log"] = has_log ? nlohmann::json("observations.csv") : nlohmann::json(nullptr);
  return j;
}

StoreCounters counters_from_json(const nlohmann::json& j) {
  StoreCounters c;
  c.lines = j.at("lines").get<std::uint64_t>();
  c.observations = j.at("observations").get<std::uint64_t>();
  c.malformed = j.at("malformed").get<std::uint64_t>();
  c.unique_addresses = j.at("unique_addresses").get<std::uint64_t>();
  c.unique_48s = j.at("unique_48s").get<std::uint64_t>();
  c.unique_64s = j.at("unique_64s").get<std::uint64_t>();
  c.runs = j.value("runs", std::uint64_t{0});
  c.peak_buffered = j.value("peak_buffered", std::uint64_t{0});
  if (j.contains("first_seen") && !j["first_seen"].is_null()) c.first_seen = j["first_seen"].get<std::int64_t>();
  if (j.contains("last_seen") && !j["last_seen"].is_null()) c.last_seen = j["last_seen"].get<std::int64_t>();
  return c;
}

}  // namespace

IndexReader::IndexReader(const fs::path& path, std::size_t block)
    : in_(path, std::ios::binary), buf_(block * kRecordSize) {
  if (!in_) throw Error(ErrorKind::Io, "cannot open index '" + path.string() + "'");
}

std::optional<Ipv6Address> IndexReader::next() {
  if (pos_ == len_) {
    in_.read(reinterpret_cast<char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    len_ = static_cast<std::size_t>(in_.gcount());
    len_ -= len_ % kRecordSize;
    pos_ = 0;
    if (len_ == 0) return std::nullopt;
  }
  const Ipv6Address a = decode(buf_.data() + pos_);
  pos_ += kRecordSize;
  return a;
}

IndexWriter::IndexWriter(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error(ErrorKind::Io, "cannot write index '" + path.string() + "'");
  buf_.reserve(4096 * kRecordSize);
}

void IndexWriter::write(Ipv6Address addr) {
  const std::size_t at = buf_.size();
  buf_.resize(at + kRecordSize);
  encode(addr, buf_.data() + at);
  if (buf_.size() >= 4096 * kRecordSize) {
    out_.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
  }
}

void IndexWriter::close() {
  if (!buf_.empty()) {
    out_.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
  }
  out_.close();
  if (out_.fail()) throw Error(ErrorKind::Io, "failed writing index");
}

CorpusStore CorpusStore::open(const fs::path& dir) {
  const fs::path counters = dir / "counters.json";
  if (!fs::exists(dir / "index.bin") || !fs::exists(counters)) {
    throw Error(ErrorKind::Io, "'" + dir.string() + "' is not a corpus store");
  }
  std::ifstream in(counters);
  nlohmann::json j;
  try {
    in >> j;
    return CorpusStore(dir, counters_from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Malformed, "bad counters.json in '" + dir.string() + "': " + e.what());
  }
}

bool CorpusStore::has_observation_log() const { return fs::exists(observation_log_path()); }

void CorpusStore::for_each_address(const std::function<void(Ipv6Address)>& fn) const {
  IndexReader r = reader();
  while (auto a = r.next()) fn(*a);
}

std::vector<Ipv6Address> CorpusStore::load_addresses() const {
  std::vector<Ipv6Address> out;
  out.reserve(counters_.unique_addresses);
  for_each_address([&](Ipv6Address a) { out.push_back(a); });
  return out;
}

void CorpusStore::for_each_observation(const std::function<void(const Observation&)>& fn) const {
  std::ifstream in(observation_log_path());
  if (!in) throw Error(ErrorKind::Io, "store '" + dir_.string() + "' has no observation log");
  std::string line;
  while (std::getline(in, line)) {
    if (auto obs = parse_observation(line)) fn(*obs);
  }
}

Ingestor::Ingestor(fs::path dir, IngestOptions options)
    : dir_(std::move(dir)), options_(options) {
  if (options_.max_buffer_addresses == 0) {
    throw Error(ErrorKind::Argument, "ingest buffer must hold at least one address");
  }
  fs::create_directories(dir_);
  fs::remove(dir_ / "index.bin");
  fs::remove(dir_ / "counters.json");
  fs::remove_all(dir_ / "runs");
  if (options_.keep_observations) {
    log_.open(dir_ / "observations.csv", std::ios::trunc);
    if (!log_) throw Error(ErrorKind::Io, "cannot write observation log in '" + dir_.string() + "'");
  } else {
    fs::remove(dir_ / "observations.csv");
  }
  buffer_.reserve(std::min<std::size_t>(options_.max_buffer_addresses, std::size_t{1} << 20));
}

Ingestor::~Ingestor() {
  if (!finished_) {
    std::error_code ec;
    fs::remove_all(dir_ / "runs", ec);
  }
}

void Ingestor::feed_line(std::string_view line) {
  ++counters_.lines;
  auto obs = parse_observation(line);
  if (!obs) {
    ++counters_.malformed;
    return;
  }
  if (options_.keep_observations) log_ << obs->timestamp << ',' << to_string(obs->addr) << ',' << obs->vantage << '\n';
  add_address(obs->timestamp, obs->addr);
}

void Ingestor::add(const Observation& obs) {
  ++counters_.lines;
  if (options_.keep_observations) log_ << format_observation(obs) << '\n';
  add_address(obs.timestamp, obs.addr);
}

void Ingestor::add_address(std::int64_t timestamp, Ipv6Address addr) {
  ++counters_.observations;
  counters_.first_seen = std::min(counters_.first_seen.value_or(timestamp), timestamp);
  counters_.last_seen = std::max(counters_.last_seen.value_or(timestamp), timestamp);
  buffer_.push_back(addr);
  counters_.peak_buffered = std::max<std::uint64_t>(counters_.peak_buffered, buffer_.size());
  if (buffer_.size() >= options_.max_buffer_addresses) spill();
}

void Ingestor::spill() {
  std::sort(buffer_.begin(), buffer_.end());
  buffer_.erase(std::unique(buffer_.begin(), buffer_.end()), buffer_.end());
  fs::create_directories(dir_ / "runs");
  const fs::path path = dir_ / "runs" / ("run_" + std::to_string(runs_.size()) + ".bin");
  IndexWriter w(path);
  for (const auto& a : buffer_) w.write(a);
  w.close();
  runs_.push_back(path);
  ++counters_.runs;
  buffer_.clear();
}

CorpusStore Ingestor::finish() {
  if (finished_) throw Error(ErrorKind::Argument, "ingest already finished");
  finished_ = true;
  if (log_.is_open()) log_.close();
  if (counters_.lines > 0 &&
      static_cast<double>(counters_.malformed) >
          options_.max_malformed_fraction * static_cast<double>(counters_.lines)) {
    fs::remove_all(dir_ / "runs");
    throw Error(ErrorKind::Malformed,
                std::to_string(counters_.malformed) + " of " + std::to_string(counters_.lines) +
                    " lines malformed (limit " +
                    std::to_string(options_.max_malformed_fraction * 100.0) + "%)");
  }

  CountingSink sink(dir_ / "index.bin");
  if (runs_.empty()) {
    std::sort(buffer_.begin(), buffer_.end());
    for (const auto& a : buffer_) sink.push(a);
  } else {
    if (!buffer_.empty()) spill();
    std::vector<IndexReader> readers;
    readers.reserve(runs_.size());
    for (const auto& r : runs_) readers.emplace_back(r);
    using Head = std::pair<Ipv6Address, std::size_t>;
    std::priority_queue<Head, std::vector<Head>, std::greater<>> heap;
    for (std::size_t i = 0; i < readers.size(); ++i) {
      if (auto a = readers[i].next()) heap.emplace(*a, i);
    }
    while (!heap.empty()) {
      auto [addr, i] = heap.top();
      heap.pop();
      sink.push(addr);
      if (auto a = readers[i].next()) heap.emplace(*a, i);
    }
  }
  sink.close();
  buffer_.clear();
  buffer_.shrink_to_fit();
  fs::remove_all(dir_ / "runs");

  counters_.unique_addresses = sink.unique;
  counters_.unique_48s = sink.slash48s;
  counters_.unique_64s = sink.slash64s;
  std::ofstream out(dir_ / "counters.json", std::ios::trunc);
  out << counters_to_json(counters_, options_.keep_observations).dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "cannot write counters in '" + dir_.string() + "'");
  return CorpusStore(dir_, counters_);
}

CorpusStore ingest(std::istream& log, const fs::path& dir, const IngestOptions& options) {
  Ingestor ingestor(dir, options);
  std::string line;
  while (std::getline(log, line)) {
    if (csv::trim(line).empty()) continue;
    ingestor.feed_line(line);
  }
  return ingestor.finish();
}

namespace {

struct StoreScan {
  std::uint64_t addresses = 0;
  std::uint64_t slash48s = 0;
  std::set<Asn> asns;
};

StoreScan scan_store(const CorpusStore& store, const PrefixTable<Asn>& asmap) {
  StoreScan s;
  std::optional<std::uint64_t> last48;
  store.for_each_address([&](Ipv6Address a) {
    ++s.addresses;
    const std::uint64_t p48 = a.high64() >> 16;
    if (!last48 || *last48 != p48) ++s.slash48s;
    last48 = p48;
    if (auto asn = asmap.lookup_longest(a)) s.asns.insert(*asn);
  });
  return s;
}

// Merge-join of two ascending streams, counting equal keys once each.
template <class Key, class Next>
std::uint64_t count_common(Next&& next_a, Next&& next_b) {
  std::uint64_t common = 0;
  std::optional<Key> a = next_a();
  std::optional<Key> b = next_b();
  while (a && b) {
    if (*a < *b) {
      a = next_a();
    } else if (*b < *a) {
      b = next_b();
    } else {
      ++common;
      a = next_a();
      b = next_b();
    }
  }
  return common;
}

// Yields the distinct /48 keys of a sorted index.
class Slash48Stream {
 public:
  explicit Slash48Stream(const CorpusStore& store) : reader_(store.reader()) {}
  std::optional<std::uint64_t> operator()() {
    while (auto a = reader_.next()) {
      const std::uint64_t p = a->high64() >> 16;
      if (!last_ || *last_ != p) {
        last_ = p;
        return p;
      }
    }
    return std::nullopt;
  }

 private:
  IndexReader reader_;
  std::optional<std::uint64_t> last_;
};

}  // namespace

SummaryReport summarize(const CorpusStore& store, const PrefixTable<Asn>& asmap,
                        const PrefixTable<CountryCode>& countrymap,
                        const std::vector<std::pair<std::string, const CorpusStore*>>& comparisons,
                        std::size_t top_n) {
  SummaryReport rep;
  std::set<Asn> asns;
  std::map<CountryCode, std::uint64_t> countries;
  std::optional<std::uint64_t> last48;
  std::optional<std::uint64_t> last64;
  store.for_each_address([&](Ipv6Address a) {
    ++rep.addresses;
    const std::uint64_t hi = a.high64();
    if (!last48 || *last48 != (hi >> 16)) ++rep.slash48s;
    if (!last64 || *last64 != hi) ++rep.slash64s;
    last48 = hi >> 16;
    last64 = hi;
    if (auto asn = asmap.lookup_longest(a)) {
      asns.insert(*asn);
    } else {
      ++rep.unattributed;
    }
    if (auto cc = countrymap.lookup_longest(a)) {
      ++countries[*cc];
    } else {
      ++rep.no_country;
    }
  });
  rep.asns = asns.size();
  rep.avg_addrs_per_48 =
      rep.slash48s == 0 ? 0.0 : static_cast<double>(rep.addresses) / static_cast<double>(rep.slash48s);

  std::vector<std::pair<std::string, std::uint64_t>> ranked;
  for (const auto& [cc, n] : countries) ranked.emplace_back(cc.str(), n);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top_n) ranked.resize(top_n);
  rep.top_countries = std::move(ranked);

  for (const auto& [name, other] : comparisons) {
    ComparisonStats cs;
    cs.name = name;
    const StoreScan scan = scan_store(*other, asmap);
    cs.addresses = scan.addresses;
    cs.slash48s = scan.slash48s;
    cs.asns = scan.asns.size();
    {
      IndexReader ra = store.reader();
      IndexReader rb = other->reader();
      std::function<std::optional<Ipv6Address>()> na = [&] { return ra.next(); };
      std::function<std::optional<Ipv6Address>()> nb = [&] { return rb.next(); };
      cs.common_addresses = count_common<Ipv6Address>(na, nb);
    }
    {
      Slash48Stream sa(store);
      Slash48Stream sb(*other);
      std::function<std::optional<std::uint64_t>()> na = [&] { return sa(); };
      std::function<std::optional<std::uint64_t>()> nb = [&] { return sb(); };
      cs.common_48s = count_common<std::uint64_t>(na, nb);
    }
    std::vector<Asn> both;
    std::set_intersection(asns.begin(), asns.end(), scan.asns.begin(), scan.asns.end(),
                          std::back_inserter(both));
    cs.common_asns = both.size();
    rep.comparisons.push_back(cs);
  }
  return rep;
}

std::string summary_json(const SummaryReport& r) {
  nlohmann::json j;
  j["addresses"] = r.addresses;
  j["asns"] = r.asns;
  j["slash48s"] = r.slash48s;
  j["slash64s"] = r.slash64s;
  j["avg_addrs_per_48"] = r.avg_addrs_per_48;
  j["avg_addrs_per_48_rounded"] = static_cast<std::uint64_t>(std::llround(r.avg_addrs_per_48));
  j["unattributed"] = r.unattributed;
  j["no_country"] = r.no_country;
  j["top_countries"] = nlohmann::json::array();
  for (const auto& [cc, n] : r.top_countries) {
    j["top_countries"].push_back({{"country", cc}, {"addresses", n}});
  }
  j["comparisons"] = nlohmann::json::array();
  for (const auto& c : r.comparisons) {
    j["comparisons"].push_back({{"name", c.name},
                                {"addresses", c.addresses},
                                {"asns", c.asns},
                                {"slash48s", c.slash48s},
                                {"common_addresses", c.common_addresses},
                                {"common_asns", c.common_asns},
                                {"common_48s", c.common_48s}});
  }
  return j.dump(2);
}

std::uint64_t export_release(const CorpusStore& store, std::ostream& out) {
  std::uint64_t lines = 0;
  Slash48Stream stream(store);
  while (auto p = stream()) {
    const Ipv6Address base(uint128{*p} << 80);
    out << to_string(Prefix(base, 48)) << '\n';
    ++lines;
  }
  return lines;
}

ReleaseCheck verify_release(std::istream& release, const CorpusStore& store) {
  ReleaseCheck check;
  std::vector<std::uint64_t> listed;
  std::string line;
  while (std::getline(release, line)) {
    const std::string_view view = csv::trim(line);
    if (view.empty()) continue;
    ++check.lines;
    for (auto token : csv::split_whitespace(view)) {
      const std::size_t slash = token.find('/');
      auto addr = try_parse_ipv6(token.substr(0, slash));
      if (!addr) {
        check.only_48s = false;
        continue;
      }
      if ((addr->bits() & ~high_mask128(48)) != 0) check.leaks_address = true;
      if (slash == std::string_view::npos || token.substr(slash + 1) != "48") {
        check.only_48s = false;
        continue;
      }
      const std::uint64_t key = addr->high64() >> 16;
      if (!listed.empty() && listed.back() >= key) check.sorted_unique = false;
      listed.push_back(key);
    }
  }
  std::sort(listed.begin(), listed.end());
  store.for_each_address([&](Ipv6Address a) {
    if (!std::binary_search(listed.begin(), listed.end(), a.high64() >> 16)) {
      check.covers_all = false;
    }
  });
  return check;
}

}  // namespace hitlist
