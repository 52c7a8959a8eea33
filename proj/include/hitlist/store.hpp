#pragma once

// On-disk corpus store: a sorted, deduplicated flat index of 128-bit
// addresses (16 bytes big-endian each) with a JSON sidecar of counters.
// Ingestion spills sorted runs once its buffer fills and k-way merges them,
// so memory is bounded by the buffer, not by the stream.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hitlist/addr.hpp"
#include "hitlist/prefix_map.hpp"
#include "hitlist/tracking.hpp"

namespace hitlist {

namespace fs = std::filesystem;

struct IngestOptions {
  std::size_t max_buffer_addresses = std::size_t{1} << 22;  ///< 64 MiB of addresses
  bool keep_observations = true;       ///< copy valid lines to the store's observation log
  double max_malformed_fraction = 0.01;
};

struct StoreCounters {
  std::uint64_t lines = 0;
  std::uint64_t observations = 0;
  std::uint64_t malformed = 0;
  std::uint64_t unique_addresses = 0;
  std::uint64_t unique_48s = 0;
  std::uint64_t unique_64s = 0;
  std::uint64_t runs = 0;           ///< sorted runs spilled during ingest
  std::uint64_t peak_buffered = 0;  ///< largest in-memory address buffer
  std::optional<std::int64_t> first_seen;
  std::optional<std::int64_t> last_seen;
};

/// Streams addresses out of an index file in ascending order.
class IndexReader {
 public:
  explicit IndexReader(const fs::path& path, std::size_t block = 4096);
  std::optional<Ipv6Address> next();

 private:
  std::ifstream in_;
  std::vector<unsigned char> buf_;
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
};

class IndexWriter {
 public:
  explicit IndexWriter(const fs::path& path);
  void write(Ipv6Address addr);
  void close();

 private:
  std::ofstream out_;
  std::vector<unsigned char> buf_;
};

class CorpusStore {
 public:
  /// Throws Error(Io) if the directory lacks an index or counters.
  static CorpusStore open(const fs::path& dir);

  const fs::path& dir() const { return dir_; }
  const StoreCounters& counters() const { return counters_; }
  fs::path index_path() const { return dir_ / "index.bin"; }
  fs::path observation_log_path() const { return dir_ / "observations.csv"; }
  bool has_observation_log() const;

  IndexReader reader() const { return IndexReader(index_path()); }
  void for_each_address(const std::function<void(Ipv6Address)>& fn) const;
  std::vector<Ipv6Address> load_addresses() const;
  void for_each_observation(const std::function<void(const Observation&)>& fn) const;

 private:
  CorpusStore(fs::path dir, StoreCounters counters)
      : dir_(std::move(dir)), counters_(std::move(counters)) {}
  friend class Ingestor;

  fs::path dir_;
  StoreCounters counters_;
};

class Ingestor {
 public:
  Ingestor(fs::path dir, IngestOptions options = {});
  ~Ingestor();
  Ingestor(const Ingestor&) = delete;
  Ingestor& operator=(const Ingestor&) = delete;

  /// One `unix_seconds,ipv6,vantage_id` line; malformed lines are counted and skipped.
  void feed_line(std::string_view line);
  void add(const Observation& obs);
  /// Merges runs and writes the index. Throws Error(Malformed) if too many lines were bad.
  CorpusStore finish();

 private:
  void add_address(std::int64_t timestamp, Ipv6Address addr);
  void spill();

  fs::path dir_;
  IngestOptions options_;
  std::vector<Ipv6Address> buffer_;
  std::vector<fs::path> runs_;
  std::ofstream log_;
  StoreCounters counters_;
  bool finished_ = false;
};

CorpusStore ingest(std::istream& log, const fs::path& dir, const IngestOptions& options = {});

struct ComparisonStats {
  std::string name;
  std::uint64_t addresses = 0;
  std::uint64_t asns = 0;
  std::uint64_t slash48s = 0;
  std::uint64_t common_addresses = 0;
  std::uint64_t common_asns = 0;
  std::uint64_t common_48s = 0;
};

struct SummaryReport {
  std::uint64_t addresses = 0;
  std::uint64_t asns = 0;
  std::uint64_t slash48s = 0;
  std::uint64_t slash64s = 0;
  double avg_addrs_per_48 = 0.0;
  std::uint64_t unattributed = 0;  ///< addresses without an ASN
  std::uint64_t no_country = 0;
  std::vector<std::pair<std::string, std::uint64_t>> top_countries;
  std::vector<ComparisonStats> comparisons;
};

SummaryReport summarize(const CorpusStore& store, const PrefixTable<Asn>& asmap,
                        const PrefixTable<CountryCode>& countrymap,
                        const std::vector<std::pair<std::string, const CorpusStore*>>& comparisons = {},
                        std::size_t top_n = 10);

std::string summary_json(const SummaryReport& report);

/// Writes the sorted distinct /48s of the store, one per line. Returns the line count.
std::uint64_t export_release(const CorpusStore& store, std::ostream& out);

struct ReleaseCheck {
  bool only_48s = true;        ///< every line is a /48 prefix with zero host bits
  bool sorted_unique = true;
  bool covers_all = true;      ///< every stored address is inside a listed /48
  bool leaks_address = false;  ///< some token parses as an address with nonzero low 80 bits
  std::uint64_t lines = 0;
};

ReleaseCheck verify_release(std::istream& release, const CorpusStore& store);

}  // namespace hitlist
