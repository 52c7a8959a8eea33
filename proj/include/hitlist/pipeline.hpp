#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hitlist/classify.hpp"
#include "hitlist/store.hpp"

namespace hitlist {

struct PipelineStages {
  bool classify = true;
  bool eui64 = true;
  bool tracking = true;
  bool alias = true;
  bool geolink = true;
  bool summarize = true;
  bool release = true;
};

struct PipelineInputs {
  std::optional<fs::path> observations;
  std::optional<fs::path> asn_table;
  std::optional<fs::path> country_table;
  std::optional<fs::path> oui_db;
  std::optional<fs::path> alias_list;  ///< external aliased-prefix list for comparison
  std::optional<fs::path> aliased;     ///< prefixes the mock responder treats as aliased
  std::optional<fs::path> geo;
  std::optional<fs::path> country_grid;
};

struct ComparisonInput {
  std::string name;
  fs::path observations;
};

struct PipelineConfig {
  fs::path out_dir = "out";
  PipelineInputs inputs;
  PipelineStages stages;
  std::vector<ComparisonInput> comparisons;
  std::uint64_t seed = 1;
  std::int64_t interval_seconds = 600;
  std::uint64_t min_pairs = 500;
  Ipv4Thresholds thresholds;
  double client_rate = 0.5;  ///< mock responder
  double random_rate = 0.0;
  std::size_t top_n = 10;
  IngestOptions ingest;
};

/// Relative paths resolve against `base`.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const fs::path& base = {});
PipelineConfig load_pipeline_config(const fs::path& path);

/// Throws ErrorKind::Config naming the first stage whose input is missing.
void check_pipeline_inputs(const PipelineConfig& config);

struct PipelineReport {
  StoreCounters counters;
  std::vector<fs::path> written;  ///< every report file, in the order produced
};

PipelineReport run_pipeline(const PipelineConfig& config);

}  // namespace hitlist
