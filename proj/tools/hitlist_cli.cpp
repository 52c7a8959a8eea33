// hitlist: command-line front end for the toolkit.
#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "hitlist/alias.hpp"
#include "hitlist/classify.hpp"
#include "hitlist/csv.hpp"
#include "hitlist/error.hpp"
#include "hitlist/eui64.hpp"
#include "hitlist/geolink.hpp"
#include "hitlist/pipeline.hpp"
#include "hitlist/store.hpp"
#include "hitlist/synth.hpp"
#include "hitlist/tracking.hpp"

namespace fs = std::filesystem;
using namespace hitlist;

namespace {

// Per-run knobs. A --config file supplies defaults; flags win.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> interval_seconds;
  std::optional<std::uint64_t> min_pairs;
  std::optional<std::uint64_t> threshold_count;
  std::optional<double> threshold_frac;
  std::string config;
};

struct Knobs {
  std::uint64_t seed = 1;
  std::int64_t interval_seconds = kDefaultIntervalSeconds;
  std::uint64_t min_pairs = kDefaultMinPairs;
  Ipv4Thresholds thresholds;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, "config '" + path + "': " + e.what());
  }
}

Knobs resolve(const Overrides& o) {
  Knobs k;
  if (!o.config.empty()) {
    const nlohmann::json j = read_json(o.config);
    k.seed = j.value("seed", k.seed);
    k.interval_seconds = j.value("interval_seconds", k.interval_seconds);
    k.min_pairs = j.value("min_pairs", k.min_pairs);
    k.thresholds.min_count = j.value("threshold_count", k.thresholds.min_count);
    k.thresholds.min_fraction = j.value("threshold_frac", k.thresholds.min_fraction);
  }
  if (o.seed) k.seed = *o.seed;
  if (o.interval_seconds) k.interval_seconds = *o.interval_seconds;
  if (o.min_pairs) k.min_pairs = *o.min_pairs;
  if (o.threshold_count) k.thresholds.min_count = *o.threshold_count;
  if (o.threshold_frac) k.thresholds.min_fraction = *o.threshold_frac;
  return k;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read '" + path + "'");
  return in;
}

// Writes to `path`, or stdout when the path is empty or "-".
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  fn(out);
}

std::vector<Observation> read_log(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<Observation> obs;
  std::string line;
  while (std::getline(in, line)) {
    if (auto o = parse_observation(csv::chomp(line))) obs.push_back(std::move(*o));
  }
  return obs;
}

std::vector<Ipv6Address> read_address_list(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<Ipv6Address> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string_view v = csv::trim(csv::chomp(line));
    if (v.empty() || v.front() == '#') continue;
    try {
      out.push_back(parse_ipv6(v));
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<MacAddress> store_macs(const CorpusStore& store) {
  std::set<MacAddress> macs;
  store.for_each_address([&](Ipv6Address a) {
    if (is_apparent_eui64(iid_of(a))) macs.insert(extract_mac(iid_of(a)));
  });
  return {macs.begin(), macs.end()};
}

std::vector<GeoBssid> load_geo(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_geo_csv(in);
}

void print_counters(const StoreCounters& c) {
  nlohmann::json j{{"lines", c.lines},
                   {"observations", c.observations},
                   {"malformed", c.malformed},
                   {"unique_addresses", c.unique_addresses},
                   {"unique_48s", c.unique_48s},
                   {"unique_64s", c.unique_64s},
                   {"runs", c.runs}};
  std::cout << j.dump(2) << '\n';
}

int fail(std::string_view kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IPv6 hitlist toolkit: ingest, classify, track, backscan and geolocate client addresses"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides ov;
  app.add_option("--config", ov.config, "JSON file with run defaults (seed, thresholds, ...)");
  app.add_option("--seed", ov.seed, "seed for randomized stages");
  app.add_option("--interval-seconds", ov.interval_seconds, "backscan dedup interval (default 600)");
  app.add_option("--min-pairs", ov.min_pairs, "minimum wired x BSSID pairs per OUI (default 500)");
  app.add_option("--threshold-count", ov.threshold_count, "IPv4-embedding count threshold (default 100)");
  app.add_option("--threshold-frac", ov.threshold_frac, "IPv4-embedding fraction threshold (default 0.10)");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  std::function<void()> action;

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Ingest an observation log into a deduplicated store");
  std::string log_path, store_dir;
  std::size_t buffer = IngestOptions{}.max_buffer_addresses;
  ingest_cmd->add_option("--log", log_path, "observation log (timestamp,address,vantage); - for stdin")->required();
  ingest_cmd->add_option("--store", store_dir, "store directory")->required();
  ingest_cmd->add_option("--buffer", buffer, "addresses buffered before spilling a sorted run");
  ingest_cmd->callback([&] {
    action = [&] {
      IngestOptions opts;
      opts.max_buffer_addresses = buffer;
      CorpusStore store = [&] {
        if (log_path == "-") return ingest(std::cin, store_dir, opts);
        std::ifstream in = open_in(log_path);
        return ingest(in, store_dir, opts);
      }();
      print_counters(store.counters());
    };
  });

  // summarize
  auto* sum_cmd = app.add_subcommand("summarize", "Dataset totals and comparison intersections");
  std::string asn_path, country_path, out_path;
  std::vector<std::string> compare;
  std::size_t top_n = 10;
  sum_cmd->add_option("--store", store_dir, "store directory")->required();
  sum_cmd->add_option("--asn", asn_path, "prefix-to-ASN table")->required();
  sum_cmd->add_option("--country", country_path, "prefix-to-country table")->required();
  sum_cmd->add_option("--compare", compare, "comparison store as NAME=DIR (repeatable)");
  sum_cmd->add_option("--top", top_n, "countries listed");
  sum_cmd->add_option("--out", out_path, "output JSON (default stdout)");
  sum_cmd->callback([&] {
    action = [&] {
      const CorpusStore store = CorpusStore::open(store_dir);
      std::vector<CorpusStore> others;
      std::vector<std::string> names;
      for (const auto& spec : compare) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Argument, "--compare expects NAME=DIR, got '" + spec + "'");
        names.push_back(spec.substr(0, eq));
        others.push_back(CorpusStore::open(spec.substr(eq + 1)));
      }
      std::vector<std::pair<std::string, const CorpusStore*>> refs;
      for (std::size_t i = 0; i < others.size(); ++i) refs.emplace_back(names[i], &others[i]);
      const auto report = summarize(store, load_asn_table(asn_path), load_country_table(country_path), refs, top_n);
      emit(out_path, [&](std::ostream& o) { o << summary_json(report) << '\n'; });
    };
  });

  // classify
  auto* cls_cmd = app.add_subcommand("classify", "Seven-category IID classification");
  std::string addresses_path, out_dir;
  auto* cls_src = cls_cmd->add_option_group("source");
  cls_src->add_option("--store", store_dir, "store directory");
  cls_src->add_option("--addresses", addresses_path, "one address per line");
  cls_src->require_option(1);
  cls_cmd->add_option("--asn", asn_path, "prefix-to-ASN table (IPv6 and IPv4)")->required();
  cls_cmd->add_option("--out", out_dir, "output directory")->required();
  cls_cmd->callback([&] {
    action = [&] {
      const Knobs k = resolve(ov);
      const std::vector<Ipv6Address> addrs =
          store_dir.empty() ? read_address_list(addresses_path) : CorpusStore::open(store_dir).load_addresses();
      const auto table = load_asn_table(asn_path);
      const auto cc = classify_corpus(addrs, table, table, k.thresholds);
      const auto dist = profile_distribution(addrs, cc.categories, cc.asns);
      fs::create_directories(out_dir);
      emit((fs::path(out_dir) / "categories_dataset.csv").string(),
           [&](std::ostream& o) { write_dataset_report(o, "corpus", dist.global); });
      emit((fs::path(out_dir) / "categories_as.csv").string(), [&](std::ostream& o) { write_as_report(o, dist); });
      emit((fs::path(out_dir) / "entropy_cdf.csv").string(), [&](std::ostream& o) { write_entropy_cdf(o, dist.global); });
      emit((fs::path(out_dir) / "addresses.csv").string(), [&](std::ostream& o) {
        o << "address,category\n";
        for (std::size_t i = 0; i < addrs.size(); ++i) o << to_string(addrs[i]) << ',' << to_string(cc.categories[i]) << '\n';
      });
    };
  });

  // eui64
  auto* eui_cmd = app.add_subcommand("eui64", "Extract embedded MACs and resolve vendors");
  std::string oui_path;
  auto* eui_src = eui_cmd->add_option_group("source");
  eui_src->add_option("--store", store_dir, "store directory");
  eui_src->add_option("--addresses", addresses_path, "one address per line");
  eui_src->require_option(1);
  eui_cmd->add_option("--oui-db", oui_path, "IEEE MA-L CSV");
  eui_cmd->add_option("--out", out_path, "output CSV (default stdout)");
  eui_cmd->callback([&] {
    action = [&] {
      const std::vector<Ipv6Address> addrs =
          store_dir.empty() ? read_address_list(addresses_path) : CorpusStore::open(store_dir).load_addresses();
      std::map<MacAddress, std::uint64_t> counts;
      for (const auto& a : addrs) {
        if (is_apparent_eui64(iid_of(a))) ++counts[extract_mac(iid_of(a))];
      }
      const OuiDatabase db = oui_path.empty() ? OuiDatabase{} : load_oui_csv(oui_path);
      std::vector<MacCount> rows;
      for (const auto& [m, n] : counts) rows.push_back({m, n});
      emit(out_path, [&](std::ostream& o) { write_mac_report(o, rows, db); });
    };
  });

  // track
  auto* track_cmd = app.add_subcommand("track", "Per-MAC timelines, track classes and lifetimes");
  std::string lifetime_key = "address", ccdf_path;
  track_cmd->add_option("--log", log_path, "observation log")->required();
  track_cmd->add_option("--asn", asn_path, "prefix-to-ASN table")->required();
  track_cmd->add_option("--country", country_path, "prefix-to-country table")->required();
  track_cmd->add_option("--out", out_path, "tracking CSV (default stdout)");
  track_cmd->add_option("--lifetime-key", lifetime_key, "address, iid or mac")
      ->check(CLI::IsMember({"address", "iid", "mac"}));
  track_cmd->add_option("--ccdf", ccdf_path, "write the lifetime CCDF here");
  track_cmd->callback([&] {
    action = [&] {
      const auto obs = read_log(log_path);
      const auto set = build_timelines(obs, load_asn_table(asn_path), load_country_table(country_path));
      emit(out_path, [&](std::ostream& o) { write_tracking_report(o, set); });
      if (!ccdf_path.empty()) {
        const auto tracker = lifetimes(obs, parse_lifetime_key(lifetime_key));
        const auto points = lifetime_ccdf(tracker);
        emit(ccdf_path, [&](std::ostream& o) { write_ccdf(o, points); });
      }
    };
  });

  // alias plan|infer|compare
  auto* alias_cmd = app.add_subcommand("alias", "Backscan planning and aliased-prefix inference");
  alias_cmd->require_subcommand(1);
  auto* plan_cmd = alias_cmd->add_subcommand("plan", "Targets for one dedup interval");
  std::int64_t interval_start = 0;
  plan_cmd->add_option("--log", log_path, "observation log")->required();
  plan_cmd->add_option("--interval-start", interval_start, "unix seconds; clients seen in [start, start+interval)")->required();
  plan_cmd->add_option("--out", out_path, "plan CSV (default stdout)");
  plan_cmd->callback([&] {
    action = [&] {
      const Knobs k = resolve(ov);
      std::vector<Ipv6Address> clients;
      for (const auto& o : read_log(log_path)) {
        if (o.timestamp >= interval_start && o.timestamp < interval_start + k.interval_seconds) clients.push_back(o.addr);
      }
      const ProbePlan plan = plan_interval(clients, interval_start, k.seed);
      emit(out_path, [&](std::ostream& o) { write_plan_csv(o, plan); });
    };
  });
  auto* infer_cmd = alias_cmd->add_subcommand("infer", "Verdicts from a plan and its responses");
  std::string plan_path, responses_path;
  infer_cmd->add_option("--plan", plan_path, "plan CSV")->required();
  infer_cmd->add_option("--responses", responses_path, "responses CSV (target,responded)")->required();
  infer_cmd->add_option("--out", out_path, "verdicts CSV (default stdout)");
  infer_cmd->callback([&] {
    action = [&] {
      std::ifstream pin = open_in(plan_path);
      const ProbePlan plan = read_plan_csv(pin);
      std::ifstream rin = open_in(responses_path);
      const auto responses = read_responses_csv(rin, plan);
      const AliasInference inf = infer_aliased(plan, responses);
      emit(out_path, [&](std::ostream& o) { write_verdicts_csv(o, inf.verdicts); });
      std::cerr << alias_summary_json(inf.summary, inf.verdicts.size(), std::nullopt) << '\n';
    };
  });
  auto* cmp_cmd = alias_cmd->add_subcommand("compare", "Compare verdicts with an external aliased list");
  std::string verdicts_path, list_path;
  cmp_cmd->add_option("--verdicts", verdicts_path, "verdicts CSV")->required();
  cmp_cmd->add_option("--list", list_path, "external aliased prefixes, one per line")->required();
  cmp_cmd->add_option("--out", out_path, "summary JSON (default stdout)");
  cmp_cmd->callback([&] {
    action = [&] {
      std::ifstream vin = open_in(verdicts_path);
      const auto verdicts = read_verdicts_csv(vin);
      const AliasComparison c = compare_alias_lists(verdicts, load_alias_table(list_path));
      nlohmann::json j{{"known", c.known}, {"new", c.fresh}, {"new_prefixes", nlohmann::json::array()}};
      for (const auto& p : c.new_prefixes) j["new_prefixes"].push_back(to_string(p));
      emit(out_path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    };
  });

  // geolink tally|infer|apply
  auto* geo_cmd = app.add_subcommand("geolink", "Wired-MAC to BSSID offset linkage");
  geo_cmd->require_subcommand(1);
  std::string geo_path, models_path, grid_path, oui_text;
  auto* tally_cmd = geo_cmd->add_subcommand("tally", "Offset histogram for one OUI");
  tally_cmd->add_option("--store", store_dir, "store directory")->required();
  tally_cmd->add_option("--geo", geo_path, "BSSID CSV (bssid,lat,lon)")->required();
  tally_cmd->add_option("--oui", oui_text, "OUI, e.g. 00:1a:2b")->required();
  tally_cmd->add_option("--out", out_path, "histogram CSV (default stdout)");
  tally_cmd->callback([&] {
    action = [&] {
      const auto macs = store_macs(CorpusStore::open(store_dir));
      const auto t = tally_offsets(macs, load_geo(geo_path), parse_oui(oui_text));
      emit(out_path, [&](std::ostream& o) { write_histogram_csv(o, t.histogram); });
      std::cerr << nlohmann::json{{"oui", to_string(t.oui)}, {"pair_count", t.pair_count}}.dump() << '\n';
    };
  });
  auto* ginfer_cmd = geo_cmd->add_subcommand("infer", "Per-OUI offset models");
  ginfer_cmd->add_option("--store", store_dir, "store directory")->required();
  ginfer_cmd->add_option("--geo", geo_path, "BSSID CSV")->required();
  ginfer_cmd->add_option("--out", out_path, "models CSV (default stdout)");
  ginfer_cmd->callback([&] {
    action = [&] {
      const Knobs k = resolve(ov);
      const auto models = infer_models(store_macs(CorpusStore::open(store_dir)), load_geo(geo_path), k.min_pairs);
      emit(out_path, [&](std::ostream& o) { write_models_csv(o, models); });
    };
  });
  auto* apply_cmd = geo_cmd->add_subcommand("apply", "Geolocate corpus MACs with inferred models");
  apply_cmd->add_option("--store", store_dir, "store directory")->required();
  apply_cmd->add_option("--geo", geo_path, "BSSID CSV")->required();
  apply_cmd->add_option("--models", models_path, "models CSV")->required();
  apply_cmd->add_option("--grid", grid_path, "country grid CSV");
  apply_cmd->add_option("--out", out_path, "results CSV (default stdout)");
  apply_cmd->callback([&] {
    action = [&] {
      std::ifstream min = open_in(models_path);
      const auto models = read_models_csv(min);
      std::optional<CountryGrid> grid;
      if (!grid_path.empty()) {
        std::ifstream gin = open_in(grid_path);
        grid = read_country_grid(gin);
      }
      const auto loc = geolocate_corpus(store_macs(CorpusStore::open(store_dir)), load_geo(geo_path), models,
                                        grid ? &*grid : nullptr);
      emit(out_path, [&](std::ostream& o) { write_results_csv(o, loc.results); });
    };
  });

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  std::string scenario_path;
  synth_cmd->add_option("--scenario", scenario_path, "scenario JSON")->required();
  synth_cmd->add_option("--out", out_dir, "output directory")->required();
  synth_cmd->callback([&] {
    action = [&] {
      synth::ScenarioSpec spec = synth::scenario_from_json(read_json(scenario_path));
      if (ov.seed) spec.seed = *ov.seed;
      const auto corpus = synth::generate_corpus(spec);
      synth::write_corpus(corpus, out_dir);
      std::cout << nlohmann::json{{"observations", corpus.observations.size()},
                                  {"distinct_addresses", corpus.truth.categories.size()},
                                  {"devices", corpus.truth.devices.size()}}
                       .dump(2)
                << '\n';
    };
  });

  // release
  auto* rel_cmd = app.add_subcommand("release", "Export the /48-aggregated release list");
  bool verify = false;
  rel_cmd->add_option("--store", store_dir, "store directory")->required();
  rel_cmd->add_option("--out", out_path, "release file (default stdout)");
  rel_cmd->add_flag("--verify", verify, "re-read the written file and check it against the store");
  rel_cmd->callback([&] {
    action = [&] {
      const CorpusStore store = CorpusStore::open(store_dir);
      emit(out_path, [&](std::ostream& o) { export_release(store, o); });
      if (verify) {
        if (out_path.empty() || out_path == "-") throw Error(ErrorKind::Argument, "--verify needs --out");
        std::ifstream in = open_in(out_path);
        const ReleaseCheck c = verify_release(in, store);
        const bool ok = c.only_48s && c.sorted_unique && c.covers_all && !c.leaks_address;
        std::cerr << nlohmann::json{{"lines", c.lines}, {"only_48s", c.only_48s}, {"sorted_unique", c.sorted_unique},
                                    {"covers_all", c.covers_all}, {"leaks_address", c.leaks_address}}.dump()
                  << '\n';
        if (!ok) throw Error(ErrorKind::Validation, "release check failed");
      }
    };
  });

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every enabled stage from a config file");
  pipe_cmd->callback([&] {
    action = [&] {
      if (ov.config.empty()) throw Error(ErrorKind::Config, "pipeline needs --config");
      PipelineConfig c = load_pipeline_config(ov.config);
      if (ov.seed) c.seed = *ov.seed;
      if (ov.interval_seconds) c.interval_seconds = *ov.interval_seconds;
      if (ov.min_pairs) c.min_pairs = *ov.min_pairs;
      if (ov.threshold_count) c.thresholds.min_count = *ov.threshold_count;
      if (ov.threshold_frac) c.thresholds.min_fraction = *ov.threshold_frac;
      const PipelineReport r = run_pipeline(c);
      nlohmann::json j;
      j["unique_addresses"] = r.counters.unique_addresses;
      j["written"] = nlohmann::json::array();
      for (const auto& p : r.written) j["written"].push_back(p.string());
      std::cout << j.dump(2) << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("argument", e.what(), 2);
  }

  set_warnings_enabled(!quiet);
  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
