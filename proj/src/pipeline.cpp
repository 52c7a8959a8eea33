#include "hitlist/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "hitlist/alias.hpp"
#include "hitlist/error.hpp"
#include "hitlist/eui64.hpp"
#include "hitlist/geolink.hpp"
#include "hitlist/tracking.hpp"

namespace hitlist {

namespace {

std::optional<fs::path> path_field(const nlohmann::json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  fs::path p = j[key].get<std::string>();
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const fs::path& base) {
  try {
    PipelineConfig c;
    if (auto out = path_field(j, "out_dir", base)) c.out_dir = *out;
    const nlohmann::json in = j.value("inputs", nlohmann::json::object());
    c.inputs.observations = path_field(in, "observations", base);
    c.inputs.asn_table = path_field(in, "asn_table", base);
    c.inputs.country_table = path_field(in, "country_table", base);
    c.inputs.oui_db = path_field(in, "oui_db", base);
    c.inputs.alias_list = path_field(in, "alias_list", base);
    c.inputs.aliased = path_field(in, "aliased", base);
    c.inputs.geo = path_field(in, "geo", base);
    c.inputs.country_grid = path_field(in, "country_grid", base);
    const nlohmann::json st = j.value("stages", nlohmann::json::object());
    for (const auto& [key, value] : st.items()) {
      bool* flag = key == "classify"    ? &c.stages.classify
                   : key == "eui64"     ? &c.stages.eui64
                   : key == "tracking"  ? &c.stages.tracking
                   : key == "alias"     ? &c.stages.alias
                   : key == "geolink"   ? &c.stages.geolink
                   : key == "summarize" ? &c.stages.summarize
                   : key == "release"   ? &c.stages.release
                                        : nullptr;
      if (!flag) throw Error(ErrorKind::Config, "unknown stage '" + key + "'");
      *flag = value.get<bool>();
    }
    for (const auto& cmp : j.value("comparisons", nlohmann::json::array())) {
      c.comparisons.push_back({cmp.at("name").get<std::string>(),
                               *path_field(cmp, "observations", base)});
    }
    c.seed = j.value("seed", c.seed);
    c.interval_seconds = j.value("interval_seconds", c.interval_seconds);
    c.min_pairs = j.value("min_pairs", c.min_pairs);
    c.thresholds.min_count = j.value("threshold_count", c.thresholds.min_count);
    c.thresholds.min_fraction = j.value("threshold_frac", c.thresholds.min_fraction);
    const nlohmann::json alias = j.value("alias", nlohmann::json::object());
    c.client_rate = alias.value("client_rate", c.client_rate);
    c.random_rate = alias.value("random_rate", c.random_rate);
    c.top_n = j.value("top_n", c.top_n);
    c.ingest.max_buffer_addresses = j.value("max_buffer_addresses", c.ingest.max_buffer_addresses);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad pipeline config: ") + e.what());
  }
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return pipeline_config_from_json(j, path.parent_path());
}

void check_pipeline_inputs(const PipelineConfig& c) {
  auto need = [](const char* stage, const char* name, const std::optional<fs::path>& p) {
    if (!p) throw Error(ErrorKind::Config, std::string(stage) + " stage needs input '" + name + "'");
    if (!fs::exists(*p)) {
      throw Error(ErrorKind::Config,
                  std::string(stage) + " stage input '" + name + "' not found: " + p->string());
    }
  };
  auto maybe = [&](const char* stage, const char* name, const std::optional<fs::path>& p) {
    if (p) need(stage, name, p);
  };
  need("ingest", "observations", c.inputs.observations);
  if (c.stages.classify) need("classify", "asn_table", c.inputs.asn_table);
  if (c.stages.eui64) maybe("eui64", "oui_db", c.inputs.oui_db);
  if (c.stages.tracking) {
    need("tracking", "asn_table", c.inputs.asn_table);
    need("tracking", "country_table", c.inputs.country_table);
  }
  if (c.stages.alias) {
    need("alias", "aliased", c.inputs.aliased);
    maybe("alias", "alias_list", c.inputs.alias_list);
    maybe("alias", "asn_table", c.inputs.asn_table);
  }
  if (c.stages.geolink) {
    need("geolink", "geo", c.inputs.geo);
    maybe("geolink", "country_grid", c.inputs.country_grid);
  }
  if (c.stages.summarize) {
    need("summarize", "asn_table", c.inputs.asn_table);
    need("summarize", "country_table", c.inputs.country_table);
    for (const auto& cmp : c.comparisons) {
      need("summarize", cmp.name.c_str(), std::optional<fs::path>(cmp.observations));
    }
  }
  if (c.interval_seconds <= 0) throw Error(ErrorKind::Config, "interval_seconds must be positive");
  if (c.thresholds.min_fraction < 0.0 || c.thresholds.min_fraction > 1.0) {
    throw Error(ErrorKind::Config, "threshold_frac must lie in [0, 1]");
  }
}

namespace {

class Run {
 public:
  explicit Run(const PipelineConfig& c) : c_(c) {}

  PipelineReport go();

 private:
  std::ofstream open(const std::string& name) {
    const fs::path p = c_.out_dir / name;
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + p.string() + "'");
    report_.written.push_back(p);
    return out;
  }
  const PrefixTable<Asn>& asmap() {
    if (!asmap_) asmap_ = load_asn_table(c_.inputs.asn_table->string());
    return *asmap_;
  }
  const PrefixTable<CountryCode>& countrymap() {
    if (!countrymap_) countrymap_ = load_country_table(c_.inputs.country_table->string());
    return *countrymap_;
  }
  const std::vector<Ipv6Address>& addresses() {
    if (!addresses_) addresses_ = store_->load_addresses();
    return *addresses_;
  }
  const std::vector<Observation>& observations() {
    if (!observations_) {
      observations_.emplace();
      store_->for_each_observation([&](const Observation& o) { observations_->push_back(o); });
    }
    return *observations_;
  }

  void classify();
  void eui64();
  void tracking();
  void alias();
  void geolink();
  void summarize();
  void release();

  const PipelineConfig& c_;
  PipelineReport report_;
  std::optional<CorpusStore> store_;
  std::optional<PrefixTable<Asn>> asmap_;
  std::optional<PrefixTable<CountryCode>> countrymap_;
  std::optional<std::vector<Ipv6Address>> addresses_;
  std::optional<std::vector<Observation>> observations_;
  std::vector<MacAddress> macs_;  ///< distinct, from the eui64 stage
};

void Run::classify() {
  const auto& addrs = addresses();
  const CorpusClassification cc = classify_corpus(addrs, asmap(), asmap(), c_.thresholds);
  if (addrs.empty()) return;
  const CategoryDistribution dist = profile_distribution(addrs, cc.categories, cc.asns);
  {
    auto out = open("categories_dataset.csv");
    write_dataset_report(out, "corpus", dist.global);
  }
  {
    auto out = open("categories_as.csv");
    write_as_report(out, dist);
  }
  {
    auto out = open("entropy_cdf.csv");
    write_entropy_cdf(out, dist.global);
  }
  std::vector<std::pair<std::uint64_t, Asn>> by_size;
  for (const auto& [asn, p] : dist.per_as) by_size.emplace_back(p.total, asn);
  std::sort(by_size.begin(), by_size.end(),
            [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  if (by_size.size() > c_.top_n) by_size.resize(c_.top_n);
  for (const auto& [n, asn] : by_size) {
    auto out = open("entropy_cdf_AS" + std::to_string(asn.value) + ".csv");
    write_entropy_cdf(out, dist.per_as.at(asn));
  }
  nlohmann::json v4 = nlohmann::json::object();
  for (const auto& [asn, s] : cc.validation.per_as) {
    v4[to_string(asn)] = {{"total", s.total}, {"consistent", s.consistent}, {"accepted", s.accepted}};
  }
  auto out = open("ipv4_validation.json");
  out << nlohmann::json{{"unattributed", cc.unattributed}, {"per_as", v4}}.dump(2) << '\n';
}

void Run::eui64() {
  std::map<MacAddress, std::uint64_t> counts;
  std::uint64_t apparent = 0;
  store_->for_each_address([&](Ipv6Address a) {
    if (!is_apparent_eui64(iid_of(a))) return;
    ++apparent;
    ++counts[extract_mac(iid_of(a))];
  });
  OuiDatabase db;
  if (c_.inputs.oui_db) db = load_oui_csv(c_.inputs.oui_db->string());
  std::vector<MacCount> rows;
  std::map<std::string, std::uint64_t> vendors;
  for (const auto& [mac, n] : counts) {
    rows.push_back({mac, n});
    macs_.push_back(mac);
    ++vendors[resolve_vendor(mac, db)];
  }
  {
    auto out = open("eui64_macs.csv");
    write_mac_report(out, rows, db);
  }
  nlohmann::json j;
  j["addresses"] = store_->counters().unique_addresses;
  j["apparent_eui64"] = apparent;
  j["distinct_macs"] = counts.size();
  j["expected_random_apparent"] = expected_random_apparent(store_->counters().unique_addresses);
  j["vendors"] = vendors;
  auto out = open("eui64_summary.json");
  out << j.dump(2) << '\n';
}

void Run::tracking() {
  TimelineBuilder builder(asmap(), countrymap());
  LifetimeTracker by_addr(LifetimeKey::Address), by_iid(LifetimeKey::Iid), by_mac(LifetimeKey::Mac);
  store_->for_each_observation([&](const Observation& o) {
    builder.add(o);
    by_addr.add(o.timestamp, o.addr);
    by_iid.add(o.timestamp, o.addr);
    by_mac.add(o.timestamp, o.addr);
  });
  const TimelineSet set = std::move(builder).finish();
  {
    auto out = open("tracking.csv");
    write_tracking_report(out, set);
  }
  nlohmann::json j;
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [mac, tl] : set.timelines) {
    const std::string name(to_string(classify_track(feature_vector(tl))));
    classes[name] = classes.value(name, 0) + 1;
  }
  j["macs"] = set.timelines.size();
  j["classes"] = classes;
  const std::pair<const char*, const LifetimeTracker*> trackers[] = {
      {"address", &by_addr}, {"iid", &by_iid}, {"mac", &by_mac}};
  for (const auto& [name, t] : trackers) {
    if (t->stats().empty()) continue;
    auto out = open(std::string("lifetimes_") + name + "_ccdf.csv");
    const auto points = lifetime_ccdf(*t);
    write_ccdf(out, points);
    j["lifetime_above_zero"][name] = ccdf_above_zero(*t);
  }
  if (!set.timelines.empty()) {
    const PrefixSpread spread = prefix_spread(set);
    auto out = open("prefix_spread_ccdf.csv");
    write_ccdf(out, spread.ccdf);
    j["trackable"] = spread.trackable;
    j["trackable_fraction"] = spread.trackable_fraction;
  }
  auto out = open("tracking_summary.json");
  out << j.dump(2) << '\n';
}

void Run::alias() {
  const auto& obs = observations();
  const std::vector<ProbePlan> plans = plan_intervals(obs, c_.interval_seconds, c_.seed);
  MockResponder responder(load_alias_table(c_.inputs.aliased->string()), c_.client_rate,
                          c_.random_rate, c_.seed);
  std::vector<std::vector<AliasVerdict>> batches;
  Responsiveness total;
  {
    auto out = open("alias_plan.csv");
    out << "interval_start,target,kind,origin_slash64\n";
    for (const auto& plan : plans) {
      for (const auto& t : plan.targets) {
        out << plan.interval_start << ',' << to_string(t.addr) << ',' << to_string(t.kind) << ','
            << to_string(t.origin) << '\n';
      }
      const auto responses = responder.probe(plan);
      AliasInference inf = infer_aliased(plan, responses);
      total += inf.summary;
      batches.push_back(std::move(inf.verdicts));
    }
  }
  const std::vector<AliasVerdict> verdicts = merge_verdicts(batches);
  {
    auto out = open("alias_verdicts.csv");
    write_verdicts_csv(out, verdicts);
  }
  std::optional<AliasComparison> cmp;
  if (c_.inputs.alias_list) {
    cmp = compare_alias_lists(verdicts, load_alias_table(c_.inputs.alias_list->string()));
    auto out = open("alias_new_prefixes.txt");
    for (const auto& p : cmp->new_prefixes) out << to_string(p) << '\n';
  }
  nlohmann::json j = nlohmann::json::parse(alias_summary_json(total, verdicts.size(), cmp));
  j["intervals"] = plans.size();
  if (c_.inputs.asn_table) {
    const AliasedClients ac = clients_in_aliased(addresses(), verdicts, asmap());
    j["clients_in_aliased"] = ac.total;
    j["aliased_client_ases"] = ac.per_as.size();
  }
  auto out = open("alias_summary.json");
  out << j.dump(2) << '\n';
}

void Run::geolink() {
  if (macs_.empty()) {
    store_->for_each_address([&](Ipv6Address a) {
      if (is_apparent_eui64(iid_of(a))) macs_.push_back(extract_mac(iid_of(a)));
    });
    std::sort(macs_.begin(), macs_.end());
    macs_.erase(std::unique(macs_.begin(), macs_.end()), macs_.end());
  }
  std::vector<GeoBssid> geo;
  {
    std::ifstream in(*c_.inputs.geo);
    geo = read_geo_csv(in);
  }
  std::optional<CountryGrid> grid;
  if (c_.inputs.country_grid) {
    std::ifstream in(*c_.inputs.country_grid);
    grid = read_country_grid(in);
  }
  const std::vector<OffsetModel> models = infer_models(macs_, geo, c_.min_pairs);
  const Geolocation loc = geolocate_corpus(macs_, geo, models, grid ? &*grid : nullptr);
  {
    auto out = open("geolink_models.csv");
    write_models_csv(out, models);
  }
  {
    auto out = open("geolink_results.csv");
    write_results_csv(out, loc.results);
  }
  auto out = open("geolink_countries.csv");
  out << "country,devices\n";
  for (const auto& [cc, n] : loc.per_country) out << cc.str() << ',' << n << '\n';
  if (grid) out << "outside_grid," << loc.outside_grid << '\n';
}

void Run::summarize() {
  std::vector<CorpusStore> stores;
  stores.reserve(c_.comparisons.size());
  for (const auto& cmp : c_.comparisons) {
    const fs::path dir = c_.out_dir / "comparisons" / cmp.name;
    fs::remove_all(dir);
    std::ifstream in(cmp.observations);
    IngestOptions opts = c_.ingest;
    opts.keep_observations = false;
    stores.push_back(ingest(in, dir, opts));
  }
  std::vector<std::pair<std::string, const CorpusStore*>> refs;
  for (std::size_t i = 0; i < stores.size(); ++i) refs.emplace_back(c_.comparisons[i].name, &stores[i]);
  const SummaryReport r = hitlist::summarize(*store_, asmap(), countrymap(), refs, c_.top_n);
  auto out = open("summary.json");
  out << summary_json(r) << '\n';
}

void Run::release() {
  auto out = open("release_48.txt");
  export_release(*store_, out);
}

PipelineReport Run::go() {
  check_pipeline_inputs(c_);
  fs::create_directories(c_.out_dir);
  const fs::path store_dir = c_.out_dir / "store";
  fs::remove_all(store_dir);
  {
    std::ifstream in(*c_.inputs.observations);
    if (!in) throw Error(ErrorKind::Io, "cannot read '" + c_.inputs.observations->string() + "'");
    IngestOptions opts = c_.ingest;
    opts.keep_observations = true;
    store_ = ingest(in, store_dir, opts);
  }
  report_.counters = store_->counters();
  if (c_.stages.classify) classify();
  if (c_.stages.eui64) eui64();
  if (c_.stages.tracking) tracking();
  if (c_.stages.alias) alias();
  if (c_.stages.geolink) geolink();
  if (c_.stages.summarize) summarize();
  if (c_.stages.release) release();
  return std::move(report_);
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config) { return Run(config).go(); }

}  // namespace hitlist
