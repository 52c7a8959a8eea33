#include "hitlist/alias.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <unordered_set>

#include "json.hpp"

#include "hitlist/csv.hpp"
#include "hitlist/error.hpp"
#include "hitlist/rng.hpp"

namespace hitlist {

std::string_view to_string(TargetKind k) { return k == TargetKind::Client ? "client" : "random"; }

TargetKind parse_target_kind(std::string_view text) {
  if (text == "client") return TargetKind::Client;
  if (text == "random") return TargetKind::Random;
  throw Error(ErrorKind::Parse, "target kind must be client or random, got '" +
                                    std::string(text) + "'");
}

const ProbeTarget* ProbePlan::find(Ipv6Address addr) const {
  auto it = std::lower_bound(targets.begin(), targets.end(), addr,
                             [](const ProbeTarget& t, Ipv6Address a) { return t.addr < a; });
  if (it == targets.end() || it->addr != addr) return nullptr;
  return &*it;
}

ProbePlan plan_interval(std::span<const Ipv6Address> clients, std::int64_t interval_start,
                        std::uint64_t seed) {
  if (clients.empty()) throw Error(ErrorKind::EmptyInput, "no clients to plan probes for");
  std::vector<Ipv6Address> sorted(clients.begin(), clients.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  ProbePlan plan;
  plan.interval_start = interval_start;
  plan.targets.reserve(sorted.size() * 2);
  for (const auto& c : sorted) plan.targets.push_back({c, TargetKind::Client, prefix_of(c, 64)});

  std::mt19937_64 rng(seed);
  // Clients are sorted, so each /64 forms one contiguous run.
  std::size_t i = 0;
  while (i < sorted.size()) {
    const Prefix slash64 = prefix_of(sorted[i], 64);
    std::size_t j = i;
    while (j < sorted.size() && slash64.contains(sorted[j])) ++j;
    const std::span<const Ipv6Address> members(sorted.data() + i, j - i);
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRandomRedraws && !placed; ++attempt) {
      const Ipv6Address candidate =
          Ipv6Address::from_halves(slash64.base().high64(), rng());
      if (!std::binary_search(members.begin(), members.end(), candidate)) {
        plan.targets.push_back({candidate, TargetKind::Random, slash64});
        placed = true;
      }
    }
    if (!placed) {
      ++plan.skipped_randoms;
      warn("random target for " + to_string(slash64) + " collided " +
           std::to_string(kMaxRandomRedraws) + " times; skipped");
    }
    i = j;
  }
  std::sort(plan.targets.begin(), plan.targets.end(),
            [](const ProbeTarget& a, const ProbeTarget& b) { return a.addr < b.addr; });
  return plan;
}

std::vector<ProbePlan> plan_intervals(std::span<const Observation> observations,
                                      std::int64_t interval_seconds, std::uint64_t seed) {
  if (interval_seconds <= 0) throw Error(ErrorKind::Argument, "interval must be positive");
  std::map<std::int64_t, std::vector<Ipv6Address>> buckets;
  for (const auto& obs : observations) {
    const std::int64_t start = obs.timestamp - obs.timestamp % interval_seconds;
    buckets[start].push_back(obs.addr);
  }
  std::vector<ProbePlan> plans;
  plans.reserve(buckets.size());
  for (const auto& [start, clients] : buckets) {
    plans.push_back(plan_interval(clients, start, mix64(seed ^ static_cast<std::uint64_t>(start))));
  }
  return plans;
}

MockResponder::MockResponder(PrefixTable<bool> aliased, double client_rate, double random_rate,
                             std::uint64_t seed)
    : aliased_(std::move(aliased)),
      client_rate_(client_rate),
      random_rate_(random_rate),
      seed_(seed) {}

std::vector<ProbeResponse> MockResponder::probe(const ProbePlan& plan) {
  std::vector<ProbeResponse> out;
  out.reserve(plan.targets.size());
  for (const auto& t : plan.targets) {
    bool responded = aliased_.lookup_longest(t.addr).value_or(false);
    if (!responded) {
      const double coin = unit_interval(mix64(seed_ ^ Ipv6Hash{}(t.addr)));
      responded = coin < (t.kind == TargetKind::Client ? client_rate_ : random_rate_);
    }
    out.push_back({t.addr, responded, t.kind});
  }
  return out;
}

std::vector<ProbeResponse> FileProber::probe(const ProbePlan& plan) {
  {
    std::ofstream out(plan_path_);
    if (!out) throw Error(ErrorKind::Io, "cannot write plan '" + plan_path_ + "'");
    write_plan_csv(out, plan);
  }
  std::ifstream in(responses_path_);
  if (!in) throw Error(ErrorKind::Io, "cannot read responses '" + responses_path_ + "'");
  return read_responses_csv(in, plan);
}

void write_plan_csv(std::ostream& out, const ProbePlan& plan) {
  out << "target,kind,origin_slash64\n";
  for (const auto& t : plan.targets) {
    out << to_string(t.addr) << ',' << to_string(t.kind) << ',' << to_string(t.origin) << '\n';
  }
}

ProbePlan read_plan_csv(std::istream& in) {
  ProbePlan plan;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = csv::chomp(line);
    if (view.empty() || (line_no == 1 && view.starts_with("target,"))) continue;
    auto f = csv::split_record(view);
    if (f.size() != 3) {
      throw Error(ErrorKind::Malformed, "plan line " + std::to_string(line_no) +
                                            ": expected target,kind,origin_slash64");
    }
    plan.targets.push_back({parse_ipv6(f[0]), parse_target_kind(f[1]), parse_prefix(f[2])});
  }
  std::sort(plan.targets.begin(), plan.targets.end(),
            [](const ProbeTarget& a, const ProbeTarget& b) { return a.addr < b.addr; });
  auto dup = std::adjacent_find(plan.targets.begin(), plan.targets.end(),
                                [](const ProbeTarget& a, const ProbeTarget& b) {
                                  return a.addr == b.addr;
                                });
  if (dup != plan.targets.end()) {
    throw Error(ErrorKind::Validation, "plan lists " + to_string(dup->addr) + " twice");
  }
  return plan;
}

void write_responses_csv(std::ostream& out, std::span<const ProbeResponse> responses) {
  out << "target,responded\n";
  for (const auto& r : responses) out << to_string(r.target) << ',' << (r.responded ? 1 : 0) << '\n';
}

std::vector<ProbeResponse> read_responses_csv(std::istream& in, const ProbePlan& plan) {
  std::vector<ProbeResponse> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = csv::chomp(line);
    if (view.empty() || (line_no == 1 && view.starts_with("target,"))) continue;
    auto f = csv::split_record(view);
    if (f.size() != 2 || (f[1] != "0" && f[1] != "1")) {
      throw Error(ErrorKind::Malformed, "response line " + std::to_string(line_no) +
                                            ": expected target,responded(0/1)");
    }
    const Ipv6Address target = parse_ipv6(f[0]);
    const ProbeTarget* planned = plan.find(target);
    if (!planned) {
      throw Error(ErrorKind::UnplannedResponse, "response for unplanned target " + f[0]);
    }
    out.push_back({target, f[1] == "1", planned->kind});
  }
  return out;
}

double Responsiveness::client_hit_rate() const {
  return client_targets == 0 ? 0.0
                             : static_cast<double>(client_responded) /
                                   static_cast<double>(client_targets);
}

double Responsiveness::random_hit_rate() const {
  return random_targets == 0 ? 0.0
                             : static_cast<double>(random_responded) /
                                   static_cast<double>(random_targets);
}

Responsiveness& Responsiveness::operator+=(const Responsiveness& o) {
  client_targets += o.client_targets;
  client_responded += o.client_responded;
  random_targets += o.random_targets;
  random_responded += o.random_responded;
  return *this;
}

AliasInference infer_aliased(const ProbePlan& plan, std::span<const ProbeResponse> responses) {
  std::unordered_set<Ipv6Address, Ipv6Hash> answered;
  for (const auto& r : responses) {
    const ProbeTarget* t = plan.find(r.target);
    if (!t) {
      throw Error(ErrorKind::UnplannedResponse,
                  "response for unplanned target " + to_string(r.target));
    }
    if (t->kind != r.kind) {
      throw Error(ErrorKind::UnplannedResponse,
                  "response kind for " + to_string(r.target) + " disagrees with the plan");
    }
    if (r.responded) answered.insert(r.target);
  }
  AliasInference result;
  for (const auto& t : plan.targets) {
    const bool hit = answered.contains(t.addr);
    if (t.kind == TargetKind::Client) {
      ++result.summary.client_targets;
      result.summary.client_responded += hit ? 1 : 0;
    } else {
      ++result.summary.random_targets;
      result.summary.random_responded += hit ? 1 : 0;
      if (hit) result.verdicts.push_back({t.origin, true, t.addr});
    }
  }
  std::sort(result.verdicts.begin(), result.verdicts.end(),
            [](const AliasVerdict& a, const AliasVerdict& b) { return a.prefix < b.prefix; });
  return result;
}

std::vector<AliasVerdict> merge_verdicts(std::span<const std::vector<AliasVerdict>> batches) {
  std::map<Prefix, AliasVerdict> merged;
  for (const auto& batch : batches) {
    for (const auto& v : batch) merged.try_emplace(v.prefix, v);
  }
  std::vector<AliasVerdict> out;
  out.reserve(merged.size());
  for (auto& [p, v] : merged) out.push_back(v);
  return out;
}

AliasComparison compare_alias_lists(std::span<const AliasVerdict> verdicts,
                                    const PrefixTable<bool>& external) {
  AliasComparison cmp;
  for (const auto& v : verdicts) {
    if (external.lookup_longest(v.evidence).value_or(false)) {
      ++cmp.known;
    } else {
      ++cmp.fresh;
      cmp.new_prefixes.push_back(v.prefix);
    }
  }
  return cmp;
}

AliasedClients clients_in_aliased(std::span<const Ipv6Address> clients,
                                  std::span<const AliasVerdict> verdicts,
                                  const PrefixTable<Asn>& asmap) {
  std::set<Prefix> aliased;
  for (const auto& v : verdicts) {
    if (v.aliased) aliased.insert(v.prefix);
  }
  std::unordered_set<Ipv6Address, Ipv6Hash> seen;
  AliasedClients out;
  for (const auto& c : clients) {
    if (!aliased.contains(prefix_of(c, 64)) || !seen.insert(c).second) continue;
    ++out.total;
    if (auto asn = asmap.lookup_longest(c)) {
      ++out.per_as[*asn];
    } else {
      ++out.unattributed;
    }
  }
  return out;
}

void write_verdicts_csv(std::ostream& out, std::span<const AliasVerdict> verdicts) {
  out << "prefix,evidence\n";
  for (const auto& v : verdicts) out << to_string(v.prefix) << ',' << to_string(v.evidence) << '\n';
}

std::vector<AliasVerdict> read_verdicts_csv(std::istream& in) {
  std::vector<AliasVerdict> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = csv::chomp(line);
    if (view.empty() || (line_no == 1 && view.starts_with("prefix,"))) continue;
    auto f = csv::split_record(view);
    if (f.size() != 2) {
      throw Error(ErrorKind::Malformed, "verdict line " + std::to_string(line_no) +
                                            ": expected prefix,evidence");
    }
    out.push_back({parse_prefix(f[0]), true, parse_ipv6(f[1])});
  }
  return out;
}

std::string alias_summary_json(const Responsiveness& r, std::size_t aliased_64_count,
                               const std::optional<AliasComparison>& comparison) {
  nlohmann::json j;
  j["client_hit_rate"] = r.client_hit_rate();
  j["random_hit_rate"] = r.random_hit_rate();
  j["aliased_64_count"] = aliased_64_count;
  j["known"] = comparison ? comparison->known : 0;
  j["new"] = comparison ? comparison->fresh : aliased_64_count;
  return j.dump(2);
}

}  // namespace hitlist
