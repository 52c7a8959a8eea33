#pragma once

// Backscan planning (client plus one random same-/64 target per interval)
// and aliased-/64 inference from probe responses.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hitlist/addr.hpp"
#include "hitlist/prefix_map.hpp"
#include "hitlist/tracking.hpp"

namespace hitlist {

inline constexpr std::int64_t kDefaultIntervalSeconds = 600;
inline constexpr int kMaxRandomRedraws = 8;

enum class TargetKind { Client, Random };

std::string_view to_string(TargetKind k);
TargetKind parse_target_kind(std::string_view text);

struct ProbeTarget {
  Ipv6Address addr;
  TargetKind kind = TargetKind::Client;
  Prefix origin;  ///< originating client /64
};

struct ProbePlan {
  std::int64_t interval_start = 0;
  std::vector<ProbeTarget> targets;  ///< sorted by address, no duplicates
  std::uint64_t skipped_randoms = 0;  ///< /64s whose random draw kept colliding

  const ProbeTarget* find(Ipv6Address addr) const;
};

/// Every distinct client plus one seeded random address per distinct client /64.
/// Throws Error(EmptyInput) when `clients` is empty.
ProbePlan plan_interval(std::span<const Ipv6Address> clients, std::int64_t interval_start,
                        std::uint64_t seed);

/// Buckets observations into aligned intervals and plans each one.
std::vector<ProbePlan> plan_intervals(std::span<const Observation> observations,
                                      std::int64_t interval_seconds, std::uint64_t seed);

struct ProbeResponse {
  Ipv6Address target;
  bool responded = false;
  TargetKind kind = TargetKind::Client;
};

class Prober {
 public:
  virtual ~Prober() = default;
  virtual std::vector<ProbeResponse> probe(const ProbePlan& plan) = 0;
};

/// Answers every target inside an aliased prefix; elsewhere clients and
/// randoms answer with the configured probabilities.
class MockResponder : public Prober {
 public:
  MockResponder(PrefixTable<bool> aliased, double client_rate, double random_rate,
                std::uint64_t seed);
  std::vector<ProbeResponse> probe(const ProbePlan& plan) override;

 private:
  PrefixTable<bool> aliased_;
  double client_rate_;
  double random_rate_;
  std::uint64_t seed_;
};

/// Writes the plan to `plan_path`, then reads responses back from `responses_path`.
class FileProber : public Prober {
 public:
  FileProber(std::string plan_path, std::string responses_path)
      : plan_path_(std::move(plan_path)), responses_path_(std::move(responses_path)) {}
  std::vector<ProbeResponse> probe(const ProbePlan& plan) override;

 private:
  std::string plan_path_;
  std::string responses_path_;
};

/// `target,kind,origin_slash64`
void write_plan_csv(std::ostream& out, const ProbePlan& plan);
ProbePlan read_plan_csv(std::istream& in);
/// `target,responded`
void write_responses_csv(std::ostream& out, std::span<const ProbeResponse> responses);
/// Kinds are taken from `plan`; unknown targets throw Error(UnplannedResponse).
std::vector<ProbeResponse> read_responses_csv(std::istream& in, const ProbePlan& plan);

struct AliasVerdict {
  Prefix prefix;  ///< /64
  bool aliased = true;
  Ipv6Address evidence;  ///< the random target that answered
};

struct Responsiveness {
  std::uint64_t client_targets = 0;
  std::uint64_t client_responded = 0;
  std::uint64_t random_targets = 0;
  std::uint64_t random_responded = 0;

  double client_hit_rate() const;
  double random_hit_rate() const;
  Responsiveness& operator+=(const Responsiveness& o);
};

struct AliasInference {
  std::vector<AliasVerdict> verdicts;  ///< sorted by prefix
  Responsiveness summary;
};

AliasInference infer_aliased(const ProbePlan& plan, std::span<const ProbeResponse> responses);

/// Unions verdicts from several intervals; the first evidence per /64 is kept.
std::vector<AliasVerdict> merge_verdicts(std::span<const std::vector<AliasVerdict>> batches);

struct AliasComparison {
  std::uint64_t known = 0;
  std::uint64_t fresh = 0;  ///< "new" in reports
  std::vector<Prefix> new_prefixes;
};

AliasComparison compare_alias_lists(std::span<const AliasVerdict> verdicts,
                                    const PrefixTable<bool>& external);

struct AliasedClients {
  std::uint64_t total = 0;
  std::map<Asn, std::uint64_t> per_as;
  std::uint64_t unattributed = 0;
};

AliasedClients clients_in_aliased(std::span<const Ipv6Address> clients,
                                  std::span<const AliasVerdict> verdicts,
                                  const PrefixTable<Asn>& asmap);

/// `prefix,evidence`
void write_verdicts_csv(std::ostream& out, std::span<const AliasVerdict> verdicts);
std::vector<AliasVerdict> read_verdicts_csv(std::istream& in);

/// JSON {client_hit_rate, random_hit_rate, aliased_64_count, known, new}
std::string alias_summary_json(const Responsiveness& r, std::size_t aliased_64_count,
                               const std::optional<AliasComparison>& comparison);

}  // namespace hitlist
