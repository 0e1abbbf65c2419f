#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "negotiator/baseline.hpp"
#include "negotiator/epoch.hpp"
#include "negotiator/faults.hpp"
#include "negotiator/tor.hpp"
#include "negotiator/topology.hpp"
#include "negotiator/workload.hpp"

namespace negotiator {

using Json = nlohmann::ordered_json;

enum class SystemKind { Negotiator, Oblivious };

std::string to_string(SystemKind s);
SystemKind system_kind_from_string(const std::string& s);

struct RandomFaults {
  double fraction = 0;
  LinkDirection direction = LinkDirection::Egress;
  SimTime fail_ns = 0;
  SimTime repair_ns = 0;
  std::uint64_t seed = 1;
};

struct FaultConfig {
  std::vector<LinkFaultEvent> events;
  std::optional<RandomFaults> random;
};

struct ExperimentConfig {
  Json raw;  // defaults merged with the file and overrides

  SystemKind system = SystemKind::Negotiator;
  TopologySpec topology;
  double host_rate = 400;
  double speedup = 2;
  EpochParams epoch_params;
  EpochConfig epoch;
  NegotiatorOptions negotiator;
  ObliviousOptions oblivious;
  WorkloadSpec workload;
  FaultConfig faults;
  std::uint64_t seed = 1;
  SimTime duration_ns = 1'000'000;
  SimTime bucket_ns = 10'000;
  std::uint32_t warmup_epochs = 2;
  std::optional<std::pair<TorId, TorId>> trace_pair;
  std::string out_dir;
};

// Every recognised key with its default value.
Json default_config_json();

// Merges `overlay` into `base`; keys absent from base are rejected.
void merge_config(Json& base, const Json& overlay, const std::string& path = "");

// Applies "a.b.c=value"; the value is parsed as JSON, falling back to a string.
void apply_override(Json& cfg, const std::string& assignment);

// Builds the typed config; throws ConfigError on bad values.
ExperimentConfig build_config(const Json& merged);

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);
ExperimentConfig config_from_overrides(const std::vector<std::string>& overrides);

// Resolves a CDF reference: a built-in name or a file path.
SizeCdf resolve_cdf(const std::string& name, const std::string& path);

}  // namespace negotiator
