#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "negotiator/baseline.hpp"
#include "negotiator/config.hpp"
#include "negotiator/engine.hpp"
#include "negotiator/epoch.hpp"
#include "negotiator/faults.hpp"
#include "negotiator/metrics.hpp"
#include "negotiator/tor.hpp"
#include "negotiator/topology.hpp"
#include "negotiator/workload.hpp"

namespace negotiator {

struct RunSummary {
  std::string system;
  std::string topology;
  std::string variant;
  std::uint32_t tors = 0;
  double load = 0;
  std::uint64_t seed = 0;
  SimTime duration_ns = 0;
  SimTime epoch_ns = 0;
  double guard_fraction = 0;
  std::uint64_t flows = 0;
  std::uint64_t completed = 0;
  std::uint64_t mice = 0;
  std::uint64_t mice_completed = 0;
  std::optional<SimTime> mice_fct_p99_ns;
  std::optional<double> mice_fct_mean_ns;
  std::optional<SimTime> fct_p99_ns;
  std::optional<double> fct_mean_ns;
  // Fraction of completed mice with FCT <= 2 epochs.
  std::optional<double> mice_within_2_epochs;
  double goodput = 0;
  std::optional<double> match_ratio;
  Counters counters;
  std::uint64_t events = 0;
  double wall_seconds = 0;  // not written to the summary file
};

// One configured simulation instance.
class Simulation {
 public:
  explicit Simulation(const ExperimentConfig& cfg);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Runs to cfg.duration_ns (or `until` if given).
  void run(std::optional<SimTime> until = std::nullopt);
  RunSummary summary() const;

  const ExperimentConfig& config() const { return cfg_; }
  const Topology& topology() const { return topo_; }
  Engine& engine() { return engine_; }
  Metrics& metrics() { return *metrics_; }
  const Metrics& metrics() const { return *metrics_; }
  PhysicalLinks& links() { return *links_; }
  Fabric& fabric() { return *fabric_; }
  // Null unless the system matches.
  NegotiatorNetwork* negotiator() { return negotiator_; }
  ObliviousNetwork* oblivious() { return oblivious_; }
  const std::vector<LinkFaultEvent>& fault_events() const { return fault_events_; }
  // Flow ids of each synchronized group (incast/all-to-all event).
  const std::vector<std::vector<FlowId>>& groups() const { return groups_; }
  // Epoch length used for warmup and epoch-denominated FCT.
  SimTime epoch_ns() const { return cfg_.epoch.epoch_ns(); }

 private:
  void inject();

  ExperimentConfig cfg_;
  Topology topo_;
  Engine engine_;
  std::unique_ptr<Metrics> metrics_;
  std::unique_ptr<PhysicalLinks> links_;
  std::unique_ptr<Fabric> fabric_;
  NegotiatorNetwork* negotiator_ = nullptr;
  ObliviousNetwork* oblivious_ = nullptr;
  std::unique_ptr<FlowGenerator> gen_;
  std::optional<FlowEvent> next_;
  std::vector<LinkFaultEvent> fault_events_;
  std::vector<std::vector<FlowId>> groups_;
  double wall_seconds_ = 0;
};

// Checks the config and returns the epoch report (errors listed, not thrown).
EpochReport validate(const ExperimentConfig& cfg);

std::string format_summary(const RunSummary& s);

// Writes flows.csv, timeseries.csv, match.csv and summary.txt into dir.
void write_outputs(const Simulation& sim, const std::string& dir);

// Validates, runs and writes outputs when cfg.out_dir is set.
RunSummary run_experiment(const ExperimentConfig& cfg);

struct SweepPoint {
  std::string value;  // override value as given
  RunSummary summary;
};

// Runs cfg with `key=value` for each value; points run on up to `threads`
// workers and land in out_dir/point_<i> when out_dir is set. Writes
// out_dir/sweep.csv.
std::vector<SweepPoint> sweep(const Json& base, const std::string& key,
                              const std::vector<std::string>& values, unsigned threads,
                              const std::string& out_dir);

std::string sweep_csv(const std::string& key, const std::vector<SweepPoint>& points);

}  // namespace negotiator
