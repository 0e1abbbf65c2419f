#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "negotiator/engine.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

// Piecewise-linear flow size CDF. The first point is an atom: sizes equal to
// the first size carry its probability.
class SizeCdf {
 public:
  SizeCdf() = default;
  // Throws ConfigError unless sizes strictly increase, probabilities are
  // non-decreasing within [0,1] and the last one is 1.
  explicit SizeCdf(std::vector<std::pair<double, double>> points, std::string name = "");

  static SizeCdf parse(const std::string& text, const std::string& name = "");
  static SizeCdf load(const std::string& path);
  // "hadoop-like", "websearch-like", "google-like".
  static SizeCdf builtin(const std::string& name);
  static std::vector<std::string> builtin_names();

  const std::vector<std::pair<double, double>>& points() const { return points_; }
  const std::string& name() const { return name_; }
  double mean_bytes() const;
  // P(size < bytes).
  double fraction_below(double bytes) const;
  std::uint64_t sample(RandomStream& rng) const;
  std::uint64_t quantile(double u) const;

 private:
  std::vector<std::pair<double, double>> points_;
  std::string name_;
};

enum class WorkloadKind { Poisson, Incast, AllToAll, Mixed };

std::string to_string(WorkloadKind k);
WorkloadKind workload_kind_from_string(const std::string& s);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Poisson;
  double load = 1.0;
  SizeCdf cdf;
  double host_rate = 400;  // R, bits/ns per ToR
  std::uint32_t tors = 128;
  std::uint32_t incast_degree = 15;
  std::uint64_t incast_size_bytes = 1024;
  std::uint64_t all_to_all_size_bytes = 30 * 1024;
  double mix_fraction = 0.02;
  SimTime start_ns = 0;  // synchronized flows and first Poisson arrivals start here
  SimTime stop_ns = -1;  // no arrivals at or after this time; -1 for unbounded
  // Incast destination; kIdle picks one uniformly.
  TorId incast_dst = kIdle;
};

struct FlowEvent {
  SimTime time = 0;
  TorId src = 0;
  TorId dst = 0;
  std::uint64_t size = 0;
  // Synchronized group (incast / all-to-all event index), -1 for background.
  std::int64_t group = -1;
};

// Mean Poisson inter-arrival tau = F / (R * N * L) in ns, F in bits.
double mean_interarrival_ns(double mean_flow_bits, double host_rate, std::uint32_t tors, double load);
// Network-wide incast event spacing for the mixed workload.
double incast_interarrival_ns(std::uint32_t degree, std::uint64_t size_bytes, double fraction,
                              double host_rate, std::uint32_t tors);

// d distinct sources drawn uniformly from the ToRs other than dst.
std::vector<TorId> pick_sources(std::uint32_t tors, TorId dst, std::uint32_t degree, RandomStream& rng);

// Deterministic time-ordered flow stream.
class FlowGenerator {
 public:
  FlowGenerator(WorkloadSpec spec, const RandomStream& rng);

  std::optional<FlowEvent> next();
  const WorkloadSpec& spec() const { return spec_; }

 private:
  void refill_burst(SimTime t);
  std::optional<FlowEvent> next_background();

  WorkloadSpec spec_;
  RandomStream bg_rng_;
  RandomStream burst_rng_;
  double tau_ = 0;
  double bg_clock_ = 0;
  double burst_clock_ = 0;
  double burst_tau_ = 0;
  std::int64_t burst_index_ = 0;
  std::vector<FlowEvent> burst_;  // synchronized flows not yet returned
  std::size_t burst_pos_ = 0;
  bool synced_done_ = false;
  std::optional<FlowEvent> bg_peek_;
};

}  // namespace negotiator
