#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "negotiator/engine.hpp"
#include "negotiator/queues.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

inline constexpr std::uint64_t kMiceBytes = 10240;

struct FlowRecord {
  FlowId id = 0;
  TorId src = 0;
  TorId dst = 0;
  std::uint64_t size_bytes = 0;
  SimTime arrival_ns = 0;
  std::optional<SimTime> completion_ns;
  std::uint64_t delivered = 0;
  std::uint64_t next_offset = 0;  // in-order check cursor

  bool is_mice() const { return size_bytes < kMiceBytes; }
  bool done() const { return completion_ns.has_value(); }
  SimTime fct() const { return *completion_ns - arrival_ns; }
};

struct MatchSample {
  std::int64_t epoch = 0;
  std::uint64_t grants = 0;
  std::uint64_t accepts = 0;
};

struct Counters {
  std::uint64_t out_of_order_chunks = 0;
  std::uint64_t lost_transmissions = 0;
  std::uint64_t lost_bytes = 0;
  std::uint64_t recredited_bytes = 0;
  std::uint64_t suppressed_piggybacks = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t dummy_messages = 0;
  std::uint64_t piggyback_bytes = 0;
  std::uint64_t scheduled_bytes = 0;
  std::uint64_t relayed_bytes = 0;
  std::uint64_t max_transit_occupancy = 0;
  std::uint64_t false_detections = 0;
};

class Metrics {
 public:
  Metrics(std::uint32_t tors, SimTime bucket_ns, SimTime epoch_ns);

  FlowId add_flow(TorId src, TorId dst, std::uint64_t size, SimTime arrival);
  // Wanted payload reaching its final destination. Returns true when the
  // chunk extended the flow's in-order prefix.
  bool on_delivery(TorId receiver, FlowId flow, std::uint64_t offset, std::uint64_t bytes,
                   SimTime t);
  void on_transit(TorId receiver, std::uint64_t bytes, SimTime t);
  void on_grants(std::int64_t epoch, std::uint64_t n);
  void on_accepts(std::int64_t grant_epoch, std::uint64_t n);

  // Per-epoch bytes scheduled from src to dst (both phases).
  void trace_pair(TorId src, TorId dst);
  bool tracing_pair(TorId src, TorId dst) const { return src == trace_src_ && dst == trace_dst_; }
  void on_pair_bytes(std::int64_t epoch, std::uint64_t bytes);
  const std::vector<std::uint64_t>& pair_trace() const { return pair_trace_; }

  const std::vector<FlowRecord>& flows() const { return flows_; }
  std::vector<FlowRecord>& flows() { return flows_; }
  std::vector<MatchSample> match_samples() const;
  Counters& counters() { return counters_; }
  const Counters& counters() const { return counters_; }

  std::uint32_t tors() const { return tors_; }
  SimTime bucket_ns() const { return bucket_ns_; }
  SimTime epoch_ns() const { return epoch_ns_; }
  std::size_t buckets() const { return wanted_.size() / tors_; }
  std::uint64_t wanted_bytes(std::size_t bucket, TorId tor) const;
  std::uint64_t transit_bytes(std::size_t bucket, TorId tor) const;
  // Network-wide wanted bytes delivered per epoch.
  const std::vector<std::uint64_t>& wanted_per_epoch() const { return wanted_epoch_; }
  std::uint64_t total_wanted_bytes() const { return total_wanted_; }
  // Wanted bytes with delivery time in [from, to).
  std::uint64_t wanted_between(SimTime from, SimTime to) const;

 private:
  void grow(std::size_t bucket);

  std::uint32_t tors_;
  SimTime bucket_ns_;
  SimTime epoch_ns_;
  std::vector<FlowRecord> flows_;
  std::vector<std::uint64_t> wanted_;   // bucket * tors + tor
  std::vector<std::uint64_t> transit_;
  std::vector<std::uint64_t> wanted_epoch_;
  std::vector<std::uint64_t> grants_;
  std::vector<std::uint64_t> accepts_;
  std::vector<std::uint64_t> pair_trace_;
  TorId trace_src_ = kIdle;
  TorId trace_dst_ = kIdle;
  std::uint64_t total_wanted_ = 0;
  Counters counters_;
};

// Nearest-rank percentile of FCTs over completed flows; nullopt when the
// selection is empty.
std::optional<SimTime> fct_percentile(std::span<const FlowRecord> records, double p, bool mice_only);
std::optional<double> fct_mean(std::span<const FlowRecord> records, bool mice_only);
// Nearest-rank percentile of raw values.
std::optional<SimTime> nearest_rank(std::vector<SimTime> values, double p);

// Wanted bits per ns per ToR divided by R.
double normalized_goodput(std::uint64_t wanted_bytes, SimTime window_ns, std::uint32_t tors,
                          double host_rate);
double goodput(const Metrics& m, SimTime from, SimTime to, double host_rate);

// Mean accepts/grants over samples with grants > 0.
std::optional<double> mean_match_ratio(std::span<const MatchSample> samples,
                                       std::int64_t from_epoch = 0);

// Latest completion minus the common arrival, nullopt if any flow is unfinished.
std::optional<SimTime> incast_finish_time(std::span<const FlowRecord> records,
                                          std::span<const FlowId> flows);

}  // namespace negotiator
