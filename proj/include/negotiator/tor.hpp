#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "negotiator/engine.hpp"
#include "negotiator/epoch.hpp"
#include "negotiator/fabric.hpp"
#include "negotiator/faults.hpp"
#include "negotiator/matching.hpp"
#include "negotiator/metrics.hpp"
#include "negotiator/queues.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

template <class T, std::size_t N>
using SmallVec = boost::container::small_vector<T, N>;

struct NegotiatorOptions {
  EpochConfig epoch;
  bool piggyback = true;
  bool priority_queues = true;
  std::vector<std::uint64_t> pq_thresholds{1024, 10240};
  MatchingVariant variant = MatchingVariant::Base;
  std::uint32_t iterations = 1;
  double alpha = 0.001;
  std::uint32_t request_threshold_pkts = 3;
  std::uint64_t relay_threshold_bytes = 66900;
  std::uint64_t high_volume_bytes = 33450;
  std::uint64_t relay_transit_capacity_bytes = 133800;
  bool rotate_schedule = true;
  bool rerandomize_rings = false;
  std::uint32_t k_detect = 3;
  // Epochs after which bytes lost on a link not (yet) believed failed are
  // put back in their queue. 0 picks k_detect + 2 * depth + 2.
  std::uint32_t recredit_timeout_epochs = 0;
};

// One request for a scheduling process. `ports` is all-ones for a plain
// request, the unmatched-port mask for follow-ups, one bit for per-port
// (bundle) requests.
struct RequestEntry {
  std::int64_t process = 0;
  std::uint64_t ports = 0;
  double key = 0;
  std::uint64_t new_bytes = 0;
  SimTime bundle_enqueue = 0;
};

struct PortsEntry {
  std::int64_t process = 0;
  std::uint64_t ports = 0;
};

struct RelayEntry {
  std::int64_t process = 0;
  TorId final_dst = 0;
  PortId port = 0;
  std::uint64_t bytes = 0;
};

struct SchedMsg {
  TorId src = 0;
  TorId dst = 0;
  PortId port = 0;
  std::int64_t epoch = 0;
  SmallVec<RequestEntry, 1> requests;
  SmallVec<PortsEntry, 1> grants;
  SmallVec<PortsEntry, 1> accepts;
  SmallVec<RelayEntry, 0> relay_requests;
  SmallVec<RelayEntry, 0> relay_grants;
  SmallVec<RelayEntry, 0> relay_accepts;
  bool has_feedback = false;
  bool feedback_received = false;
  std::int64_t feedback_epoch = 0;
  std::uint64_t failed_egress = 0;
  std::uint64_t failed_ingress = 0;
  bool dummy = false;
  SmallVec<Chunk, 2> payload;

  std::uint32_t payload_bytes() const;
  bool has_content() const;
};

struct DataPacket {
  TorId src = 0;
  TorId dst = 0;
  PortId port = 0;
  SmallVec<Chunk, 2> chunks;
};

enum class TraceKind { Request, Grant, Accept, Piggyback, Data };

struct TraceEvent {
  TraceKind kind;
  std::int64_t epoch;
  TorId src;
  TorId dst;
  PortId port;
  std::int64_t process;
  std::uint64_t bytes;
  SimTime time;
};

// Detects two transmissions landing on the same (dst, port) in one slot.
class ReceiveConflictDetector {
 public:
  ReceiveConflictDetector(std::uint32_t tors, std::uint32_t ports)
      : ports_(ports), stamp_(static_cast<std::size_t>(tors) * ports, 0) {}
  void begin_slot() { ++serial_; }
  // Throws InvariantViolation on a second arrival.
  void arrive(TorId dst, PortId port);

 private:
  std::uint32_t ports_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t serial_ = 0;
};

struct Reservation {
  std::int64_t epoch = -1;
  TorId dst = kIdle;        // next hop
  TorId final_dst = kIdle;  // relay target when dst is an intermediate
  std::uint64_t budget = 0;
};

struct LostChunk {
  Chunk chunk;
  TorId link_dst = 0;
  PortId port = 0;
  bool egress_cause = true;
  bool from_transit = false;
  std::int64_t epoch = 0;
};

struct RelayHold {
  std::int64_t process = 0;
  TorId src = 0;
  TorId final_dst = 0;
  PortId port = 0;
  std::uint64_t bytes = 0;
  bool accepted = false;
  std::int64_t release_epoch = 0;
};

struct OutEntry {
  SmallVec<RequestEntry, 1> requests;
  SmallVec<PortsEntry, 1> grants;
  SmallVec<PortsEntry, 1> accepts;
  SmallVec<RelayEntry, 0> relay_requests;
  SmallVec<RelayEntry, 0> relay_grants;
  SmallVec<RelayEntry, 0> relay_accepts;
};

struct TorState {
  TorId id = 0;
  std::vector<PerDestQueue> queues;
  std::vector<PerDestQueue> transit;
  std::vector<std::uint64_t> transit_outstanding;
  GrantRings grant_rings;
  AcceptRings accept_rings;
  PortHealth health;
  std::vector<std::uint64_t> peer_failed_egress;
  std::vector<std::uint64_t> peer_failed_ingress;
  std::vector<std::int64_t> last_heard;
  std::vector<SchedMsg> inbox;
  std::vector<OutEntry> out;
  std::vector<std::uint64_t> new_bytes;
  StatefulMatrix matrix;
  std::vector<Reservation> reservations;  // (epoch mod horizon) * ports + port
  std::vector<LostChunk> lost;
  std::vector<PortsEntry> src_matched;  // iterative, by process mod horizon
  std::vector<PortsEntry> dst_taken;
  std::vector<RelayHold> relay_holds;
  RandomStream rng;
};

class NegotiatorNetwork : public Fabric {
 public:
  NegotiatorNetwork(Engine& engine, const Topology& topo, NegotiatorOptions opts, Metrics& metrics,
                    PhysicalLinks& links, const RandomStream& rng);

  void start() override;
  void on_flow_arrival(FlowId id, TorId src, TorId dst, std::uint64_t size) override;
  std::uint64_t backlog_bytes() const override;

  const NegotiatorOptions& options() const { return opts_; }
  const TorState& tor(TorId t) const { return tors_[t]; }
  std::int64_t current_epoch() const { return epoch_; }
  SimTime epoch_ns() const { return opts_.epoch.epoch_ns(); }

  void set_trace(std::function<void(const TraceEvent&)> hook) { trace_ = std::move(hook); }
  // Test hook: books a port without negotiation (used to provoke conflicts).
  void debug_reserve(TorId src, std::int64_t epoch, PortId port, TorId dst);

 private:
  void epoch_tick(std::int64_t e);
  void predefined_tick(std::int64_t e, std::uint32_t slot);
  void scheduled_tick(std::int64_t e, std::uint32_t slot);
  void deliver_front();

  void begin_epoch(TorState& t, std::int64_t e);
  void process_inbox(TorState& t, std::int64_t e);
  void detect_faults(TorState& t, std::int64_t x);
  void recredit_lost(TorState& t, std::int64_t e);
  void run_grants(TorState& t, std::int64_t e);
  void run_relay_grants(TorState& t, std::int64_t p, std::uint64_t used_ports);
  void run_accepts(TorState& t, std::int64_t e);
  void emit_requests(TorState& t, std::int64_t e);
  void emit_projector_requests(TorState& t, std::int64_t e);
  void release_relay_holds(TorState& t, std::int64_t e);

  std::uint64_t pending_to(const TorState& t, TorId d) const;
  std::vector<std::uint64_t> direct_load_per_port(const TorState& t) const;
  std::uint64_t usable_egress(const TorState& t) const;
  std::uint64_t usable_ingress(const TorState& t) const;
  Reservation& reservation(TorState& t, std::int64_t epoch, PortId p);
  std::int64_t target_epoch(std::int64_t process) const;
  void drain_direct(TorState& t, TorId d, std::uint64_t max, std::vector<Chunk>& out);
  void record_loss(TorState& t, const Chunk& c, TorId link_dst, PortId port, bool from_transit,
                   std::int64_t e);
  void receive_chunk(TorId receiver, const Chunk& c, SimTime now);
  void emit(TraceKind k, std::int64_t e, TorId s, TorId d, PortId p, std::int64_t proc,
            std::uint64_t bytes);

  struct Batch {
    std::vector<SchedMsg> msgs;
    std::vector<DataPacket> pkts;
  };

  Engine& engine_;
  const Topology& topo_;
  NegotiatorOptions opts_;
  Metrics& metrics_;
  PhysicalLinks& links_;
  std::vector<TorState> tors_;
  std::deque<Batch> in_flight_;
  ReceiveConflictDetector conflicts_;
  std::function<void(const TraceEvent&)> trace_;
  std::vector<std::uint64_t> thresholds_;
  std::uint32_t levels_ = 1;
  std::uint32_t depth_ = 1;
  std::int64_t horizon_ = 1;
  std::int64_t epoch_ = -1;
  std::uint64_t all_ports_ = 0;
  std::uint32_t recredit_timeout_ = 0;
  std::vector<Chunk> scratch_chunks_;

  // Per-epoch scratch, reused across ToRs.
  struct ReqIn {
    TorId src;
    RequestEntry entry;
  };
  struct PortsIn {
    TorId peer;
    PortsEntry entry;
  };
  struct RelayIn {
    TorId peer;
    RelayEntry entry;
  };
  std::vector<ReqIn> req_in_;
  std::vector<PortsIn> grants_in_;
  std::vector<RelayIn> relay_req_in_;
  std::vector<RelayIn> relay_grants_in_;
  std::vector<std::uint32_t> rx_count_;
  std::vector<std::uint32_t> fb_pos_;
  std::vector<std::uint32_t> fb_neg_;
  std::vector<std::uint64_t> req_mask_;
  std::vector<SchedMsg> keep_;
};

}  // namespace negotiator
