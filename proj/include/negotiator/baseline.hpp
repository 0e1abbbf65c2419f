#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "negotiator/engine.hpp"
#include "negotiator/fabric.hpp"
#include "negotiator/metrics.hpp"
#include "negotiator/queues.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

struct ObliviousOptions {
  SimTime guard_ns = 10;
  // 0: guard + one data packet at the per-port rate.
  SimTime slot_ns = 0;
  std::uint32_t data_pkt_bytes = 1125;
  std::uint32_t data_hdr_bytes = 10;
  SimTime propagation_ns = 2000;
  // Per intermediate, per final destination.
  std::uint64_t transit_capacity_bytes = 8 * 1115;
  bool priority_queues = true;
  std::vector<std::uint64_t> pq_thresholds{1024, 10240};
  bool rotate_schedule = true;
  // Backlogged final destinations examined per slot when asking the connected
  // intermediate for transit credit.
  std::uint32_t relay_scan_depth = 4;
};

// A piece of a flow. Relay cells take whichever intermediate the rotor offers
// when credit is available there.
struct Cell {
  FlowId flow = 0;
  std::uint64_t offset = 0;
  std::uint32_t bytes = 0;
  TorId final_dst = 0;
  SimTime enqueued = 0;
};

struct CreditEntry {
  TorId final_dst = 0;
  std::uint64_t bytes = 0;
};

struct RotorHeader {
  std::vector<CreditEntry> requests;  // relay bytes the sender wants to push through the receiver
  std::vector<CreditEntry> grants;    // transit space the sender reserves for the receiver
};

struct RotorTransmission {
  TorId src = 0;
  TorId dst = 0;
  PortId port = 0;
  RotorHeader header;
  std::vector<Cell> cells;
};

// Traffic-oblivious rotor fabric with Valiant load balancing.
class ObliviousNetwork : public Fabric {
 public:
  ObliviousNetwork(Engine& engine, const Topology& topo, ObliviousOptions opts, Metrics& metrics,
                   const RandomStream& rng);

  void start() override;
  void on_flow_arrival(FlowId id, TorId src, TorId dst, std::uint64_t size) override;
  std::uint64_t backlog_bytes() const override;

  SimTime slot_ns() const { return slot_ns_; }
  std::uint32_t cell_payload() const { return opts_.data_pkt_bytes - opts_.data_hdr_bytes; }
  const ObliviousOptions& options() const { return opts_; }
  // Largest transit occupancy seen for any (intermediate, final destination).
  std::uint64_t max_transit_occupancy() const { return max_occupancy_; }
  // Cells that left an intermediate towards a ToR other than their final destination.
  std::uint64_t hop_violations() const { return hop_violations_; }
  void set_transmission_hook(std::function<void(const RotorTransmission&, SimTime)> hook) {
    hook_ = std::move(hook);
  }

 private:
  struct CellQueue {
    std::vector<std::deque<Cell>> levels;
    std::uint64_t bytes = 0;
  };
  struct TorState {
    std::vector<std::deque<Cell>> transit;     // by final destination
    std::vector<std::uint64_t> occupancy;      // transit bytes by final destination
    std::vector<std::uint64_t> outstanding;    // granted, not yet arrived, by final destination
    std::vector<CellQueue> direct;             // one-hop cells by destination
    std::vector<CellQueue> relay;              // two-hop cells by final destination
    // Indexed intermediate * tors + final_dst.
    std::vector<std::uint64_t> credit;         // granted by the intermediate, unused
    std::vector<std::uint64_t> requested;      // asked for, not yet granted
    std::vector<std::uint64_t> covered;        // credit + requested over all intermediates, by final
    std::vector<std::vector<TorId>> credited;  // by intermediate: finals with credit
    std::vector<TorId> backlogged;             // finals with relay cells
    std::vector<std::uint8_t> is_backlogged;
    std::vector<std::uint32_t> scan_from;      // by intermediate, position in backlogged
    std::vector<std::vector<CreditEntry>> pending;  // requests received, by requester
    std::uint64_t own_bytes = 0;
    std::uint64_t transit_bytes = 0;
    RandomStream rng;
  };

  void slot_tick(std::int64_t slot);
  void deliver_front();
  void fill(TorState& t, TorId h, RotorTransmission& tx);
  void receive(const RotorTransmission& tx, SimTime now);
  void request_credit(TorState& t, TorId h, RotorTransmission& tx);
  std::uint64_t free_transit(const TorState& t, TorId f) const;

  Engine& engine_;
  const Topology& topo_;
  ObliviousOptions opts_;
  Metrics& metrics_;
  SimTime slot_ns_ = 0;
  std::uint32_t levels_ = 1;
  std::vector<TorState> tors_;
  std::deque<std::vector<RotorTransmission>> in_flight_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t serial_ = 0;
  std::uint64_t max_occupancy_ = 0;
  std::uint64_t hop_violations_ = 0;
  std::function<void(const RotorTransmission&, SimTime)> hook_;
};

}  // namespace negotiator
