#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "negotiator/engine.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

// Ceil of the serialization time of `bytes` at `rate` bits/ns.
SimTime transmit_ns(std::uint64_t bytes, double rate);

struct EpochConfig {
  SimTime guard_ns = 10;
  SimTime predefined_slot_ns = 60;
  std::uint32_t predefined_slots = 16;
  SimTime scheduled_slot_ns = 90;
  std::uint32_t scheduled_slots = 30;
  std::uint32_t sched_msg_bytes = 30;
  std::uint32_t piggyback_payload_bytes = 595;
  std::uint32_t data_pkt_bytes = 1125;
  std::uint32_t data_hdr_bytes = 10;
  std::uint32_t pipeline_depth = 1;
  SimTime propagation_ns = 2000;
  SimTime processing_ns = 0;

  SimTime predefined_phase_ns() const { return predefined_slots * predefined_slot_ns; }
  SimTime scheduled_phase_ns() const { return scheduled_slots * scheduled_slot_ns; }
  SimTime epoch_ns() const { return predefined_phase_ns() + scheduled_phase_ns(); }
  double guard_fraction() const {
    return static_cast<double>(predefined_slots * guard_ns) / static_cast<double>(epoch_ns());
  }
  std::uint32_t data_payload_bytes() const { return data_pkt_bytes - data_hdr_bytes; }
  // Payload one reserved port carries in one scheduled phase.
  std::uint64_t port_epoch_capacity() const {
    return static_cast<std::uint64_t>(scheduled_slots) * data_payload_bytes();
  }
};

// Inputs from which the slot timing is derived.
struct EpochParams {
  SimTime guard_ns = 10;
  std::uint32_t scheduled_slots = 30;
  std::uint32_t sched_msg_bytes = 30;
  std::uint32_t piggyback_payload_bytes = 595;
  std::uint32_t data_pkt_bytes = 1125;
  std::uint32_t data_hdr_bytes = 10;
  std::uint32_t pipeline_depth = 1;
  SimTime propagation_ns = 2000;
  SimTime processing_ns = 0;
  bool piggyback = true;
  // With piggybacking off, grow the scheduled phase so the epoch length of
  // the piggybacking configuration is kept.
  bool keep_epoch_without_piggyback = true;
};

EpochConfig derive_epoch(const EpochParams& params, const Topology& topo);

struct EpochReport {
  SimTime predefined_phase_ns = 0;
  SimTime scheduled_phase_ns = 0;
  SimTime epoch_ns = 0;
  double guard_fraction = 0;
  bool pipeline_feasible = false;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;
};

// Checks slot arithmetic, round length, and the pipeline delay budget.
EpochReport check_epoch(const EpochConfig& cfg, const Topology& topo, bool piggyback = true);

}  // namespace negotiator
