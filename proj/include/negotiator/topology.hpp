#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace negotiator {

using TorId = std::uint32_t;
using PortId = std::uint32_t;

inline constexpr TorId kIdle = std::numeric_limits<TorId>::max();

enum class TopologyKind { ParallelNetwork, ThinClos };

std::string to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& s);

struct TopologySpec {
  TopologyKind kind = TopologyKind::ParallelNetwork;
  std::uint32_t tors = 128;
  std::uint32_t ports = 8;
  std::uint32_t awgr_ports = 16;      // thin-clos only
  double per_port_rate = 100.0;       // bits per ns
};

// One predefined-phase slot: target of every (tor, port), or kIdle.
struct SlotAssignment {
  std::int64_t epoch = 0;
  std::uint32_t slot = 0;
  std::uint32_t ports = 0;
  std::vector<TorId> targets;  // index tor * ports + port

  TorId target(TorId tor, PortId port) const { return targets[tor * ports + port]; }
};

struct Meeting {
  std::uint32_t slot;
  PortId port;
};

class Topology {
 public:
  // Throws ConfigError naming the violated constraint.
  static Topology build(const TopologySpec& spec);

  const TopologySpec& spec() const { return spec_; }
  TopologyKind kind() const { return spec_.kind; }
  std::uint32_t tors() const { return spec_.tors; }
  std::uint32_t ports() const { return spec_.ports; }
  double per_port_rate() const { return spec_.per_port_rate; }

  std::uint32_t awgr_count() const;
  std::uint32_t awgr_size() const;
  // Thin-clos grouping; a parallel network is one group.
  std::uint32_t group_size() const { return group_size_; }
  std::uint32_t groups() const { return spec_.tors / group_size_; }
  std::uint32_t group_of(TorId t) const { return t / group_size_; }

  // AWGR fed by a given transmitter port, and the group it delivers to.
  std::uint32_t awgr_of(TorId tor, PortId port) const;

  bool reachable(TorId src, PortId src_port, TorId dst) const;
  std::vector<PortId> path_ports(TorId src, TorId dst) const;
  // Thin-clos single path port (valid for parallel networks only as port 0).
  PortId path_port(TorId src, TorId dst) const;

  // Slots per all-to-all round.
  std::uint32_t round_length() const { return round_length_; }

  TorId target(std::int64_t epoch, std::uint32_t slot, TorId tor, PortId port,
               bool rotate = true) const;
  // Transmitter that hits (dst, port) in a slot, or kIdle.
  TorId source_for(std::int64_t epoch, std::uint32_t slot, TorId dst, PortId port,
                   bool rotate = true) const;
  // Slot and port carrying src->dst in a given epoch's round.
  Meeting meeting(std::int64_t epoch, TorId src, TorId dst, bool rotate = true) const;

  std::vector<SlotAssignment> predefined_schedule(std::int64_t epoch, bool rotate = true) const;

 private:
  TopologySpec spec_;
  std::uint32_t group_size_ = 1;
  std::uint32_t round_length_ = 0;
};

}  // namespace negotiator
