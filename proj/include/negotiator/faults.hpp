#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "negotiator/engine.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

enum class LinkDirection { Egress, Ingress };

std::string to_string(LinkDirection d);
LinkDirection link_direction_from_string(const std::string& s);

struct LinkFaultEvent {
  TorId tor = 0;
  PortId port = 0;
  LinkDirection direction = LinkDirection::Egress;
  SimTime fail_ns = 0;
  SimTime repair_ns = 0;
};

// A random fraction of all (tor, port) links in one direction, failing and
// repairing together.
std::vector<LinkFaultEvent> random_fault_set(const Topology& topo, double fraction,
                                             LinkDirection direction, SimTime fail_ns,
                                             SimTime repair_ns, std::uint64_t seed);

// Physical link state. Transmissions over a down link are silently lost.
class PhysicalLinks {
 public:
  PhysicalLinks(std::uint32_t tors, std::uint32_t ports);

  // Registers fail/repair toggles with the engine.
  void apply_fault(Engine& engine, const LinkFaultEvent& ev);
  void set(TorId tor, PortId port, LinkDirection d, bool down);

  bool egress_down(TorId t, PortId p) const { return egress_[t * ports_ + p] > 0; }
  bool ingress_down(TorId t, PortId p) const { return ingress_[t * ports_ + p] > 0; }
  bool any_down() const { return down_count_ > 0; }
  // Direction to blame for a loss on src:port -> dst:port, if any.
  bool lost(TorId src, TorId dst, PortId port) const {
    return down_count_ > 0 && (egress_down(src, port) || ingress_down(dst, port));
  }

 private:
  std::uint32_t ports_;
  std::vector<std::uint32_t> egress_;
  std::vector<std::uint32_t> ingress_;
  std::uint32_t down_count_ = 0;
};

enum class LinkHealth { Healthy, SuspectedFailed, ConfirmedFailed };

// Per-link belief driven by per-epoch observations.
class LinkHealthBelief {
 public:
  void observe_miss(std::uint32_t k);
  void observe_ok(std::uint32_t k);
  LinkHealth state() const { return state_; }
  bool failed() const { return state_ == LinkHealth::ConfirmedFailed; }
  std::uint32_t misses() const { return misses_; }
  std::uint32_t successes() const { return successes_; }

 private:
  LinkHealth state_ = LinkHealth::Healthy;
  std::uint32_t misses_ = 0;
  std::uint32_t successes_ = 0;
};

// A ToR's view of its own ports.
class PortHealth {
 public:
  explicit PortHealth(std::uint32_t ports = 0) : egress_(ports), ingress_(ports) {}
  LinkHealthBelief& egress(PortId p) { return egress_[p]; }
  LinkHealthBelief& ingress(PortId p) { return ingress_[p]; }
  const LinkHealthBelief& egress(PortId p) const { return egress_[p]; }
  const LinkHealthBelief& ingress(PortId p) const { return ingress_[p]; }
  std::uint64_t failed_egress_mask() const;
  std::uint64_t failed_ingress_mask() const;

 private:
  std::vector<LinkHealthBelief> egress_;
  std::vector<LinkHealthBelief> ingress_;
};

}  // namespace negotiator
