#include "negotiator/faults.hpp"

#include <algorithm>
#include <cmath>

namespace negotiator {

std::string to_string(LinkDirection d) { return d == LinkDirection::Egress ? "egress" : "ingress"; }

LinkDirection link_direction_from_string(const std::string& s) {
  if (s == "egress") return LinkDirection::Egress;
  if (s == "ingress") return LinkDirection::Ingress;
  throw ConfigError("fault direction must be egress or ingress, got '" + s + "'");
}

std::vector<LinkFaultEvent> random_fault_set(const Topology& topo, double fraction,
                                             LinkDirection direction, SimTime fail_ns,
                                             SimTime repair_ns, std::uint64_t seed) {
  if (fraction < 0 || fraction > 1) throw ConfigError("fault fraction must be in [0, 1]");
  const std::uint32_t links = topo.tors() * topo.ports();
  auto count = static_cast<std::uint32_t>(std::llround(fraction * links));
  std::vector<std::uint32_t> ids(links);
  for (std::uint32_t i = 0; i < links; ++i) ids[i] = i;
  RandomStream rng(seed);
  rng.shuffle(ids.begin(), ids.end());
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  std::vector<LinkFaultEvent> out;
  for (auto id : ids) {
    out.push_back(LinkFaultEvent{id / topo.ports(), id % topo.ports(), direction, fail_ns, repair_ns});
  }
  return out;
}

PhysicalLinks::PhysicalLinks(std::uint32_t tors, std::uint32_t ports)
    : ports_(ports), egress_(tors * ports, 0), ingress_(tors * ports, 0) {}

void PhysicalLinks::set(TorId tor, PortId port, LinkDirection d, bool down) {
  auto& v = d == LinkDirection::Egress ? egress_ : ingress_;
  auto& c = v.at(tor * ports_ + port);
  if (down) {
    ++c;
    ++down_count_;
  } else if (c > 0) {
    --c;
    --down_count_;
  }
}

void PhysicalLinks::apply_fault(Engine& engine, const LinkFaultEvent& ev) {
  if (ev.repair_ns <= ev.fail_ns) throw ConfigError("fault repair time must follow its fail time");
  if (ev.tor * ports_ + ev.port >= egress_.size() || ev.port >= ports_) {
    throw ConfigError("fault names a link outside the topology");
  }
  engine.schedule(ev.fail_ns, [this, ev] { set(ev.tor, ev.port, ev.direction, true); }, "fault");
  engine.schedule(ev.repair_ns, [this, ev] { set(ev.tor, ev.port, ev.direction, false); }, "repair");
}

void LinkHealthBelief::observe_miss(std::uint32_t k) {
  successes_ = 0;
  if (state_ == LinkHealth::ConfirmedFailed) return;
  ++misses_;
  state_ = misses_ >= k ? LinkHealth::ConfirmedFailed : LinkHealth::SuspectedFailed;
}

void LinkHealthBelief::observe_ok(std::uint32_t k) {
  if (state_ == LinkHealth::ConfirmedFailed) {
    if (++successes_ >= k) {
      state_ = LinkHealth::Healthy;
      successes_ = 0;
      misses_ = 0;
    }
    return;
  }
  misses_ = 0;
  state_ = LinkHealth::Healthy;
}

std::uint64_t PortHealth::failed_egress_mask() const {
  std::uint64_t m = 0;
  for (std::size_t p = 0; p < egress_.size(); ++p) {
    if (egress_[p].failed()) m |= 1ULL << p;
  }
  return m;
}

std::uint64_t PortHealth::failed_ingress_mask() const {
  std::uint64_t m = 0;
  for (std::size_t p = 0; p < ingress_.size(); ++p) {
    if (ingress_[p].failed()) m |= 1ULL << p;
  }
  return m;
}

}  // namespace negotiator
