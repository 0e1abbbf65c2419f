#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "negotiator/engine.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

enum class MatchingVariant { Base, Iterative, DataSize, HolDelay, Stateful, Relay, Projector };

std::string to_string(MatchingVariant v);
MatchingVariant matching_variant_from_string(const std::string& s);

struct Grant {
  TorId from_dst = 0;
  PortId dst_port = 0;
  TorId to_src = 0;
  std::uint64_t max_relay_bytes = 0;
};

struct Accept {
  TorId src = 0;
  PortId src_port = 0;
  TorId dst = 0;
};

// Demand towards one destination, as seen by the source.
struct DestDemand {
  TorId dst = 0;
  std::vector<std::uint64_t> level_bytes;
  std::vector<SimTime> hol_enqueue;  // per level; meaningful only when level non-empty

  std::uint64_t total() const;
};
using DemandSnapshot = std::vector<DestDemand>;

// Destinations whose pending bytes strictly exceed threshold_pkts * payload_bytes.
std::vector<TorId> generate_requests(const DemandSnapshot& snapshot, std::uint32_t threshold_pkts,
                                     std::uint32_t payload_bytes);

class RingState {
 public:
  RingState() = default;
  // id_space bounds candidate ids, for O(1) position lookup.
  RingState(std::vector<TorId> order, std::uint32_t id_space);
  static RingState shuffled(std::vector<TorId> candidates, std::uint32_t id_space, RandomStream& rng);

  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }
  std::size_t pointer() const { return pointer_; }
  void set_pointer(std::size_t p) { pointer_ = order_.empty() ? 0 : p % order_.size(); }
  TorId at(std::size_t index) const { return order_[index]; }
  const std::vector<TorId>& order() const { return order_; }
  bool contains(TorId id) const { return id < pos_.size() && pos_[id] >= 0; }
  std::size_t position(TorId id) const { return static_cast<std::size_t>(pos_[id]); }
  // Steps from the pointer to id going forward around the ring.
  std::size_t distance(TorId id) const {
    std::size_t p = position(id);
    return p >= pointer_ ? p - pointer_ : p + order_.size() - pointer_;
  }
  TorId head() const { return order_[pointer_]; }
  void advance_past(TorId id) { pointer_ = (position(id) + 1) % order_.size(); }
  void reshuffle(RandomStream& rng);

  // First candidate at or after the pointer satisfying pred.
  template <class Pred>
  std::optional<TorId> first_from_pointer(Pred&& pred) const {
    const std::size_t n = order_.size();
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t idx = pointer_ + i;
      if (idx >= n) idx -= n;
      if (pred(order_[idx])) return order_[idx];
    }
    return std::nullopt;
  }

 private:
  std::vector<TorId> order_;
  std::vector<std::int32_t> pos_;
  std::size_t pointer_ = 0;
};

// GRANT arbitration state of one destination: a single ring shared by all
// ports on a parallel network, one ring per port on thin-clos.
class GrantRings {
 public:
  static GrantRings build(const Topology& topo, TorId self, RandomStream& rng);
  bool shared() const { return shared_; }
  RingState& ring(PortId port) { return shared_ ? rings_[0] : rings_[port]; }
  const RingState& ring(PortId port) const { return shared_ ? rings_[0] : rings_[port]; }
  void rerandomize(RandomStream& rng);

 private:
  bool shared_ = true;
  std::vector<RingState> rings_;
};

// ACCEPT arbitration state of one source: one ring per port.
class AcceptRings {
 public:
  static AcceptRings build(const Topology& topo, TorId self, RandomStream& rng);
  RingState& ring(PortId port) { return rings_[port]; }
  const RingState& ring(PortId port) const { return rings_[port]; }
  void rerandomize(RandomStream& rng);

 private:
  std::vector<RingState> rings_;
};

// Round-robin GRANT. For each port in ascending order pick the first eligible
// requester at or after that port's ring pointer, then move the pointer one
// past it. eligible(src, port) must include "src requested".
template <class Eligible>
void grant_round_robin(TorId self, GrantRings& rings, std::span<const PortId> ports,
                       Eligible&& eligible, std::vector<Grant>& out) {
  for (PortId p : ports) {
    RingState& ring = rings.ring(p);
    if (ring.empty()) continue;
    auto pick = ring.first_from_pointer([&](TorId s) { return eligible(s, p); });
    if (!pick) continue;
    out.push_back(Grant{self, p, *pick, 0});
    ring.advance_past(*pick);
  }
}

std::vector<Grant> grant(TorId self, std::span<const TorId> requesters, GrantRings& rings,
                         std::span<const PortId> ports, const Topology& topo);

// GRANT ordered by descending key (ties by ring order). Requesters absent
// from keys are ineligible. The ring pointer still advances past each grantee.
template <class Eligible>
void grant_by_priority(TorId self, GrantRings& rings, std::span<const PortId> ports,
                       std::span<const std::pair<TorId, double>> keyed, Eligible&& eligible,
                       std::vector<Grant>& out) {
  if (rings.shared()) {
    RingState& ring = rings.ring(0);
    std::vector<std::pair<TorId, double>> order(keyed.begin(), keyed.end());
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return ring.distance(a.first) < ring.distance(b.first);
    });
    std::size_t cursor = 0;
    for (PortId p : ports) {
      for (std::size_t i = 0; i < order.size(); ++i) {
        std::size_t idx = (cursor + i) % order.size();
        if (!eligible(order[idx].first, p)) continue;
        out.push_back(Grant{self, p, order[idx].first, 0});
        ring.advance_past(order[idx].first);
        cursor = idx + 1;
        break;
      }
    }
    return;
  }
  for (PortId p : ports) {
    RingState& ring = rings.ring(p);
    const std::pair<TorId, double>* best = nullptr;
    for (const auto& kv : keyed) {
      if (!ring.contains(kv.first) || !eligible(kv.first, p)) continue;
      if (!best || kv.second > best->second ||
          (kv.second == best->second && ring.distance(kv.first) < ring.distance(best->first))) {
        best = &kv;
      }
    }
    if (!best) continue;
    out.push_back(Grant{self, p, best->first, 0});
    ring.advance_past(best->first);
  }
}

// Round-robin ACCEPT: per source port k, among grants with dst_port k that
// are usable, take the granting destination nearest at or after the pointer.
template <class Usable>
void accept_round_robin(TorId self, AcceptRings& rings, std::span<const PortId> ports,
                        std::span<const Grant> grants, Usable&& usable, std::vector<Accept>& out) {
  for (PortId k : ports) {
    RingState& ring = rings.ring(k);
    const Grant* best = nullptr;
    std::size_t best_dist = 0;
    for (const Grant& g : grants) {
      if (g.dst_port != k || !ring.contains(g.from_dst) || !usable(g)) continue;
      std::size_t d = ring.distance(g.from_dst);
      if (!best || d < best_dist) {
        best = &g;
        best_dist = d;
      }
    }
    if (!best) continue;
    out.push_back(Accept{self, k, best->from_dst});
    ring.advance_past(best->from_dst);
  }
}

std::vector<Accept> accept(TorId self, std::span<const Grant> grants, AcceptRings& rings,
                           std::span<const PortId> ports);

// 1 - (1 - 1/n)^n. Throws std::domain_error for n < 1.
double closed_form_efficiency(double n);

struct McEstimate {
  double mean = 0;
  double std_error = 0;
  std::uint64_t trials = 0;
};

// Random model: each of n destinations grants each of its m ports to a
// uniformly random requester; each (source, port) accepts one of the grants
// it received. Returns the mean fraction of grants accepted per trial.
McEstimate mc_efficiency_oracle(std::uint32_t n, std::uint32_t m, std::uint64_t trials,
                                std::uint64_t seed);

// Follow-up request mask for the next iteration.
inline std::uint64_t follow_up_ports(std::uint64_t all_ports, std::uint64_t matched) {
  return all_ports & ~matched;
}
// Target scheduled phase of a process started at `start`.
inline std::int64_t iterative_target_epoch(std::int64_t start, std::uint32_t iterations,
                                           std::uint32_t depth) {
  return start + 3 * static_cast<std::int64_t>(depth) * (iterations - 1) + 2 * depth;
}

enum class InformativeMode { DataSize, HolDelay };

// DataSize: total pending bytes. HolDelay: (1-a)(hol0+hol1)/2 + a*hol2 in ns,
// where an empty level contributes zero.
double informative_key(InformativeMode mode, const DestDemand& demand, SimTime now, double alpha);
inline double holdelay_key(double hol0, double hol1, double hol2, double alpha) {
  return (1.0 - alpha) * (hol0 + hol1) / 2.0 + alpha * hol2;
}

// Destination-side stateful traffic matrix.
class StatefulMatrix {
 public:
  explicit StatefulMatrix(std::uint32_t tors = 0) : m_(tors, 0) {}

  void on_new_bytes(TorId src, std::uint64_t bytes) { m_[src] += static_cast<std::int64_t>(bytes); }
  bool may_grant(TorId src) const { return m_[src] > 0; }
  // Tentatively deducts min(M[src], capacity); returns the deducted amount.
  std::uint64_t on_grant(std::int64_t process, TorId src, PortId port, std::uint64_t capacity);
  // Commits deductions whose port is in accepted_ports, reverts the rest.
  void on_feedback(std::int64_t process, TorId src, std::uint64_t accepted_ports);
  void on_reject(std::int64_t process, TorId src) { on_feedback(process, src, 0); }
  // Processes older than `before` that never got feedback are reverted.
  void revert_older_than(std::int64_t before);
  std::int64_t value(TorId src) const { return m_[src]; }
  std::size_t outstanding() const { return pending_.size(); }

 private:
  struct Pending {
    std::int64_t process;
    TorId src;
    PortId port;
    std::uint64_t amount;
  };
  std::vector<std::int64_t> m_;
  std::vector<Pending> pending_;
};

struct RelayCandidate {
  TorId intermediate;
  PortId port;
};

// Source side: one candidate intermediate per port other than the direct one,
// skipping ports whose own direct load reaches high_volume. `rotation` picks
// the member of the reached group.
std::vector<RelayCandidate> relay_candidates(const Topology& topo, TorId self, TorId final_dst,
                                             std::span<const std::uint64_t> direct_load_per_port,
                                             std::uint64_t high_volume, std::uint64_t rotation);

// Intermediate side: the second hop must not share its link with the
// intermediate's own high-volume direct traffic.
bool relay_second_hop_ok(const Topology& topo, TorId intermediate, TorId final_dst,
                         std::span<const std::uint64_t> direct_load_per_port,
                         std::uint64_t high_volume);

struct BundleRequest {
  TorId src = 0;
  TorId dst = 0;
  PortId port = 0;
  SimTime enqueue = 0;  // older bundles have smaller timestamps
};

// Destination side: oldest bundle wins the port, ties by ring order.
std::optional<BundleRequest> projector_pick(std::span<const BundleRequest> requests,
                                            const RingState& ring);

}  // namespace negotiator
