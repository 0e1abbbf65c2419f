#include "negotiator/matching.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace negotiator {

std::string to_string(MatchingVariant v) {
  switch (v) {
    case MatchingVariant::Base: return "base";
    case MatchingVariant::Iterative: return "iterative";
    case MatchingVariant::DataSize: return "datasize";
    case MatchingVariant::HolDelay: return "holdelay";
    case MatchingVariant::Stateful: return "stateful";
    case MatchingVariant::Relay: return "relay";
    case MatchingVariant::Projector: return "projector";
  }
  return "base";
}

MatchingVariant matching_variant_from_string(const std::string& s) {
  if (s == "base") return MatchingVariant::Base;
  if (s == "iterative") return MatchingVariant::Iterative;
  if (s == "datasize") return MatchingVariant::DataSize;
  if (s == "holdelay") return MatchingVariant::HolDelay;
  if (s == "stateful") return MatchingVariant::Stateful;
  if (s == "relay") return MatchingVariant::Relay;
  if (s == "projector") return MatchingVariant::Projector;
  throw ConfigError("unknown matching.variant '" + s + "'");
}

std::uint64_t DestDemand::total() const {
  return std::accumulate(level_bytes.begin(), level_bytes.end(), std::uint64_t{0});
}

std::vector<TorId> generate_requests(const DemandSnapshot& snapshot, std::uint32_t threshold_pkts,
                                     std::uint32_t payload_bytes) {
  const std::uint64_t threshold = static_cast<std::uint64_t>(threshold_pkts) * payload_bytes;
  std::vector<TorId> out;
  for (const auto& d : snapshot) {
    if (d.total() > threshold) out.push_back(d.dst);
  }
  return out;
}

RingState::RingState(std::vector<TorId> order, std::uint32_t id_space)
    : order_(std::move(order)), pos_(id_space, -1) {
  for (std::size_t i = 0; i < order_.size(); ++i) {
    if (order_[i] >= id_space || pos_[order_[i]] >= 0) {
      throw std::invalid_argument("ring candidates must be distinct ids below id_space");
    }
    pos_[order_[i]] = static_cast<std::int32_t>(i);
  }
}

RingState RingState::shuffled(std::vector<TorId> candidates, std::uint32_t id_space,
                              RandomStream& rng) {
  rng.shuffle(candidates.begin(), candidates.end());
  RingState r(std::move(candidates), id_space);
  if (!r.empty()) r.pointer_ = rng.uniform_index(r.size());
  return r;
}

void RingState::reshuffle(RandomStream& rng) {
  *this = shuffled(order_, static_cast<std::uint32_t>(pos_.size()), rng);
}

GrantRings GrantRings::build(const Topology& topo, TorId self, RandomStream& rng) {
  GrantRings g;
  const std::uint32_t n = topo.tors();
  if (topo.kind() == TopologyKind::ParallelNetwork) {
    g.shared_ = true;
    std::vector<TorId> c;
    for (TorId s = 0; s < n; ++s) {
      if (s != self) c.push_back(s);
    }
    g.rings_.push_back(RingState::shuffled(std::move(c), n, rng));
  } else {
    g.shared_ = false;
    for (PortId k = 0; k < topo.ports(); ++k) {
      std::vector<TorId> c;
      for (TorId s = 0; s < n; ++s) {
        if (topo.reachable(s, k, self)) c.push_back(s);
      }
      g.rings_.push_back(RingState::shuffled(std::move(c), n, rng));
    }
  }
  return g;
}

void GrantRings::rerandomize(RandomStream& rng) {
  for (auto& r : rings_) r.reshuffle(rng);
}

AcceptRings AcceptRings::build(const Topology& topo, TorId self, RandomStream& rng) {
  AcceptRings a;
  for (PortId k = 0; k < topo.ports(); ++k) {
    std::vector<TorId> c;
    for (TorId d = 0; d < topo.tors(); ++d) {
      if (topo.reachable(self, k, d)) c.push_back(d);
    }
    a.rings_.push_back(RingState::shuffled(std::move(c), topo.tors(), rng));
  }
  return a;
}

void AcceptRings::rerandomize(RandomStream& rng) {
  for (auto& r : rings_) r.reshuffle(rng);
}

std::vector<Grant> grant(TorId self, std::span<const TorId> requesters, GrantRings& rings,
                         std::span<const PortId> ports, const Topology& topo) {
  std::vector<char> requested(topo.tors(), 0);
  for (TorId s : requesters) requested[s] = 1;
  std::vector<Grant> out;
  grant_round_robin(
      self, rings, ports,
      [&](TorId s, PortId p) { return requested[s] && topo.reachable(s, p, self); }, out);
  return out;
}

std::vector<Accept> accept(TorId self, std::span<const Grant> grants, AcceptRings& rings,
                           std::span<const PortId> ports) {
  std::vector<Accept> out;
  accept_round_robin(self, rings, ports, grants, [](const Grant&) { return true; }, out);
  return out;
}

double closed_form_efficiency(double n) {
  if (!(n >= 1)) throw std::domain_error("closed_form_efficiency requires n >= 1");
  return 1.0 - std::pow(1.0 - 1.0 / n, n);
}

namespace {

// Counter-based splitmix generator: cheap enough for billions of draws.
struct FastRng {
  std::uint64_t state;
  std::uint64_t next() { return splitmix64(state++); }
  std::uint32_t below(std::uint32_t n) {
    // Lemire's method on 32-bit words with exact rejection.
    std::uint64_t x = next() >> 32;
    std::uint64_t m = x * n;
    auto low = static_cast<std::uint32_t>(m);
    if (low < n) {
      std::uint32_t t = static_cast<std::uint32_t>(-n) % n;
      while (low < t) {
        x = next() >> 32;
        m = x * n;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }
};

}  // namespace

McEstimate mc_efficiency_oracle(std::uint32_t n, std::uint32_t m, std::uint64_t trials,
                                std::uint64_t seed) {
  if (n < 1 || m < 1 || trials < 1) throw std::domain_error("mc_efficiency_oracle: n, m, trials >= 1");
  FastRng rng{splitmix64(seed ^ (static_cast<std::uint64_t>(n) << 32) ^ m)};
  // stamp[src] == tag means bin (src, current column) already holds a grant.
  std::vector<std::uint64_t> stamp(n, 0);
  std::uint64_t tag = 0;
  double sum = 0, sum_sq = 0;
  const double grants = static_cast<double>(n) * m;
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::uint64_t accepted = 0;
    for (std::uint32_t port = 0; port < m; ++port) {
      ++tag;
      for (std::uint32_t d = 0; d < n; ++d) {
        std::uint32_t s = rng.below(n);
        if (stamp[s] != tag) {
          stamp[s] = tag;
          ++accepted;
        }
      }
    }
    double ratio = static_cast<double>(accepted) / grants;
    sum += ratio;
    sum_sq += ratio * ratio;
  }
  McEstimate e;
  e.trials = trials;
  e.mean = sum / static_cast<double>(trials);
  double var = trials > 1 ? (sum_sq - sum * e.mean) / static_cast<double>(trials - 1) : 0.0;
  e.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(trials));
  return e;
}

double informative_key(InformativeMode mode, const DestDemand& demand, SimTime now, double alpha) {
  if (mode == InformativeMode::DataSize) return static_cast<double>(demand.total());
  if (demand.level_bytes.size() != 3 || demand.hol_enqueue.size() != 3) {
    throw ConfigError("holdelay priority requires exactly three priority levels");
  }
  double hol[3];
  for (int i = 0; i < 3; ++i) {
    hol[i] = demand.level_bytes[i] > 0 ? static_cast<double>(now - demand.hol_enqueue[i]) : 0.0;
  }
  return holdelay_key(hol[0], hol[1], hol[2], alpha);
}

std::uint64_t StatefulMatrix::on_grant(std::int64_t process, TorId src, PortId port,
                                       std::uint64_t capacity) {
  std::uint64_t amount =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(std::max<std::int64_t>(m_[src], 0)), capacity);
  m_[src] -= static_cast<std::int64_t>(amount);
  pending_.push_back(Pending{process, src, port, amount});
  return amount;
}

void StatefulMatrix::on_feedback(std::int64_t process, TorId src, std::uint64_t accepted_ports) {
  auto it = pending_.begin();
  while (it != pending_.end()) {
    if (it->process == process && it->src == src) {
      if (!((accepted_ports >> it->port) & 1ULL)) {
        m_[src] += static_cast<std::int64_t>(it->amount);
      } else if (m_[src] < 0) {
        throw InvariantViolation("stateful matrix negative after commit");
      }
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
}

void StatefulMatrix::revert_older_than(std::int64_t before) {
  auto it = pending_.begin();
  while (it != pending_.end()) {
    if (it->process < before) {
      m_[it->src] += static_cast<std::int64_t>(it->amount);
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<RelayCandidate> relay_candidates(const Topology& topo, TorId self, TorId final_dst,
                                             std::span<const std::uint64_t> direct_load_per_port,
                                             std::uint64_t high_volume, std::uint64_t rotation) {
  std::vector<RelayCandidate> out;
  if (topo.kind() != TopologyKind::ThinClos) return out;
  const PortId direct = topo.path_port(self, final_dst);
  const std::uint32_t w = topo.group_size();
  for (PortId k = 0; k < topo.ports(); ++k) {
    if (k == direct || direct_load_per_port[k] >= high_volume) continue;
    std::uint32_t g = (topo.group_of(self) + k) % topo.groups();
    for (std::uint32_t i = 0; i < w; ++i) {
      auto cand = static_cast<TorId>(g * w + (rotation + i) % w);
      if (cand == self || cand == final_dst) continue;
      out.push_back(RelayCandidate{cand, k});
      break;
    }
  }
  return out;
}

bool relay_second_hop_ok(const Topology& topo, TorId intermediate, TorId final_dst,
                         std::span<const std::uint64_t> direct_load_per_port,
                         std::uint64_t high_volume) {
  if (intermediate == final_dst) return false;
  return direct_load_per_port[topo.path_port(intermediate, final_dst)] < high_volume;
}

std::optional<BundleRequest> projector_pick(std::span<const BundleRequest> requests,
                                            const RingState& ring) {
  const BundleRequest* best = nullptr;
  for (const auto& r : requests) {
    if (!best || r.enqueue < best->enqueue ||
        (r.enqueue == best->enqueue && ring.contains(r.src) && ring.contains(best->src) &&
         ring.distance(r.src) < ring.distance(best->src))) {
      best = &r;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace negotiator
