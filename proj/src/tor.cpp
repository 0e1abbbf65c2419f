#include "negotiator/tor.hpp"

#include <algorithm>
#include <tuple>

namespace negotiator {

namespace {

bool bit(std::uint64_t mask, PortId k) { return (mask >> k) & 1ULL; }

template <class V>
void merge_ports(V& entries, std::int64_t process, PortId k) {
  for (auto& e : entries) {
    if (e.process == process) {
      e.ports |= 1ULL << k;
      return;
    }
  }
  entries.push_back(PortsEntry{process, 1ULL << k});
}

}  // namespace

std::uint32_t SchedMsg::payload_bytes() const {
  std::uint32_t n = 0;
  for (const auto& c : payload) n += c.bytes;
  return n;
}

bool SchedMsg::has_content() const {
  return !requests.empty() || !grants.empty() || !accepts.empty() || !relay_requests.empty() ||
         !relay_grants.empty() || !relay_accepts.empty() || !payload.empty();
}

void ReceiveConflictDetector::arrive(TorId dst, PortId port) {
  auto& s = stamp_[static_cast<std::size_t>(dst) * ports_ + port];
  if (s == serial_) {
    throw InvariantViolation("receive conflict: two transmissions reach ToR " + std::to_string(dst) +
                             " port " + std::to_string(port) + " in one slot");
  }
  s = serial_;
}

NegotiatorNetwork::NegotiatorNetwork(Engine& engine, const Topology& topo, NegotiatorOptions opts,
                                     Metrics& metrics, PhysicalLinks& links, const RandomStream& rng)
    : engine_(engine),
      topo_(topo),
      opts_(std::move(opts)),
      metrics_(metrics),
      links_(links),
      conflicts_(topo.tors(), topo.ports()) {
  const auto& ec = opts_.epoch;
  depth_ = ec.pipeline_depth;
  if (depth_ < 1) throw ConfigError("pipeline depth must be >= 1");
  if (opts_.variant != MatchingVariant::Iterative) opts_.iterations = 1;
  if (opts_.iterations < 1) throw ConfigError("matching.iterations must be >= 1");
  if (opts_.variant == MatchingVariant::Relay && topo.kind() != TopologyKind::ThinClos) {
    throw ConfigError("matching.variant relay requires the thin-clos topology");
  }
  if (opts_.priority_queues) {
    thresholds_ = opts_.pq_thresholds;
    if (!std::is_sorted(thresholds_.begin(), thresholds_.end())) {
      throw ConfigError("pq.thresholds must be ascending");
    }
  }
  levels_ = static_cast<std::uint32_t>(thresholds_.size()) + 1;
  if (opts_.variant == MatchingVariant::HolDelay && levels_ != 3) {
    throw ConfigError("matching.variant holdelay requires three priority levels");
  }
  horizon_ = 3 * static_cast<std::int64_t>(depth_) * (opts_.iterations - 1) + 2 * depth_ + 2;
  const std::uint32_t s = topo.ports();
  all_ports_ = s >= 64 ? ~0ULL : (1ULL << s) - 1;
  recredit_timeout_ = opts_.recredit_timeout_epochs
                          ? opts_.recredit_timeout_epochs
                          : opts_.k_detect + 2 * depth_ + 2;
  const std::uint32_t n = topo.tors();
  tors_.resize(n);
  for (TorId t = 0; t < n; ++t) {
    TorState& T = tors_[t];
    T.id = t;
    T.rng = rng.derive(t);
    T.grant_rings = GrantRings::build(topo, t, T.rng);
    T.accept_rings = AcceptRings::build(topo, t, T.rng);
    T.queues.assign(n, PerDestQueue(levels_));
    if (opts_.variant == MatchingVariant::Relay) {
      T.transit.assign(n, PerDestQueue(1));
      T.transit_outstanding.assign(n, 0);
    }
    T.health = PortHealth(s);
    T.peer_failed_egress.assign(n, 0);
    T.peer_failed_ingress.assign(n, 0);
    T.last_heard.assign(n, -1);
    T.out.resize(n);
    T.new_bytes.assign(n, 0);
    if (opts_.variant == MatchingVariant::Stateful) T.matrix = StatefulMatrix(n);
    T.reservations.assign(static_cast<std::size_t>(horizon_) * s, Reservation{});
    if (opts_.variant == MatchingVariant::Iterative) {
      T.src_matched.assign(static_cast<std::size_t>(horizon_), PortsEntry{-1, 0});
      T.dst_taken.assign(static_cast<std::size_t>(horizon_), PortsEntry{-1, 0});
    }
  }
  rx_count_.assign(s, 0);
  fb_pos_.assign(s, 0);
  fb_neg_.assign(s, 0);
  req_mask_.assign(n, 0);
}

void NegotiatorNetwork::start() {
  engine_.schedule(0, [this] { epoch_tick(0); }, "epoch");
}

void NegotiatorNetwork::on_flow_arrival(FlowId id, TorId src, TorId dst, std::uint64_t size) {
  if (src == dst || src >= tors_.size() || dst >= tors_.size()) {
    throw InvariantViolation("flow endpoints invalid");
  }
  TorState& T = tors_[src];
  T.queues[dst].push_flow(id, size, engine_.now(), thresholds_);
  T.new_bytes[dst] += size;
}

std::uint64_t NegotiatorNetwork::backlog_bytes() const {
  std::uint64_t b = 0;
  for (const auto& T : tors_) {
    for (const auto& q : T.queues) b += q.total();
    for (const auto& q : T.transit) b += q.total();
    for (const auto& l : T.lost) b += l.chunk.bytes;
  }
  return b;
}

void NegotiatorNetwork::debug_reserve(TorId src, std::int64_t epoch, PortId port, TorId dst) {
  reservation(tors_[src], epoch, port) = Reservation{epoch, dst, kIdle, 0};
}

Reservation& NegotiatorNetwork::reservation(TorState& t, std::int64_t epoch, PortId p) {
  return t.reservations[static_cast<std::size_t>(epoch % horizon_) * topo_.ports() + p];
}

std::int64_t NegotiatorNetwork::target_epoch(std::int64_t process) const {
  return iterative_target_epoch(process, opts_.iterations, depth_);
}

std::uint64_t NegotiatorNetwork::pending_to(const TorState& t, TorId d) const {
  std::uint64_t b = t.queues[d].total();
  if (!t.transit.empty()) b += t.transit[d].total();
  return b;
}

std::vector<std::uint64_t> NegotiatorNetwork::direct_load_per_port(const TorState& t) const {
  std::vector<std::uint64_t> load(topo_.ports(), 0);
  for (TorId d = 0; d < topo_.tors(); ++d) {
    if (d == t.id) continue;
    load[topo_.path_port(t.id, d)] += pending_to(t, d);
  }
  return load;
}

std::uint64_t NegotiatorNetwork::usable_egress(const TorState& t) const {
  return all_ports_ & ~t.health.failed_egress_mask();
}

std::uint64_t NegotiatorNetwork::usable_ingress(const TorState& t) const {
  return all_ports_ & ~t.health.failed_ingress_mask();
}

void NegotiatorNetwork::emit(TraceKind k, std::int64_t e, TorId s, TorId d, PortId p,
                             std::int64_t proc, std::uint64_t bytes) {
  if (trace_) trace_(TraceEvent{k, e, s, d, p, proc, bytes, engine_.now()});
}

void NegotiatorNetwork::epoch_tick(std::int64_t e) {
  epoch_ = e;
  for (auto& T : tors_) begin_epoch(T, e);
  predefined_tick(e, 0);
}

void NegotiatorNetwork::begin_epoch(TorState& T, std::int64_t e) {
  if (opts_.rerandomize_rings) {
    T.grant_rings.rerandomize(T.rng);
    T.accept_rings.rerandomize(T.rng);
  }
  process_inbox(T, e);
  if (e - static_cast<std::int64_t>(depth_) >= 0) detect_faults(T, e - depth_);
  recredit_lost(T, e);
  if (opts_.variant == MatchingVariant::Stateful) {
    T.matrix.revert_older_than(e - 3 * static_cast<std::int64_t>(depth_) + 1);
  }
  if (opts_.variant == MatchingVariant::Relay) release_relay_holds(T, e);
  run_grants(T, e);
  run_accepts(T, e);
  emit_requests(T, e);
}

void NegotiatorNetwork::process_inbox(TorState& T, std::int64_t e) {
  const std::int64_t x = e - depth_;
  std::fill(rx_count_.begin(), rx_count_.end(), 0);
  std::fill(fb_pos_.begin(), fb_pos_.end(), 0);
  std::fill(fb_neg_.begin(), fb_neg_.end(), 0);
  req_in_.clear();
  grants_in_.clear();
  relay_req_in_.clear();
  relay_grants_in_.clear();
  keep_.clear();
  for (auto& m : T.inbox) {
    if (m.epoch > x) {
      keep_.push_back(std::move(m));
      continue;
    }
    const TorId s = m.src;
    T.last_heard[s] = m.epoch;
    if (m.epoch == x) ++rx_count_[m.port];
    T.peer_failed_egress[s] = m.failed_egress;
    T.peer_failed_ingress[s] = m.failed_ingress;
    if (m.has_feedback) {
      PortId p = topo_.meeting(m.feedback_epoch, T.id, s, opts_.rotate_schedule).port;
      if (m.feedback_received) {
        ++fb_pos_[p];
      } else {
        ++fb_neg_[p];
      }
    }
    for (const auto& r : m.requests) req_in_.push_back(ReqIn{s, r});
    for (const auto& g : m.grants) grants_in_.push_back(PortsIn{s, g});
    for (const auto& a : m.accepts) {
      if (opts_.variant == MatchingVariant::Stateful) T.matrix.on_feedback(a.process, s, a.ports);
      if (opts_.variant == MatchingVariant::Iterative) {
        auto& slot = T.dst_taken[static_cast<std::size_t>(a.process % horizon_)];
        if (slot.process != a.process) slot = PortsEntry{a.process, 0};
        slot.ports |= a.ports;
      }
    }
    for (const auto& r : m.relay_requests) relay_req_in_.push_back(RelayIn{s, r});
    for (const auto& r : m.relay_grants) relay_grants_in_.push_back(RelayIn{s, r});
    for (const auto& r : m.relay_accepts) {
      for (auto& h : T.relay_holds) {
        if (h.process == r.process && h.src == s && h.port == r.port && !h.accepted) {
          h.accepted = true;
          h.release_epoch = target_epoch(h.process) + depth_ + 1;
          break;
        }
      }
    }
  }
  T.inbox.swap(keep_);
  keep_.clear();
}

void NegotiatorNetwork::detect_faults(TorState& T, std::int64_t x) {
  const std::uint32_t k_detect = opts_.k_detect;
  for (PortId k = 0; k < topo_.ports(); ++k) {
    std::uint32_t expected = 0;
    for (std::uint32_t j = 0; j < topo_.round_length(); ++j) {
      TorId s = topo_.source_for(x, j, T.id, k, opts_.rotate_schedule);
      if (s != kIdle && !bit(T.peer_failed_egress[s], k)) ++expected;
    }
    if (expected > 0) {
      auto& b = T.health.ingress(k);
      bool was = b.failed();
      if (rx_count_[k] > 0) {
        b.observe_ok(k_detect);
      } else {
        b.observe_miss(k_detect);
      }
      if (!was && b.failed() && !links_.ingress_down(T.id, k)) ++metrics_.counters().false_detections;
    }
    auto& eb = T.health.egress(k);
    bool was = eb.failed();
    if (fb_pos_[k] > 0) {
      eb.observe_ok(k_detect);
    } else if (fb_neg_[k] > 0) {
      eb.observe_miss(k_detect);
    }
    if (!was && eb.failed() && !links_.egress_down(T.id, k)) ++metrics_.counters().false_detections;
  }
}

void NegotiatorNetwork::recredit_lost(TorState& T, std::int64_t e) {
  if (T.lost.empty()) return;
  std::vector<LostChunk> keep;
  std::vector<LostChunk> back;
  for (auto& l : T.lost) {
    bool believed = l.egress_cause ? T.health.egress(l.port).failed()
                                   : bit(T.peer_failed_ingress[l.link_dst], l.port);
    if (believed || e - l.epoch >= static_cast<std::int64_t>(recredit_timeout_)) {
      back.push_back(l);
    } else {
      keep.push_back(l);
    }
  }
  // Reverse order so the earliest loss ends up at the head.
  for (auto it = back.rbegin(); it != back.rend(); ++it) {
    const Chunk& c = it->chunk;
    Segment seg{c.flow, c.offset, c.bytes, c.enqueued};
    if (it->from_transit) {
      T.transit[it->link_dst].push_front(0, seg);
    } else if (c.final_dst != kIdle) {
      T.queues[c.final_dst].push_front(c.level, seg);
    } else {
      T.queues[it->link_dst].push_front(c.level, seg);
    }
    metrics_.counters().recredited_bytes += c.bytes;
  }
  T.lost.swap(keep);
}

void NegotiatorNetwork::release_relay_holds(TorState& T, std::int64_t e) {
  const std::int64_t feedback_due = e - 3 * static_cast<std::int64_t>(depth_);
  auto it = T.relay_holds.begin();
  while (it != T.relay_holds.end()) {
    bool release = it->accepted ? it->release_epoch <= e : it->process <= feedback_due;
    if (release) {
      T.transit_outstanding[it->final_dst] -= it->bytes;
      it = T.relay_holds.erase(it);
    } else {
      ++it;
    }
  }
}

void NegotiatorNetwork::run_grants(TorState& T, std::int64_t e) {
  if (req_in_.empty() && relay_req_in_.empty()) return;
  const std::uint64_t ingress_ok = usable_ingress(T);
  const std::uint32_t s = topo_.ports();
  const std::uint64_t cap = opts_.epoch.port_epoch_capacity();
  std::vector<Grant> grants;
  std::vector<std::int64_t> grant_process;

  auto push = [&](std::int64_t p, std::size_t before) {
    for (std::size_t i = before; i < grants.size(); ++i) grant_process.push_back(p);
  };

  if (opts_.variant == MatchingVariant::Projector) {
    std::vector<BundleRequest> on_port;
    for (PortId k = 0; k < s; ++k) {
      if (!bit(ingress_ok, k)) continue;
      on_port.clear();
      std::int64_t proc = e - depth_;
      for (const auto& r : req_in_) {
        if (!bit(r.entry.ports, k) || bit(T.peer_failed_egress[r.src], k)) continue;
        if (!topo_.reachable(r.src, k, T.id)) continue;
        on_port.push_back(BundleRequest{r.src, T.id, k, r.entry.bundle_enqueue});
        proc = r.entry.process;
      }
      RingState& ring = T.grant_rings.ring(k);
      auto pick = projector_pick(on_port, ring);
      if (!pick) continue;
      grants.push_back(Grant{T.id, k, pick->src, 0});
      grant_process.push_back(proc);
      ring.advance_past(pick->src);
    }
  } else if (opts_.variant == MatchingVariant::DataSize ||
             opts_.variant == MatchingVariant::HolDelay) {
    std::vector<std::pair<TorId, double>> keyed;
    std::int64_t proc = e - depth_;
    for (const auto& r : req_in_) {
      keyed.emplace_back(r.src, r.entry.key);
      proc = r.entry.process;
    }
    std::vector<PortId> ports;
    for (PortId k = 0; k < s; ++k) {
      if (bit(ingress_ok, k)) ports.push_back(k);
    }
    grant_by_priority(
        T.id, T.grant_rings, ports, keyed,
        [&](TorId src, PortId k) { return !bit(T.peer_failed_egress[src], k); }, grants);
    push(proc, 0);
  } else {
    // Group by process, oldest first.
    std::vector<std::int64_t> procs;
    for (const auto& r : req_in_) {
      if (std::find(procs.begin(), procs.end(), r.entry.process) == procs.end()) {
        procs.push_back(r.entry.process);
      }
    }
    std::sort(procs.begin(), procs.end());
    const bool stateful = opts_.variant == MatchingVariant::Stateful;
    const bool iterative = opts_.variant == MatchingVariant::Iterative;
    for (std::int64_t p : procs) {
      std::vector<TorId> touched;
      for (const auto& r : req_in_) {
        if (r.entry.process != p) continue;
        if (stateful) T.matrix.on_new_bytes(r.src, r.entry.new_bytes);
        req_mask_[r.src] |= r.entry.ports;
        touched.push_back(r.src);
      }
      std::uint64_t avail = ingress_ok;
      if (iterative) {
        const auto& slot = T.dst_taken[static_cast<std::size_t>(p % horizon_)];
        if (slot.process == p) avail &= ~slot.ports;
      }
      std::uint64_t used = 0;
      const std::size_t before = grants.size();
      for (PortId k = 0; k < s; ++k) {
        if (!bit(avail, k)) continue;
        RingState& ring = T.grant_rings.ring(k);
        if (ring.empty()) continue;
        auto pick = ring.first_from_pointer([&](TorId src) {
          return bit(req_mask_[src], k) && !bit(T.peer_failed_egress[src], k) &&
                 (!stateful || T.matrix.may_grant(src));
        });
        if (!pick) continue;
        grants.push_back(Grant{T.id, k, *pick, 0});
        ring.advance_past(*pick);
        used |= 1ULL << k;
        if (stateful) T.matrix.on_grant(p, *pick, k, cap);
      }
      push(p, before);
      for (TorId src : touched) req_mask_[src] = 0;
      if (opts_.variant == MatchingVariant::Relay && p == e - static_cast<std::int64_t>(depth_)) {
        run_relay_grants(T, p, used);
      }
    }
    if (procs.empty() && opts_.variant == MatchingVariant::Relay) {
      run_relay_grants(T, e - depth_, 0);
    }
  }

  for (std::size_t i = 0; i < grants.size(); ++i) {
    const Grant& g = grants[i];
    merge_ports(T.out[g.to_src].grants, grant_process[i], g.dst_port);
    emit(TraceKind::Grant, e, T.id, g.to_src, g.dst_port, grant_process[i], 0);
  }
  if (!grants.empty()) metrics_.on_grants(e, grants.size());
}

void NegotiatorNetwork::run_relay_grants(TorState& T, std::int64_t p, std::uint64_t used) {
  if (relay_req_in_.empty()) return;
  const std::uint64_t ingress_ok = usable_ingress(T);
  const std::uint64_t cap = opts_.epoch.port_epoch_capacity();
  const auto load = direct_load_per_port(T);
  for (const auto& r : relay_req_in_) {
    const RelayEntry& q = r.entry;
    if (q.process != p) continue;
    const PortId k = q.port;
    if (bit(used, k) || !bit(ingress_ok, k) || bit(T.peer_failed_egress[r.peer], k)) continue;
    if (!topo_.reachable(r.peer, k, T.id)) continue;
    if (!relay_second_hop_ok(topo_, T.id, q.final_dst, load, opts_.high_volume_bytes)) continue;
    const std::uint64_t occupied = T.transit[q.final_dst].total() + T.transit_outstanding[q.final_dst];
    if (occupied >= opts_.relay_transit_capacity_bytes) continue;
    const std::uint64_t spare = opts_.relay_transit_capacity_bytes - occupied;
    const std::uint64_t amount = std::min({q.bytes, spare, cap});
    if (amount == 0) continue;
    T.transit_outstanding[q.final_dst] += amount;
    T.relay_holds.push_back(RelayHold{p, r.peer, q.final_dst, k, amount, false, 0});
    T.out[r.peer].relay_grants.push_back(RelayEntry{p, q.final_dst, k, amount});
    used |= 1ULL << k;
  }
}

void NegotiatorNetwork::run_accepts(TorState& T, std::int64_t e) {
  if (grants_in_.empty() && relay_grants_in_.empty()) return;
  const std::uint64_t egress_ok = usable_egress(T);
  const std::uint32_t s = topo_.ports();
  std::vector<std::int64_t> procs;
  for (const auto& g : grants_in_) {
    if (std::find(procs.begin(), procs.end(), g.entry.process) == procs.end()) {
      procs.push_back(g.entry.process);
    }
  }
  for (const auto& g : relay_grants_in_) {
    if (std::find(procs.begin(), procs.end(), g.entry.process) == procs.end()) {
      procs.push_back(g.entry.process);
    }
  }
  std::sort(procs.begin(), procs.end());
  std::vector<Grant> grants;
  std::vector<Accept> accepts;
  std::vector<PortId> ports;
  std::uint64_t accepted_total = 0;
  for (std::int64_t p : procs) {
    const std::int64_t target = target_epoch(p);
    ports.clear();
    for (PortId k = 0; k < s; ++k) {
      if (!bit(egress_ok, k)) continue;
      if (reservation(T, target, k).epoch == target) continue;
      ports.push_back(k);
    }
    grants.clear();
    for (const auto& g : grants_in_) {
      if (g.entry.process != p) continue;
      for (PortId k = 0; k < s; ++k) {
        if (bit(g.entry.ports, k)) grants.push_back(Grant{g.peer, k, T.id, 0});
      }
    }
    accepts.clear();
    accept_round_robin(
        T.id, T.accept_rings, ports, grants,
        [&](const Grant& g) { return !bit(T.peer_failed_ingress[g.from_dst], g.dst_port); }, accepts);
    for (const auto& a : accepts) {
      reservation(T, target, a.src_port) = Reservation{target, a.dst, kIdle, 0};
      merge_ports(T.out[a.dst].accepts, p, a.src_port);
      if (opts_.variant == MatchingVariant::Iterative) {
        auto& slot = T.src_matched[static_cast<std::size_t>(p % horizon_)];
        if (slot.process != p) slot = PortsEntry{p, 0};
        slot.ports |= 1ULL << a.src_port;
      }
      emit(TraceKind::Accept, e, T.id, a.dst, a.src_port, p, 0);
    }
    accepted_total += accepts.size();
    for (const auto& r : relay_grants_in_) {
      const RelayEntry& g = r.entry;
      if (g.process != p) continue;
      const PortId k = g.port;
      if (!bit(egress_ok, k) || bit(T.peer_failed_ingress[r.peer], k)) continue;
      Reservation& res = reservation(T, target, k);
      if (res.epoch == target) continue;
      res = Reservation{target, r.peer, g.final_dst, g.bytes};
      T.out[r.peer].relay_accepts.push_back(g);
    }
  }
  if (accepted_total > 0) metrics_.on_accepts(e - depth_, accepted_total);
}

void NegotiatorNetwork::emit_requests(TorState& T, std::int64_t e) {
  if (opts_.variant == MatchingVariant::Projector) {
    emit_projector_requests(T, e);
    return;
  }
  const std::uint64_t threshold =
      static_cast<std::uint64_t>(opts_.request_threshold_pkts) * opts_.epoch.piggyback_payload_bytes;
  const std::uint64_t egress = usable_egress(T);
  if (egress == 0) return;
  const SimTime now = engine_.now();
  const bool relay = opts_.variant == MatchingVariant::Relay;
  std::vector<std::uint64_t> load;
  for (TorId d = 0; d < topo_.tors(); ++d) {
    if (d == T.id) continue;
    const std::uint64_t pend = pending_to(T, d);
    if (pend <= threshold) continue;
    RequestEntry r;
    r.process = e;
    r.ports = opts_.variant == MatchingVariant::Iterative ? egress : all_ports_;
    switch (opts_.variant) {
      case MatchingVariant::DataSize:
        r.key = static_cast<double>(pend);
        break;
      case MatchingVariant::HolDelay: {
        const auto& q = T.queues[d];
        double hol[3];
        for (std::uint32_t l = 0; l < 3; ++l) {
          hol[l] = q.level_bytes(l) > 0 ? static_cast<double>(now - q.hol_enqueue(l)) : 0.0;
        }
        r.key = holdelay_key(hol[0], hol[1], hol[2], opts_.alpha);
        break;
      }
      case MatchingVariant::Stateful:
        r.new_bytes = T.new_bytes[d];
        T.new_bytes[d] = 0;
        break;
      default:
        break;
    }
    T.out[d].requests.push_back(r);
    emit(TraceKind::Request, e, T.id, d, 0, e, pend);
    if (relay && T.queues[d].level_bytes(levels_ - 1) > opts_.relay_threshold_bytes) {
      if (load.empty()) load = direct_load_per_port(T);
      const std::uint64_t bytes = T.queues[d].level_bytes(levels_ - 1);
      for (const auto& c : relay_candidates(topo_, T.id, d, load, opts_.high_volume_bytes,
                                            static_cast<std::uint64_t>(e) + d)) {
        if (!bit(egress, c.port)) continue;
        T.out[c.intermediate].relay_requests.push_back(RelayEntry{e, d, c.port, bytes});
      }
    }
  }
  if (opts_.variant != MatchingVariant::Iterative) return;
  for (std::uint32_t round = 2; round <= opts_.iterations; ++round) {
    const std::int64_t p = e - 3 * static_cast<std::int64_t>(depth_) * (round - 1);
    if (p < 0) continue;
    const std::int64_t target = target_epoch(p);
    std::uint64_t mask = egress;
    const auto& slot = T.src_matched[static_cast<std::size_t>(p % horizon_)];
    if (slot.process == p) mask &= ~slot.ports;
    for (PortId k = 0; k < topo_.ports(); ++k) {
      if (reservation(T, target, k).epoch == target) mask &= ~(1ULL << k);
    }
    if (mask == 0) continue;
    for (TorId d = 0; d < topo_.tors(); ++d) {
      if (d == T.id || pending_to(T, d) <= threshold) continue;
      RequestEntry r;
      r.process = p;
      r.ports = mask;
      T.out[d].requests.push_back(r);
    }
  }
}

void NegotiatorNetwork::emit_projector_requests(TorState& T, std::int64_t e) {
  const std::uint64_t threshold =
      static_cast<std::uint64_t>(opts_.request_threshold_pkts) * opts_.epoch.piggyback_payload_bytes;
  const std::uint64_t bundle = opts_.epoch.port_epoch_capacity();
  const std::uint64_t egress = usable_egress(T);
  const std::uint32_t s = topo_.ports();
  std::vector<std::tuple<SimTime, TorId, std::uint32_t>> bundles;
  for (TorId d = 0; d < topo_.tors(); ++d) {
    if (d == T.id) continue;
    const std::uint64_t pend = T.queues[d].total();
    if (pend <= threshold) continue;
    auto count = static_cast<std::uint32_t>(std::min<std::uint64_t>((pend + bundle - 1) / bundle, s));
    for (std::uint32_t b = 0; b < count; ++b) {
      bundles.emplace_back(T.queues[d].enqueue_at(b * bundle), d, b);
    }
  }
  std::sort(bundles.begin(), bundles.end());
  std::vector<char> used(bundles.size(), 0);
  for (PortId k = 0; k < s; ++k) {
    if (!bit(egress, k)) continue;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      if (used[i]) continue;
      const TorId d = std::get<1>(bundles[i]);
      if (!topo_.reachable(T.id, k, d)) continue;
      used[i] = 1;
      RequestEntry r;
      r.process = e;
      r.ports = 1ULL << k;
      r.bundle_enqueue = std::get<0>(bundles[i]);
      T.out[d].requests.push_back(r);
      emit(TraceKind::Request, e, T.id, d, k, e, 0);
      break;
    }
  }
}

void NegotiatorNetwork::drain_direct(TorState& T, TorId d, std::uint64_t max,
                                     std::vector<Chunk>& out) {
  std::uint64_t taken = 0;
  if (!T.transit.empty() && !T.transit[d].empty()) {
    std::size_t first = out.size();
    taken = T.transit[d].drain(max, out);
    for (std::size_t i = first; i < out.size(); ++i) out[i].from_transit = true;
  }
  if (taken < max) T.queues[d].drain(max - taken, out);
}

void NegotiatorNetwork::record_loss(TorState& T, const Chunk& c, TorId link_dst, PortId port,
                                    bool from_transit, std::int64_t e) {
  LostChunk l;
  l.chunk = c;
  l.link_dst = link_dst;
  l.port = port;
  l.egress_cause = links_.egress_down(T.id, port);
  l.from_transit = from_transit;
  l.epoch = e;
  T.lost.push_back(l);
  metrics_.counters().lost_bytes += c.bytes;
}

void NegotiatorNetwork::predefined_tick(std::int64_t e, std::uint32_t slot) {
  const SimTime now = engine_.now();
  const auto& ec = opts_.epoch;
  const std::uint32_t s = topo_.ports();
  Batch batch;
  batch.msgs.reserve(static_cast<std::size_t>(topo_.tors()) * s);
  auto& ctr = metrics_.counters();
  for (auto& T : tors_) {
    const std::uint64_t fe = T.health.failed_egress_mask();
    const std::uint64_t fi = T.health.failed_ingress_mask();
    for (PortId p = 0; p < s; ++p) {
      const TorId d = topo_.target(e, slot, T.id, p, opts_.rotate_schedule);
      if (d == kIdle) continue;
      SchedMsg m;
      m.src = T.id;
      m.dst = d;
      m.port = p;
      m.epoch = e;
      OutEntry& o = T.out[d];
      m.requests.swap(o.requests);
      m.grants.swap(o.grants);
      m.accepts.swap(o.accepts);
      m.relay_requests.swap(o.relay_requests);
      m.relay_grants.swap(o.relay_grants);
      m.relay_accepts.swap(o.relay_accepts);
      o.requests.clear();
      o.grants.clear();
      o.accepts.clear();
      o.relay_requests.clear();
      o.relay_grants.clear();
      o.relay_accepts.clear();
      if (e - static_cast<std::int64_t>(depth_) >= 0) {
        m.has_feedback = true;
        m.feedback_epoch = e - depth_;
        m.feedback_received = T.last_heard[d] == e - static_cast<std::int64_t>(depth_);
      }
      m.failed_egress = fe;
      m.failed_ingress = fi;
      if (ec.piggyback_payload_bytes > 0 && pending_to(T, d) > 0) {
        if (bit(fe, p) || bit(T.peer_failed_ingress[d], p)) {
          ++ctr.suppressed_piggybacks;
        } else {
          scratch_chunks_.clear();
          drain_direct(T, d, ec.piggyback_payload_bytes, scratch_chunks_);
          m.payload.assign(scratch_chunks_.begin(), scratch_chunks_.end());
        }
      }
      m.dummy = !m.has_content();
      ++ctr.messages_sent;
      if (m.dummy) ++ctr.dummy_messages;
      const std::uint32_t pb = m.payload_bytes();
      ctr.piggyback_bytes += pb;
      if (pb > 0) {
        if (metrics_.tracing_pair(T.id, d)) metrics_.on_pair_bytes(e, pb);
        emit(TraceKind::Piggyback, e, T.id, d, p, -1, pb);
      }
      if (links_.lost(T.id, d, p)) {
        ++ctr.lost_transmissions;
        for (const auto& c : m.payload) record_loss(T, c, d, p, c.from_transit, e);
        continue;
      }
      batch.msgs.push_back(std::move(m));
    }
  }
  in_flight_.push_back(std::move(batch));
  engine_.schedule(now + ec.predefined_slot_ns + ec.propagation_ns, [this] { deliver_front(); },
                   "deliver");
  if (slot + 1 < ec.predefined_slots) {
    engine_.schedule(now + ec.predefined_slot_ns, [this, e, slot] { predefined_tick(e, slot + 1); },
                     "predefined");
  } else {
    engine_.schedule(now + ec.predefined_slot_ns, [this, e] { scheduled_tick(e, 0); }, "scheduled");
  }
}

void NegotiatorNetwork::scheduled_tick(std::int64_t e, std::uint32_t slot) {
  const SimTime now = engine_.now();
  const auto& ec = opts_.epoch;
  const std::uint32_t s = topo_.ports();
  const std::uint32_t payload = ec.data_payload_bytes();
  auto& ctr = metrics_.counters();
  Batch batch;
  for (auto& T : tors_) {
    for (PortId p = 0; p < s; ++p) {
      Reservation& r = reservation(T, e, p);
      if (r.epoch != e || r.dst == kIdle) continue;
      scratch_chunks_.clear();
      if (r.final_dst == kIdle) {
        drain_direct(T, r.dst, payload, scratch_chunks_);
      } else {
        std::uint64_t want = std::min<std::uint64_t>(payload, r.budget);
        if (want > 0) {
          std::uint64_t got = T.queues[r.final_dst].drain(want, scratch_chunks_,
                                                          static_cast<int>(levels_ - 1));
          r.budget -= got;
          for (auto& c : scratch_chunks_) c.final_dst = r.final_dst;
        }
      }
      if (scratch_chunks_.empty()) continue;
      std::uint64_t bytes = 0;
      for (const auto& c : scratch_chunks_) bytes += c.bytes;
      ctr.scheduled_bytes += bytes;
      if (r.final_dst == kIdle && metrics_.tracing_pair(T.id, r.dst)) metrics_.on_pair_bytes(e, bytes);
      emit(TraceKind::Data, e, T.id, r.dst, p, -1, bytes);
      if (links_.lost(T.id, r.dst, p)) {
        ++ctr.lost_transmissions;
        for (const auto& c : scratch_chunks_) record_loss(T, c, r.dst, p, c.from_transit, e);
        continue;
      }
      DataPacket pkt;
      pkt.src = T.id;
      pkt.dst = r.dst;
      pkt.port = p;
      pkt.chunks.assign(scratch_chunks_.begin(), scratch_chunks_.end());
      batch.pkts.push_back(std::move(pkt));
    }
  }
  if (!batch.pkts.empty()) {
    in_flight_.push_back(std::move(batch));
    engine_.schedule(now + ec.scheduled_slot_ns + ec.propagation_ns, [this] { deliver_front(); },
                     "deliver");
  }
  if (slot + 1 < ec.scheduled_slots) {
    engine_.schedule(now + ec.scheduled_slot_ns, [this, e, slot] { scheduled_tick(e, slot + 1); },
                     "scheduled");
  } else {
    engine_.schedule(now + ec.scheduled_slot_ns, [this, e] { epoch_tick(e + 1); }, "epoch");
  }
}

void NegotiatorNetwork::receive_chunk(TorId receiver, const Chunk& c, SimTime now) {
  if (c.final_dst != kIdle && c.final_dst != receiver) {
    TorState& T = tors_[receiver];
    T.transit[c.final_dst].push_back(0, Segment{c.flow, c.offset, c.bytes, now});
    const std::uint64_t occ = T.transit[c.final_dst].total();
    if (occ > opts_.relay_transit_capacity_bytes) {
      throw ProtocolViolation("relay data exceeds the transit buffer granted by ToR " +
                              std::to_string(receiver));
    }
    auto& ctr = metrics_.counters();
    ctr.max_transit_occupancy = std::max(ctr.max_transit_occupancy, occ);
    ctr.relayed_bytes += c.bytes;
    metrics_.on_transit(receiver, c.bytes, now);
    return;
  }
  metrics_.on_delivery(receiver, c.flow, c.offset, c.bytes, now);
}

void NegotiatorNetwork::deliver_front() {
  Batch b = std::move(in_flight_.front());
  in_flight_.pop_front();
  const SimTime now = engine_.now();
  conflicts_.begin_slot();
  for (auto& m : b.msgs) {
    conflicts_.arrive(m.dst, m.port);
    for (const auto& c : m.payload) receive_chunk(m.dst, c, now);
    tors_[m.dst].inbox.push_back(std::move(m));
  }
  for (const auto& pkt : b.pkts) {
    conflicts_.arrive(pkt.dst, pkt.port);
    for (const auto& c : pkt.chunks) receive_chunk(pkt.dst, c, now);
  }
}

}  // namespace negotiator
