#include "negotiator/baseline.hpp"

#include <algorithm>

#include "negotiator/epoch.hpp"

namespace negotiator {

namespace {

void add_credit(std::vector<CreditEntry>& v, TorId f, std::uint64_t bytes) {
  for (auto& e : v) {
    if (e.final_dst == f) {
      e.bytes += bytes;
      return;
    }
  }
  v.push_back(CreditEntry{f, bytes});
}

void drop_empty(std::vector<CreditEntry>& v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](const CreditEntry& e) { return e.bytes == 0; }),
          v.end());
}

// Moves up to room bytes from the head of q into out.
std::uint64_t take(std::deque<Cell>& q, std::uint64_t room, std::vector<Cell>& out) {
  std::uint64_t taken = 0;
  while (!q.empty() && taken < room) {
    Cell& c = q.front();
    auto n = static_cast<std::uint32_t>(std::min<std::uint64_t>(c.bytes, room - taken));
    Cell part = c;
    part.bytes = n;
    out.push_back(part);
    taken += n;
    c.offset += n;
    c.bytes -= n;
    if (c.bytes == 0) q.pop_front();
  }
  return taken;
}

}  // namespace

ObliviousNetwork::ObliviousNetwork(Engine& engine, const Topology& topo, ObliviousOptions opts,
                                   Metrics& metrics, const RandomStream& rng)
    : engine_(engine), topo_(topo), opts_(std::move(opts)), metrics_(metrics) {
  if (opts_.data_pkt_bytes <= opts_.data_hdr_bytes) {
    throw ConfigError("oblivious: data packet must be larger than its header");
  }
  if (opts_.transit_capacity_bytes == 0) {
    throw ConfigError("oblivious.transit_capacity_bytes must be positive");
  }
  slot_ns_ = opts_.slot_ns > 0 ? opts_.slot_ns
                               : opts_.guard_ns + transmit_ns(opts_.data_pkt_bytes, topo.per_port_rate());
  if (slot_ns_ <= opts_.guard_ns) throw ConfigError("oblivious.slot_ns must exceed the guard band");
  if (opts_.priority_queues) {
    if (!std::is_sorted(opts_.pq_thresholds.begin(), opts_.pq_thresholds.end())) {
      throw ConfigError("pq.thresholds must be ascending");
    }
    levels_ = static_cast<std::uint32_t>(opts_.pq_thresholds.size()) + 1;
  } else {
    opts_.pq_thresholds.clear();
  }
  const std::uint32_t n = topo.tors();
  tors_.resize(n);
  for (TorId t = 0; t < n; ++t) {
    TorState& T = tors_[t];
    T.transit.resize(n);
    T.outstanding.assign(n, 0);
    T.direct.resize(n);
    T.relay.resize(n);
    for (auto& q : T.direct) q.levels.resize(levels_);
    for (auto& q : T.relay) q.levels.resize(levels_);
    T.credit.assign(static_cast<std::size_t>(n) * n, 0);
    T.requested.assign(static_cast<std::size_t>(n) * n, 0);
    T.covered.assign(n, 0);
    T.credited.resize(n);
    T.is_backlogged.assign(n, 0);
    T.scan_from.assign(n, 0);
    T.occupancy.assign(n, 0);
    T.pending.resize(n);
    T.rng = rng.derive(0x0b11 + t);
  }
  stamp_.assign(static_cast<std::size_t>(n) * topo.ports(), 0);
}

void ObliviousNetwork::start() {
  engine_.schedule(0, [this] { slot_tick(0); }, "rotor");
}

void ObliviousNetwork::on_flow_arrival(FlowId id, TorId src, TorId dst, std::uint64_t size) {
  if (src == dst || src >= tors_.size() || dst >= tors_.size()) {
    throw InvariantViolation("flow endpoints invalid");
  }
  TorState& T = tors_[src];
  const SimTime now = engine_.now();
  const std::uint64_t cell = cell_payload();
  const auto& th = opts_.pq_thresholds;
  const std::uint32_t n = topo_.tors();
  std::uint64_t start = 0;
  for (std::uint32_t l = 0; l < levels_ && start < size; ++l) {
    std::uint64_t end = (l + 1 < levels_ && l < th.size()) ? std::min(size, th[l]) : size;
    for (std::uint64_t off = start; off < end; off += cell) {
      auto bytes = static_cast<std::uint32_t>(std::min(cell, end - off));
      // Uniform first hop over the other ToRs; hitting dst is the direct case.
      // Which intermediate a relay cell uses is left to the rotor.
      auto h = static_cast<TorId>(T.rng.uniform_index(n - 1));
      if (h >= src) ++h;
      Cell c{id, off, bytes, dst, now};
      CellQueue& q = h == dst ? T.direct[dst] : T.relay[dst];
      q.levels[l].push_back(c);
      q.bytes += bytes;
      if (h != dst && !T.is_backlogged[dst]) {
        T.is_backlogged[dst] = 1;
        T.backlogged.push_back(dst);
      }
      T.own_bytes += bytes;
    }
    start = std::max(start, end);
  }
}

std::uint64_t ObliviousNetwork::backlog_bytes() const {
  std::uint64_t b = 0;
  for (const auto& T : tors_) b += T.own_bytes + T.transit_bytes;
  return b;
}

std::uint64_t ObliviousNetwork::free_transit(const TorState& t, TorId f) const {
  const std::uint64_t used = t.occupancy[f] + t.outstanding[f];
  return used >= opts_.transit_capacity_bytes ? 0 : opts_.transit_capacity_bytes - used;
}

void ObliviousNetwork::fill(TorState& T, TorId h, RotorTransmission& tx) {
  std::uint64_t room = cell_payload();
  // 1. Relayed data whose final destination is h.
  if (!T.transit[h].empty()) {
    std::uint64_t n = take(T.transit[h], room, tx.cells);
    T.transit_bytes -= n;
    T.occupancy[h] -= n;
    room -= n;
  }
  // 2. Own data for h, highest priority first.
  CellQueue& d = T.direct[h];
  for (std::uint32_t l = 0; l < levels_ && room > 0 && d.bytes > 0; ++l) {
    std::uint64_t n = take(d.levels[l], room, tx.cells);
    d.bytes -= n;
    T.own_bytes -= n;
    room -= n;
  }
  // 3. Own relay cells for other destinations, within the credit h granted,
  // highest priority first.
  const std::size_t row = static_cast<std::size_t>(h) * tors_.size();
  auto& finals = T.credited[h];
  for (std::uint32_t l = 0; l < levels_ && room > 0 && !finals.empty(); ++l) {
    for (std::size_t i = 0; i < finals.size() && room > 0;) {
      const TorId f = finals[i];
      CellQueue& q = T.relay[f];
      std::uint64_t& credit = T.credit[row + f];
      std::uint64_t n = take(q.levels[l], std::min(room, credit), tx.cells);
      q.bytes -= n;
      T.own_bytes -= n;
      T.covered[f] -= n;
      credit -= n;
      room -= n;
      if (credit == 0) {
        finals[i] = finals.back();
        finals.pop_back();
      } else {
        ++i;
      }
    }
  }
  // Header: relay requests towards h and grants of our transit space to h.
  request_credit(T, h, tx);
  auto& pend = T.pending[h];
  if (!pend.empty()) {
    for (auto& e : pend) {
      std::uint64_t g = std::min(e.bytes, free_transit(T, e.final_dst));
      if (g == 0) continue;
      T.outstanding[e.final_dst] += g;
      e.bytes -= g;
      tx.header.grants.push_back(CreditEntry{e.final_dst, g});
    }
    drop_empty(pend);
  }
}

void ObliviousNetwork::request_credit(TorState& T, TorId h, RotorTransmission& tx) {
  // At most one cell of credit per (intermediate, final) is asked for, and
  // never more than the uncovered backlog, so every grant is usable.
  auto& list = T.backlogged;
  const std::size_t row = static_cast<std::size_t>(h) * tors_.size();
  const std::uint64_t cell = cell_payload();
  std::uint32_t& from = T.scan_from[h];
  for (std::uint32_t k = 0; k < opts_.relay_scan_depth && !list.empty(); ++k) {
    if (from >= list.size()) from = 0;
    const TorId f = list[from];
    if (T.relay[f].bytes == 0) {
      T.is_backlogged[f] = 0;
      list[from] = list.back();
      list.pop_back();
      continue;
    }
    ++from;
    if (f == h || T.credit[row + f] + T.requested[row + f] > 0) continue;
    if (T.relay[f].bytes <= T.covered[f]) continue;
    const std::uint64_t want = std::min(cell, T.relay[f].bytes - T.covered[f]);
    T.requested[row + f] += want;
    T.covered[f] += want;
    tx.header.requests.push_back(CreditEntry{f, want});
  }
}

void ObliviousNetwork::slot_tick(std::int64_t slot) {
  const SimTime now = engine_.now();
  const std::uint32_t L = topo_.round_length();
  const std::int64_t round = slot / L;
  const auto j = static_cast<std::uint32_t>(slot % L);
  std::vector<RotorTransmission> batch;
  auto& ctr = metrics_.counters();
  for (auto& T : tors_) {
    const TorId t = static_cast<TorId>(&T - tors_.data());
    for (PortId p = 0; p < topo_.ports(); ++p) {
      const TorId h = topo_.target(round, j, t, p, opts_.rotate_schedule);
      if (h == kIdle) continue;
      if (T.own_bytes == 0 && T.transit_bytes == 0 && T.pending[h].empty()) {
        continue;
      }
      RotorTransmission tx;
      tx.src = t;
      tx.dst = h;
      tx.port = p;
      fill(T, h, tx);
      if (tx.cells.empty() && tx.header.requests.empty() && tx.header.grants.empty()) continue;
      for (const auto& c : tx.cells) ctr.scheduled_bytes += c.bytes;
      ++ctr.messages_sent;
      if (hook_) hook_(tx, now);
      batch.push_back(std::move(tx));
    }
  }
  if (!batch.empty()) {
    in_flight_.push_back(std::move(batch));
    engine_.schedule(now + slot_ns_ + opts_.propagation_ns, [this] { deliver_front(); }, "deliver");
  }
  engine_.schedule(now + slot_ns_, [this, slot] { slot_tick(slot + 1); }, "rotor");
}

void ObliviousNetwork::receive(const RotorTransmission& tx, SimTime now) {
  TorState& H = tors_[tx.dst];
  for (const auto& r : tx.header.requests) add_credit(H.pending[tx.src], r.final_dst, r.bytes);
  for (const auto& g : tx.header.grants) {
    const std::size_t i = static_cast<std::size_t>(tx.src) * tors_.size() + g.final_dst;
    if (H.requested[i] < g.bytes) {
      throw ProtocolViolation("transit credit granted without a request");
    }
    if (H.credit[i] == 0) H.credited[tx.src].push_back(g.final_dst);
    H.credit[i] += g.bytes;
    H.requested[i] -= g.bytes;
  }
  for (const auto& c : tx.cells) {
    if (c.final_dst == tx.dst) {
      metrics_.on_delivery(tx.dst, c.flow, c.offset, c.bytes, now);
      continue;
    }
    if (tx.src != metrics_.flows()[c.flow].src) ++hop_violations_;
    if (H.outstanding[c.final_dst] < c.bytes) {
      throw ProtocolViolation("relay data beyond the transit credit granted by ToR " +
                              std::to_string(tx.dst));
    }
    H.outstanding[c.final_dst] -= c.bytes;
    H.transit[c.final_dst].push_back(c);
    H.transit_bytes += c.bytes;
    const std::uint64_t occ = H.occupancy[c.final_dst] += c.bytes;
    if (occ > opts_.transit_capacity_bytes) {
      throw ProtocolViolation("transit buffer overflow at ToR " + std::to_string(tx.dst));
    }
    max_occupancy_ = std::max(max_occupancy_, occ);
    auto& ctr = metrics_.counters();
    ctr.max_transit_occupancy = std::max(ctr.max_transit_occupancy, occ);
    ctr.relayed_bytes += c.bytes;
    metrics_.on_transit(tx.dst, c.bytes, now);
  }
}

void ObliviousNetwork::deliver_front() {
  auto batch = std::move(in_flight_.front());
  in_flight_.pop_front();
  const SimTime now = engine_.now();
  ++serial_;
  for (const auto& tx : batch) {
    auto& s = stamp_[static_cast<std::size_t>(tx.dst) * topo_.ports() + tx.port];
    if (s == serial_) {
      throw InvariantViolation("receive conflict in rotor slot at ToR " + std::to_string(tx.dst));
    }
    s = serial_;
    receive(tx, now);
  }
}

}  // namespace negotiator
