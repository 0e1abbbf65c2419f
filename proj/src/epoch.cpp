#include "negotiator/epoch.hpp"

#include <cmath>

#include <fmt/format.h>

namespace negotiator {

SimTime transmit_ns(std::uint64_t bytes, double rate) {
  double t = static_cast<double>(bytes) * 8.0 / rate;
  // Guard against 49.999999 style rounding before taking the ceiling.
  double r = std::round(t);
  if (std::abs(t - r) < 1e-9) return static_cast<SimTime>(r);
  return static_cast<SimTime>(std::ceil(t));
}

EpochConfig derive_epoch(const EpochParams& p, const Topology& topo) {
  const double rate = topo.per_port_rate();
  EpochConfig c;
  c.guard_ns = p.guard_ns;
  c.predefined_slots = topo.round_length();
  c.sched_msg_bytes = p.sched_msg_bytes;
  c.piggyback_payload_bytes = p.piggyback ? p.piggyback_payload_bytes : 0;
  c.data_pkt_bytes = p.data_pkt_bytes;
  c.data_hdr_bytes = p.data_hdr_bytes;
  c.pipeline_depth = p.pipeline_depth;
  c.propagation_ns = p.propagation_ns;
  c.processing_ns = p.processing_ns;
  c.scheduled_slot_ns = transmit_ns(p.data_pkt_bytes, rate);
  c.predefined_slot_ns = p.guard_ns + transmit_ns(p.sched_msg_bytes + c.piggyback_payload_bytes, rate);
  c.scheduled_slots = p.scheduled_slots;
  if (!p.piggyback && p.keep_epoch_without_piggyback) {
    SimTime with_pb_slot = p.guard_ns + transmit_ns(p.sched_msg_bytes + p.piggyback_payload_bytes, rate);
    SimTime target = c.predefined_slots * with_pb_slot + p.scheduled_slots * c.scheduled_slot_ns;
    c.scheduled_slots =
        static_cast<std::uint32_t>((target - c.predefined_phase_ns()) / c.scheduled_slot_ns);
  }
  return c;
}

EpochReport check_epoch(const EpochConfig& c, const Topology& topo, bool piggyback) {
  EpochReport r;
  r.predefined_phase_ns = c.predefined_phase_ns();
  r.scheduled_phase_ns = c.scheduled_phase_ns();
  r.epoch_ns = c.epoch_ns();
  const double rate = topo.per_port_rate();
  if (c.predefined_slots != topo.round_length()) {
    r.errors.push_back(fmt::format("epoch.predefined_slots = {} but the topology round needs {} slots",
                                   c.predefined_slots, topo.round_length()));
  }
  if (c.scheduled_slots < 1) r.errors.push_back("epoch.scheduled_slots must be >= 1");
  if (c.data_hdr_bytes >= c.data_pkt_bytes) {
    r.errors.push_back("epoch.data_hdr_bytes must be smaller than epoch.data_pkt_bytes");
  }
  if (c.pipeline_depth < 1) r.errors.push_back("epoch.pipeline_depth must be >= 1");
  std::uint32_t pb = piggyback ? c.piggyback_payload_bytes : 0;
  SimTime need_pre = c.guard_ns + transmit_ns(c.sched_msg_bytes + pb, rate);
  if (c.predefined_slot_ns < need_pre) {
    r.errors.push_back(fmt::format(
        "epoch.predefined_slot_ns = {} is shorter than guard + transmit time of {} B ({} ns)",
        c.predefined_slot_ns, c.sched_msg_bytes + pb, need_pre));
  }
  SimTime need_sched = transmit_ns(c.data_pkt_bytes, rate);
  if (c.scheduled_slot_ns < need_sched) {
    r.errors.push_back(fmt::format(
        "epoch.scheduled_slot_ns = {} is shorter than the transmit time of {} B ({} ns)",
        c.scheduled_slot_ns, c.data_pkt_bytes, need_sched));
  }
  if (r.epoch_ns <= 0) {
    r.errors.push_back("epoch length must be positive");
    return r;
  }
  r.guard_fraction = c.guard_fraction();
  if (r.guard_fraction > 0.10) {
    r.warnings.push_back(fmt::format(
        "guardbands take {:.2f}% of the epoch (above 10%); consider a longer scheduled phase",
        100.0 * r.guard_fraction));
  }
  SimTime budget = static_cast<SimTime>(c.pipeline_depth) * r.epoch_ns;
  SimTime needed = r.predefined_phase_ns + c.propagation_ns + c.processing_ns;
  r.pipeline_feasible = needed <= budget;
  if (!r.pipeline_feasible) {
    std::uint32_t suggest = static_cast<std::uint32_t>((needed + r.epoch_ns - 1) / r.epoch_ns);
    r.errors.push_back(fmt::format(
        "pipeline infeasible: predefined phase + propagation + processing = {} ns exceeds "
        "pipeline_depth {} x epoch {} ns; use epoch.pipeline_depth >= {}",
        needed, c.pipeline_depth, r.epoch_ns, suggest));
  }
  return r;
}

}  // namespace negotiator
