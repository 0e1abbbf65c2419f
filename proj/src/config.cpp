#include "negotiator/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace negotiator {

std::string to_string(SystemKind s) { return s == SystemKind::Negotiator ? "negotiator" : "oblivious"; }

SystemKind system_kind_from_string(const std::string& s) {
  if (s == "negotiator") return SystemKind::Negotiator;
  if (s == "oblivious") return SystemKind::Oblivious;
  throw ConfigError("unknown system '" + s + "' (negotiator|oblivious)");
}

Json default_config_json() {
  return Json::parse(R"({
    "system": "negotiator",
    "seed": 1,
    "duration_ns": 1000000,
    "out_dir": "",
    "topology": {
      "kind": "parallel", "tors": 128, "ports": 8, "awgr_ports": 16,
      "host_rate": 400, "speedup": 2
    },
    "epoch": {
      "guard_ns": 10, "predefined_slot_ns": 0, "scheduled_slot_ns": 0, "scheduled_slots": 30,
      "sched_msg_bytes": 30, "piggyback_payload_bytes": 595, "data_pkt_bytes": 1125,
      "data_hdr_bytes": 10, "pipeline_depth": 1, "propagation_ns": 2000, "processing_ns": 0,
      "keep_epoch_without_piggyback": true
    },
    "features": { "piggyback": true, "priority_queues": true },
    "pq": { "thresholds": [1024, 10240] },
    "matching": {
      "variant": "base", "iterations": 1, "alpha": 0.001, "request_threshold_pkts": 3,
      "relay_threshold_bytes": 66900, "high_volume_bytes": 33450,
      "relay_transit_capacity_bytes": 133800, "rotate_schedule": true, "rerandomize_rings": false
    },
    "oblivious": { "slot_ns": 0, "transit_capacity_bytes": 8920, "relay_scan_depth": 4 },
    "workload": {
      "kind": "poisson", "load": 1.0, "cdf": "hadoop-like", "cdf_path": "",
      "incast_degree": 15, "incast_size_bytes": 1024, "mix_fraction": 0.02,
      "all_to_all_size_bytes": 30720, "start_ns": 0, "stop_ns": -1, "incast_dst": -1
    },
    "faults": {
      "k_detect": 3, "recredit_timeout_epochs": 0, "events": [],
      "random": { "fraction": 0, "direction": "egress", "fail_ns": 0, "repair_ns": 0, "seed": 1 }
    },
    "metrics": { "bucket_ns": 10000, "warmup_epochs": 2, "trace_pair": [] }
  })");
}

void merge_config(Json& base, const Json& overlay, const std::string& path) {
  if (!overlay.is_object()) throw ConfigError("config" + (path.empty() ? "" : " '" + path + "'") + " must be an object");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    Json& dst = base[it.key()];
    if (dst.is_object()) {
      merge_config(dst, it.value(), key);
    } else {
      dst = it.value();
    }
  }
}

void apply_override(Json& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  // Build a nested overlay and merge, so unknown keys are rejected the same way.
  Json overlay = value;
  std::string rest = key;
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto dot = rest.find('.', start);
    parts.push_back(rest.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    Json wrap = Json::object();
    wrap[*it] = std::move(overlay);
    overlay = std::move(wrap);
  }
  merge_config(cfg, overlay);
}

SizeCdf resolve_cdf(const std::string& name, const std::string& path) {
  if (!path.empty()) return SizeCdf::load(path);
  for (const auto& b : SizeCdf::builtin_names()) {
    if (b == name) return SizeCdf::builtin(name);
  }
  return SizeCdf::load(name);
}

namespace {

template <class T>
T get(const Json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("config key '" + where + "." + key + "': " + e.what());
  }
}

std::uint32_t get_u32(const Json& j, const char* key, const std::string& where) {
  auto v = get<std::int64_t>(j, key, where);
  if (v < 0 || v > 0xffffffffLL) throw ConfigError("config key '" + where + "." + key + "' out of range");
  return static_cast<std::uint32_t>(v);
}

std::uint64_t get_u64(const Json& j, const char* key, const std::string& where) {
  auto v = get<std::int64_t>(j, key, where);
  if (v < 0) throw ConfigError("config key '" + where + "." + key + "' must be non-negative");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

ExperimentConfig build_config(const Json& merged) {
  ExperimentConfig c;
  c.raw = merged;
  const Json& j = merged;
  c.system = system_kind_from_string(get<std::string>(j, "system", ""));
  c.seed = get_u64(j, "seed", "");
  c.duration_ns = get<std::int64_t>(j, "duration_ns", "");
  if (c.duration_ns <= 0) throw ConfigError("duration_ns must be positive");
  c.out_dir = get<std::string>(j, "out_dir", "");

  const Json& t = j.at("topology");
  c.topology.kind = topology_kind_from_string(get<std::string>(t, "kind", "topology"));
  c.topology.tors = get_u32(t, "tors", "topology");
  c.topology.ports = get_u32(t, "ports", "topology");
  c.topology.awgr_ports = get_u32(t, "awgr_ports", "topology");
  c.host_rate = get<double>(t, "host_rate", "topology");
  c.speedup = get<double>(t, "speedup", "topology");
  if (!(c.host_rate > 0) || !(c.speedup > 0) || c.topology.ports == 0) {
    throw ConfigError("topology.host_rate, topology.speedup and topology.ports must be positive");
  }
  c.topology.per_port_rate = c.host_rate * c.speedup / c.topology.ports;
  const Topology topo = Topology::build(c.topology);

  const Json& e = j.at("epoch");
  const Json& f = j.at("features");
  auto& p = c.epoch_params;
  p.guard_ns = get<std::int64_t>(e, "guard_ns", "epoch");
  p.scheduled_slots = get_u32(e, "scheduled_slots", "epoch");
  p.sched_msg_bytes = get_u32(e, "sched_msg_bytes", "epoch");
  p.piggyback_payload_bytes = get_u32(e, "piggyback_payload_bytes", "epoch");
  p.data_pkt_bytes = get_u32(e, "data_pkt_bytes", "epoch");
  p.data_hdr_bytes = get_u32(e, "data_hdr_bytes", "epoch");
  p.pipeline_depth = get_u32(e, "pipeline_depth", "epoch");
  p.propagation_ns = get<std::int64_t>(e, "propagation_ns", "epoch");
  p.processing_ns = get<std::int64_t>(e, "processing_ns", "epoch");
  p.keep_epoch_without_piggyback = get<bool>(e, "keep_epoch_without_piggyback", "epoch");
  p.piggyback = get<bool>(f, "piggyback", "features");
  if (p.guard_ns < 0 || p.propagation_ns < 0 || p.processing_ns < 0) {
    throw ConfigError("epoch times must be non-negative");
  }
  c.epoch = derive_epoch(p, topo);
  if (auto v = get<std::int64_t>(e, "predefined_slot_ns", "epoch"); v > 0) c.epoch.predefined_slot_ns = v;
  if (auto v = get<std::int64_t>(e, "scheduled_slot_ns", "epoch"); v > 0) c.epoch.scheduled_slot_ns = v;

  const bool pq = get<bool>(f, "priority_queues", "features");
  std::vector<std::uint64_t> thresholds;
  try {
    thresholds = j.at("pq").at("thresholds").get<std::vector<std::uint64_t>>();
  } catch (const Json::exception& ex) {
    throw ConfigError(std::string("config key 'pq.thresholds': ") + ex.what());
  }

  const Json& m = j.at("matching");
  auto& n = c.negotiator;
  n.epoch = c.epoch;
  n.piggyback = p.piggyback;
  n.priority_queues = pq;
  n.pq_thresholds = thresholds;
  n.variant = matching_variant_from_string(get<std::string>(m, "variant", "matching"));
  n.iterations = get_u32(m, "iterations", "matching");
  n.alpha = get<double>(m, "alpha", "matching");
  n.request_threshold_pkts = get_u32(m, "request_threshold_pkts", "matching");
  n.relay_threshold_bytes = get_u64(m, "relay_threshold_bytes", "matching");
  n.high_volume_bytes = get_u64(m, "high_volume_bytes", "matching");
  n.relay_transit_capacity_bytes = get_u64(m, "relay_transit_capacity_bytes", "matching");
  n.rotate_schedule = get<bool>(m, "rotate_schedule", "matching");
  n.rerandomize_rings = get<bool>(m, "rerandomize_rings", "matching");

  const Json& o = j.at("oblivious");
  auto& ob = c.oblivious;
  ob.guard_ns = p.guard_ns;
  ob.slot_ns = get<std::int64_t>(o, "slot_ns", "oblivious");
  ob.transit_capacity_bytes = get_u64(o, "transit_capacity_bytes", "oblivious");
  ob.relay_scan_depth = get_u32(o, "relay_scan_depth", "oblivious");
  ob.data_pkt_bytes = p.data_pkt_bytes;
  ob.data_hdr_bytes = p.data_hdr_bytes;
  ob.propagation_ns = p.propagation_ns;
  ob.priority_queues = pq;
  ob.pq_thresholds = thresholds;
  ob.rotate_schedule = n.rotate_schedule;

  const Json& w = j.at("workload");
  auto& ws = c.workload;
  ws.kind = workload_kind_from_string(get<std::string>(w, "kind", "workload"));
  ws.load = get<double>(w, "load", "workload");
  ws.cdf = resolve_cdf(get<std::string>(w, "cdf", "workload"), get<std::string>(w, "cdf_path", "workload"));
  ws.host_rate = c.host_rate;
  ws.tors = c.topology.tors;
  ws.incast_degree = get_u32(w, "incast_degree", "workload");
  ws.incast_size_bytes = get_u64(w, "incast_size_bytes", "workload");
  ws.mix_fraction = get<double>(w, "mix_fraction", "workload");
  ws.all_to_all_size_bytes = get_u64(w, "all_to_all_size_bytes", "workload");
  ws.start_ns = get<std::int64_t>(w, "start_ns", "workload");
  ws.stop_ns = get<std::int64_t>(w, "stop_ns", "workload");
  auto dst = get<std::int64_t>(w, "incast_dst", "workload");
  if (dst >= static_cast<std::int64_t>(ws.tors)) throw ConfigError("workload.incast_dst outside the topology");
  ws.incast_dst = dst < 0 ? kIdle : static_cast<TorId>(dst);

  const Json& fa = j.at("faults");
  n.k_detect = get_u32(fa, "k_detect", "faults");
  if (n.k_detect < 1) throw ConfigError("faults.k_detect must be >= 1");
  n.recredit_timeout_epochs = get_u32(fa, "recredit_timeout_epochs", "faults");
  const Json& evs = fa.at("events");
  if (!evs.is_array()) throw ConfigError("faults.events must be a list");
  for (const auto& ev : evs) {
    for (auto it = ev.begin(); it != ev.end(); ++it) {
      static const char* known[] = {"tor", "port", "direction", "fail_ns", "repair_ns"};
      if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) {
        throw ConfigError("unknown key '" + it.key() + "' in faults.events");
      }
    }
    LinkFaultEvent le;
    le.tor = get_u32(ev, "tor", "faults.events");
    le.port = get_u32(ev, "port", "faults.events");
    le.direction = link_direction_from_string(get<std::string>(ev, "direction", "faults.events"));
    le.fail_ns = get<std::int64_t>(ev, "fail_ns", "faults.events");
    le.repair_ns = get<std::int64_t>(ev, "repair_ns", "faults.events");
    if (le.tor >= c.topology.tors || le.port >= c.topology.ports) {
      throw ConfigError("faults.events names a link outside the topology");
    }
    if (le.repair_ns <= le.fail_ns) throw ConfigError("faults.events: repair_ns must exceed fail_ns");
    c.faults.events.push_back(le);
  }
  const Json& r = fa.at("random");
  double frac = get<double>(r, "fraction", "faults.random");
  if (frac < 0 || frac > 1) throw ConfigError("faults.random.fraction must be in [0,1]");
  if (frac > 0) {
    RandomFaults rf;
    rf.fraction = frac;
    rf.direction = link_direction_from_string(get<std::string>(r, "direction", "faults.random"));
    rf.fail_ns = get<std::int64_t>(r, "fail_ns", "faults.random");
    rf.repair_ns = get<std::int64_t>(r, "repair_ns", "faults.random");
    rf.seed = get_u64(r, "seed", "faults.random");
    if (rf.repair_ns <= rf.fail_ns) throw ConfigError("faults.random: repair_ns must exceed fail_ns");
    c.faults.random = rf;
  }

  const Json& me = j.at("metrics");
  c.bucket_ns = get<std::int64_t>(me, "bucket_ns", "metrics");
  if (c.bucket_ns <= 0) throw ConfigError("metrics.bucket_ns must be positive");
  c.warmup_epochs = get_u32(me, "warmup_epochs", "metrics");
  auto tp = me.at("trace_pair");
  if (!tp.is_array() || (tp.size() != 0 && tp.size() != 2)) {
    throw ConfigError("metrics.trace_pair must be [] or [src, dst]");
  }
  if (tp.size() == 2) {
    auto s = tp[0].get<std::int64_t>(), d = tp[1].get<std::int64_t>();
    if (s < 0 || d < 0 || s >= ws.tors || d >= ws.tors || s == d) {
      throw ConfigError("metrics.trace_pair must name two distinct ToRs");
    }
    c.trace_pair = std::make_pair(static_cast<TorId>(s), static_cast<TorId>(d));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Json cfg = default_config_json();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    Json user;
    try {
      user = Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config file " + path + ": " + e.what());
    }
    merge_config(cfg, user);
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return build_config(cfg);
}

ExperimentConfig config_from_overrides(const std::vector<std::string>& overrides) {
  return load_config("", overrides);
}

}  // namespace negotiator
