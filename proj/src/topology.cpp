#include "negotiator/topology.hpp"

#include "negotiator/engine.hpp"

namespace negotiator {

namespace {

std::int64_t pos_mod(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

std::string to_string(TopologyKind kind) {
  return kind == TopologyKind::ParallelNetwork ? "parallel" : "thinclos";
}

TopologyKind topology_kind_from_string(const std::string& s) {
  if (s == "parallel" || s == "parallel_network" || s == "ParallelNetwork") {
    return TopologyKind::ParallelNetwork;
  }
  if (s == "thinclos" || s == "thin_clos" || s == "ThinClos") return TopologyKind::ThinClos;
  throw ConfigError("unknown topology kind '" + s + "' (expected parallel or thinclos)");
}

Topology Topology::build(const TopologySpec& spec) {
  if (spec.tors < 2) throw ConfigError("topology: N > 1 required");
  if (spec.ports < 1) throw ConfigError("topology: S >= 1 required");
  if (spec.ports > 64) throw ConfigError("topology: S <= 64 required (port masks are 64-bit)");
  if (!(spec.per_port_rate > 0)) throw ConfigError("topology: per_port_rate > 0 required");
  Topology t;
  t.spec_ = spec;
  if (spec.kind == TopologyKind::ParallelNetwork) {
    t.group_size_ = spec.tors;
    t.round_length_ = (spec.tors - 1 + spec.ports - 1) / spec.ports;
  } else {
    std::uint32_t w = spec.awgr_ports;
    if (w < 1) throw ConfigError("thin-clos: W >= 1 required");
    std::uint32_t min_w = (spec.tors + spec.ports - 1) / spec.ports;
    if (w < min_w) throw ConfigError("thin-clos: W >= ceil(N/S) violated");
    if (spec.tors % w != 0) throw ConfigError("thin-clos: N mod W = 0 violated");
    if (spec.tors / w != spec.ports) throw ConfigError("thin-clos: N/W = S violated");
    t.group_size_ = w;
    t.round_length_ = w;
  }
  return t;
}

std::uint32_t Topology::awgr_count() const {
  if (spec_.kind == TopologyKind::ParallelNetwork) return spec_.ports;
  return (spec_.tors * spec_.ports + group_size_ - 1) / group_size_;
}

std::uint32_t Topology::awgr_size() const {
  return spec_.kind == TopologyKind::ParallelNetwork ? spec_.tors : group_size_;
}

std::uint32_t Topology::awgr_of(TorId tor, PortId port) const {
  if (spec_.kind == TopologyKind::ParallelNetwork) return port;
  return port * groups() + group_of(tor);
}

bool Topology::reachable(TorId src, PortId src_port, TorId dst) const {
  if (src == dst || src_port >= spec_.ports) return false;
  if (spec_.kind == TopologyKind::ParallelNetwork) return true;
  return group_of(dst) == (group_of(src) + src_port) % groups();
}

PortId Topology::path_port(TorId src, TorId dst) const {
  if (spec_.kind == TopologyKind::ParallelNetwork) return 0;
  return static_cast<PortId>(pos_mod(static_cast<std::int64_t>(group_of(dst)) - group_of(src), groups()));
}

std::vector<PortId> Topology::path_ports(TorId src, TorId dst) const {
  std::vector<PortId> out;
  if (spec_.kind == TopologyKind::ParallelNetwork) {
    for (PortId p = 0; p < spec_.ports; ++p) out.push_back(p);
  } else {
    out.push_back(path_port(src, dst));
  }
  return out;
}

TorId Topology::target(std::int64_t epoch, std::uint32_t slot, TorId tor, PortId port,
                       bool rotate) const {
  const std::int64_t n = spec_.tors;
  if (spec_.kind == TopologyKind::ParallelNetwork) {
    const std::int64_t s = spec_.ports;
    std::int64_t r = rotate ? pos_mod(port + epoch, s) : port;
    std::int64_t offset = static_cast<std::int64_t>(slot) * s + r + 1;
    if (offset >= n) return kIdle;
    return static_cast<TorId>((tor + offset) % n);
  }
  const std::int64_t w = group_size_;
  std::int64_t g = (group_of(tor) + port) % groups();
  auto d = static_cast<TorId>(w * g + (tor + slot) % w);
  return d == tor ? kIdle : d;
}

TorId Topology::source_for(std::int64_t epoch, std::uint32_t slot, TorId dst, PortId port,
                           bool rotate) const {
  const std::int64_t n = spec_.tors;
  if (spec_.kind == TopologyKind::ParallelNetwork) {
    const std::int64_t s = spec_.ports;
    std::int64_t r = rotate ? pos_mod(port + epoch, s) : port;
    std::int64_t offset = static_cast<std::int64_t>(slot) * s + r + 1;
    if (offset >= n) return kIdle;
    return static_cast<TorId>(pos_mod(static_cast<std::int64_t>(dst) - offset, n));
  }
  const std::int64_t w = group_size_;
  std::int64_t g = pos_mod(static_cast<std::int64_t>(group_of(dst)) - port, groups());
  std::int64_t i = pos_mod(static_cast<std::int64_t>(dst % w) - slot, w);
  auto src = static_cast<TorId>(w * g + i);
  return src == dst ? kIdle : src;
}

Meeting Topology::meeting(std::int64_t epoch, TorId src, TorId dst, bool rotate) const {
  const std::int64_t n = spec_.tors;
  if (spec_.kind == TopologyKind::ParallelNetwork) {
    const std::int64_t s = spec_.ports;
    std::int64_t offset = pos_mod(static_cast<std::int64_t>(dst) - src, n);
    auto slot = static_cast<std::uint32_t>((offset - 1) / s);
    std::int64_t r = (offset - 1) % s;
    auto port = static_cast<PortId>(rotate ? pos_mod(r - epoch, s) : r);
    return Meeting{slot, port};
  }
  const std::int64_t w = group_size_;
  auto slot = static_cast<std::uint32_t>(pos_mod(static_cast<std::int64_t>(dst) - src, w));
  return Meeting{slot, path_port(src, dst)};
}

std::vector<SlotAssignment> Topology::predefined_schedule(std::int64_t epoch, bool rotate) const {
  std::vector<SlotAssignment> out;
  out.reserve(round_length_);
  for (std::uint32_t j = 0; j < round_length_; ++j) {
    SlotAssignment a;
    a.epoch = epoch;
    a.slot = j;
    a.ports = spec_.ports;
    a.targets.resize(static_cast<std::size_t>(spec_.tors) * spec_.ports);
    for (TorId t = 0; t < spec_.tors; ++t) {
      for (PortId p = 0; p < spec_.ports; ++p) {
        a.targets[t * spec_.ports + p] = target(epoch, j, t, p, rotate);
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace negotiator
