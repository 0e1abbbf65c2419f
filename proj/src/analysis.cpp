#include "negotiator/analysis.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

namespace negotiator {

namespace {

Topology instance_topology(const MatchInstance& inst) {
  TopologySpec spec;
  spec.kind = inst.kind;
  spec.tors = inst.n;
  spec.ports = inst.m;
  spec.awgr_ports = inst.kind == TopologyKind::ThinClos ? inst.n / inst.m : inst.n;
  spec.per_port_rate = 1.0;
  return Topology::build(spec);
}

void build_rings(const Topology& topo, const MatchInstance& inst, std::vector<GrantRings>& g,
                 std::vector<AcceptRings>& a) {
  RandomStream root(inst.ring_seed);
  g.clear();
  a.clear();
  for (TorId t = 0; t < inst.n; ++t) {
    RandomStream r = root.derive(t);
    g.push_back(GrantRings::build(topo, t, r));
    a.push_back(AcceptRings::build(topo, t, r));
  }
}

void check_instance(const MatchInstance& inst) {
  if (inst.demand.size() != static_cast<std::size_t>(inst.n) * inst.n) {
    throw std::invalid_argument("demand matrix must be n x n");
  }
  for (TorId t = 0; t < inst.n; ++t) {
    if (inst.wants(t, t)) throw std::invalid_argument("demand matrix must have a zero diagonal");
  }
}

}  // namespace

MatchInstance MatchInstance::full(std::uint32_t n, std::uint32_t m, std::uint64_t seed) {
  MatchInstance i;
  i.n = n;
  i.m = m;
  i.ring_seed = seed;
  i.demand.assign(static_cast<std::size_t>(n) * n, 1);
  for (TorId t = 0; t < n; ++t) i.demand[static_cast<std::size_t>(t) * n + t] = 0;
  return i;
}

MatchOutcome match_round(const Topology& topo, const MatchInstance& inst,
                         std::vector<GrantRings>& grant_rings, std::vector<AcceptRings>& accept_rings,
                         const std::vector<std::uint64_t>& src_busy,
                         const std::vector<std::uint64_t>& dst_busy) {
  MatchOutcome out;
  std::vector<PortId> ports;
  for (TorId d = 0; d < inst.n; ++d) {
    ports.clear();
    for (PortId k = 0; k < inst.m; ++k) {
      if (dst_busy.empty() || !((dst_busy[d] >> k) & 1ULL)) ports.push_back(k);
    }
    grant_round_robin(
        d, grant_rings[d], ports,
        [&](TorId s, PortId k) { return inst.wants(s, d) && topo.reachable(s, k, d); }, out.grants);
  }
  std::vector<Grant> mine;
  for (TorId s = 0; s < inst.n; ++s) {
    mine.clear();
    for (const auto& g : out.grants) {
      if (g.to_src == s) mine.push_back(g);
    }
    ports.clear();
    for (PortId k = 0; k < inst.m; ++k) {
      if (src_busy.empty() || !((src_busy[s] >> k) & 1ULL)) ports.push_back(k);
    }
    accept_round_robin(s, accept_rings[s], ports, mine, [](const Grant&) { return true; }, out.accepts);
  }
  return out;
}

std::string check_outcome(const MatchInstance& inst, const MatchOutcome& out,
                          const std::vector<std::uint64_t>& src_busy,
                          const std::vector<std::uint64_t>& dst_busy) {
  const std::size_t slots = static_cast<std::size_t>(inst.n) * inst.m;
  std::vector<int> granted(slots, 0), src_used(slots, 0), dst_used(slots, 0);
  for (const auto& g : out.grants) {
    if (!inst.wants(g.to_src, g.from_dst)) {
      return fmt::format("grant {}->{} port {} without a request", g.from_dst, g.to_src, g.dst_port);
    }
    if (!dst_busy.empty() && ((dst_busy[g.from_dst] >> g.dst_port) & 1ULL)) {
      return fmt::format("grant on busy port {} of ToR {}", g.dst_port, g.from_dst);
    }
    if (granted[static_cast<std::size_t>(g.from_dst) * inst.m + g.dst_port]++) {
      return fmt::format("ToR {} granted port {} twice", g.from_dst, g.dst_port);
    }
  }
  for (const auto& a : out.accepts) {
    bool found = false;
    for (const auto& g : out.grants) {
      if (g.from_dst == a.dst && g.to_src == a.src && g.dst_port == a.src_port) found = true;
    }
    if (!found) {
      return fmt::format("accept {}->{} port {} has no matching grant", a.src, a.dst, a.src_port);
    }
    if (!src_busy.empty() && ((src_busy[a.src] >> a.src_port) & 1ULL)) {
      return fmt::format("accept on busy port {} of ToR {}", a.src_port, a.src);
    }
    if (src_used[static_cast<std::size_t>(a.src) * inst.m + a.src_port]++) {
      return fmt::format("source {} port {} accepted twice", a.src, a.src_port);
    }
    if (dst_used[static_cast<std::size_t>(a.dst) * inst.m + a.src_port]++) {
      return fmt::format("destination {} port {} receives from two sources", a.dst, a.src_port);
    }
  }
  return "";
}

ConflictVerdict exhaustive_conflict_check(const MatchInstance& inst) {
  if (inst.n > 8 || inst.m > 4) throw std::domain_error("exhaustive check is limited to n <= 8, m <= 4");
  check_instance(inst);
  const Topology topo = instance_topology(inst);
  std::vector<GrantRings> grings;
  std::vector<AcceptRings> arings;
  build_rings(topo, inst, grings, arings);

  // Distinct grant rings and their sizes (the odometer digits).
  std::vector<RingState*> digits;
  for (TorId d = 0; d < inst.n; ++d) {
    const std::uint32_t rings = grings[d].shared() ? 1 : inst.m;
    for (PortId k = 0; k < rings; ++k) {
      if (!grings[d].ring(k).empty()) digits.push_back(&grings[d].ring(k));
    }
  }
  std::vector<std::size_t> odo(digits.size(), 0);

  ConflictVerdict v;
  v.min_accepts = ~0ULL;
  std::unordered_set<std::uint64_t> accept_checked;
  std::vector<PortId> all_ports;
  for (PortId k = 0; k < inst.m; ++k) all_ports.push_back(k);
  std::vector<Grant> grants;
  std::vector<Grant> on_port;
  std::vector<Accept> acc;
  std::vector<std::uint32_t> mask(static_cast<std::size_t>(inst.n) * inst.m);

  while (true) {
    for (std::size_t i = 0; i < digits.size(); ++i) digits[i]->set_pointer(odo[i]);
    grants.clear();
    for (TorId d = 0; d < inst.n; ++d) {
      grant_round_robin(
          d, grings[d], all_ports,
          [&](TorId s, PortId k) { return inst.wants(s, d) && topo.reachable(s, k, d); }, grants);
    }
    ++v.cases;
    MatchOutcome grant_only{grants, {}};
    if (auto err = check_outcome(inst, grant_only); !err.empty()) {
      v.ok = false;
      v.counterexample = err;
      return v;
    }
    std::fill(mask.begin(), mask.end(), 0);
    for (const auto& g : grants) mask[static_cast<std::size_t>(g.to_src) * inst.m + g.dst_port] |= 1u << g.from_dst;
    std::uint64_t accepts = 0;
    for (TorId s = 0; s < inst.n; ++s) {
      for (PortId k = 0; k < inst.m; ++k) {
        const std::uint32_t m = mask[static_cast<std::size_t>(s) * inst.m + k];
        if (m == 0) continue;
        ++accepts;
        const std::uint64_t key = (static_cast<std::uint64_t>(s) << 40) | (static_cast<std::uint64_t>(k) << 32) | m;
        if (!accept_checked.insert(key).second) continue;
        on_port.clear();
        for (const auto& g : grants) {
          if (g.to_src == s && g.dst_port == k) on_port.push_back(g);
        }
        RingState& ring = arings[s].ring(k);
        const PortId port[1] = {k};
        for (std::size_t p = 0; p < ring.size(); ++p) {
          ring.set_pointer(p);
          acc.clear();
          accept_round_robin(s, arings[s], port, on_port, [](const Grant&) { return true; }, acc);
          MatchOutcome o{on_port, acc};
          std::string err = acc.size() != 1 ? fmt::format("source {} port {} left a grant unaccepted", s, k)
                                            : check_outcome(inst, o);
          if (!err.empty()) {
            v.ok = false;
            v.counterexample = err;
            return v;
          }
        }
      }
    }
    v.min_accepts = std::min(v.min_accepts, accepts);
    v.max_accepts = std::max(v.max_accepts, accepts);
    std::size_t i = 0;
    while (i < digits.size() && ++odo[i] == digits[i]->size()) odo[i++] = 0;
    if (i == digits.size()) break;
  }
  if (v.min_accepts == ~0ULL) v.min_accepts = 0;
  return v;
}

std::vector<std::vector<Accept>> iterative_match(const MatchInstance& inst, std::uint32_t iterations) {
  check_instance(inst);
  const Topology topo = instance_topology(inst);
  std::vector<GrantRings> grings;
  std::vector<AcceptRings> arings;
  build_rings(topo, inst, grings, arings);
  std::vector<std::uint64_t> src_busy(inst.n, 0), dst_busy(inst.n, 0);
  std::vector<std::vector<Accept>> rounds;
  for (std::uint32_t r = 0; r < iterations; ++r) {
    MatchOutcome o = match_round(topo, inst, grings, arings, src_busy, dst_busy);
    if (auto err = check_outcome(inst, o, src_busy, dst_busy); !err.empty()) {
      throw InvariantViolation("iterative round " + std::to_string(r + 1) + ": " + err);
    }
    for (const auto& a : o.accepts) {
      src_busy[a.src] |= 1ULL << a.src_port;
      dst_busy[a.dst] |= 1ULL << a.src_port;
    }
    rounds.push_back(std::move(o.accepts));
  }
  return rounds;
}

std::vector<EfficiencyRow> efficiency_table(const std::vector<std::uint32_t>& ns,
                                            const std::vector<std::uint32_t>& ms, std::uint64_t trials,
                                            std::uint64_t seed) {
  std::vector<EfficiencyRow> rows;
  for (auto n : ns) {
    for (auto m : ms) {
      EfficiencyRow r;
      r.n = n;
      r.m = m;
      r.closed_form = closed_form_efficiency(n);
      McEstimate e = mc_efficiency_oracle(n, m, trials, seed);
      r.monte_carlo = e.mean;
      r.std_error = e.std_error;
      r.delta = r.monte_carlo - r.closed_form;
      r.pass = std::abs(r.delta) < 0.01;
      rows.push_back(r);
    }
  }
  return rows;
}

std::string efficiency_csv(const std::vector<EfficiencyRow>& rows) {
  std::string out = "n,m,closed_form,monte_carlo,std_error,delta,pass\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:+.6f},{}\n", r.n, r.m, r.closed_form, r.monte_carlo,
                       r.std_error, r.delta, r.pass ? "pass" : "FLAG");
  }
  return out;
}

}  // namespace negotiator
