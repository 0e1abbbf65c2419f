// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Tolerances are pinned below.

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "negotiator/analysis.hpp"
#include "negotiator/config.hpp"
#include "negotiator/experiment.hpp"
#include "negotiator/matching.hpp"
#include "negotiator/workload.hpp"

using namespace negotiator;
namespace fs = std::filesystem;
using Overrides = std::vector<std::string>;

namespace {

// Criterion 1
constexpr double kEfficiencyTol = 0.01;
constexpr double kEfficiencyRuntimeS = 30.0;
constexpr double kAnchorTol = 0.0005;  // anchors are quoted to three decimals
// Criterion 2
constexpr double kMatchRatioTol = 0.03;
constexpr double kMatchPn = 0.634;
constexpr double kMatchTc = 0.644;
// Criterion 3
constexpr double kGuardTol = 0.0001;
// Criterion 4
constexpr double kMiceWithin2Min = 0.75;
constexpr double kMiceMeanEpochsMax = 2.5;
// Criterion 7
constexpr double kGoodputPnMin = 0.85;
constexpr double kGoodputTcMin = 0.82;
// Criterion 8
constexpr double kObliviousAllToAllMax = 0.55;
// Criterion 9
constexpr double kStatefulGoodputTol = 0.02;
// Criterion 11
constexpr double kFaultDropLo = 0.70;
constexpr double kFaultDropHi = 0.80;
constexpr double kRecoveryTol = 0.02;
// Criterion 12
constexpr double kBelow1kMin = 0.60;
constexpr double kBytesAbove100kMin = 0.80;

const std::vector<std::string> kLoads{"0.1", "0.25", "0.5", "0.75", "1.0"};
const Overrides kDesk{"topology.tors=32", "topology.ports=8", "duration_ns=5000000"};

struct Verdict {
  bool pass = true;
  std::string detail;
};

Overrides operator+(Overrides a, const Overrides& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

RunSummary run(const Overrides& o) { return run_experiment(config_from_overrides(o)); }

std::string fmt_opt(const std::optional<SimTime>& v) { return v ? std::to_string(*v) : "NA"; }

// 1. Closed form vs Monte Carlo, plus anchors.
Verdict efficiency() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  auto rows = efficiency_table({2, 4, 8, 16, 32, 128}, {1, 4, 8}, 1'000'000, 2024);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0;
  for (const auto& r : rows) {
    worst = std::max(worst, std::abs(r.delta));
    v.pass &= std::abs(r.delta) < kEfficiencyTol;
  }
  const double a128 = closed_form_efficiency(128), a16 = closed_form_efficiency(16);
  const double lim = closed_form_efficiency(1e9);
  v.pass &= std::abs(a128 - 0.634) <= kAnchorTol && std::abs(a16 - 0.644) <= kAnchorTol;
  v.pass &= std::abs(lim - (1.0 - std::exp(-1.0))) < 1e-6;
  v.pass &= secs < kEfficiencyRuntimeS;
  v.detail = fmt::format("{} cells, max |delta| {:.4f} (< {}), runtime {:.1f} s (< {}), n=128 {:.4f}, n=16 {:.4f}, "
                         "large-n {:.6f} vs 1-1/e",
                         rows.size(), worst, kEfficiencyTol, secs, kEfficiencyRuntimeS, a128, a16, lim);
  return v;
}

// 2. Saturated static full demand at 128 ToRs.
Verdict match_ratio() {
  Verdict v;
  std::string d;
  for (auto [kind, target] : {std::pair{"parallel", kMatchPn}, {"thinclos", kMatchTc}}) {
    Overrides o{std::string("topology.kind=") + kind, "workload.kind=all_to_all",
                "workload.all_to_all_size_bytes=10000000", "duration_ns=2000000"};
    auto sim = std::make_unique<Simulation>(config_from_overrides(o));
    sim->run();
    auto samples = sim->metrics().match_samples();
    auto r = mean_match_ratio(samples, 2);
    const bool ok = r && std::abs(*r - target) <= kMatchRatioTol && samples.size() >= 500;
    v.pass &= ok;
    d += fmt::format("{} {:.4f} (target {} +/- {}, {} epochs); ", kind, r.value_or(-1), target, kMatchRatioTol,
                     samples.size());
  }
  v.detail = d;
  return v;
}

// 3. Epoch arithmetic of the defaults.
Verdict epoch_arithmetic() {
  ExperimentConfig c = build_config(default_config_json());
  const auto& e = c.epoch;
  Verdict v;
  v.pass = e.predefined_phase_ns() == 960 && e.scheduled_phase_ns() == 2700 && e.epoch_ns() == 3660 &&
           std::abs(e.guard_fraction() - 0.0437) <= kGuardTol;
  v.detail = fmt::format("predefined {} ns, scheduled {} ns, epoch {} ns, guard {:.5f}", e.predefined_phase_ns(),
                         e.scheduled_phase_ns(), e.epoch_ns(), e.guard_fraction());
  return v;
}

// 4. Scheduling-delay bypass for mice.
Verdict delay_bypass() {
  RunSummary s = run(kDesk + Overrides{"workload.load=1.0"});
  const double within = s.mice_within_2_epochs.value_or(0);
  const double mean_epochs = s.mice_fct_mean_ns.value_or(1e18) / static_cast<double>(s.epoch_ns);
  Verdict v;
  v.pass = within >= kMiceWithin2Min && mean_epochs <= kMiceMeanEpochsMax;
  v.detail = fmt::format("mice within 2 epochs {:.4f} (>= {}), mean mice FCT {:.3f} epochs (<= {})", within,
                         kMiceWithin2Min, mean_epochs, kMiceMeanEpochsMax);
  return v;
}

// 5. PB+PQ < PQ < PB < none on both topologies.
Verdict ablation() {
  Verdict v;
  std::string d;
  for (const char* kind : {"parallel", "thinclos"}) {
    Overrides base = kDesk + Overrides{std::string("topology.kind=") + kind, "topology.awgr_ports=4",
                                       "workload.load=1.0"};
    std::vector<std::optional<SimTime>> p99;
    for (auto [pb, pq] : {std::pair{true, true}, {false, true}, {true, false}, {false, false}}) {
      RunSummary s = run(base + Overrides{fmt::format("features.piggyback={}", pb),
                                          fmt::format("features.priority_queues={}", pq)});
      p99.push_back(s.mice_fct_p99_ns);
    }
    bool ok = std::all_of(p99.begin(), p99.end(), [](const auto& x) { return x.has_value(); });
    for (std::size_t i = 0; ok && i + 1 < p99.size(); ++i) ok = *p99[i] < *p99[i + 1];
    v.pass &= ok;
    d += fmt::format("{}: {} < {} < {} < {} ns; ", kind, fmt_opt(p99[0]), fmt_opt(p99[1]), fmt_opt(p99[2]),
                     fmt_opt(p99[3]));
  }
  v.detail = d;
  return v;
}

std::optional<SimTime> incast_finish(const std::string& system, std::uint32_t degree) {
  auto sim = std::make_unique<Simulation>(
      config_from_overrides({"system=" + system, "workload.kind=incast", "seed=3",
                             fmt::format("workload.incast_degree={}", degree), "duration_ns=2000000"}));
  sim->run();
  if (sim->groups().empty()) return std::nullopt;
  return incast_finish_time(sim->metrics().flows(), sim->groups().front());
}

// 6. Incast finish time is flat in the degree and beats the baseline.
Verdict incast() {
  Verdict v;
  const SimTime E = build_config(default_config_json()).epoch.epoch_ns();
  std::vector<SimTime> ours;
  std::string d;
  for (std::uint32_t k : {5u, 15u, 50u}) {
    auto a = incast_finish("negotiator", k);
    auto b = incast_finish("oblivious", k);
    v.pass &= a && b && *a < *b;
    if (a) ours.push_back(*a);
    d += fmt::format("degree {}: {} vs oblivious {} ns; ", k, fmt_opt(a), fmt_opt(b));
  }
  if (ours.size() == 3) {
    const SimTime spread = *std::max_element(ours.begin(), ours.end()) - *std::min_element(ours.begin(), ours.end());
    v.pass &= spread < E;
    d += fmt::format("spread {} ns (< epoch {} ns)", spread, E);
  } else {
    v.pass = false;
  }
  v.detail = d;
  return v;
}

// 7. Full-scale goodput at 100% load.
Verdict full_scale_goodput() {
  const Overrides o{"workload.load=1.0", "duration_ns=5000000"};
  const double pn = run(o).goodput;
  const double tc = run(o + Overrides{"topology.kind=thinclos"}).goodput;
  const double ob = run(o + Overrides{"system=oblivious"}).goodput;
  Verdict v;
  v.pass = pn >= kGoodputPnMin && tc >= kGoodputTcMin && pn > ob && tc > ob;
  v.detail = fmt::format("128 ToRs, 5 ms: parallel {:.4f} (>= {}), thin-clos {:.4f} (>= {}), oblivious {:.4f}", pn,
                         kGoodputPnMin, tc, kGoodputTcMin, ob);
  return v;
}

// 8. Oblivious saturated all-to-all without speedup.
Verdict baseline_sanity() {
  RunSummary s = run({"system=oblivious", "topology.tors=32", "topology.ports=8", "topology.speedup=1",
                      "workload.kind=all_to_all", "workload.all_to_all_size_bytes=10000000", "duration_ns=2000000"});
  Verdict v;
  v.pass = s.goodput <= kObliviousAllToAllMax && s.goodput > 0;
  v.detail = fmt::format("32 ToRs, no speedup: goodput {:.4f} (<= {})", s.goodput, kObliviousAllToAllMax);
  return v;
}

struct LoadPoint {
  double goodput = 0;
  SimTime p99 = 0;
};

std::vector<LoadPoint> load_sweep(const Overrides& extra) {
  std::vector<LoadPoint> v;
  for (const auto& l : kLoads) {
    RunSummary s = run(kDesk + extra + Overrides{"workload.load=" + l});
    v.push_back({s.goodput, s.mice_fct_p99_ns.value_or(-1)});
  }
  return v;
}

int sign(SimTime x) { return (x > 0) - (x < 0); }

// 9. Stateful scheduling tracks stateless.
Verdict stateful(const std::vector<LoadPoint>& base) {
  auto st = load_sweep({"matching.variant=stateful"});
  Verdict v;
  double worst = 0;
  std::string d;
  for (std::size_t i = 0; i < kLoads.size(); ++i) {
    worst = std::max(worst, std::abs(st[i].goodput - base[i].goodput));
    for (std::size_t j = 0; j < kLoads.size(); ++j) {
      v.pass &= sign(base[i].p99 - base[j].p99) == sign(st[i].p99 - st[j].p99);
    }
    d += fmt::format("{}: {}/{} ns; ", kLoads[i], base[i].p99, st[i].p99);
  }
  v.pass &= worst < kStatefulGoodputTol;
  v.detail = fmt::format("max |goodput diff| {:.4f} (< {}); p99 mice base/stateful {}", worst, kStatefulGoodputTol, d);
  return v;
}

// 10. Iterative matching without speedup vs base with 2x speedup.
Verdict iterative(const std::vector<LoadPoint>& base) {
  Verdict v;
  std::string d;
  for (int it : {3, 5}) {
    auto r = load_sweep({"matching.variant=iterative", fmt::format("matching.iterations={}", it), "topology.speedup=1"});
    for (std::size_t i = 0; i < kLoads.size(); ++i) {
      v.pass &= r[i].goodput <= base[i].goodput && r[i].p99 > base[i].p99;
    }
    d += fmt::format("{} iterations: goodput {:.3f}..{:.3f}, p99 {}..{} ns; ", it, r.front().goodput, r.back().goodput,
                     r.front().p99, r.back().p99);
  }
  v.detail = d + fmt::format("base 2x: goodput {:.3f}..{:.3f}, p99 {}..{} ns", base.front().goodput,
                             base.back().goodput, base.front().p99, base.back().p99);
  return v;
}

// Longest run of zero-byte epochs for the traced pair from `from` on.
std::int64_t longest_zero_run(const std::vector<std::uint64_t>& trace, std::int64_t from, std::int64_t to) {
  std::int64_t best = 0, cur = 0;
  for (std::int64_t e = from; e < to; ++e) {
    const bool zero = e >= static_cast<std::int64_t>(trace.size()) || trace[e] == 0;
    cur = zero ? cur + 1 : 0;
    best = std::max(best, cur);
  }
  return best;
}

// One long flow whose meeting port fails; returns the longest zero run
// between the failure and the repair.
std::int64_t rotation_probe(bool rotate) {
  Overrides o{"topology.tors=16", "topology.ports=4", "epoch.propagation_ns=500", "workload.stop_ns=0",
              "metrics.trace_pair=[0, 5]", fmt::format("matching.rotate_schedule={}", rotate)};
  ExperimentConfig probe = config_from_overrides(o);
  const SimTime E = probe.epoch.epoch_ns();
  const std::int64_t fail_e = 20, repair_e = 200, end_e = 260;
  Topology topo = Topology::build(probe.topology);
  const PortId port = topo.meeting(0, 0, 5, false).port;
  o.push_back(fmt::format("faults.events=[{{\"tor\":0,\"port\":{},\"direction\":\"egress\",\"fail_ns\":{},"
                          "\"repair_ns\":{}}}]",
                          port, fail_e * E, repair_e * E));
  o.push_back(fmt::format("duration_ns={}", end_e * E));
  auto sim = std::make_unique<Simulation>(config_from_overrides(o));
  sim->engine().schedule(1, [&sim] {
    FlowId id = sim->metrics().add_flow(0, 5, 1'000'000'000, sim->engine().now());
    sim->fabric().on_flow_arrival(id, 0, 5, 1'000'000'000);
  });
  sim->run();
  return longest_zero_run(sim->metrics().pair_trace(), fail_e, repair_e);
}

// 11. Random egress failures, recovery, and schedule rotation.
Verdict faults() {
  const SimTime fail = 10'000'000, repair = 20'000'000, end = 30'000'000;
  auto sim = std::make_unique<Simulation>(config_from_overrides(
      {"workload.load=1.0", "faults.random.fraction=0.1", fmt::format("faults.random.fail_ns={}", fail),
       fmt::format("faults.random.repair_ns={}", repair), fmt::format("duration_ns={}", end)}));
  sim->run();
  const Metrics& m = sim->metrics();
  const std::int64_t K = sim->config().negotiator.k_detect;
  const SimTime settle = (K + 2) * sim->epoch_ns();
  auto rate = [&](SimTime a, SimTime b) { return static_cast<double>(m.wanted_between(a, b)) / static_cast<double>(b - a); };
  const double pre = rate(fail - 2'000'000, fail);
  const double during = rate(fail + settle, repair) / pre;
  const double after = rate(repair + settle, end) / pre;

  const std::int64_t off = rotation_probe(false), on = rotation_probe(true);
  Verdict v;
  v.pass = during >= kFaultDropLo && during <= kFaultDropHi && std::abs(after - 1.0) <= kRecoveryTol &&
           off > K + 1 && on <= K + 1;
  v.detail = fmt::format("128 ToRs, 10% egress failed in [10, 20) ms: failure/pre {:.4f} (in [{}, {}]), "
                         "after/pre {:.4f} (within {}); failed meeting port, longest zero-epoch run: "
                         "rotation off {}, on {} (detection window {})",
                         during, kFaultDropLo, kFaultDropHi, after, kRecoveryTol, off, on, K + 1);
  return v;
}

// 12. Shipped CDF marginals.
Verdict marginals() {
  SizeCdf cdf = SizeCdf::builtin("hadoop-like");
  RandomStream rng(12);
  double small = 0, bytes = 0, big = 0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const auto s = static_cast<double>(cdf.sample(rng));
    small += s < 1024;
    bytes += s;
    if (s > 100 * 1024) big += s;
  }
  Verdict v;
  v.pass = small / n >= kBelow1kMin && big / bytes >= kBytesAbove100kMin;
  v.detail = fmt::format("flows < 1 KB {:.4f} (>= {}), bytes from flows > 100 KB {:.4f} (>= {})", small / n,
                         kBelow1kMin, big / bytes, kBytesAbove100kMin);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 13. Equal seeds give byte-identical outputs.
Verdict determinism() {
  const std::vector<Overrides> configs{
      {"topology.tors=16", "topology.ports=4", "epoch.propagation_ns=500", "duration_ns=500000"},
      {"system=oblivious", "topology.tors=16", "topology.ports=4", "duration_ns=500000"},
      {"topology.kind=thinclos", "topology.tors=32", "topology.awgr_ports=4", "workload.kind=mixed",
       "duration_ns=500000"},
      {"topology.tors=16", "topology.ports=4", "epoch.propagation_ns=500", "duration_ns=500000",
       "faults.random.fraction=0.1", "faults.random.fail_ns=100000", "faults.random.repair_ns=300000"}};
  Verdict v;
  std::size_t files = 0;
  const fs::path root = fs::temp_directory_path() / "negotiator_acceptance_det";
  for (std::size_t i = 0; i < configs.size(); ++i) {
    fs::remove_all(root);
    for (const char* tag : {"a", "b"}) run(configs[i] + Overrides{"out_dir=\"" + (root / tag).string() + "\""});
    for (const auto& f : fs::directory_iterator(root / "a")) {
      v.pass &= slurp(f.path()) == slurp(root / "b" / f.path().filename());
      ++files;
    }
  }
  fs::remove_all(root);
  v.pass &= files > 0;
  v.detail = fmt::format("{} configs, {} output files compared byte for byte", configs.size(), files);
  return v;
}

// Data only on accepted ports, accepts only on grants, grants only on requests.
std::string chain_violation(const std::string& kind) {
  Overrides o{"topology.kind=" + kind, "topology.tors=16", "topology.ports=4", "topology.awgr_ports=4",
              "epoch.propagation_ns=500", "workload.load=0.8", "duration_ns=1500000"};
  auto sim = std::make_unique<Simulation>(config_from_overrides(o));
  std::vector<TraceEvent> tr;
  sim->negotiator()->set_trace([&tr](const TraceEvent& e) { tr.push_back(e); });
  sim->run();
  using Key = std::tuple<std::int64_t, TorId, TorId, PortId>;
  std::set<Key> accepts, grants;
  std::set<std::tuple<std::int64_t, TorId, TorId>> requests;
  for (const auto& e : tr) {
    if (e.kind == TraceKind::Request) requests.insert({e.epoch, e.src, e.dst});
    if (e.kind == TraceKind::Grant) grants.insert({e.epoch, e.dst, e.src, e.port});  // keyed by requester
    if (e.kind == TraceKind::Accept) accepts.insert({e.epoch, e.src, e.dst, e.port});
  }
  std::size_t data = 0;
  for (const auto& e : tr) {
    if (e.kind == TraceKind::Data) {
      ++data;
      if (!accepts.count({e.epoch, e.src, e.dst, e.port})) return fmt::format("{}: data without accept", kind);
    }
  }
  for (const auto& [ep, s, d, p] : accepts) {
    bool granted = false;
    for (PortId q = 0; q < 4 && !granted; ++q) granted = grants.count({ep - 1, s, d, q}) > 0;
    if (!granted) return fmt::format("{}: accept without grant", kind);
    if (!requests.count({ep - 2, s, d})) return fmt::format("{}: grant without request", kind);
  }
  if (data == 0 || sim->metrics().counters().out_of_order_chunks != 0) return kind + ": no data or out of order";
  for (const auto& f : sim->metrics().flows()) {
    if (f.delivered != f.next_offset) return kind + ": delivery gap";
  }
  return {};
}

// 14. Property suites.
Verdict properties() {
  Verdict v;
  std::string d;
  std::uint64_t cases = 0;
  auto conflict = [&](std::uint32_t n, std::uint32_t m, TopologyKind k) {
    MatchInstance inst = MatchInstance::full(n, m, n * 10 + m);
    inst.kind = k;
    ConflictVerdict c = exhaustive_conflict_check(inst);
    cases += c.cases;
    if (!c.ok) {
      v.pass = false;
      d += c.counterexample + "; ";
    }
  };
  for (std::uint32_t n = 2; n <= 8; ++n) {
    for (std::uint32_t m = 1; m <= std::min(4u, n - 1); ++m) conflict(n, m, TopologyKind::ParallelNetwork);
  }
  for (auto [n, m] : {std::pair{4u, 2u}, {6u, 2u}, {6u, 3u}, {8u, 4u}}) conflict(n, m, TopologyKind::ThinClos);
  d += fmt::format("conflict-free over {} exhaustive cases; ", cases);

  for (const char* k : {"parallel", "thinclos"}) {
    std::string err = chain_violation(k);
    if (!err.empty()) {
      v.pass = false;
      d += err + "; ";
    }
  }
  d += "chain integrity and in-order delivery checked on both topologies; ";

  TopologySpec ts;
  ts.tors = 32;
  ts.ports = 1;
  ts.awgr_ports = 32;
  Topology topo = Topology::build(ts);
  RandomStream rng(14);
  GrantRings rings = GrantRings::build(topo, 0, rng);
  const std::vector<PortId> ports{0};
  bool fair = true;
  for (std::uint32_t k : {1u, 3u, 7u, 20u, 31u}) {
    std::vector<TorId> req;
    for (TorId s = 1; s <= k; ++s) req.push_back(s);
    std::vector<TorId> seq;
    for (int i = 0; i < 200; ++i) {
      auto g = grant(0, req, rings, ports, topo);
      fair &= g.size() == 1;
      if (!g.empty()) seq.push_back(g[0].to_src);
    }
    for (std::size_t i = 0; i + k <= seq.size(); ++i) {
      fair &= std::set<TorId>(seq.begin() + static_cast<long>(i), seq.begin() + static_cast<long>(i + k)).size() == k;
    }
  }
  v.pass &= fair;
  d += fmt::format("fairness window {}; ", fair ? "holds" : "violated");

  for (std::uint64_t cap : {1115u, 8920u}) {
    auto sim = std::make_unique<Simulation>(config_from_overrides(
        {"system=oblivious", "topology.tors=16", "topology.ports=4", "workload.load=1.0", "duration_ns=1000000",
         fmt::format("oblivious.transit_capacity_bytes={}", cap)}));
    sim->run();
    const auto occ = sim->oblivious()->max_transit_occupancy();
    v.pass &= occ <= cap && sim->oblivious()->hop_violations() == 0;
    d += fmt::format("transit peak {} <= {}; ", occ, cap);
  }
  v.detail = d;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  auto wanted = [&](int i) { return only.empty() || std::find(only.begin(), only.end(), i) != only.end(); };

  std::vector<LoadPoint> base;
  auto base_sweep = [&]() -> const std::vector<LoadPoint>& {
    if (base.empty()) base = load_sweep({});
    return base;
  };
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"efficiency formula vs oracle", efficiency},
      {"simulated match ratio", match_ratio},
      {"epoch arithmetic", epoch_arithmetic},
      {"scheduling-delay bypass", delay_bypass},
      {"ablation ordering", ablation},
      {"incast flatness", incast},
      {"goodput at saturation", full_scale_goodput},
      {"oblivious baseline sanity", baseline_sanity},
      {"stateful vs stateless", [&] { return stateful(base_sweep()); }},
      {"iterative vs 2x speedup", [&] { return iterative(base_sweep()); }},
      {"fault tolerance", faults},
      {"workload marginals", marginals},
      {"determinism", determinism},
      {"property suites", properties},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    fmt::print("{} {:2}. {}: {} [{:.1f} s]\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.detail, secs);
    std::fflush(stdout);
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
