#include "negotiator/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace negotiator {

Simulation::Simulation(const ExperimentConfig& cfg) : cfg_(cfg), topo_(Topology::build(cfg.topology)) {
  EpochReport report = validate(cfg_);
  if (!report.errors.empty()) throw ConfigError(report.errors.front());
  const RandomStream root(cfg_.seed);
  metrics_ = std::make_unique<Metrics>(topo_.tors(), cfg_.bucket_ns, epoch_ns());
  links_ = std::make_unique<PhysicalLinks>(topo_.tors(), topo_.ports());
  if (cfg_.trace_pair) metrics_->trace_pair(cfg_.trace_pair->first, cfg_.trace_pair->second);

  fault_events_ = cfg_.faults.events;
  if (cfg_.faults.random) {
    const auto& r = *cfg_.faults.random;
    auto extra = random_fault_set(topo_, r.fraction, r.direction, r.fail_ns, r.repair_ns, r.seed);
    fault_events_.insert(fault_events_.end(), extra.begin(), extra.end());
  }
  if (!fault_events_.empty()) {
    if (cfg_.system == SystemKind::Oblivious) {
      throw ConfigError("fault injection is supported for the negotiator system only");
    }
    if (cfg_.negotiator.variant == MatchingVariant::Iterative) {
      throw ConfigError("fault injection is not supported with matching.variant iterative");
    }
  }

  if (cfg_.system == SystemKind::Negotiator) {
    auto net = std::make_unique<NegotiatorNetwork>(engine_, topo_, cfg_.negotiator, *metrics_, *links_,
                                                   root.derive(1));
    negotiator_ = net.get();
    fabric_ = std::move(net);
  } else {
    auto net = std::make_unique<ObliviousNetwork>(engine_, topo_, cfg_.oblivious, *metrics_, root.derive(1));
    oblivious_ = net.get();
    fabric_ = std::move(net);
  }
  gen_ = std::make_unique<FlowGenerator>(cfg_.workload, root.derive(2));

  for (const auto& ev : fault_events_) links_->apply_fault(engine_, ev);
  // Arrivals are scheduled before the fabric starts so flows present at t=0
  // are visible to the first slot.
  next_ = gen_->next();
  if (next_ && next_->time < cfg_.duration_ns) {
    engine_.schedule(next_->time, [this] { inject(); }, "arrival");
  }
  fabric_->start();
}

Simulation::~Simulation() = default;

void Simulation::inject() {
  const SimTime now = engine_.now();
  while (next_ && next_->time == now) {
    const FlowEvent& e = *next_;
    FlowId id = metrics_->add_flow(e.src, e.dst, e.size, now);
    if (e.group >= 0) {
      if (static_cast<std::size_t>(e.group) >= groups_.size()) groups_.resize(e.group + 1);
      groups_[e.group].push_back(id);
    }
    fabric_->on_flow_arrival(id, e.src, e.dst, e.size);
    next_ = gen_->next();
  }
  if (next_ && next_->time < cfg_.duration_ns) {
    engine_.schedule(next_->time, [this] { inject(); }, "arrival");
  }
}

void Simulation::run(std::optional<SimTime> until) {
  auto t0 = std::chrono::steady_clock::now();
  engine_.run_until(until.value_or(cfg_.duration_ns));
  wall_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunSummary Simulation::summary() const {
  RunSummary s;
  s.system = to_string(cfg_.system);
  s.topology = to_string(cfg_.topology.kind);
  s.variant = cfg_.system == SystemKind::Negotiator ? to_string(cfg_.negotiator.variant) : "-";
  s.tors = topo_.tors();
  s.load = cfg_.workload.load;
  s.seed = cfg_.seed;
  s.duration_ns = cfg_.duration_ns;
  s.epoch_ns = epoch_ns();
  s.guard_fraction = cfg_.epoch.guard_fraction();
  const auto& flows = metrics_->flows();
  s.flows = flows.size();
  const SimTime two_epochs = 2 * epoch_ns();
  std::uint64_t fast = 0;
  for (const auto& f : flows) {
    if (f.done()) ++s.completed;
    if (f.is_mice()) {
      ++s.mice;
      if (f.done()) {
        ++s.mice_completed;
        if (f.fct() <= two_epochs) ++fast;
      }
    }
  }
  s.mice_fct_p99_ns = fct_percentile(flows, 99, true);
  s.mice_fct_mean_ns = fct_mean(flows, true);
  s.fct_p99_ns = fct_percentile(flows, 99, false);
  s.fct_mean_ns = fct_mean(flows, false);
  if (s.mice_completed > 0) s.mice_within_2_epochs = static_cast<double>(fast) / s.mice_completed;
  const SimTime warm = static_cast<SimTime>(cfg_.warmup_epochs) * epoch_ns();
  // Bucket-aligned window that starts after the warmup.
  const SimTime from = (warm + cfg_.bucket_ns - 1) / cfg_.bucket_ns * cfg_.bucket_ns;
  const SimTime to = cfg_.duration_ns / cfg_.bucket_ns * cfg_.bucket_ns;
  s.goodput = to > from ? goodput(*metrics_, from, to, cfg_.host_rate) : 0.0;
  if (cfg_.system == SystemKind::Negotiator) {
    auto samples = metrics_->match_samples();
    s.match_ratio = mean_match_ratio(samples, cfg_.warmup_epochs);
  }
  s.counters = metrics_->counters();
  s.events = engine_.events_fired();
  s.wall_seconds = wall_seconds_;
  return s;
}

EpochReport validate(const ExperimentConfig& cfg) {
  Topology topo = Topology::build(cfg.topology);
  EpochReport r = check_epoch(cfg.epoch, topo, cfg.negotiator.piggyback);
  if (cfg.system == SystemKind::Oblivious) {
    // The rotor has no epochs; the epoch only serves as the FCT unit.
    for (auto& e : r.errors) r.warnings.push_back("epoch (FCT unit only): " + e);
    r.errors.clear();
  }
  if (cfg.system == SystemKind::Negotiator) {
    const auto& n = cfg.negotiator;
    if (n.variant == MatchingVariant::Relay && topo.kind() != TopologyKind::ThinClos) {
      r.errors.push_back("matching.variant relay requires topology.kind thinclos");
    }
    if (n.variant == MatchingVariant::HolDelay && (!n.priority_queues || n.pq_thresholds.size() != 2)) {
      r.errors.push_back("matching.variant holdelay requires priority queues with two thresholds");
    }
    if (n.variant == MatchingVariant::Iterative && n.iterations < 1) {
      r.errors.push_back("matching.iterations must be >= 1");
    }
  }
  return r;
}

namespace {

std::string opt_int(const std::optional<SimTime>& v) { return v ? std::to_string(*v) : "NA"; }
std::string opt_dbl(const std::optional<double>& v, int prec = 4) {
  return v ? fmt::format("{:.{}f}", *v, prec) : "NA";
}
std::string opt_epochs(const std::optional<SimTime>& v, SimTime e) {
  return v ? fmt::format("{:.3f}", static_cast<double>(*v) / static_cast<double>(e)) : "NA";
}
std::string opt_epochs(const std::optional<double>& v, SimTime e) {
  return v ? fmt::format("{:.3f}", *v / static_cast<double>(e)) : "NA";
}

}  // namespace

std::string format_summary(const RunSummary& s) {
  std::string out;
  auto line = [&](const std::string& k, const std::string& v) { out += k + " " + v + "\n"; };
  line("system", s.system);
  line("topology", s.topology);
  line("variant", s.variant);
  line("tors", std::to_string(s.tors));
  line("load", fmt::format("{:.4f}", s.load));
  line("seed", std::to_string(s.seed));
  line("duration_ns", std::to_string(s.duration_ns));
  line("epoch_ns", std::to_string(s.epoch_ns));
  line("guard_fraction", fmt::format("{:.4f}", s.guard_fraction));
  line("flows", std::to_string(s.flows));
  line("flows_completed", std::to_string(s.completed));
  line("mice", std::to_string(s.mice));
  line("mice_completed", std::to_string(s.mice_completed));
  line("mice_fct_p99_ns", opt_int(s.mice_fct_p99_ns));
  line("mice_fct_p99_epochs", opt_epochs(s.mice_fct_p99_ns, s.epoch_ns));
  line("mice_fct_mean_ns", opt_dbl(s.mice_fct_mean_ns, 1));
  line("mice_fct_mean_epochs", opt_epochs(s.mice_fct_mean_ns, s.epoch_ns));
  line("mice_within_2_epochs", opt_dbl(s.mice_within_2_epochs));
  line("fct_p99_ns", opt_int(s.fct_p99_ns));
  line("fct_mean_ns", opt_dbl(s.fct_mean_ns, 1));
  line("goodput", fmt::format("{:.4f}", s.goodput));
  line("match_ratio", opt_dbl(s.match_ratio));
  const auto& c = s.counters;
  line("messages_sent", std::to_string(c.messages_sent));
  line("dummy_messages", std::to_string(c.dummy_messages));
  line("piggyback_bytes", std::to_string(c.piggyback_bytes));
  line("scheduled_bytes", std::to_string(c.scheduled_bytes));
  line("relayed_bytes", std::to_string(c.relayed_bytes));
  line("max_transit_occupancy", std::to_string(c.max_transit_occupancy));
  line("lost_transmissions", std::to_string(c.lost_transmissions));
  line("lost_bytes", std::to_string(c.lost_bytes));
  line("recredited_bytes", std::to_string(c.recredited_bytes));
  line("suppressed_piggybacks", std::to_string(c.suppressed_piggybacks));
  line("false_detections", std::to_string(c.false_detections));
  line("out_of_order_chunks", std::to_string(c.out_of_order_chunks));
  line("events", std::to_string(s.events));
  return out;
}

void write_outputs(const Simulation& sim, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const Metrics& m = sim.metrics();
  {
    std::ofstream f(fs::path(dir) / "flows.csv");
    f << "flow_id,src,dst,size_bytes,arrival_ns,completion_ns,is_mice\n";
    for (const auto& r : m.flows()) {
      f << r.id << ',' << r.src << ',' << r.dst << ',' << r.size_bytes << ',' << r.arrival_ns << ','
        << (r.done() ? std::to_string(*r.completion_ns) : std::string("NA")) << ','
        << (r.is_mice() ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream f(fs::path(dir) / "timeseries.csv");
    f << "t_ns,tor_id,wanted_bps,transit_bps\n";
    const double scale = 8.0 * 1e9 / static_cast<double>(m.bucket_ns());
    for (std::size_t b = 0; b < m.buckets(); ++b) {
      for (TorId t = 0; t < m.tors(); ++t) {
        f << static_cast<SimTime>(b) * m.bucket_ns() << ',' << t << ','
          << fmt::format("{:.0f}", static_cast<double>(m.wanted_bytes(b, t)) * scale) << ','
          << fmt::format("{:.0f}", static_cast<double>(m.transit_bytes(b, t)) * scale) << '\n';
      }
    }
  }
  {
    std::ofstream f(fs::path(dir) / "match.csv");
    f << "epoch,grants,accepts\n";
    for (const auto& s : m.match_samples()) f << s.epoch << ',' << s.grants << ',' << s.accepts << '\n';
  }
  {
    std::ofstream f(fs::path(dir) / "summary.txt");
    f << format_summary(sim.summary());
  }
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
  Simulation sim(cfg);
  sim.run();
  if (!cfg.out_dir.empty()) write_outputs(sim, cfg.out_dir);
  return sim.summary();
}

std::string sweep_csv(const std::string& key, const std::vector<SweepPoint>& points) {
  std::string out = key +
                    ",system,topology,variant,load,flows,flows_completed,mice_fct_p99_ns,"
                    "mice_fct_mean_ns,fct_p99_ns,goodput,match_ratio\n";
  for (const auto& p : points) {
    const auto& s = p.summary;
    out += fmt::format("{},{},{},{},{:.4f},{},{},{},{},{},{:.4f},{}\n", p.value, s.system, s.topology,
                       s.variant, s.load, s.flows, s.completed, opt_int(s.mice_fct_p99_ns),
                       opt_dbl(s.mice_fct_mean_ns, 1), opt_int(s.fct_p99_ns), s.goodput,
                       opt_dbl(s.match_ratio));
  }
  return out;
}

std::vector<SweepPoint> sweep(const Json& base, const std::string& key,
                              const std::vector<std::string>& values, unsigned threads,
                              const std::string& out_dir) {
  std::vector<SweepPoint> points(values.size());
  if (values.empty()) {
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::ofstream(std::filesystem::path(out_dir) / "sweep.csv") << sweep_csv(key, points);
    }
    return points;
  }
  // Build every config up front so bad values fail before any run.
  std::vector<ExperimentConfig> cfgs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    Json j = base;
    apply_override(j, key + "=" + values[i]);
    if (!out_dir.empty()) j["out_dir"] = (std::filesystem::path(out_dir) / fmt::format("point_{}", i)).string();
    cfgs.push_back(build_config(j));
    points[i].value = values[i];
  }
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(values.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfgs.size(); i = next++) {
      try {
        points[i].summary = run_experiment(cfgs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / "sweep.csv") << sweep_csv(key, points);
  }
  return points;
}

}  // namespace negotiator
