#include "negotiator/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace negotiator {

namespace {

const std::vector<std::pair<double, double>> kHadoop = {
    {50, 0.0},       {200, 0.45},      {500, 0.60},       {1000, 0.65},
    {10000, 0.79},   {100000, 0.87},   {1000000, 0.97},   {3000000, 1.0}};

const std::vector<std::pair<double, double>> kWebsearch = {
    {1000, 0.0},     {10000, 0.15},    {20000, 0.20},     {30000, 0.30},
    {50000, 0.40},   {80000, 0.53},    {200000, 0.60},    {1000000, 0.70},
    {2000000, 0.80}, {5000000, 0.90},  {10000000, 0.97},  {30000000, 1.0}};

const std::vector<std::pair<double, double>> kGoogle = {
    {50, 0.0},       {100, 0.30},      {500, 0.70},       {1000, 0.82},
    {10000, 0.93},   {100000, 0.98},   {1000000, 1.0}};

}  // namespace

SizeCdf::SizeCdf(std::vector<std::pair<double, double>> points, std::string name)
    : points_(std::move(points)), name_(std::move(name)) {
  if (points_.empty()) throw ConfigError("size CDF '" + name_ + "' has no points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& [s, p] = points_[i];
    if (!(s > 0) || !(p >= 0) || !(p <= 1)) {
      throw ConfigError("size CDF '" + name_ + "': bad point " + std::to_string(i));
    }
    if (i > 0 && (s <= points_[i - 1].first || p < points_[i - 1].second)) {
      throw ConfigError("size CDF '" + name_ + "': sizes must increase and probabilities not decrease");
    }
  }
  if (points_.back().second != 1.0) throw ConfigError("size CDF '" + name_ + "' must end at 1.0");
}

SizeCdf SizeCdf::parse(const std::string& text, const std::string& name) {
  std::vector<std::pair<double, double>> pts;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double s, p;
    if (!(ls >> s)) continue;
    if (!(ls >> p)) {
      throw ConfigError("size CDF '" + name + "' line " + std::to_string(lineno) +
                        ": expected 'size_bytes cumulative_prob'");
    }
    pts.emplace_back(s, p);
  }
  return SizeCdf(std::move(pts), name);
}

SizeCdf SizeCdf::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open size CDF file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

SizeCdf SizeCdf::builtin(const std::string& name) {
  if (name == "hadoop-like") return SizeCdf(kHadoop, name);
  if (name == "websearch-like") return SizeCdf(kWebsearch, name);
  if (name == "google-like") return SizeCdf(kGoogle, name);
  throw ConfigError("unknown built-in size CDF '" + name + "'");
}

std::vector<std::string> SizeCdf::builtin_names() {
  return {"hadoop-like", "websearch-like", "google-like"};
}

double SizeCdf::mean_bytes() const {
  double m = points_[0].first * points_[0].second;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto& [s0, p0] = points_[i - 1];
    const auto& [s1, p1] = points_[i];
    m += (p1 - p0) * (s0 + s1) / 2.0;
  }
  return m;
}

double SizeCdf::fraction_below(double bytes) const {
  if (bytes <= points_[0].first) return 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto& [s0, p0] = points_[i - 1];
    const auto& [s1, p1] = points_[i];
    if (bytes <= s1) return p0 + (p1 - p0) * (bytes - s0) / (s1 - s0);
  }
  return 1.0;
}

std::uint64_t SizeCdf::quantile(double u) const {
  if (u <= points_[0].second) return static_cast<std::uint64_t>(std::llround(points_[0].first));
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto& [s0, p0] = points_[i - 1];
    const auto& [s1, p1] = points_[i];
    if (u <= p1) {
      double s = s0 + (u - p0) / (p1 - p0) * (s1 - s0);
      return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(s)));
    }
  }
  return static_cast<std::uint64_t>(std::llround(points_.back().first));
}

std::uint64_t SizeCdf::sample(RandomStream& rng) const { return quantile(rng.uniform01()); }

std::string to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::Poisson: return "poisson";
    case WorkloadKind::Incast: return "incast";
    case WorkloadKind::AllToAll: return "all_to_all";
    case WorkloadKind::Mixed: return "mixed";
  }
  return "poisson";
}

WorkloadKind workload_kind_from_string(const std::string& s) {
  if (s == "poisson") return WorkloadKind::Poisson;
  if (s == "incast") return WorkloadKind::Incast;
  if (s == "all_to_all") return WorkloadKind::AllToAll;
  if (s == "mixed") return WorkloadKind::Mixed;
  throw ConfigError("unknown workload.kind '" + s + "'");
}

double mean_interarrival_ns(double mean_flow_bits, double host_rate, std::uint32_t tors, double load) {
  if (!(load > 0) || !(host_rate > 0) || tors == 0) {
    throw ConfigError("load, host rate and ToR count must be positive");
  }
  return mean_flow_bits / (host_rate * tors * load);
}

double incast_interarrival_ns(std::uint32_t degree, std::uint64_t size_bytes, double fraction,
                              double host_rate, std::uint32_t tors) {
  if (!(fraction > 0) || !(fraction < 1)) throw ConfigError("workload.mix_fraction must be in (0,1)");
  return static_cast<double>(degree) * static_cast<double>(size_bytes) * 8.0 /
         (fraction * host_rate * tors);
}

std::vector<TorId> pick_sources(std::uint32_t tors, TorId dst, std::uint32_t degree,
                                RandomStream& rng) {
  if (degree < 1 || degree > tors - 1) throw ConfigError("incast degree must be in [1, N-1]");
  std::vector<TorId> pool;
  pool.reserve(tors - 1);
  for (TorId t = 0; t < tors; ++t) {
    if (t != dst) pool.push_back(t);
  }
  for (std::uint32_t i = 0; i < degree; ++i) {
    auto j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(degree);
  return pool;
}

FlowGenerator::FlowGenerator(WorkloadSpec spec, const RandomStream& rng)
    : spec_(std::move(spec)), bg_rng_(rng.derive(1)), burst_rng_(rng.derive(2)) {
  if (spec_.tors < 2) throw ConfigError("workload needs at least two ToRs");
  const bool background = spec_.kind == WorkloadKind::Poisson || spec_.kind == WorkloadKind::Mixed;
  if (background) {
    if (!(spec_.load > 0) || spec_.load > 1) throw ConfigError("workload.load must be in (0,1]");
    if (spec_.cdf.points().empty()) throw ConfigError("workload needs a size CDF");
    tau_ = mean_interarrival_ns(spec_.cdf.mean_bytes() * 8.0, spec_.host_rate, spec_.tors, spec_.load);
  }
  bg_clock_ = static_cast<double>(spec_.start_ns);
  if (spec_.kind == WorkloadKind::Incast || spec_.kind == WorkloadKind::Mixed) {
    if (spec_.incast_degree < 1 || spec_.incast_degree > spec_.tors - 1) {
      throw ConfigError("workload.incast_degree must be in [1, N-1]");
    }
    if (spec_.incast_size_bytes == 0) throw ConfigError("workload.incast_size_bytes must be positive");
  }
  if (spec_.kind == WorkloadKind::AllToAll && spec_.all_to_all_size_bytes == 0) {
    throw ConfigError("workload.all_to_all_size_bytes must be positive");
  }
  if (spec_.kind == WorkloadKind::Mixed) {
    burst_tau_ = incast_interarrival_ns(spec_.incast_degree, spec_.incast_size_bytes,
                                        spec_.mix_fraction, spec_.host_rate, spec_.tors);
    burst_clock_ = static_cast<double>(spec_.start_ns) + burst_rng_.exponential(burst_tau_);
  }
}

void FlowGenerator::refill_burst(SimTime t) {
  burst_.clear();
  burst_pos_ = 0;
  const std::uint32_t n = spec_.tors;
  if (spec_.kind == WorkloadKind::AllToAll) {
    for (TorId s = 0; s < n; ++s) {
      for (TorId d = 0; d < n; ++d) {
        if (s != d) burst_.push_back(FlowEvent{t, s, d, spec_.all_to_all_size_bytes, burst_index_});
      }
    }
  } else {
    TorId dst = spec_.incast_dst;
    if (dst == kIdle || spec_.kind == WorkloadKind::Mixed) {
      dst = static_cast<TorId>(burst_rng_.uniform_index(n));
    }
    for (TorId s : pick_sources(n, dst, spec_.incast_degree, burst_rng_)) {
      burst_.push_back(FlowEvent{t, s, dst, spec_.incast_size_bytes, burst_index_});
    }
  }
  ++burst_index_;
}

std::optional<FlowEvent> FlowGenerator::next_background() {
  if (!bg_peek_) {
    bg_clock_ += bg_rng_.exponential(tau_);
    auto t = static_cast<SimTime>(std::floor(bg_clock_));
    if (spec_.stop_ns >= 0 && t >= spec_.stop_ns) return std::nullopt;
    FlowEvent e;
    e.time = t;
    e.size = spec_.cdf.sample(bg_rng_);
    e.src = static_cast<TorId>(bg_rng_.uniform_index(spec_.tors));
    e.dst = static_cast<TorId>(bg_rng_.uniform_index(spec_.tors - 1));
    if (e.dst >= e.src) ++e.dst;
    bg_peek_ = e;
  }
  return bg_peek_;
}

std::optional<FlowEvent> FlowGenerator::next() {
  if (burst_pos_ < burst_.size()) return burst_[burst_pos_++];
  switch (spec_.kind) {
    case WorkloadKind::Incast:
    case WorkloadKind::AllToAll:
      if (synced_done_) return std::nullopt;
      synced_done_ = true;
      refill_burst(spec_.start_ns);
      return burst_[burst_pos_++];
    case WorkloadKind::Poisson: {
      auto e = next_background();
      bg_peek_.reset();
      return e;
    }
    case WorkloadKind::Mixed: {
      auto bg = next_background();
      auto bt = static_cast<SimTime>(std::floor(burst_clock_));
      bool burst_ok = spec_.stop_ns < 0 || bt < spec_.stop_ns;
      if (burst_ok && (!bg || bt <= bg->time)) {
        refill_burst(bt);
        burst_clock_ += burst_rng_.exponential(burst_tau_);
        return burst_[burst_pos_++];
      }
      bg_peek_.reset();
      return bg;
    }
  }
  return std::nullopt;
}

}  // namespace negotiator
