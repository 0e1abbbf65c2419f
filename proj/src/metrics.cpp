#include "negotiator/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace negotiator {

Metrics::Metrics(std::uint32_t tors, SimTime bucket_ns, SimTime epoch_ns)
    : tors_(tors), bucket_ns_(bucket_ns), epoch_ns_(epoch_ns) {
  if (tors == 0 || bucket_ns <= 0 || epoch_ns <= 0) {
    throw ConfigError("metrics: tors, bucket and epoch length must be positive");
  }
}

FlowId Metrics::add_flow(TorId src, TorId dst, std::uint64_t size, SimTime arrival) {
  FlowRecord r;
  r.id = flows_.size();
  r.src = src;
  r.dst = dst;
  r.size_bytes = size;
  r.arrival_ns = arrival;
  flows_.push_back(r);
  return r.id;
}

void Metrics::grow(std::size_t bucket) {
  if (bucket >= buckets()) {
    wanted_.resize((bucket + 1) * tors_, 0);
    transit_.resize((bucket + 1) * tors_, 0);
  }
}

bool Metrics::on_delivery(TorId receiver, FlowId flow, std::uint64_t offset, std::uint64_t bytes,
                          SimTime t) {
  FlowRecord& r = flows_.at(flow);
  if (r.dst != receiver) throw InvariantViolation("flow bytes delivered to the wrong ToR");
  bool in_order = offset == r.next_offset;
  if (in_order) {
    r.next_offset += bytes;
  } else {
    ++counters_.out_of_order_chunks;
    if (offset + bytes > r.next_offset && offset <= r.next_offset) r.next_offset = offset + bytes;
  }
  r.delivered += bytes;
  if (r.delivered > r.size_bytes) throw InvariantViolation("flow received more bytes than its size");
  if (r.delivered == r.size_bytes) {
    r.completion_ns = t;
    r.next_offset = r.size_bytes;
  }
  auto b = static_cast<std::size_t>(t / bucket_ns_);
  grow(b);
  wanted_[b * tors_ + receiver] += bytes;
  auto e = static_cast<std::size_t>(t / epoch_ns_);
  if (e >= wanted_epoch_.size()) wanted_epoch_.resize(e + 1, 0);
  wanted_epoch_[e] += bytes;
  total_wanted_ += bytes;
  return in_order;
}

void Metrics::on_transit(TorId receiver, std::uint64_t bytes, SimTime t) {
  auto b = static_cast<std::size_t>(t / bucket_ns_);
  grow(b);
  transit_[b * tors_ + receiver] += bytes;
}

void Metrics::on_grants(std::int64_t epoch, std::uint64_t n) {
  auto e = static_cast<std::size_t>(epoch);
  if (e >= grants_.size()) {
    grants_.resize(e + 1, 0);
    accepts_.resize(e + 1, 0);
  }
  grants_[e] += n;
}

void Metrics::on_accepts(std::int64_t grant_epoch, std::uint64_t n) {
  auto e = static_cast<std::size_t>(grant_epoch);
  if (e >= grants_.size()) {
    grants_.resize(e + 1, 0);
    accepts_.resize(e + 1, 0);
  }
  accepts_[e] += n;
  if (accepts_[e] > grants_[e]) throw InvariantViolation("more accepts than grants in an epoch");
}

void Metrics::trace_pair(TorId src, TorId dst) {
  trace_src_ = src;
  trace_dst_ = dst;
  pair_trace_.clear();
}

void Metrics::on_pair_bytes(std::int64_t epoch, std::uint64_t bytes) {
  auto e = static_cast<std::size_t>(epoch);
  if (e >= pair_trace_.size()) pair_trace_.resize(e + 1, 0);
  pair_trace_[e] += bytes;
}

std::vector<MatchSample> Metrics::match_samples() const {
  std::vector<MatchSample> out;
  out.reserve(grants_.size());
  for (std::size_t e = 0; e < grants_.size(); ++e) {
    out.push_back(MatchSample{static_cast<std::int64_t>(e), grants_[e], accepts_[e]});
  }
  return out;
}

std::uint64_t Metrics::wanted_bytes(std::size_t bucket, TorId tor) const {
  return bucket < buckets() ? wanted_[bucket * tors_ + tor] : 0;
}

std::uint64_t Metrics::transit_bytes(std::size_t bucket, TorId tor) const {
  return bucket < buckets() ? transit_[bucket * tors_ + tor] : 0;
}

std::uint64_t Metrics::wanted_between(SimTime from, SimTime to) const {
  // Bucket granularity: callers pass bucket-aligned windows.
  std::uint64_t sum = 0;
  for (std::size_t b = 0; b < buckets(); ++b) {
    SimTime start = static_cast<SimTime>(b) * bucket_ns_;
    if (start < from || start >= to) continue;
    for (TorId t = 0; t < tors_; ++t) sum += wanted_[b * tors_ + t];
  }
  return sum;
}

std::optional<SimTime> nearest_rank(std::vector<SimTime> values, double p) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  if (rank < 1) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

std::optional<SimTime> fct_percentile(std::span<const FlowRecord> records, double p, bool mice_only) {
  std::vector<SimTime> v;
  for (const auto& r : records) {
    if (!r.done() || (mice_only && !r.is_mice())) continue;
    v.push_back(r.fct());
  }
  return nearest_rank(std::move(v), p);
}

std::optional<double> fct_mean(std::span<const FlowRecord> records, bool mice_only) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.done() || (mice_only && !r.is_mice())) continue;
    sum += static_cast<double>(r.fct());
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

double normalized_goodput(std::uint64_t wanted_bytes, SimTime window_ns, std::uint32_t tors,
                          double host_rate) {
  if (window_ns <= 0) return 0.0;
  return static_cast<double>(wanted_bytes) * 8.0 /
         (host_rate * static_cast<double>(tors) * static_cast<double>(window_ns));
}

double goodput(const Metrics& m, SimTime from, SimTime to, double host_rate) {
  return normalized_goodput(m.wanted_between(from, to), to - from, m.tors(), host_rate);
}

std::optional<double> mean_match_ratio(std::span<const MatchSample> samples, std::int64_t from_epoch) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    if (s.epoch < from_epoch || s.grants == 0) continue;
    sum += static_cast<double>(s.accepts) / static_cast<double>(s.grants);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<SimTime> incast_finish_time(std::span<const FlowRecord> records,
                                          std::span<const FlowId> flows) {
  if (flows.empty()) return std::nullopt;
  SimTime start = records[flows[0]].arrival_ns;
  SimTime last = start;
  for (FlowId f : flows) {
    const auto& r = records[f];
    if (!r.done()) return std::nullopt;
    start = std::min(start, r.arrival_ns);
    last = std::max(last, *r.completion_ns);
  }
  return last - start;
}

}  // namespace negotiator
