#include "negotiator/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace negotiator {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

RandomStream RandomStream::derive(std::uint64_t stream_id) const {
  return RandomStream(splitmix64(seed_ ^ splitmix64(stream_id + 0x5851f42d4c957f2dULL)));
}

double RandomStream::uniform01() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::uniform_index(std::uint64_t n) {
  // Lemire's nearly-divisionless method with rejection: exact uniformity.
  std::uint64_t x = gen_();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    std::uint64_t t = -n % n;
    while (low < t) {
      x = gen_();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RandomStream::exponential(double mean) {
  return -mean * std::log1p(-uniform01());
}

EventHandle Engine::schedule(SimTime at, Action fn, const char* tag) {
  if (at < now_) {
    throw ConfigError("event scheduled at " + std::to_string(at) +
                      " ns, before current clock " + std::to_string(now_) + " ns");
  }
  EventHandle h{next_seq_++};
  heap_.push_back(Entry{at, h.seq, tag, std::move(fn)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  return h;
}

EngineStats Engine::run_until(SimTime end) {
  std::uint64_t fired_before = fired_;
  while (!heap_.empty() && heap_.front().at <= end) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Entry e = std::move(heap_.back());
    heap_.pop_back();
    now_ = e.at;
    ++fired_;
    if (trace_) trace_(e.at, e.seq, e.tag);
    e.fn();
  }
  if (end > now_) now_ = end;
  return EngineStats{fired_ - fired_before, now_};
}

}  // namespace negotiator
