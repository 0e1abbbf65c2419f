#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace negotiator {

// Simulated time in integer nanoseconds.
using SimTime = std::int64_t;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A violated internal invariant (schedule conflict, accounting error).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A peer exceeded what it was allowed to send.
class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t splitmix64(std::uint64_t x);

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 1);

  // Independent stream for a sub-component (e.g. one ToR).
  RandomStream derive(std::uint64_t stream_id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return gen_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform01();
  // Exact uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  double exponential(double mean);

  template <class It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[uniform_index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

struct EngineStats {
  std::uint64_t events_fired = 0;
  SimTime clock = 0;
};

struct EventHandle {
  std::uint64_t seq = 0;
};

class Engine {
 public:
  using Action = std::function<void()>;
  using TraceHook = std::function<void(SimTime, std::uint64_t, const char*)>;

  EventHandle schedule(SimTime at, Action fn, const char* tag = "");
  EventHandle schedule_in(SimTime delay, Action fn, const char* tag = "") {
    return schedule(now_ + delay, std::move(fn), tag);
  }

  // Fires every event with time <= end, then sets the clock to end.
  EngineStats run_until(SimTime end);

  SimTime now() const { return now_; }
  std::size_t pending() const { return heap_.size(); }
  std::uint64_t events_fired() const { return fired_; }
  void set_trace(TraceHook hook) { trace_ = std::move(hook); }

 private:
  struct Entry {
    SimTime at;
    std::uint64_t seq;
    const char* tag;
    Action fn;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  std::vector<Entry> heap_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t fired_ = 0;
  TraceHook trace_;
};

}  // namespace negotiator
