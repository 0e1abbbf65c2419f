#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "negotiator/engine.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

using FlowId = std::uint64_t;

// A run of consecutive flow bytes waiting in one priority level.
struct Segment {
  FlowId flow = 0;
  std::uint64_t offset = 0;
  std::uint64_t bytes = 0;
  SimTime enqueued = 0;
};

// Bytes handed to a transmission.
struct Chunk {
  FlowId flow = 0;
  std::uint64_t offset = 0;
  std::uint32_t bytes = 0;
  std::uint8_t level = 0;
  TorId final_dst = kIdle;  // set when the chunk is relayed through the receiver
  bool from_transit = false;
  SimTime enqueued = 0;
};

// Per-destination queue with strict-priority levels, FIFO within a level.
class PerDestQueue {
 public:
  explicit PerDestQueue(std::uint32_t levels = 1) : levels_(levels) {}

  // Splits a flow across levels: thresholds are cumulative byte offsets
  // (e.g. {1024, 10240}); with an empty list everything goes to level 0.
  void push_flow(FlowId flow, std::uint64_t size, SimTime now,
                 std::span<const std::uint64_t> thresholds);
  void push_back(std::uint32_t level, const Segment& seg);
  void push_front(std::uint32_t level, const Segment& seg);

  // Moves up to max_bytes into out, highest priority level first.
  // `only_level` restricts draining to one level (-1: any).
  std::uint64_t drain(std::uint64_t max_bytes, std::vector<Chunk>& out, int only_level = -1);

  std::uint32_t levels() const { return static_cast<std::uint32_t>(levels_.size()); }
  std::uint64_t total() const { return total_; }
  bool empty() const { return total_ == 0; }
  std::uint64_t level_bytes(std::uint32_t level) const { return levels_[level].bytes; }
  // Enqueue time of the head segment of a non-empty level.
  SimTime hol_enqueue(std::uint32_t level) const { return levels_[level].segs.front().enqueued; }
  // Enqueue time of the byte at drain-order position pos (pos < total()).
  SimTime enqueue_at(std::uint64_t pos) const;

 private:
  struct Level {
    std::deque<Segment> segs;
    std::uint64_t bytes = 0;
  };
  std::vector<Level> levels_;
  std::uint64_t total_ = 0;
};

}  // namespace negotiator
