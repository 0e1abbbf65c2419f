#include "negotiator/queues.hpp"

#include <algorithm>

namespace negotiator {

void PerDestQueue::push_flow(FlowId flow, std::uint64_t size, SimTime now,
                             std::span<const std::uint64_t> thresholds) {
  std::uint64_t start = 0;
  const std::uint32_t top = levels() - 1;
  for (std::uint32_t l = 0; l <= top && start < size; ++l) {
    std::uint64_t end = size;
    if (l < top && l < thresholds.size()) end = std::min(size, thresholds[l]);
    if (end <= start) continue;
    push_back(l, Segment{flow, start, end - start, now});
    start = end;
  }
}

void PerDestQueue::push_back(std::uint32_t level, const Segment& seg) {
  if (seg.bytes == 0) return;
  auto& l = levels_[level];
  l.segs.push_back(seg);
  l.bytes += seg.bytes;
  total_ += seg.bytes;
}

void PerDestQueue::push_front(std::uint32_t level, const Segment& seg) {
  if (seg.bytes == 0) return;
  auto& l = levels_[level];
  l.segs.push_front(seg);
  l.bytes += seg.bytes;
  total_ += seg.bytes;
}

std::uint64_t PerDestQueue::drain(std::uint64_t max_bytes, std::vector<Chunk>& out, int only_level) {
  std::uint64_t taken = 0;
  for (std::uint32_t li = 0; li < levels() && taken < max_bytes; ++li) {
    if (only_level >= 0 && static_cast<std::uint32_t>(only_level) != li) continue;
    auto& l = levels_[li];
    while (!l.segs.empty() && taken < max_bytes) {
      Segment& s = l.segs.front();
      std::uint64_t n = std::min(s.bytes, max_bytes - taken);
      Chunk c;
      c.flow = s.flow;
      c.offset = s.offset;
      c.bytes = static_cast<std::uint32_t>(n);
      c.level = static_cast<std::uint8_t>(li);
      c.enqueued = s.enqueued;
      out.push_back(c);
      taken += n;
      l.bytes -= n;
      total_ -= n;
      s.offset += n;
      s.bytes -= n;
      if (s.bytes == 0) l.segs.pop_front();
    }
  }
  return taken;
}

SimTime PerDestQueue::enqueue_at(std::uint64_t pos) const {
  for (const auto& l : levels_) {
    if (pos >= l.bytes) {
      pos -= l.bytes;
      continue;
    }
    for (const auto& s : l.segs) {
      if (pos < s.bytes) return s.enqueued;
      pos -= s.bytes;
    }
  }
  return 0;
}

}  // namespace negotiator
