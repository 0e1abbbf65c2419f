#pragma once

#include <cstdint>

#include "negotiator/engine.hpp"
#include "negotiator/queues.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

// A simulated network that flows can be injected into.
class Fabric {
 public:
  virtual ~Fabric() = default;
  virtual void start() = 0;
  // The flow is already registered with the metrics under `id`.
  virtual void on_flow_arrival(FlowId id, TorId src, TorId dst, std::uint64_t size) = 0;
  // Bytes still queued anywhere in the network.
  virtual std::uint64_t backlog_bytes() const = 0;
};

}  // namespace negotiator
