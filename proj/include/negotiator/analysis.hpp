#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "negotiator/matching.hpp"
#include "negotiator/topology.hpp"

namespace negotiator {

struct MatchInstance {
  std::uint32_t n = 4;
  std::uint32_t m = 2;
  TopologyKind kind = TopologyKind::ParallelNetwork;
  // demand[s * n + d]; the diagonal must be zero.
  std::vector<std::uint8_t> demand;
  // Seeds the ring orders; pointers are enumerated.
  std::uint64_t ring_seed = 1;

  static MatchInstance full(std::uint32_t n, std::uint32_t m, std::uint64_t seed = 1);
  bool wants(TorId s, TorId d) const { return demand[static_cast<std::size_t>(s) * n + d] != 0; }
};

struct MatchOutcome {
  std::vector<Grant> grants;
  std::vector<Accept> accepts;
};

// One REQUEST/GRANT/ACCEPT round with the given rings. Destinations grant
// only free ports, sources accept only onto free ports.
MatchOutcome match_round(const Topology& topo, const MatchInstance& inst,
                         std::vector<GrantRings>& grant_rings, std::vector<AcceptRings>& accept_rings,
                         const std::vector<std::uint64_t>& src_busy,
                         const std::vector<std::uint64_t>& dst_busy);

// Empty string when the outcome is conflict-free and every accept traces
// back to a grant and a request; otherwise a description of the violation.
std::string check_outcome(const MatchInstance& inst, const MatchOutcome& out,
                          const std::vector<std::uint64_t>& src_busy = {},
                          const std::vector<std::uint64_t>& dst_busy = {});

struct ConflictVerdict {
  bool ok = true;
  std::uint64_t cases = 0;
  std::uint64_t min_accepts = 0;
  std::uint64_t max_accepts = 0;
  std::string counterexample;
};

// Enumerates every grant-ring pointer assignment and, per assignment, every
// pointer of every accept ring. Accept rings decide independently of each
// other, so trying each ring's pointers separately covers all combinations.
// Throws std::domain_error beyond n = 8, m = 4.
ConflictVerdict exhaustive_conflict_check(const MatchInstance& inst);

// Runs `iterations` rounds, later rounds restricted to still-unmatched ports.
// Returns the accepts of each round.
std::vector<std::vector<Accept>> iterative_match(const MatchInstance& inst, std::uint32_t iterations);

struct EfficiencyRow {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  double closed_form = 0;
  double monte_carlo = 0;
  double std_error = 0;
  double delta = 0;
  bool pass = false;  // |delta| <= 0.01
};

std::vector<EfficiencyRow> efficiency_table(const std::vector<std::uint32_t>& ns,
                                            const std::vector<std::uint32_t>& ms, std::uint64_t trials,
                                            std::uint64_t seed);
std::string efficiency_csv(const std::vector<EfficiencyRow>& rows);

}  // namespace negotiator
