#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "negotiator/analysis.hpp"

using namespace negotiator;

namespace {

MatchInstance random_instance(std::uint32_t n, std::uint32_t m, TopologyKind k, std::uint64_t seed) {
  MatchInstance inst = MatchInstance::full(n, m, seed);
  inst.kind = k;
  RandomStream rng(seed * 7919);
  for (TorId s = 0; s < n; ++s) {
    for (TorId d = 0; d < n; ++d) {
      if (s != d) inst.demand[static_cast<std::size_t>(s) * n + d] = rng.uniform_index(2) ? 1 : 0;
    }
  }
  return inst;
}

}  // namespace

TEST_CASE("two ToRs with mutual demand always match both ways") {
  MatchInstance inst = MatchInstance::full(2, 1);
  ConflictVerdict v = exhaustive_conflict_check(inst);
  CHECK(v.ok);
  CHECK(v.min_accepts == 2);
  CHECK(v.max_accepts == 2);
}

TEST_CASE("all-zero demand yields no accepts") {
  MatchInstance inst = MatchInstance::full(5, 2);
  std::fill(inst.demand.begin(), inst.demand.end(), 0);
  ConflictVerdict v = exhaustive_conflict_check(inst);
  CHECK(v.ok);
  CHECK(v.max_accepts == 0);
}

TEST_CASE("exhaustive conflict freedom, parallel network") {
  for (std::uint32_t n = 2; n <= 7; ++n) {
    for (std::uint32_t m = 1; m <= std::min(4u, n - 1); ++m) {
      CAPTURE(n);
      CAPTURE(m);
      ConflictVerdict v = exhaustive_conflict_check(MatchInstance::full(n, m, n * 10 + m));
      CHECK_MESSAGE(v.ok, v.counterexample);
      CHECK(v.cases > 0);
      CHECK(v.min_accepts > 0);
      CHECK(v.max_accepts <= static_cast<std::uint64_t>(n) * m);
    }
  }
}

TEST_CASE("exhaustive conflict freedom, thin-clos") {
  for (auto [n, m] : {std::pair{4u, 2u}, {6u, 2u}, {6u, 3u}}) {
    MatchInstance inst = MatchInstance::full(n, m, 3);
    inst.kind = TopologyKind::ThinClos;
    ConflictVerdict v = exhaustive_conflict_check(inst);
    CAPTURE(n);
    CAPTURE(m);
    CHECK_MESSAGE(v.ok, v.counterexample);
    CHECK(v.cases > 0);
  }
}

TEST_CASE("exhaustive conflict freedom on random demand") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    ConflictVerdict pn = exhaustive_conflict_check(random_instance(6, 2, TopologyKind::ParallelNetwork, seed));
    CHECK_MESSAGE(pn.ok, pn.counterexample);
    ConflictVerdict tc = exhaustive_conflict_check(random_instance(6, 3, TopologyKind::ThinClos, seed));
    CHECK_MESSAGE(tc.ok, tc.counterexample);
  }
}

TEST_CASE("exhaustive scale is capped") {
  CHECK_THROWS_AS(exhaustive_conflict_check(MatchInstance::full(9, 2)), std::domain_error);
  CHECK_THROWS_AS(exhaustive_conflict_check(MatchInstance::full(8, 5)), std::domain_error);
}

TEST_CASE("outcome checker rejects broken outcomes") {
  MatchInstance inst = MatchInstance::full(4, 2);
  inst.demand[0 * 4 + 1] = 0;  // 0 does not want 1

  MatchOutcome ok;
  ok.grants = {{2, 0, 0, 0}, {3, 0, 1, 0}};
  ok.accepts = {{0, 0, 2}, {1, 0, 3}};
  CHECK(check_outcome(inst, ok).empty());

  MatchOutcome no_grant = ok;
  no_grant.accepts.push_back({0, 1, 3});
  CHECK_FALSE(check_outcome(inst, no_grant).empty());

  MatchOutcome no_request;
  no_request.grants = {{1, 0, 0, 0}};
  no_request.accepts = {{0, 0, 1}};
  CHECK_FALSE(check_outcome(inst, no_request).empty());

  MatchOutcome rx_conflict;
  rx_conflict.grants = {{2, 0, 0, 0}, {2, 0, 1, 0}};
  rx_conflict.accepts = {{0, 0, 2}, {1, 0, 2}};
  CHECK_FALSE(check_outcome(inst, rx_conflict).empty());

  MatchOutcome tx_conflict;
  tx_conflict.grants = {{2, 1, 0, 0}, {3, 1, 0, 0}};
  tx_conflict.accepts = {{0, 1, 2}, {0, 1, 3}};
  CHECK_FALSE(check_outcome(inst, tx_conflict).empty());

  MatchOutcome busy = ok;
  CHECK_FALSE(check_outcome(inst, busy, {0b01, 0, 0, 0}, {}).empty());
  CHECK_FALSE(check_outcome(inst, busy, {}, {0, 0, 0b01, 0}).empty());
}

TEST_CASE("efficiency table") {
  auto rows = efficiency_table({1, 2, 16, 128}, {1, 8}, 100000, 5);
  REQUIRE(rows.size() == 8);
  for (const auto& r : rows) {
    CAPTURE(r.n);
    CAPTURE(r.m);
    CHECK(r.closed_form == doctest::Approx(closed_form_efficiency(r.n)));
    CHECK(std::abs(r.delta) <= 0.01);
    CHECK(r.pass);
    if (r.n == 1) CHECK(r.closed_form == 1.0);
  }
  std::string csv = efficiency_csv(rows);
  CHECK(csv.rfind("n,m,closed_form,monte_carlo", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}

TEST_CASE("closed form approaches 1 - 1/e") {
  CHECK(std::abs(closed_form_efficiency(1e6) - (1.0 - std::exp(-1.0))) < 1e-4);
}
