#include <doctest.h>

#include <algorithm>
#include <memory>
#include <vector>

#include "negotiator/config.hpp"
#include "negotiator/experiment.hpp"
#include "negotiator/metrics.hpp"

using namespace negotiator;

namespace {

std::vector<FlowRecord> records(std::vector<SimTime> fcts, std::uint64_t size = 1000) {
  std::vector<FlowRecord> v;
  for (std::size_t i = 0; i < fcts.size(); ++i) {
    FlowRecord r;
    r.id = i;
    r.size_bytes = size;
    r.arrival_ns = 100;
    r.completion_ns = 100 + fcts[i];
    v.push_back(r);
  }
  return v;
}

}  // namespace

TEST_CASE("nearest-rank percentiles") {
  auto r = records({40'000, 10'000, 30'000, 20'000});
  CHECK(*fct_percentile(r, 50, false) == 20'000);
  CHECK(*fct_percentile(r, 99, false) == 40'000);
  CHECK(*fct_percentile(r, 0, false) == 10'000);
  CHECK(*fct_percentile(r, 25, false) == 10'000);
  CHECK(*fct_percentile(r, 26, false) == 20'000);
  auto one = records({777});
  for (double p : {0.0, 50.0, 99.0, 100.0}) CHECK(*fct_percentile(one, p, false) == 777);
  CHECK_FALSE(fct_percentile({}, 99, false));
  CHECK_FALSE(fct_mean({}, false));
  CHECK(*fct_mean(r, false) == doctest::Approx(25'000));
}

TEST_CASE("unfinished and non-mice flows are excluded as asked") {
  auto r = records({10, 20, 30});
  r[1].completion_ns.reset();
  r[2].size_bytes = 10240;
  CHECK(*fct_percentile(r, 100, false) == 30);
  CHECK(*fct_percentile(r, 100, true) == 10);
  r[0].size_bytes = 20000;
  CHECK_FALSE(fct_percentile(r, 50, true));
}

TEST_CASE("mice boundary is strictly below 10 KB") {
  FlowRecord r;
  r.size_bytes = 10239;
  CHECK(r.is_mice());
  r.size_bytes = 10240;
  CHECK_FALSE(r.is_mice());
}

TEST_CASE("goodput normalization") {
  CHECK(normalized_goodput(0, 1000, 4, 400) == 0.0);
  // 4 ToRs each receiving 400 bits/ns for 1000 ns.
  CHECK(normalized_goodput(4 * 400 * 1000 / 8, 1000, 4, 400) == doctest::Approx(1.0));
  CHECK(normalized_goodput(1000, 0, 4, 400) == 0.0);
  Metrics m(2, 100, 1000);
  CHECK(goodput(m, 0, 1000, 400) == 0.0);
}

TEST_CASE("delivery accounting") {
  Metrics m(4, 100, 1000);
  FlowId f = m.add_flow(0, 3, 1000, 50);
  CHECK(m.on_delivery(3, f, 0, 400, 120));
  CHECK_FALSE(m.flows()[f].done());
  CHECK_FALSE(m.on_delivery(3, f, 700, 300, 180));
  CHECK(m.counters().out_of_order_chunks == 1);
  m.on_delivery(3, f, 400, 300, 260);
  REQUIRE(m.flows()[f].done());
  CHECK(m.flows()[f].fct() == 210);
  CHECK(m.flows()[f].delivered == 1000);
  CHECK(m.total_wanted_bytes() == 1000);
  CHECK(m.wanted_bytes(1, 3) == 700);
  CHECK(m.wanted_bytes(2, 3) == 300);
  CHECK(m.wanted_between(100, 200) == 700);
  CHECK(m.wanted_per_epoch().at(0) == 1000);
  CHECK_THROWS_AS(m.on_delivery(3, f, 0, 1, 300), InvariantViolation);
  FlowId g = m.add_flow(1, 2, 10, 0);
  CHECK_THROWS_AS(m.on_delivery(3, g, 0, 10, 300), InvariantViolation);
  m.on_transit(2, 500, 30);
  CHECK(m.transit_bytes(0, 2) == 500);
  CHECK(m.wanted_bytes(0, 2) == 0);
}

TEST_CASE("match ratio") {
  Metrics m(4, 100, 1000);
  m.on_grants(0, 10);
  m.on_accepts(0, 6);
  m.on_grants(2, 4);
  m.on_accepts(2, 4);
  auto s = m.match_samples();
  REQUIRE(s.size() == 3);
  CHECK(s[1].grants == 0);
  CHECK(*mean_match_ratio(s) == doctest::Approx(0.8));
  CHECK(*mean_match_ratio(s, 1) == doctest::Approx(1.0));
  CHECK_FALSE(mean_match_ratio(s, 3));
  CHECK_THROWS_AS(m.on_accepts(2, 1), InvariantViolation);
}

TEST_CASE("incast finish time") {
  auto r = records({500, 900, 700});
  std::vector<FlowId> all{0, 1, 2};
  CHECK(*incast_finish_time(r, all) == 900);
  std::vector<FlowId> one{2};
  CHECK(*incast_finish_time(r, one) == r[2].fct());
  r[1].completion_ns.reset();
  CHECK_FALSE(incast_finish_time(r, all));
  CHECK_FALSE(incast_finish_time(r, {}));
}

TEST_CASE("a lone requester is always accepted") {
  auto sim = std::make_unique<Simulation>(config_from_overrides(
      {"topology.tors=16", "topology.ports=4", "epoch.propagation_ns=500", "workload.kind=incast",
       "workload.incast_degree=1", "workload.incast_size_bytes=2000000", "duration_ns=200000"}));
  sim->run();
  auto ratio = mean_match_ratio(sim->metrics().match_samples());
  REQUIRE(ratio);
  CHECK(*ratio == doctest::Approx(1.0));
}

TEST_CASE("goodput stays below the speedup and the offered load") {
  auto sim = std::make_unique<Simulation>(config_from_overrides(
      {"topology.tors=16", "topology.ports=4", "epoch.propagation_ns=500", "workload.load=0.6",
       "duration_ns=1000000"}));
  sim->run();
  const Metrics& m = sim->metrics();
  double offered = 0;
  for (const auto& f : m.flows()) offered += 8.0 * static_cast<double>(f.size_bytes);
  offered /= 400.0 * 16 * 1'000'000;
  const double whole = goodput(m, 0, 1'000'000, 400);
  CHECK(whole > 0);
  CHECK(whole <= std::min(2.0, offered) + 1e-9);
  // Per-bucket goodput is bounded by the physical receive capacity.
  for (SimTime b = 0; b < 1'000'000; b += m.bucket_ns()) {
    CHECK(goodput(m, b, b + m.bucket_ns(), 400) <= 2.0 + 1e-9);
  }
  for (const auto& f : m.flows()) {
    if (f.done()) CHECK(f.delivered == f.size_bytes);
  }
}
