#include <catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "grid5g/ran_sched.hpp"
#include "support/oracles.hpp"

using namespace grid5g;

namespace {

std::vector<BufferStatus> backlog_of(const std::vector<std::size_t>& pending) {
  std::vector<BufferStatus> out;
  for (std::size_t i = 0; i < pending.size(); ++i) out.push_back(BufferStatus{i, pending[i], 0.0});
  return out;
}

Packet pkt(std::uint64_t id) {
  Packet p;
  p.id = id;
  p.size = 150;
  return p;
}

}  // namespace

TEST_CASE("symbol time per numerology") {
  CHECK(symbol_time(0) == Catch::Approx(7.142857e-5).epsilon(1e-6));
  CHECK(symbol_time(2) == Catch::Approx(1.785714e-5).epsilon(1e-6));
  CHECK(symbol_time(0) == Catch::Approx(1e-3 / 14.0).epsilon(1e-15));
  for (int mu = 0; mu < 4; ++mu) CHECK(symbol_time(mu + 1) == symbol_time(mu) / 2.0);
  CHECK_THROWS_AS(symbol_time(-1), ConfigError);
  CHECK_THROWS_AS(symbol_time(5), ConfigError);
}

TEST_CASE("carrier throughput with the default configuration") {
  RanConfig cfg;
  const double qm4 = carrier_throughput(cfg, 4, 1);
  // 2 * 4 * 0.8 * 0.92578125 * 672000 * 0.92
  CHECK(qm4 == Catch::Approx(3663072.0).epsilon(1e-12));
  CHECK(qm4 == Catch::Approx(oracle::nr_rate(2, 4, 0.8, 948.0 / 1024.0, 2, 1, 0.08)).epsilon(1e-12));
  CHECK(carrier_throughput(cfg, 8, 1) == 2.0 * qm4);
  CHECK(carrier_throughput(cfg, 6, 0) == 0.0);
  CHECK_THROWS_AS(carrier_throughput(cfg, 5, 1), ConfigError);
}

TEST_CASE("aggregate throughput sums the carriers") {
  RanConfig cfg;
  const std::vector<int> q88{8, 8};
  CHECK(aggregate_throughput(cfg, q88, 1) == Catch::Approx(14652288.0).epsilon(1e-12));
  CHECK(aggregate_throughput(cfg, q88, 1) == Catch::Approx(1.46524e7).epsilon(1e-5));
  const std::vector<int> q44{4, 4};
  CHECK(aggregate_throughput(cfg, q44, 1) == 2.0 * carrier_throughput(cfg, 4, 1));

  RanConfig one = cfg;
  one.aggregated_carriers = 1;
  const std::vector<int> q6{6};
  CHECK(aggregate_throughput(one, q6, 2) == carrier_throughput(one, 6, 2));
  CHECK_THROWS_AS(aggregate_throughput(cfg, q6, 1), ConfigError);
}

TEST_CASE("throughput monotone in qm, n_prb and overhead over the parameter grid") {
  const int qms[] = {2, 4, 6, 8};
  for (int mu = 0; mu <= 4; ++mu) {
    RanConfig cfg;
    cfg.numerology = mu;
    for (std::size_t n = 0; n < 5; ++n)
      for (int a = 0; a < 3; ++a) {
        CHECK(carrier_throughput(cfg, qms[a], n) <= carrier_throughput(cfg, qms[a + 1], n));
        CHECK(carrier_throughput(cfg, qms[a], n) <= carrier_throughput(cfg, qms[a], n + 1));
      }
    for (double oh = 0.0; oh < 0.5; oh += 0.05) {
      RanConfig lo = cfg, hi = cfg;
      lo.overhead = oh;
      hi.overhead = oh + 0.05;
      CHECK(carrier_throughput(hi, 8, 1) <= carrier_throughput(lo, 8, 1));
    }
  }
}

TEST_CASE("round robin examples") {
  RanConfig cfg;  // M = 3, one RB per DER

  SECTION("three backlogged DERs share the three RBs") {
    auto bsrs = backlog_of({4, 4, 4});
    auto [alloc, next] = schedule_round_robin(bsrs, cfg, RoundRobinState{0});
    CHECK(alloc.grants == std::vector<std::size_t>{1, 1, 1});
    CHECK(next.cursor == 0);
  }
  SECTION("four DERs rotate") {
    auto bsrs = backlog_of({4, 4, 4, 4});
    auto [a1, s1] = schedule_round_robin(bsrs, cfg, RoundRobinState{0});
    CHECK(a1.grants == std::vector<std::size_t>{1, 1, 1, 0});
    CHECK(s1.cursor == 3);
    auto [a2, s2] = schedule_round_robin(bsrs, cfg, s1);
    CHECK(a2.grants == std::vector<std::size_t>{1, 1, 0, 1});
    CHECK(s2.cursor == 2);
  }
  SECTION("a lone backlogged DER is capped") {
    auto bsrs = backlog_of({0, 7, 0});
    auto [alloc, next] = schedule_round_robin(bsrs, cfg, RoundRobinState{0});
    CHECK(alloc.grants == std::vector<std::size_t>{0, 1, 0});
    CHECK(alloc.total() == 1);
    CHECK(next.cursor == 2);
  }
  SECTION("nobody backlogged keeps the cursor") {
    auto bsrs = backlog_of({0, 0, 0});
    auto [alloc, next] = schedule_round_robin(bsrs, cfg, RoundRobinState{2});
    CHECK(alloc.total() == 0);
    CHECK(next.cursor == 2);
  }
}

TEST_CASE("round robin matches the slot-list oracle on random inputs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 1 + rng() % 7;
    RanConfig cfg;
    cfg.total_rbs = 1 + rng() % 9;
    cfg.rbs_per_der = 1 + rng() % cfg.total_rbs;
    std::vector<std::size_t> pending(n);
    for (auto& p : pending) p = (rng() % 3 == 0) ? 0 : 1 + rng() % 5;
    const std::size_t cursor = rng() % n;

    auto [alloc, next] = schedule_round_robin(backlog_of(pending), cfg, RoundRobinState{cursor});
    const auto want = oracle::round_robin(pending, cfg.total_rbs, cfg.rbs_per_der, cursor);
    REQUIRE(alloc.grants == want.grants);
    REQUIRE(next.cursor == want.next_cursor);

    // work conservation: a backlogged DER left out means every RB went somewhere
    bool starved = false;
    for (std::size_t i = 0; i < n; ++i) starved = starved || (pending[i] > 0 && alloc.grants[i] == 0);
    if (starved) REQUIRE(alloc.total() == cfg.total_rbs);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(alloc.grants[i] <= cfg.rbs_per_der);
  }
}

TEST_CASE("round robin is fair over whole passes") {
  RanConfig cfg;
  for (std::size_t n = 1; n <= 6; ++n) {
    RoundRobinPolicy policy;
    auto bsrs = backlog_of(std::vector<std::size_t>(n, 1));
    std::vector<std::size_t> total(n, 0);
    const std::size_t ttis = n * 4;  // 3n RBs handed out in whole passes of n
    for (std::size_t k = 0; k < ttis; ++k) {
      auto a = policy.allocate(bsrs, cfg, static_cast<std::int64_t>(k));
      for (std::size_t i = 0; i < n; ++i) total[i] += a.grants[i];
    }
    for (std::size_t i = 1; i < n; ++i) CHECK(total[i] == total[0]);
  }
}

TEST_CASE("transmit queue drops the oldest packet when full") {
  TransmitQueue q(3);
  for (std::uint64_t id = 0; id < 5; ++id) q.push(pkt(id));
  CHECK(q.size() == 3);
  CHECK(q.dropped() == 2);
  CHECK(q.enqueued() == 5);
  CHECK(q.packets().front().id == 2);
}

TEST_CASE("packet budget per TTI") {
  RanConfig cfg;
  // 915768 bit/s per unit of Qm on one RB; 1200-bit packets, 1 ms TTI
  for (int q1 : {2, 4, 6, 8})
    for (int q2 : {2, 4, 6, 8}) {
      const std::vector<int> qms{q1, q2};
      const double bits = oracle::nr_rate(2, q1 + q2, 0.8, 948.0 / 1024.0, 2, 1, 0.08) * 1e-3;
      CHECK(packet_budget(cfg, qms, 1) == static_cast<std::size_t>(std::floor(bits / 1200.0)));
    }
  const std::vector<int> q88{8, 8};
  CHECK(packet_budget(cfg, q88, 1) == 12);
  CHECK(packet_budget(cfg, q88, 0) == 0);
  cfg.infinite_capacity = true;
  CHECK(packet_budget(cfg, q88, 1) == std::numeric_limits<std::size_t>::max());
}

TEST_CASE("deliver_packets drains in FIFO order up to the budget") {
  RanConfig cfg;
  const std::vector<int> q88{8, 8};
  TransmitQueue q(100);
  for (std::uint64_t id = 0; id < 20; ++id) q.push(pkt(id));

  auto out = deliver_packets(q, 1, cfg, q88, 0.004);
  REQUIRE(out.size() == 12);
  for (std::size_t k = 0; k < out.size(); ++k) {
    CHECK(out[k].id == k);
    CHECK(out[k].delivered_at == 0.004);
  }
  CHECK(q.size() == 8);

  CHECK(deliver_packets(q, 0, cfg, q88, 0.005).empty());
  CHECK(q.size() == 8);

  auto rest = deliver_packets(q, 1, cfg, q88, 0.006);
  CHECK(rest.size() == 8);
  CHECK(q.empty());
}

TEST_CASE("buffer status reports the queue length") {
  RanConfig cfg;
  TransmitQueue q;
  CHECK(report_bsr(0, q, 0.0).pending_packets == 0);
  for (std::uint64_t id = 0; id < 5; ++id) q.push(pkt(id));
  CHECK(report_bsr(1, q, 0.002).pending_packets == 5);
  const std::vector<int> q22{2, 2};  // 3 packets per RB
  CHECK(deliver_packets(q, 1, cfg, q22, 0.003).size() == 3);
  CHECK(report_bsr(1, q, 0.003).pending_packets == 2);
}

TEST_CASE("ran config validation") {
  RanConfig cfg;
  CHECK(validate(cfg).empty());
  cfg.bsr_period = 1.5e-3;
  auto msgs = validate(cfg);
  REQUIRE(msgs.size() == 1);
  CHECK(msgs[0].find("bsr_period") != std::string::npos);
  CHECK(msgs[0].find("tti") != std::string::npos);

  RanConfig bad;
  bad.modulation_orders = {2, 3};
  bad.numerology = 7;
  bad.rbs_per_der = 4;
  CHECK(validate(bad).size() == 3);
  CHECK(bsr_period_ttis(RanConfig{}) == 1);
}
