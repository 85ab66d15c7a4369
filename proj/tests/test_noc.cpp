#include <doctest.h>

#include <map>
#include <random>
#include <tuple>

#include "support.hpp"
#include "tilesim/apps/apps.hpp"
#include "tilesim/noc.hpp"
#include "tilesim/simulator.hpp"

using namespace tilesim;

TEST_CASE("round-robin grants 25 +- 1 per contender over 100 contended cycles") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    // four distinct contenders out of five ports, arbitrary starting pointer
    std::uint32_t mask = 0b11111u & ~(1u << (rng() % 5));
    std::uint32_t pointer = rng() % 5;
    std::map<int, int> grants;
    for (int c = 0; c < 100; ++c) {
      const int g = arbitrate(mask, pointer, Arbitration::round_robin, 5);
      REQUIRE(g >= 0);
      REQUIRE((mask >> g & 1u));
      ++grants[g];
    }
    REQUIRE(grants.size() == 4);
    for (auto [port, n] : grants) {
      CAPTURE(port);
      CHECK(n >= 24);
      CHECK(n <= 26);
    }
  }
}

TEST_CASE("round-robin never starves a requester for more than N-1 grants") {
  std::mt19937 rng(11);
  std::uint32_t pointer = 0;
  std::array<int, 9> waiting{};
  for (int c = 0; c < 5000; ++c) {
    const std::uint32_t mask = rng() & 0x1ffu;
    const int g = arbitrate(mask, pointer, Arbitration::round_robin, 9);
    if (mask == 0) {
      CHECK(g == -1);
      continue;
    }
    for (int i = 0; i < 9; ++i) {
      if (i == g || !(mask >> i & 1u)) waiting[i] = 0;
      else CHECK(++waiting[i] <= 8);
    }
  }
}

TEST_CASE("static priority grants the lowest port") {
  std::uint32_t pointer = 3;
  CHECK(arbitrate(0b10110, pointer, Arbitration::static_priority, 5) == 1);
  CHECK(pointer == 3);
  CHECK(arbitrate(0, pointer, Arbitration::static_priority, 5) == -1);
}

TEST_CASE("flit counts") {
  CHECK(flits_for(32, 64, true) == 2);
  CHECK(flits_for(32, 64, false) == 1);
  CHECK(flits_for(128, 64, true) == 3);
  CHECK(flits_for(129, 64, true) == 4);
  CHECK(flits_for(0, 64, false) == 1);
}

TEST_CASE("hop latency rounds up to whole cycles") {
  const ModelParams p;
  // 500 ps router + 50 ps/mm * 1 mm at 1 GHz
  CHECK(hop_latency_cycles(p, 1.0, LinkLevel::noc, 1.0) == 1);
  CHECK(hop_latency_cycles(p, 2.0, LinkLevel::noc, 1.0) == 2);
  CHECK(hop_latency_cycles(p, 1.0, LinkLevel::chiplet, 1.0) == 5);  // 4 ns die-to-die
  CHECK(hop_latency_cycles(p, 1.0, LinkLevel::package, 1.0) == 21);
}

namespace {

void check_conservation(const CounterSet& c) {
  for (const auto& [k, v] : c.values) {
    if (k.rfind("msgs.injected.", 0) != 0) continue;
    const std::string ch = k.substr(14);
    CAPTURE(ch);
    const auto delivered = c.get("msgs.delivered." + ch), local = c.get("msgs.local." + ch),
               merged = c.get("msgs.merged." + ch);
    CHECK(v == delivered - local + merged);
  }
  CHECK(c.get("msgs.injected") == c.get("msgs.ejected") + c.get("msgs.merged"));
}

}  // namespace

TEST_CASE("messages are conserved") {
  for (auto topo : {Topology::mesh2d, Topology::folded_torus2d}) {
    for (std::uint32_t degree : {0u, 4u}) {
      CAPTURE(degree);
      Config cfg = test::grid(6, 5, topo);
      cfg.machine.reduction_tree_degree = degree;
      test::ScatterApp app(40, degree > 0);
      Simulator sim(cfg, app, SimOptions{2});
      const auto r = sim.run();
      CHECK(app.check().ok);
      check_conservation(r.counters);
      if (degree > 0) CHECK(r.counters.get("msgs.merged") > 0);
      else CHECK(r.counters.get("msgs.merged") == 0);
    }
  }
  auto g = std::make_shared<const CsrGraph>(load_dataset("rmat:9"));
  for (const char* name : {"bfs", "pagerank", "spmv"}) {
    CAPTURE(name);
    Config cfg = test::grid(8, 8, Topology::folded_torus2d);
    auto app = make_app(name, g, AppOptions{.iterations = 2});
    Simulator sim(cfg, *app, SimOptions{3});
    const auto r = sim.run();
    CHECK(app->check().ok);
    check_conservation(r.counters);
  }
}

TEST_CASE("timestamps never decrease along a message's path") {
  for (auto topo : {Topology::mesh2d, Topology::folded_torus2d}) {
    Config cfg = test::grid(5, 5, topo);
    test::ScatterApp app(30, false);
    // (src, seq) -> last timestamp and tile seen
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<std::uint64_t, std::uint32_t>> last;
    std::uint64_t events = 0, ejections = 0;
    SimOptions opts;
    opts.hop_observer = [&](const HopEvent& e) {
      ++events;
      CHECK(e.ts_after >= e.ts_before);
      CHECK(e.cycle >= e.ts_before);
      auto [it, fresh] = last.try_emplace({e.src, e.seq}, e.ts_after, e.next_tile);
      if (!fresh) {
        CHECK(e.ts_before >= it->second.first);
        CHECK(e.tile == it->second.second);
        it->second = {e.ts_after, e.next_tile};
      } else {
        CHECK(e.tile == e.src);
      }
      if (e.out == Port::local) {
        ++ejections;
        CHECK(e.tile == e.dest);
      }
    };
    Simulator sim(cfg, app, opts);
    const auto r = sim.run();
    CHECK(app.check().ok);
    CHECK(events == r.counters.get("hops.noc") + r.counters.get("msgs.ejected"));
    CHECK(ejections == r.counters.get("msgs.ejected"));
  }
}
