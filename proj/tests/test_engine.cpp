#include <doctest.h>

#include "support.hpp"
#include "tilesim/apps/apps.hpp"
#include "tilesim/energycost.hpp"
#include "tilesim/error.hpp"
#include "tilesim/simulator.hpp"

using namespace tilesim;

TEST_CASE("an empty kernel ends after two network diameters of quiet") {
  struct Case {
    std::uint32_t w, h;
    Topology topo;
    std::uint64_t cycles;
  };
  for (auto c : {Case{4, 4, Topology::mesh2d, 12}, Case{8, 8, Topology::mesh2d, 28}, Case{4, 4, Topology::folded_torus2d, 8},
                 Case{5, 3, Topology::mesh2d, 12}}) {
    CAPTURE(c.w);
    CAPTURE(c.h);
    test::EmptyApp app;
    Simulator sim(test::grid(c.w, c.h, c.topo), app, SimOptions{2});
    const auto r = sim.run();
    CHECK(r.noc_cycles == c.cycles);
    CHECK(r.counters.get("msgs.injected") == 0);
  }
}

TEST_CASE("termination factor scales the quiet window") {
  Config cfg = test::grid(4, 4);
  cfg.machine.termination_factor = 3.0;
  test::EmptyApp app;
  Simulator sim(cfg, app);
  CHECK(sim.run().noc_cycles == 18);
}

TEST_CASE("results do not depend on the worker count") {
  auto g = std::make_shared<const CsrGraph>(load_dataset("rmat:10"));
  for (const char* name : {"bfs", "sssp", "histogram"}) {
    CAPTURE(name);
    Config cfg = test::cached(test::grid(8, 8, Topology::folded_torus2d));
    SimResult base;
    std::string base_report;
    for (std::uint32_t w : {1u, 2u, 4u, 8u}) {
      CAPTURE(w);
      auto app = make_app(name, g);
      Simulator sim(cfg, *app, SimOptions{w});
      auto r = sim.run();
      REQUIRE(app->check().ok);
      const std::string report = format_reports(compute_reports(r.counters, cfg));
      if (w == 1) {
        base = r;
        base_report = report;
        continue;
      }
      CHECK(r.workers == w);
      CHECK(r.noc_cycles == base.noc_cycles);
      CHECK(r.pu_cycles == base.pu_cycles);
      CHECK(r.counters == base.counters);
      CHECK(report == base_report);
    }
  }
}

TEST_CASE("global barriers count epochs") {
  auto g = std::make_shared<const CsrGraph>(load_dataset("hand64"));
  AppOptions o;
  o.epoch = EpochMode::global;
  auto app = make_app("bfs", g, o);
  Simulator sim(test::grid(4, 4), *app);
  const auto r = sim.run();
  CHECK(app->check().ok);
  CHECK(r.epochs > 1);
}

TEST_CASE("machine variants keep apps correct") {
  auto g = std::make_shared<const CsrGraph>(load_dataset("rmat:8"));
  std::vector<std::pair<const char*, Config>> variants;
  {
    Config c = test::grid(4, 4);
    c.machine.pus_per_tile = 3;
    variants.emplace_back("multi-pu", c);
  }
  {
    Config c = test::grid(4, 4, Topology::folded_torus2d);
    c.machine.num_physical_nocs = 3;
    variants.emplace_back("three nocs", c);
  }
  {
    Config c = test::grid(8, 8);
    c.machine.extra_ports = ExtraPorts::ruche;
    variants.emplace_back("ruche", c);
  }
  {
    Config c = test::grid(4, 2);
    c.machine.chiplets_x = 2;
    c.machine.packages_y = 2;
    variants.emplace_back("hierarchy", c);
  }
  {
    Config c = test::cached(test::grid(4, 4));
    c.machine.spm_mode = SpmMode::cache_assoc;
    c.machine.prefetch = PrefetchMode::pointer_indirect;
    variants.emplace_back("assoc cache with prefetch", c);
  }
  {
    Config c = test::grid(4, 4);
    c.machine.tsu_policy = TsuPolicyKind::occupancy;
    c.machine.arbitration = Arbitration::static_priority;
    c.machine.buffer_slots_per_port = 1;
    c.machine.reduction_tree_degree = 2;
    variants.emplace_back("occupancy tsu, priority arbitration", c);
  }
  for (auto& [label, cfg] : variants) {
    for (const auto& name : app_names()) {
      if (name == "fft3d") continue;
      CAPTURE(label);
      CAPTURE(name);
      auto app = make_app(name, g, AppOptions{.iterations = 2});
      Simulator sim(cfg, *app, SimOptions{2});
      sim.run();
      CHECK(app->check().ok);
    }
  }
}

TEST_CASE("datasets that do not fit are rejected") {
  auto g = std::make_shared<const CsrGraph>(load_dataset("rmat:14"));
  Config cfg = test::grid(2, 2);
  cfg.machine.spm_kib = 64;
  auto app = make_app("bfs", g);
  CHECK_THROWS_AS(Simulator(cfg, *app).run(), CapacityError);
}

TEST_CASE("task scheduling policies") {
  std::vector<QueueView> q(4);
  q[1].ready = q[3].ready = true;
  std::uint32_t cursor = 0;
  CHECK(schedule_next(q, TsuPolicyKind::round_robin, {}, 0.75, cursor) == 1);
  CHECK(schedule_next(q, TsuPolicyKind::round_robin, {}, 0.75, cursor) == 3);
  CHECK(schedule_next(q, TsuPolicyKind::round_robin, {}, 0.75, cursor) == 1);
  const std::vector<std::uint32_t> prio{3, 1};
  CHECK(schedule_next(q, TsuPolicyKind::priority, prio, 0.75, cursor) == 3);
  q[1].size = 9;
  q[1].capacity = 10;
  q[3].size = 1;
  q[3].capacity = 10;
  cursor = 2;
  CHECK(schedule_next(q, TsuPolicyKind::occupancy, {}, 0.75, cursor) == 1);
  q[1].ready = q[3].ready = false;
  CHECK(schedule_next(q, TsuPolicyKind::round_robin, {}, 0.75, cursor) == -1);
}
