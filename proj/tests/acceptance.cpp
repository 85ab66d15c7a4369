// Acceptance runner: one PASS/FAIL line per criterion.
//
//   tilesim_acceptance                  all criteria
//   tilesim_acceptance --criterion 4    just one (repeatable)
//
// Exit status: 0 all selected criteria pass, 1 some failed, 77 every failure
// is host-limited (fewer cores than the criterion assumes).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "support.hpp"
#include "tilesim/apps/apps.hpp"
#include "tilesim/energycost.hpp"
#include "tilesim/noc.hpp"
#include "tilesim/simcli.hpp"
#include "tilesim/simulator.hpp"

using namespace tilesim;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kFpTolerance = 1e-6;
constexpr double kBudget1Seconds = 600;
constexpr double kSpeedupTarget = 5.0;
constexpr std::uint32_t kSpeedupCores = 8;
constexpr int kFairGrants = 25, kFairSlack = 1;
// SPM per tile for the RMAT-16 scratchpad runs. The largest vertex block of
// the skewed graph sets the per-tile footprint (1.39 MB on 8x8, 385 KB on 32x32).
constexpr std::uint32_t kSpm8x8 = 2048, kSpm32x32 = 512;
constexpr double kMurphyTol = 1e-4, kVoltageTol = 1e-9;

struct Outcome {
  bool pass = false;
  bool host_limited = false;  // failed only because the host is too small
  std::string detail;
};

bool verbose = false;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint32_t host_cores() { return std::max(1u, std::thread::hardware_concurrency()); }

std::shared_ptr<const CsrGraph> graph(const std::string& ds) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const CsrGraph>> cache;
  std::lock_guard lock(mu);
  auto& g = cache[ds];
  if (!g) g = std::make_shared<const CsrGraph>(load_dataset(ds));
  return g;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome functional_correctness() {
  struct Job {
    std::string app, dataset;
    std::uint32_t width;
    Topology topo;
    bool cache;
    double weight;  // rough cost, to start the long runs first
  };
  std::vector<Job> jobs;
  for (std::uint32_t w : {8u, 32u})
    for (auto topo : {Topology::mesh2d, Topology::folded_torus2d})
      for (bool cache : {false, true})
        for (const auto& app : app_names()) {
          if (!app_needs_graph(app)) {
            jobs.push_back({app, "", w, topo, cache, 1});
            continue;
          }
          for (const char* ds : {"rmat:10", "rmat:16", "hand64"})
            jobs.push_back({app, ds, w, topo, cache, std::string(ds) == "rmat:16" ? 100.0 : 1.0});
        }
  std::stable_sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.weight > b.weight; });
  for (const char* ds : {"rmat:10", "rmat:16", "hand64"}) graph(ds);

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<std::string> failures;
  const auto t0 = std::chrono::steady_clock::now();
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      const Job& j = jobs[i];
      Config cfg = test::grid(j.width, j.width, j.topo);
      cfg.machine.spm_kib = j.width == 8 ? kSpm8x8 : kSpm32x32;
      if (j.cache) cfg = test::cached(cfg);
      AppOptions o;
      o.iterations = 3;
      std::string what = fmt("%s %s %ux%u %s %s", j.app.c_str(), j.dataset.empty() ? "-" : j.dataset.c_str(), j.width,
                             j.width, j.topo == Topology::mesh2d ? "mesh" : "torus", j.cache ? "cache" : "spm");
      std::string err;
      double wall = 0;
      std::uint64_t cycles = 0;
      try {
        auto app = make_app(j.app, j.dataset.empty() ? nullptr : graph(j.dataset), o);
        Simulator sim(cfg, *app, SimOptions{1});
        const auto r = sim.run();
        wall = r.wall_seconds;
        cycles = r.noc_cycles;
        const auto c = app->check();
        if (!c.ok) err = c.message;
      } catch (const std::exception& e) {
        err = e.what();
      }
      std::lock_guard lock(mu);
      if (verbose) std::printf("  %-40s %9llu cycles %7.2f s %s\n", what.c_str(), (unsigned long long)cycles, wall,
                               err.empty() ? "ok" : "FAIL");
      if (!err.empty()) failures.push_back(what + ": " + err);
    }
  };
  std::vector<std::thread> pool;
  for (std::uint32_t i = 0; i < host_cores(); ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  const double total = seconds_since(t0);

  Outcome o;
  const bool correct = failures.empty();
  const bool in_budget = total < kBudget1Seconds;
  o.pass = correct && in_budget;
  o.host_limited = correct && !in_budget && host_cores() < kSpeedupCores;
  o.detail = fmt("%zu/%zu runs match their oracles (FP rel %.0e); %.0f s wall on %u host cores (budget %.0f s)",
                 jobs.size() - failures.size(), jobs.size(), kFpTolerance, total, host_cores(), kBudget1Seconds);
  for (const auto& f : failures) o.detail += "\n    " + f;
  return o;
}

Outcome determinism() {
  Config cfg = test::grid(32, 32, Topology::folded_torus2d);
  cfg.machine.spm_kib = kSpm32x32;
  Outcome o{true, false, ""};
  for (const char* name : {"bfs", "sssp"}) {
    std::uint64_t cycles = 0;
    CounterSet base;
    std::string report;
    for (std::uint32_t w : {1u, 2u, 4u, 8u}) {
      auto app = make_app(name, graph("rmat:16"));
      Simulator sim(cfg, *app, SimOptions{w});
      const auto r = sim.run();
      const std::string rep = format_reports(compute_reports(r.counters, cfg));
      const bool ok = app->check().ok;
      if (w == 1) {
        cycles = r.noc_cycles;
        base = r.counters;
        report = rep;
      }
      const bool same = ok && r.noc_cycles == cycles && r.counters == base && rep == report;
      if (verbose) std::printf("  %s workers=%u cycles=%llu %.2f s %s\n", name, w, (unsigned long long)r.noc_cycles,
                               r.wall_seconds, same ? "identical" : "DIFFERS");
      if (!same) {
        o.pass = false;
        o.detail += fmt("%s differs at %u workers; ", name, w);
      }
    }
    o.detail += fmt("%s %llu cycles; ", name, (unsigned long long)cycles);
  }
  o.detail += "cycles, counters and reports compared at 1/2/4/8 workers, zero tolerance";
  return o;
}

Outcome parallel_speedup() {
  const Config cfg = test::grid(64, 64);
  double wall[2] = {0, 0};
  std::uint64_t cycles[2] = {0, 0};
  bool ok = true;
  const std::uint32_t workers[2] = {1, 8};
  for (int i = 0; i < 2; ++i) {
    auto app = make_app("bfs", graph("rmat:16"));
    Simulator sim(cfg, *app, SimOptions{workers[i]});
    const auto r = sim.run();
    wall[i] = r.wall_seconds;
    cycles[i] = r.noc_cycles;
    ok = ok && app->check().ok;
  }
  const double speedup = wall[0] / wall[1];
  Outcome o;
  o.pass = ok && cycles[0] == cycles[1] && speedup >= kSpeedupTarget;
  o.host_limited = ok && cycles[0] == cycles[1] && !o.pass && host_cores() < kSpeedupCores;
  o.detail = fmt("64x64 bfs rmat:16: %.2f s at 1 worker, %.2f s at 8 workers, speedup %.2fx (need >= %.1fx on %u "
                 "cores; host has %u)",
                 wall[0], wall[1], speedup, kSpeedupTarget, kSpeedupCores, host_cores());
  return o;
}

Outcome topology_ordering() {
  struct Variant {
    const char* label;
    Topology topo;
    std::uint32_t degree;
  };
  std::vector<std::uint64_t> rt;
  Outcome o{true, false, ""};
  for (auto v : {Variant{"mesh", Topology::mesh2d, 0}, Variant{"torus", Topology::folded_torus2d, 0},
                 Variant{"torus+trees", Topology::folded_torus2d, 4}}) {
    Config cfg = test::grid(32, 32, v.topo);
    cfg.machine.reduction_tree_degree = v.degree;
    AppOptions opts;
    opts.epoch = EpochMode::global;
    auto app = make_app("bfs", graph("rmat:16"), opts);
    Simulator sim(cfg, *app, SimOptions{host_cores()});
    const auto r = sim.run();
    if (!app->check().ok) o.pass = false;
    rt.push_back(r.noc_cycles);
    o.detail += fmt("%s %llu, ", v.label, (unsigned long long)r.noc_cycles);
  }
  o.pass = o.pass && rt[0] > rt[1] && rt[1] > rt[2];
  o.detail += "NoC cycles of bfs with global barriers on rmat:16, 32x32; strict mesh > torus > torus+trees";
  return o;
}

Outcome memory_direction() {
  Outcome o{true, false, ""};
  for (const char* name : {"bfs", "spmv", "histogram"}) {
    std::vector<std::uint64_t> rt;
    std::vector<double> hit;
    for (std::uint32_t kib : {64u, 128u, 256u}) {
      Config cfg = test::cached(test::grid(16, 16));  // one 8 GB device
      cfg.machine.spm_kib = kib;
      auto app = make_app(name, graph("rmat:16"));
      Simulator sim(cfg, *app, SimOptions{host_cores()});
      const auto r = sim.run();
      if (!app->check().ok) o.pass = false;
      const double h = double(r.counters.get("mem.hits"));
      rt.push_back(r.noc_cycles);
      hit.push_back(h / (h + double(r.counters.get("mem.misses"))));
    }
    const bool dir = rt[0] > rt[1] && rt[1] > rt[2] && hit[0] < hit[1] && hit[1] < hit[2];
    o.pass = o.pass && dir;
    o.detail += fmt("%s cycles %llu>%llu>%llu hit %.6f<%.6f<%.6f%s; ", name, (unsigned long long)rt[0],
                    (unsigned long long)rt[1], (unsigned long long)rt[2], hit[0], hit[1], hit[2], dir ? "" : " (WRONG)");
  }
  o.detail += "16x16 cache_direct, SPM 64/128/256 KiB, rmat:16";
  return o;
}

Outcome fft_oracle() {
  Outcome o{true, false, ""};
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint32_t n : {4u, 8u, 16u}) {
    Config cfg = test::grid(n, n);
    cfg.machine.frame_interval_us = 0.01;  // fine frames to see each phase
    AppOptions opts;
    opts.fft_n = n;
    auto app = make_app("fft3d", nullptr, opts);
    Simulator sim(cfg, *app, SimOptions{host_cores(), true, 1});
    const auto r = sim.run();
    const auto c = app->check();
    // messages injected while each transpose kernel ran
    std::uint64_t sent[2] = {0, 0};
    for (const auto& f : r.frames)
      for (int k = 0; k < 2; ++k) {
        const std::uint64_t lo = k == 0 ? 0 : r.kernel_end[0], hi = r.kernel_end[k];
        if (f.begin_cycle >= lo && f.end_cycle <= hi) sent[k] += f.total[Ctr::msgs_injected];
      }
    const bool ok = c.ok && sent[0] > 0 && sent[1] > 0 && r.kernel_end.size() == 3;
    o.pass = o.pass && ok;
    o.detail += fmt("n=%u %llu cycles (%.3g s DUT), transpose msgs %llu/%llu%s; ", n, (unsigned long long)r.noc_cycles,
                    double(r.noc_cycles) / (cfg.machine.freq_op_noc * 1e9), (unsigned long long)sent[0],
                    (unsigned long long)sent[1], c.ok ? "" : (" " + c.message).c_str());
  }
  const double wall = seconds_since(t0);
  o.pass = o.pass && wall < 60;
  o.detail += fmt("rel tol %.0e, %.1f s wall (budget 60 s)", kFpTolerance, wall);
  return o;
}

Outcome cost_energy() {
  Outcome o{true, false, ""};
  const double y = murphy_yield(10, 0.07), v = voltage(2, 7);
  const bool closed = std::abs(y - 0.5172) <= kMurphyTol && std::abs(v - 0.74) <= kVoltageTol;

  const fs::path dir = fs::temp_directory_path() / "tilesim_acceptance_postprocess";
  fs::remove_all(dir);
  RunRequest req;
  req.app = "sssp";
  req.dataset = "rmat:10";
  req.overrides = {"tiles_x=8", "tiles_y=8", "spm_mode=cache_direct", "dram.enabled=true"};
  req.out_dir = dir;
  const RunOutcome run = run_simulation(req);
  std::ifstream f(dir / "report.txt", std::ios::binary);
  std::stringstream in_sim;
  in_sim << f.rdbuf();
  const Reports base = postprocess(dir / "counters.txt", dir / "config.effective", {});
  const bool identical = format_reports(base) == in_sim.str() && in_sim.str() == format_reports(run.reports);
  const Reports dbl = postprocess(dir / "counters.txt", dir / "config.effective",
                                  {"hbm_usd_per_gb=" + std::to_string(2 * run.config.params.hbm_usd_per_gb)});
  const double h0 = base.cost.package.get("hbm"), h1 = dbl.cost.package.get("hbm");
  const bool doubled = h0 > 0 && h1 == 2 * h0 && dbl.cost.system.get("hbm") == 2 * base.cost.system.get("hbm");
  o.pass = closed && identical && doubled;
  o.detail = fmt("murphy_yield(10, 0.07) = %.6f (tol %.0e), voltage(2, 7) = %.12f (tol %.0e), post-processing %s, "
                 "hbm %.2f -> %.2f USD%s",
                 y, kMurphyTol, v, kVoltageTol, identical ? "byte-identical" : "DIFFERS", h0, h1,
                 doubled ? "" : " (not doubled)");
  return o;
}

Outcome noc_invariants() {
  Outcome o{true, false, ""};
  // conservation, with and without reduction trees
  bool conserved = true;
  for (auto topo : {Topology::mesh2d, Topology::folded_torus2d})
    for (std::uint32_t degree : {0u, 4u})
      for (const char* app_name : {"scatter", "bfs", "pagerank"}) {
        Config cfg = test::grid(8, 8, topo);
        cfg.machine.reduction_tree_degree = degree;
        std::unique_ptr<Application> app;
        if (std::string(app_name) == "scatter") app = std::make_unique<test::ScatterApp>(50, degree > 0);
        else app = make_app(app_name, graph("rmat:10"), AppOptions{.iterations = 2});
        Simulator sim(cfg, *app, SimOptions{host_cores()});
        const auto c = sim.run().counters;
        conserved = conserved && app->check().ok &&
                    c.get("msgs.injected") == c.get("msgs.ejected") + c.get("msgs.merged");
        for (const auto& [k, v] : c.values) {
          if (k.rfind("msgs.injected.", 0) != 0) continue;
          const std::string ch = k.substr(14);
          conserved = conserved && v == c.get("msgs.delivered." + ch) - c.get("msgs.local." + ch) +
                                            c.get("msgs.merged." + ch);
        }
      }

  // timestamps along every path
  bool monotone = true;
  std::uint64_t hops = 0;
  for (auto topo : {Topology::mesh2d, Topology::folded_torus2d}) {
    test::ScatterApp app(50, false);
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> last;
    SimOptions so;
    so.hop_observer = [&](const HopEvent& e) {
      ++hops;
      auto [it, fresh] = last.try_emplace({e.src, e.seq}, e.ts_after);
      monotone = monotone && e.ts_after >= e.ts_before && (fresh || e.ts_before >= it->second);
      it->second = e.ts_after;
    };
    Simulator sim(test::grid(8, 8, topo), app, so);
    sim.run();
  }

  // DOR against all-pairs shortest paths
  bool dor = true;
  std::uint64_t pairs = 0;
  for (bool torus : {false, true})
    for (std::uint32_t w = 1; w <= 8; ++w)
      for (std::uint32_t h = 1; h <= 8; ++h) {
        const Config cfg = test::grid(w, h, torus ? Topology::folded_torus2d : Topology::mesh2d);
        const NetworkTopology topo(cfg.machine);
        const auto dist = test::grid_distances(w, h, torus);
        for (std::uint32_t s = 0; s < w * h; ++s)
          for (std::uint32_t d = 0; d < w * h; ++d) {
            std::uint32_t cur = s;
            int n = 0;
            bool turned = false;
            while (cur != d && n <= int(w + h)) {
              const Port p = topo.route(cur, d);
              const bool x = p == Port::east || p == Port::west;
              if (x && turned) dor = false;
              turned = turned || !x;
              if (!topo.neighbor(cur, p, cur)) {
                dor = false;
                break;
              }
              ++n;
            }
            dor = dor && cur == d && n == dist[s][d];
            ++pairs;
          }
      }

  // round-robin fairness
  bool fair = true;
  int lo = 1 << 30, hi = 0;
  std::mt19937 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint32_t mask = 0x1fu & ~(1u << (rng() % 5));
    std::uint32_t ptr = rng() % 5;
    int grants[5] = {};
    for (int c = 0; c < 100; ++c) ++grants[arbitrate(mask, ptr, Arbitration::round_robin, 5)];
    for (int p = 0; p < 5; ++p) {
      if (!(mask >> p & 1u)) continue;
      lo = std::min(lo, grants[p]);
      hi = std::max(hi, grants[p]);
    }
  }
  fair = lo >= kFairGrants - kFairSlack && hi <= kFairGrants + kFairSlack;

  o.pass = conserved && monotone && dor && fair;
  o.detail = fmt("conservation %s; timestamps %s over %llu hops; DOR %s on %llu pairs up to 8x8; round-robin grants "
                 "%d..%d per contender over 100 cycles (need %d +- %d)",
                 conserved ? "holds" : "VIOLATED", monotone ? "monotone" : "DECREASE", (unsigned long long)hops,
                 dor ? "shortest" : "WRONG", (unsigned long long)pairs, lo, hi, kFairGrants, kFairSlack);
  return o;
}

Outcome termination() {
  test::EmptyApp app;
  Simulator sim(test::grid(4, 4), app);
  const auto r = sim.run();
  Outcome o;
  o.pass = r.noc_cycles == 12;
  o.detail = fmt("empty kernel on 4x4 mesh: %llu NoC cycles (expect 2 x diameter = 12)", (unsigned long long)r.noc_cycles);
  return o;
}

const std::vector<std::pair<const char*, std::function<Outcome()>>> kCriteria = {
    {"functional correctness", functional_correctness},
    {"determinism", determinism},
    {"parallel speedup", parallel_speedup},
    {"topology ordering", topology_ordering},
    {"memory case-study direction", memory_direction},
    {"fft oracle", fft_oracle},
    {"cost and energy closed forms", cost_energy},
    {"noc micro-invariants", noc_invariants},
    {"termination", termination},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Acceptance checks"};
  std::vector<int> only;
  cli.add_option("--criterion,-c", only, "Run only these criteria (1-9)")->check(CLI::Range(1, 9));
  cli.add_flag("--verbose,-v", verbose, "Print every run");
  CLI11_PARSE(cli, argc, argv);
  if (only.empty())
    for (int i = 1; i <= 9; ++i) only.push_back(i);

  bool any_fail = false, all_host_limited = true;
  for (int c : only) {
    const auto& [name, fn] = kCriteria[c - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, false, std::string("error: ") + e.what()};
    }
    const char* verdict = o.pass ? "PASS" : o.host_limited ? "FAIL (host-limited)" : "FAIL";
    std::printf("criterion %d %s: %s [%.1f s] %s\n", c, name, verdict, seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) {
      any_fail = true;
      all_host_limited = all_host_limited && o.host_limited;
    }
  }
  if (!any_fail) return 0;
  return all_host_limited ? 77 : 1;
}
