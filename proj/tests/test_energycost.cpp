#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "support.hpp"
#include "tilesim/apps/apps.hpp"
#include "tilesim/counters.hpp"
#include "tilesim/energycost.hpp"
#include "tilesim/error.hpp"
#include "tilesim/simulator.hpp"

using namespace tilesim;
namespace fs = std::filesystem;

namespace {

// Counts dies whose four corners lie in the usable disc for one grid offset.
std::uint64_t count_dies(double w, double h, double r, double scribe, double ox, double oy) {
  const double pw = w + scribe, ph = h + scribe;
  const int span = static_cast<int>(r / std::min(pw, ph)) + 2;
  std::uint64_t n = 0;
  for (int j = -span; j <= span; ++j)
    for (int i = -span; i <= span; ++i) {
      const double x0 = ox + i * pw, y0 = oy + j * ph;
      bool in = true;
      for (double x : {x0, x0 + w})
        for (double y : {y0, y0 + h}) in = in && x * x + y * y <= r * r * (1 + 1e-12);
      n += in;
    }
  return n;
}

fs::path scratch_dir(const char* name) {
  const fs::path d = fs::temp_directory_path() / ("tilesim_test_" + std::string(name));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("Murphy yield") {
  CHECK(std::abs(murphy_yield(10, 0.07) - 0.5172) < 1e-4);
  for (double a : {0.5, 3.0, 40.0, 400.0}) {
    const double da = a * 0.07;
    const double want = std::pow((1 - std::exp(-da)) / da, 2);
    CHECK(murphy_yield(a, 0.07) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(murphy_yield(0, 0.07) == 1.0);
  CHECK(murphy_yield(100, 0.07) < murphy_yield(50, 0.07));
}

TEST_CASE("voltage model") {
  CHECK(std::abs(voltage(2, 7) - 0.74) < 1e-9);
  CHECK(std::abs(voltage(1, 5) - (0.06 + 0.13 + 0.30)) < 1e-12);
}

TEST_CASE("dies per wafer agrees with a corner test on the same alignments") {
  const double r = 150 - 4;
  for (auto [w, h] : {std::pair{10.0, 10.0}, {3.0, 7.5}, {25.0, 30.0}, {1.0, 1.0}, {100.0, 100.0}}) {
    CAPTURE(w);
    CAPTURE(h);
    std::uint64_t best = 0;
    for (double ox : {0.1, -w / 2})
      for (double oy : {0.1, -h / 2}) best = std::max(best, count_dies(w, h, r, 0.2, ox, oy));
    const std::uint64_t got = dies_per_wafer(w, h);
    CHECK(got == best);
    // never more than the usable area allows
    CHECK(double(got) * (w + 0.2) * (h + 0.2) <= std::numbers::pi * r * r);
  }
  // textbook estimate for a 100 mm^2 die, within a few percent
  const double a = 10.2 * 10.2;
  const double approx = std::numbers::pi * r * r / a - std::numbers::pi * 2 * r / std::sqrt(2 * a);
  CHECK(std::abs(double(dies_per_wafer(10, 10)) - approx) / approx < 0.05);
  CHECK(dies_per_wafer(400, 400) == 0);
}

TEST_CASE("reports are consistent") {
  Config cfg = test::cached(test::grid(8, 8));
  test::ScatterApp app(20, false);
  Simulator sim(cfg, app);
  const auto r = sim.run();
  const Reports rep = compute_reports(r.counters, cfg);
  double sum = 0;
  for (const auto& [k, v] : rep.energy.items.items) {
    CAPTURE(k);
    CHECK(v >= 0);
    sum += v;
  }
  CHECK(rep.energy.items.total == doctest::Approx(sum));
  CHECK(rep.energy.runtime_s == doctest::Approx(double(r.noc_cycles) / 1e9));
  CHECK(rep.energy.avg_power_w == doctest::Approx(sum / rep.energy.runtime_s));
  CHECK(rep.cost.package.get("hbm") == doctest::Approx(8.0 * 7.5));
  CHECK(rep.cost.die_yield == doctest::Approx(murphy_yield(rep.area.die_mm2, 0.07)));
  CHECK(rep.area.chiplet.get("sram") == doctest::Approx(64 * 0.25 / 3.5));
}

TEST_CASE("post-processing reproduces the in-simulation reports") {
  const fs::path dir = scratch_dir("postprocess");
  for (bool cache : {false, true}) {
    Config cfg = test::grid(4, 4, Topology::folded_torus2d);
    if (cache) {
      cfg = test::cached(cfg);
      cfg.machine.dram->channels = 2;  // a 4x4 die has little beachfront
    }
    auto g = std::make_shared<const CsrGraph>(load_dataset("hand64"));
    auto app = make_app("sssp", g);
    Simulator sim(cfg, *app);
    const auto r = sim.run();
    write_counters(dir / "counters.txt", r.counters);
    {
      std::ofstream f(dir / "config.txt");
      f << serialize(cfg);
    }
    const std::string in_sim = format_reports(compute_reports(r.counters, cfg));
    CHECK(format_reports(postprocess(dir / "counters.txt", dir / "config.txt", {})) == in_sim);

    if (cache) {
      const Reports base = postprocess(dir / "counters.txt", dir / "config.txt", {});
      const Reports dbl = postprocess(dir / "counters.txt", dir / "config.txt", {"hbm_usd_per_gb=15"});
      CHECK(base.cost.package.get("hbm") > 0);
      CHECK(dbl.cost.package.get("hbm") == 2 * base.cost.package.get("hbm"));
      CHECK(dbl.cost.system.get("hbm") == 2 * base.cost.system.get("hbm"));
      CHECK(dbl.cost.package.get("compute_dies") == base.cost.package.get("compute_dies"));
    }
    CHECK_THROWS_AS(postprocess(dir / "counters.txt", dir / "config.txt", {"tiles_x=8"}), ConfigError);
    CHECK_THROWS_AS(postprocess(dir / "counters.txt", dir / "config.txt", {"no_such_key=1"}), ConfigError);
  }
  // a different configuration is refused
  {
    std::ofstream f(dir / "other.txt");
    f << serialize(test::grid(2, 2));
  }
  CHECK_THROWS_AS(postprocess(dir / "counters.txt", dir / "other.txt", {}), Error);
}
