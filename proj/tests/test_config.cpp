#include <doctest.h>

#include <filesystem>
#include <random>

#include "support.hpp"
#include "tilesim/config.hpp"
#include "tilesim/error.hpp"

using namespace tilesim;

TEST_CASE("defaults") {
  const Config c;
  CHECK(c.machine.cacheline_bits == 512);
  CHECK(c.machine.num_physical_nocs == 1);
  CHECK_FALSE(c.machine.dram.has_value());
  CHECK(DramConfig{}.channels == 8);
  CHECK(DramConfig{}.channel_bw_gbs == 64.0);
  CHECK(c.params.wafer_cost_usd == 6047.0);
  CHECK(c.params.defect_density_mm2 == 0.07);
  CHECK(c.params.hbm_usd_per_gb == 7.5);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("parse text with comments and dotted keys") {
  const Config c = parse_config_text(R"(
# a small cached chip
tiles_x = 16   # columns
tiles_y = 8
spm_mode = cache_assoc
cache_ways = 2
dram.channels = 4
dram.integration = stacked_3d
noc_topology = folded_torus2d
queue.iq.2 = 128
tsu.priority = 2,1
wafer_cost_usd = 5000
)");
  CHECK(c.machine.tiles_x == 16);
  CHECK(c.machine.tiles_y == 8);
  CHECK(c.machine.spm_mode == SpmMode::cache_assoc);
  REQUIRE(c.machine.dram.has_value());
  CHECK(c.machine.dram->channels == 4);
  CHECK(c.machine.dram->integration == DramIntegration::stacked_3d);
  CHECK(c.machine.iq_capacity_for(2) == 128);
  CHECK(c.machine.iq_capacity_for(1) == c.machine.iq_capacity);
  CHECK(c.machine.tsu_priority == std::vector<std::uint32_t>{2, 1});
  CHECK(c.params.wafer_cost_usd == 5000);
}

TEST_CASE("invalid configurations are rejected") {
  auto bad = [](const char* text) { CHECK_THROWS_AS(parse_config_text(text), ConfigError); };
  bad("tiles_x = 0");
  bad("num_physical_nocs = 4");
  bad("num_physical_nocs = 0");
  bad("spm_mode = cache_direct");  // no DRAM behind the cache
  bad("no_such_key = 1");
  bad("tiles_x = seven");
  bad("tiles_x");
  bad("noc_topology = hypercube");
  bad("wafer_cost_usd = -1");
  bad("extra_ports = ruche\nnoc_topology = folded_torus2d");
  CHECK_NOTHROW(parse_config_text("reduction_tree_degree = 0"));
  CHECK_NOTHROW(parse_config_text("spm_mode = cache_direct\ndram.enabled = true"));
}

TEST_CASE("serialize and parse round trip") {
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    Config c = test::grid(1 + rng() % 64, 1 + rng() % 64, rng() % 2 ? Topology::mesh2d : Topology::folded_torus2d);
    c.machine.spm_kib = 16 << (rng() % 8);
    c.machine.num_physical_nocs = 1 + rng() % 3;
    c.machine.reduction_tree_degree = rng() % 5;
    c.machine.freq_op_pu = 0.5 + (rng() % 1000) / 997.0;
    c.params.router_pj_bit = (1 + rng() % 1000) / 3.0;
    if (rng() % 2) {
      c = test::cached(c);
      c.machine.dram->capacity_gb = 1 + rng() % 32;
    }
    if (rng() % 3 == 0) c.machine.iq_capacity_overrides[1 + rng() % 4] = 1 + rng() % 300;
    const std::string text = serialize(c);
    const Config back = parse_config_text(text);
    CHECK(serialize(back) == text);
    CHECK(checksum(back) == checksum(c));
    CHECK(back.machine.freq_op_pu == c.machine.freq_op_pu);
    CHECK(back.params.router_pj_bit == c.params.router_pj_bit);
  }
}

TEST_CASE("every key can be overridden") {
  const Config base;
  const std::string text = serialize(test::cached(base));
  for (const auto& key : config_keys()) {
    CAPTURE(key);
    const auto pos = text.find(key + " = ");
    if (pos == std::string::npos) continue;
    const auto eol = text.find('\n', pos);
    const std::string value = text.substr(pos + key.size() + 3, eol - pos - key.size() - 3);
    Config c = test::cached(base);
    CHECK_NOTHROW(apply_override(c, key + "=" + value));
    CHECK(serialize(c) == text);
  }
  Config c;
  apply_override(c, "hbm_usd_per_gb", "15");
  CHECK(c.params.hbm_usd_per_gb == 15);
  CHECK(is_postprocess_key("hbm_usd_per_gb"));
  CHECK(is_model_param("hbm_usd_per_gb"));
  CHECK_FALSE(is_postprocess_key("tiles_x"));
  CHECK_THROWS_AS(apply_override(c, "bogus=1"), ConfigError);
}

TEST_CASE("checksum changes with any field") {
  Config a, b;
  b.machine.buffer_slots_per_port = 5;
  CHECK(checksum(a) != checksum(b));
  b = a;
  b.params.scribe_mm = 0.3;
  CHECK(checksum(a) != checksum(b));
}

TEST_CASE("shipped configurations parse") {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(std::filesystem::path(TILESIM_SOURCE_DIR) / "configs")) {
    CAPTURE(e.path().string());
    CHECK_NOTHROW(parse_config(e.path()));
    ++n;
  }
  CHECK(n >= 3);
}
