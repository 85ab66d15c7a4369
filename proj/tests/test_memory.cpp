#include <doctest.h>

#include <list>
#include <random>
#include <vector>

#include "support.hpp"
#include "tilesim/error.hpp"
#include "tilesim/memory.hpp"

using namespace tilesim;

namespace {

// Reference set-associative LRU: one most-recent-first list per set.
struct RefCache {
  std::uint32_t sets, ways;
  std::vector<std::list<std::uint32_t>> s;
  RefCache(std::uint32_t sets_, std::uint32_t ways_) : sets(sets_), ways(ways_), s(sets_) {}
  // Returns hit; on miss reports whether something was evicted.
  bool access(std::uint32_t line, bool& evicted) {
    auto& l = s[line % sets];
    evicted = false;
    for (auto it = l.begin(); it != l.end(); ++it)
      if (*it == line) {
        l.erase(it);
        l.push_front(line);
        return true;
      }
    if (l.size() == ways) {
      l.pop_back();
      evicted = true;
    }
    l.push_front(line);
    return false;
  }
};

}  // namespace

TEST_CASE("cache tag store matches a reference LRU") {
  std::mt19937 rng(3);
  for (auto [sets, ways] : {std::pair{16u, 1u}, {8u, 2u}, {4u, 4u}, {1u, 8u}}) {
    Cache c(sets, ways);
    RefCache ref(sets, ways);
    for (int i = 0; i < 20000; ++i) {
      const std::uint32_t line = rng() % (sets * ways * 3);
      bool evicted = false;
      const bool hit = ref.access(line, evicted);
      Cache::Line* l = c.find(line);
      REQUIRE((l != nullptr) == hit);
      if (l) {
        c.touch(*l);
      } else {
        Cache::Victim v;
        c.install(line, v);
        CHECK(v.evicted == evicted);
      }
    }
  }
}

TEST_CASE("dirty victims are reported") {
  Cache c(1, 1);
  Cache::Victim v;
  c.install(5, v).dirty = true;
  CHECK_FALSE(v.evicted);
  c.install(6, v);
  CHECK(v.evicted);
  CHECK(v.dirty);
  c.install(7, v);
  CHECK(v.evicted);
  CHECK_FALSE(v.dirty);
}

TEST_CASE("DRAM channel serves one request per memory-clock slot") {
  DramChannel ch;
  CHECK(ch.request(100, 50) == 50);
  CHECK(ch.request(100, 50) == 51);
  CHECK(ch.request(100, 50) == 52);
  CHECK(ch.request(200, 50) == 50);
  CHECK(ch.requests() == 4);
  CHECK(ch.next_slot() == 201);
}

TEST_CASE("SRAM macro scaling") {
  const ModelParams p;
  const SramModel a = sram_model(256, p);
  CHECK(a.latency_ns == doctest::Approx(0.82));
  CHECK(a.banks == 1);
  CHECK(a.read_pj_bit == doctest::Approx(0.18));
  const SramModel b = sram_model(2048, p);
  CHECK(b.latency_ns == doctest::Approx(1.82));
  CHECK(b.banks == 4);
  CHECK(b.read_pj_bit == doctest::Approx(0.18 * 1.5 * 1.5));
  CHECK(sram_model(1024, p).latency_ns == doctest::Approx(0.82));
  CHECK(sram_model(8192, p).latency_ns == doctest::Approx(2.82));
}

TEST_CASE("cache geometry reserves queues and tags") {
  Config c = test::cached(test::grid(2, 2));
  c.machine.spm_kib = 64;
  const CacheGeometry g = cache_geometry(c.machine, 1024);
  CHECK(g.ways == 1);
  CHECK(g.lines == (64 * 1024 - 1024) / (64 + kTagEntryBytes));
  c.machine.spm_mode = SpmMode::cache_assoc;
  c.machine.cache_ways = 4;
  const CacheGeometry a = cache_geometry(c.machine, 1024);
  CHECK(a.ways == 4);
  CHECK(a.lines % 4 == 0);
  CHECK_THROWS_AS(cache_geometry(c.machine, 64 * 1024), CapacityError);
}

TEST_CASE("tile memory counts hits, misses and write-backs") {
  MemoryTiming t;
  t.mode = SpmMode::cache_direct;
  t.pu_ps = 1000;
  t.sram_cycles = 1;
  t.line_bytes = 64;
  t.slice_bytes = 1 << 20;
  t.geometry = {4, 4, 1};
  TileMemory m(&t, 0, 50);
  DramChannel ch;
  TileCounters ctr;
  // cold miss waits for DRAM
  CHECK(m.access(0, false, 32, 0, &ch, ctr) == 2 + 50);
  CHECK(m.access(4, false, 32, 100000, &ch, ctr) == 2);
  m.access(0, true, 32, 100000, &ch, ctr);
  // same set, different tag: evicts the dirty line
  m.access(4 * 64, false, 32, 200000, &ch, ctr);
  CHECK(ctr[Ctr::mem_hits] == 2);
  CHECK(ctr[Ctr::mem_misses] == 2);
  CHECK(ctr[Ctr::mem_writebacks] == 1);
  CHECK(ctr[Ctr::mem_dram_reqs] == 3);
  CHECK_THROWS_AS(m.access(2 << 20, false, 32, 0, &ch, ctr), SimulationError);

  MemoryTiming sp = t;
  sp.mode = SpmMode::scratchpad;
  TileMemory s(&sp, 0, 0);
  TileCounters c2;
  CHECK(s.access(128, true, 64, 0, nullptr, c2) == 1);
  CHECK(c2[Ctr::sram_write_bits] == 64);
}
