#pragma once

#include <cstdint>
#include <vector>

#include "tilesim/config.hpp"
#include "tilesim/counters.hpp"

namespace tilesim {

struct SramModel {
  double latency_ns = 0;
  double read_pj_bit = 0;   // including the mux tree
  double write_pj_bit = 0;
  std::uint32_t banks = 1;
  double mux_factor = 1;
  double static_mw = 0;     // leakage of all active banks
};

SramModel sram_model(double spm_kib, const ModelParams& p);

// One DRAM channel. `next_slot_ns` is the first memory-clock slot not yet
// taken; a request arriving at X waits for it, then occupies it.
class DramChannel {
 public:
  // Returns the completion delay in ns for a request issued at x_ns.
  std::uint64_t request(std::uint64_t x_ns, std::uint64_t round_trip_ns) {
    if (next_slot_ns_ < x_ns) next_slot_ns_ = x_ns;
    const std::uint64_t delay = next_slot_ns_ - x_ns + round_trip_ns;
    ++next_slot_ns_;
    ++requests_;
    return delay;
  }
  std::uint64_t requests() const { return requests_; }
  std::uint64_t next_slot() const { return next_slot_ns_; }

 private:
  std::uint64_t next_slot_ns_ = 0;
  std::uint64_t requests_ = 0;
};

// Tag store of the SPM when it runs as a write-back cache. Lines are numbered
// within the owning tile's slice of the address space.
class Cache {
 public:
  struct Line {
    std::uint32_t tag = 0;
    std::uint32_t lru = 0;
    std::uint64_t ready_ps = 0;  // data present from this time on
    bool valid = false;
    bool dirty = false;
    bool prefetched = false;  // brought in by a prefetch and not yet touched
  };
  struct Victim {
    bool evicted = false;
    bool dirty = false;
  };

  Cache() = default;
  Cache(std::uint32_t sets, std::uint32_t ways);

  std::uint32_t sets() const { return sets_; }
  std::uint32_t ways() const { return ways_; }
  Line* find(std::uint32_t line);
  // Allocates a frame for `line`, evicting the LRU (or only) way.
  Line& install(std::uint32_t line, Victim& victim);
  void touch(Line& l) { l.lru = ++tick_; }

 private:
  std::uint32_t sets_ = 0;
  std::uint32_t ways_ = 0;
  std::uint32_t tick_ = 0;
  std::vector<Line> lines_;
};

// Bytes per tag entry kept in the SPM next to each line (tag, valid, dirty).
constexpr std::uint32_t kTagEntryBytes = 4;

struct CacheGeometry {
  std::uint32_t lines = 0;
  std::uint32_t sets = 0;
  std::uint32_t ways = 0;
};
CacheGeometry cache_geometry(const MachineConfig& m, std::uint64_t queue_reserve_bytes);

// Latency parameters shared by every tile of one simulation.
struct MemoryTiming {
  SpmMode mode = SpmMode::scratchpad;
  PrefetchMode prefetch = PrefetchMode::none;
  std::uint64_t pu_ps = 1000;
  std::uint32_t sram_cycles = 1;  // PU cycles for one SRAM access
  std::uint32_t line_bytes = 64;
  std::uint64_t slice_bytes = 0;
  CacheGeometry geometry;
};

// SPM state of one tile.
class TileMemory {
 public:
  TileMemory() = default;
  TileMemory(const MemoryTiming* timing, std::uint32_t tile, std::uint64_t round_trip_ns);

  // Latency in PU cycles of one access issued at `now_ps`. `channel` is the
  // tile's DRAM channel (null in scratchpad mode).
  std::uint32_t access(std::uint64_t addr, bool write, std::uint32_t bits, std::uint64_t now_ps,
                       DramChannel* channel, TileCounters& ctr);
  void prefetch(std::uint64_t addr, std::uint64_t now_ps, DramChannel* channel, TileCounters& ctr);
  std::uint64_t round_trip_ns() const { return round_trip_ns_; }
  const Cache& cache() const { return cache_; }

 private:
  std::uint32_t local_line(std::uint64_t addr) const;
  Cache::Line& fill(std::uint32_t line, std::uint64_t now_ps, DramChannel* channel, TileCounters& ctr);

  const MemoryTiming* t_ = nullptr;
  std::uint32_t tile_ = 0;
  std::uint64_t base_ = 0;
  std::uint64_t round_trip_ns_ = 0;
  Cache cache_;
};

}  // namespace tilesim
