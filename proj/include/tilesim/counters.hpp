#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace tilesim {

constexpr std::uint32_t kMaxChannels = 8;

// Per-tile event counters. Names in the counters file come from counter_name().
enum class Ctr : std::uint16_t {
  hops_noc,
  hops_chiplet,
  hops_package,
  hops_node,
  flit_hops_noc,
  flit_hops_chiplet,
  flit_hops_package,
  flit_hops_node,
  noc_flit_pitches,
  dram_link_bits,
  stall_backpressure,
  stall_contention,
  router_active_cycles,
  mem_hits,
  mem_misses,
  mem_writebacks,
  mem_prefetch_issued,
  mem_prefetch_useful,
  mem_tag_accesses,
  mem_dram_reqs,
  instr_int,
  instr_fp,
  instr_branch,
  instr_mem,
  sram_read_bits,
  sram_write_bits,
  queue_read_bits,
  queue_write_bits,
  dram_read_bits,
  dram_write_bits,
  msgs_injected,
  msgs_ejected,
  msgs_merged,
  pu_busy_cycles,
  pu_blocked_cycles,
  tasks_executed,
  app_work,
  app_flops,
  kCount
};
constexpr std::size_t kNumCtr = static_cast<std::size_t>(Ctr::kCount);
const char* counter_name(Ctr c);

struct TileCounters {
  std::array<std::uint64_t, kNumCtr> v{};
  std::array<std::uint64_t, kMaxChannels> injected{};
  std::array<std::uint64_t, kMaxChannels> delivered{};
  std::array<std::uint64_t, kMaxChannels> merged{};
  std::array<std::uint64_t, kMaxChannels> local{};  // delivered without entering the network
  std::array<std::uint64_t, kMaxChannels + 1> executed{};  // by task id, 0 = init

  std::uint64_t& operator[](Ctr c) { return v[static_cast<std::size_t>(c)]; }
  std::uint64_t operator[](Ctr c) const { return v[static_cast<std::size_t>(c)]; }
  void add(const TileCounters& o);
};

// Flat named counters plus the run header, as persisted in the counters file.
struct CounterSet {
  std::uint64_t config_checksum = 0;
  std::uint32_t grid_width = 0;
  std::uint32_t grid_height = 0;
  std::uint64_t noc_cycles = 0;
  std::uint64_t pu_cycles = 0;
  std::map<std::string, std::uint64_t> values;

  std::uint64_t get(const std::string& name) const;  // throws if missing
  std::uint64_t get_or(const std::string& name, std::uint64_t fallback) const;
  std::uint64_t sum_prefix(const std::string& prefix) const;
  bool operator==(const CounterSet&) const = default;
};

void add_tile_counters(CounterSet& set, const TileCounters& t, std::uint32_t num_channels);

std::string format_counters(const CounterSet& set);
CounterSet parse_counters(const std::string& text);
void write_counters(const std::filesystem::path& path, const CounterSet& set);
CounterSet read_counters(const std::filesystem::path& path);

}  // namespace tilesim
