#include "tilesim/memory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tilesim/error.hpp"

namespace tilesim {

SramModel sram_model(double spm_kib, const ModelParams& p) {
  SramModel s;
  const double ratio = spm_kib / p.sram_bank_kib;
  // Whole quadrupling steps past one bank; the epsilon keeps exact powers exact.
  const double quads = ratio > 1 ? std::floor(std::log(ratio) / std::log(4.0) + 1e-9) : 0;
  s.latency_ns = p.sram_rw_latency_ns + quads * p.sram_quadrupling_latency_ns;
  s.banks = static_cast<std::uint32_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
  const double doublings = std::ceil(std::log2(static_cast<double>(s.banks)) - 1e-9);
  s.mux_factor = std::pow(p.sram_mux_growth, doublings);
  s.read_pj_bit = p.sram_read_pj_bit * s.mux_factor;
  s.write_pj_bit = p.sram_write_pj_bit * s.mux_factor;
  s.static_mw = s.banks * (p.sram_bank_kib / 1024.0) * p.sram_leak_mw_per_mib;
  return s;
}

Cache::Cache(std::uint32_t sets, std::uint32_t ways) : sets_(sets), ways_(ways), lines_(std::size_t{sets} * ways) {}

Cache::Line* Cache::find(std::uint32_t line) {
  Line* set = &lines_[std::size_t{line % sets_} * ways_];
  for (std::uint32_t w = 0; w < ways_; ++w)
    if (set[w].valid && set[w].tag == line) return &set[w];
  return nullptr;
}

Cache::Line& Cache::install(std::uint32_t line, Victim& victim) {
  Line* set = &lines_[std::size_t{line % sets_} * ways_];
  Line* pick = &set[0];
  for (std::uint32_t w = 0; w < ways_; ++w) {
    if (!set[w].valid) {
      pick = &set[w];
      break;
    }
    if (set[w].lru < pick->lru) pick = &set[w];
  }
  victim.evicted = pick->valid;
  victim.dirty = pick->valid && pick->dirty;
  *pick = Line{};
  pick->tag = line;
  pick->valid = true;
  touch(*pick);
  return *pick;
}

CacheGeometry cache_geometry(const MachineConfig& m, std::uint64_t queue_reserve_bytes) {
  CacheGeometry g;
  if (!m.cache_mode()) return g;
  const std::uint64_t spm = std::uint64_t{m.spm_kib} * 1024;
  if (queue_reserve_bytes >= spm)
    throw CapacityError("queues need " + std::to_string(queue_reserve_bytes) + " bytes, more than the " +
                        std::to_string(spm) + "-byte SPM");
  const std::uint32_t line_bytes = m.cacheline_bits / 8;
  g.lines = static_cast<std::uint32_t>((spm - queue_reserve_bytes) / (line_bytes + kTagEntryBytes));
  g.ways = m.spm_mode == SpmMode::cache_direct ? 1 : std::min(m.cache_ways, g.lines);
  if (g.lines == 0 || g.ways == 0) throw CapacityError("SPM too small to hold a single cache line");
  g.sets = g.lines / g.ways;
  g.lines = g.sets * g.ways;
  return g;
}

TileMemory::TileMemory(const MemoryTiming* timing, std::uint32_t tile, std::uint64_t round_trip_ns)
    : t_(timing), tile_(tile), base_(std::uint64_t{tile} * timing->slice_bytes), round_trip_ns_(round_trip_ns) {
  if (t_->mode != SpmMode::scratchpad) cache_ = Cache(t_->geometry.sets, t_->geometry.ways);
}

std::uint32_t TileMemory::local_line(std::uint64_t addr) const {
  if (addr < base_ || addr - base_ >= t_->slice_bytes) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "tile %u accessed address 0x%llx owned by another tile", tile_,
                  static_cast<unsigned long long>(addr));
    throw SimulationError(buf);
  }
  return static_cast<std::uint32_t>((addr - base_) / t_->line_bytes);
}

Cache::Line& TileMemory::fill(std::uint32_t line, std::uint64_t now_ps, DramChannel* channel, TileCounters& ctr) {
  Cache::Victim victim;
  Cache::Line& l = cache_.install(line, victim);
  const std::uint64_t now_ns = now_ps / 1000;
  const std::uint64_t line_bits = std::uint64_t{t_->line_bytes} * 8;
  if (victim.dirty) {
    // Write-backs take a channel slot but nobody waits for them.
    channel->request(now_ns, round_trip_ns_);
    ++ctr[Ctr::mem_writebacks];
    ++ctr[Ctr::mem_dram_reqs];
    ctr[Ctr::dram_write_bits] += line_bits;
    ctr[Ctr::dram_link_bits] += line_bits;
    ctr[Ctr::sram_read_bits] += line_bits;
  }
  const std::uint64_t delay_ns = channel->request(now_ns, round_trip_ns_);
  ++ctr[Ctr::mem_dram_reqs];
  ctr[Ctr::dram_read_bits] += line_bits;
  ctr[Ctr::dram_link_bits] += line_bits;
  ctr[Ctr::sram_write_bits] += line_bits;
  l.ready_ps = now_ns * 1000 + delay_ns * 1000;
  return l;
}

std::uint32_t TileMemory::access(std::uint64_t addr, bool write, std::uint32_t bits, std::uint64_t now_ps,
                                 DramChannel* channel, TileCounters& ctr) {
  if (t_->mode == SpmMode::scratchpad) {
    local_line(addr);
    ctr[write ? Ctr::sram_write_bits : Ctr::sram_read_bits] += bits;
    return t_->sram_cycles;
  }
  const std::uint32_t line = local_line(addr);
  // Tag lookup and data access are both SPM reads.
  std::uint64_t cycles = 2 * std::uint64_t{t_->sram_cycles};
  ++ctr[Ctr::mem_tag_accesses];
  ctr[write ? Ctr::sram_write_bits : Ctr::sram_read_bits] += bits;
  Cache::Line* l = cache_.find(line);
  if (l) {
    ++ctr[Ctr::mem_hits];
    if (l->prefetched) {
      ++ctr[Ctr::mem_prefetch_useful];
      l->prefetched = false;
    }
  } else {
    ++ctr[Ctr::mem_misses];
    l = &fill(line, now_ps, channel, ctr);
    if (t_->prefetch == PrefetchMode::next_line && std::uint64_t{line + 1} * t_->line_bytes < t_->slice_bytes)
      prefetch(base_ + std::uint64_t{line + 1} * t_->line_bytes, now_ps, channel, ctr);
  }
  cache_.touch(*l);
  if (write) l->dirty = true;
  if (l->ready_ps > now_ps) cycles += (l->ready_ps - now_ps + t_->pu_ps - 1) / t_->pu_ps;
  return static_cast<std::uint32_t>(cycles);
}

void TileMemory::prefetch(std::uint64_t addr, std::uint64_t now_ps, DramChannel* channel, TileCounters& ctr) {
  if (t_->mode == SpmMode::scratchpad) return;
  const std::uint32_t line = local_line(addr);
  if (cache_.find(line)) return;
  ++ctr[Ctr::mem_prefetch_issued];
  ++ctr[Ctr::mem_tag_accesses];
  Cache::Line& l = fill(line, now_ps, channel, ctr);
  l.prefetched = true;
}

}  // namespace tilesim
