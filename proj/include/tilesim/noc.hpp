#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "tilesim/config.hpp"
#include "tilesim/counters.hpp"
#include "tilesim/geometry.hpp"

namespace tilesim {

// Task arguments carried by a message. Apps pack integers or bit-cast doubles.
using Args = std::array<std::uint64_t, 4>;

// Merges two messages headed to the same destination with the same key.
using CombineFn = std::function<Args(const Args&, const Args&)>;

struct Message {
  Args args{};
  std::uint64_t ts = 0;   // earliest cycle at which the message may move again
  std::uint64_t key = 0;  // combining key, meaningful when `combinable`
  std::uint32_t dest = 0;
  std::uint32_t src = 0;
  std::uint32_t merged = 1;  // original messages folded into this one
  std::uint32_t seq = 0;     // per-source sequence number, for debugging
  std::uint16_t flits = 1;   // header plus payload words
  std::uint8_t channel = 0;
  std::uint8_t out_port = 0;  // output at the router currently holding it
  bool combinable = false;
};

// Flit count of a message: one header word (unless disabled) plus payload words.
std::uint16_t flits_for(std::uint32_t payload_bits, std::uint32_t width_bits, bool header);

// Grants one of the requesting ports in `mask` (bit i = port i). Round-robin
// scans from `pointer` and moves it past the grant; static priority grants the
// lowest index and leaves the pointer alone. Returns -1 if mask is empty.
int arbitrate(std::uint32_t mask, std::uint32_t& pointer, Arbitration mode, int num_ports);

// Link traversal time in picoseconds for one hop across a link of `level`.
double link_latency_ps(const ModelParams& p, LinkLevel level, double wire_mm);

// Router plus link latency converted to whole NoC cycles.
std::uint32_t hop_latency_cycles(const ModelParams& p, double freq_noc_ghz, LinkLevel level, double wire_mm);

}  // namespace tilesim
