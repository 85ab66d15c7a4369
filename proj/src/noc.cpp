#include "tilesim/noc.hpp"

#include <cmath>

namespace tilesim {

std::uint16_t flits_for(std::uint32_t payload_bits, std::uint32_t width_bits, bool header) {
  const std::uint32_t words = (payload_bits + width_bits - 1) / width_bits;
  const std::uint32_t total = words + (header ? 1u : 0u);
  return static_cast<std::uint16_t>(total == 0 ? 1 : total);
}

int arbitrate(std::uint32_t mask, std::uint32_t& pointer, Arbitration mode, int num_ports) {
  if (mask == 0) return -1;
  if (mode == Arbitration::static_priority) {
    for (int i = 0; i < num_ports; ++i)
      if (mask & (1u << i)) return i;
    return -1;
  }
  for (int k = 0; k < num_ports; ++k) {
    const int i = static_cast<int>((pointer + k) % num_ports);
    if (mask & (1u << i)) {
      pointer = static_cast<std::uint32_t>((i + 1) % num_ports);
      return i;
    }
  }
  return -1;
}

double link_latency_ps(const ModelParams& p, LinkLevel level, double wire_mm) {
  switch (level) {
    case LinkLevel::noc: return p.noc_wire_ps_mm * wire_mm;
    case LinkLevel::chiplet: return p.d2d_latency_ns * 1000.0;
    case LinkLevel::package:
    case LinkLevel::node: return p.io_die_latency_ns * 1000.0;
  }
  return 0;
}

std::uint32_t hop_latency_cycles(const ModelParams& p, double freq_noc_ghz, LinkLevel level, double wire_mm) {
  const double ps = p.router_latency_ps + link_latency_ps(p, level, wire_mm);
  // ps * GHz / 1000 = cycles; the epsilon absorbs binary rounding of exact products.
  const double cycles = std::ceil(ps * freq_noc_ghz / 1000.0 - 1e-9);
  return static_cast<std::uint32_t>(cycles < 1 ? 1 : cycles);
}

}  // namespace tilesim
