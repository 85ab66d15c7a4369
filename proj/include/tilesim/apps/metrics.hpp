#pragma once

#include <cstdint>
#include <string>

#include "tilesim/config.hpp"
#include "tilesim/counters.hpp"
#include "tilesim/energycost.hpp"
#include "tilesim/task.hpp"

namespace tilesim {

// Headline numbers of a finished run.
struct RunMetrics {
  double runtime_s = 0;
  double edges = 0;  // m in TEPS
  std::string edges_label;
  double teps = 0;
  double flop = 0;   // dataset-array FP32 operations
  double flops = 0;  // per second
  double hit_rate = -1;  // SPM cache hit rate; -1 without cache accesses
  double arithmetic_intensity = 0;  // flop per byte read or written in SRAM and DRAM
  double pu_utilization = 0;        // busy PU cycles over PU cycles available
  double router_utilization = 0;    // active router cycles over tile-cycles
  std::uint64_t hops_noc = 0, hops_chiplet = 0, hops_package = 0, hops_node = 0;
  double energy_j = 0;
  double avg_power_w = 0;
  double system_cost_usd = 0;
};

RunMetrics compute_metrics(const CounterSet& counters, const RunWork& work, const Config& cfg, const Reports& reports);

// `key = value` lines, %.17g.
std::string format_metrics(const RunMetrics& m);

}  // namespace tilesim
