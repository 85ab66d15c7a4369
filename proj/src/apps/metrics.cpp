#include "tilesim/apps/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace tilesim {

RunMetrics compute_metrics(const CounterSet& counters, const RunWork& work, const Config& cfg, const Reports& reports) {
  RunMetrics r;
  const auto& m = cfg.machine;
  r.runtime_s = reports.energy.runtime_s;
  r.edges = work.edges;
  r.edges_label = work.edges_label;
  r.flop = work.flops;
  if (r.runtime_s > 0) {
    r.teps = r.edges / r.runtime_s;
    r.flops = r.flop / r.runtime_s;
  }
  const double hits = double(counters.get_or("mem.hits", 0)), misses = double(counters.get_or("mem.misses", 0));
  if (hits + misses > 0) r.hit_rate = hits / (hits + misses);
  const double bytes = double(counters.get_or("sram.read_bits", 0) + counters.get_or("sram.write_bits", 0) +
                              counters.get_or("dram.read_bits", 0) + counters.get_or("dram.write_bits", 0)) /
                       8.0;
  if (bytes > 0) r.arithmetic_intensity = r.flop / bytes;
  const double tiles = double(counters.grid_width) * counters.grid_height;
  const double pu_avail = r.runtime_s * m.freq_op_pu * 1e9 * tiles * m.pus_per_tile;
  if (pu_avail > 0) r.pu_utilization = double(counters.get_or("pu.busy_cycles", 0)) / pu_avail;
  if (counters.noc_cycles > 0 && tiles > 0)
    r.router_utilization = double(counters.get_or("router.active_cycles", 0)) / (double(counters.noc_cycles) * tiles);
  r.hops_noc = counters.get_or("hops.noc", 0);
  r.hops_chiplet = counters.get_or("hops.chiplet", 0);
  r.hops_package = counters.get_or("hops.package", 0);
  r.hops_node = counters.get_or("hops.node", 0);
  r.energy_j = reports.energy.items.total;
  r.avg_power_w = reports.energy.avg_power_w;
  r.system_cost_usd = reports.cost.system.total;
  return r;
}

std::string format_metrics(const RunMetrics& m) {
  std::ostringstream os;
  auto kv = [&os](const char* k, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << k << " = " << buf << "\n";
  };
  kv("runtime_s", m.runtime_s);
  os << "teps_m_label = " << m.edges_label << "\n";
  kv("teps_m", m.edges);
  kv("teps", m.teps);
  kv("flop", m.flop);
  kv("flops", m.flops);
  kv("hit_rate", m.hit_rate);
  kv("arithmetic_intensity", m.arithmetic_intensity);
  kv("pu_utilization", m.pu_utilization);
  kv("router_utilization", m.router_utilization);
  kv("hops.noc", double(m.hops_noc));
  kv("hops.chiplet", double(m.hops_chiplet));
  kv("hops.package", double(m.hops_package));
  kv("hops.node", double(m.hops_node));
  kv("energy_j", m.energy_j);
  kv("power_w", m.avg_power_w);
  kv("system_cost_usd", m.system_cost_usd);
  return os.str();
}

}  // namespace tilesim
