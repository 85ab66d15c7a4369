#include "tilesim/energycost.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "tilesim/error.hpp"
#include "tilesim/geometry.hpp"
#include "tilesim/memory.hpp"

namespace tilesim {

double voltage(double freq_ghz, double node_nm, const ModelParams& p) {
  return p.voltage_c0 + p.voltage_c_freq * freq_ghz + p.voltage_c_node * node_nm;
}

double murphy_yield(double area_mm2, double defect_density_mm2) {
  const double da = area_mm2 * defect_density_mm2;
  if (da < 1e-12) return 1.0;
  const double f = (1.0 - std::exp(-da)) / da;
  return f * f;
}

std::uint64_t dies_per_wafer(double w, double h, double wafer_diam_mm, double scribe_mm, double edge_loss_mm) {
  const double r = wafer_diam_mm / 2 - edge_loss_mm;
  if (w <= 0 || h <= 0 || r <= 0) return 0;
  const double pw = w + scribe_mm, ph = h + scribe_mm;
  const double eps = 1e-9 * r;
  std::uint64_t best = 0;
  for (double ox : {scribe_mm / 2, -w / 2}) {
    for (double oy : {scribe_mm / 2, -h / 2}) {
      std::uint64_t n = 0;
      const auto j0 = static_cast<long long>(std::floor((-r - oy) / ph)) - 1;
      const auto j1 = static_cast<long long>(std::ceil((r - oy) / ph)) + 1;
      for (long long j = j0; j <= j1; ++j) {
        const double y0 = oy + j * ph, y1 = y0 + h;
        const double ymax = std::max(std::abs(y0), std::abs(y1));
        if (ymax > r + eps) continue;
        const double half = std::sqrt(std::max(0.0, r * r - ymax * ymax));
        const auto k0 = static_cast<long long>(std::ceil((-half - ox - eps) / pw));
        const auto k1 = static_cast<long long>(std::floor((half - w - ox + eps) / pw));
        if (k1 >= k0) n += static_cast<std::uint64_t>(k1 - k0 + 1);
      }
      best = std::max(best, n);
    }
  }
  return best;
}

void Breakdown::add(std::string name, double value) {
  items.emplace_back(std::move(name), value);
  total += value;
}

double Breakdown::get(const std::string& name) const {
  for (const auto& [k, v] : items)
    if (k == name) return v;
  return 0;
}

namespace {

double freq_scale(double target_ghz, const ModelParams& p) { return 1.0 + p.area_freq_scale * (target_ghz - 1.0); }

std::uint32_t router_ports(const MachineConfig& m) {
  const bool express = m.extra_ports == ExtraPorts::ruche ||
                       (m.noc_topology == Topology::folded_torus2d && (m.nodes_x > 1 || m.nodes_y > 1));
  return express ? 9 : 5;
}

std::uint32_t packages_total(const MachineConfig& m) { return m.packages_x * m.packages_y * m.nodes_x * m.nodes_y; }

}  // namespace

double tile_area_mm2(const Config& cfg) {
  const auto& m = cfg.machine;
  const auto& p = cfg.params;
  const double pu = m.pus_per_tile * p.pu_area_mm2 * freq_scale(m.freq_target_pu, p);
  const double router = m.num_physical_nocs * p.router_area_mm2 * (router_ports(m) / 5.0) *
                        freq_scale(m.freq_target_noc, p);
  const double sram = (m.spm_kib / 1024.0) / p.sram_density_mb_mm2;
  return pu + router + sram;
}

double tile_pitch_mm(const Config& cfg) { return std::sqrt(tile_area_mm2(cfg)); }

AreaReport compute_area(const Config& cfg) {
  const auto& m = cfg.machine;
  const auto& p = cfg.params;
  AreaReport a;
  a.tile_mm2 = tile_area_mm2(cfg);
  a.tile_pitch_mm = std::sqrt(a.tile_mm2);
  a.chiplets_per_package = m.chiplets_x * m.chiplets_y;
  a.packages = packages_total(m);
  const double tiles = double(m.tiles_x) * m.tiles_y;
  const double fpu = freq_scale(m.freq_target_pu, p), fnoc = freq_scale(m.freq_target_noc, p);
  a.chiplet.add("pu", tiles * m.pus_per_tile * p.pu_area_mm2 * fpu);
  a.chiplet.add("router", tiles * m.num_physical_nocs * p.router_area_mm2 * (router_ports(m) / 5.0) * fnoc);
  a.chiplet.add("sram", tiles * (m.spm_kib / 1024.0) / p.sram_density_mb_mm2);

  // Off-chiplet links. An edge has links when the flattened grid continues past it.
  const bool silicon = m.chiplet_link == ChipletLink::silicon;
  const double areal = silicon ? p.si_phy_areal : p.mcm_phy_areal;
  const double beach = silicon ? p.si_phy_beach : p.mcm_phy_beach;
  const GridDims g = global_grid(m);
  const double edge_x_mm = m.tiles_x * a.tile_pitch_mm;  // north/south edge length
  const double edge_y_mm = m.tiles_y * a.tile_pitch_mm;  // east/west edge length
  auto link_gbps = [&](std::uint32_t edge_tiles) {
    const std::uint32_t links = m.inter_chiplet_links == 0 ? edge_tiles : std::min(m.inter_chiplet_links, edge_tiles);
    return 2.0 * links * m.noc_width_bits * m.freq_op_noc * m.num_physical_nocs;
  };
  const double ew_gbps = g.width > m.tiles_x ? link_gbps(m.tiles_y) : 0.0;
  const double ns_gbps = g.height > m.tiles_y ? link_gbps(m.tiles_x) : 0.0;
  double dram_gbps = 0;
  if (m.dram) dram_gbps = m.dram->channels * m.dram->channel_bw_gbs * 8.0;
  const bool stacked = m.dram && m.dram->integration == DramIntegration::stacked_3d;

  struct Edge {
    const char* name;
    double gbps;
    double len;
    double beach;
  };
  const Edge edges[] = {
      {"east", ew_gbps, edge_y_mm, beach},
      {"west", ew_gbps, edge_y_mm, beach},
      {"north", ns_gbps, edge_x_mm, beach},
      {"south", ns_gbps, edge_x_mm, beach},
  };
  double phy = 0;
  for (const auto& e : edges) {
    if (e.gbps <= 0) continue;
    const double need = e.gbps / e.len;
    if (need > e.beach + 1e-9) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "beachfront bandwidth infeasible on the %s chiplet edge: %.1f Gbit/s/mm needed, %.1f available",
                    e.name, need, e.beach);
      throw ConfigError(buf);
    }
    phy += e.gbps / areal;
  }
  double dram_phy = 0;
  if (dram_gbps > 0) {
    // DRAM sits across the south edge on a silicon interposer, or on top through TSVs.
    if (!stacked) {
      const double need = (dram_gbps + ns_gbps) / edge_x_mm;
      if (need > p.si_phy_beach + 1e-9) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "beachfront bandwidth infeasible on the south chiplet edge (DRAM): %.1f Gbit/s/mm needed, "
                      "%.1f available",
                      need, p.si_phy_beach);
        throw ConfigError(buf);
      }
    }
    dram_phy = dram_gbps / p.si_phy_areal;
  }
  a.chiplet.add("phy", phy);
  a.chiplet.add("dram_phy", dram_phy);
  a.chiplet.add("memctrl", m.dram ? p.memctrl_area_mm2 : 0.0);
  a.die_mm2 = a.chiplet.total;
  const double core = tiles * a.tile_mm2;
  const double grow = std::sqrt(a.die_mm2 / core);
  a.die_w_mm = edge_x_mm * grow;
  a.die_h_mm = edge_y_mm * grow;

  if (m.dram) {
    a.hbm_devices_per_chiplet = static_cast<std::uint32_t>(std::ceil(m.dram->capacity_gb / p.hbm_device_gb - 1e-9));
    a.hbm_mm2 = a.hbm_devices_per_chiplet * p.hbm_device_area_mm2;
  }
  const double per_chiplet = stacked ? std::max(a.die_mm2, a.hbm_mm2) : a.die_mm2 + a.hbm_mm2;
  a.package_mm2 = a.chiplets_per_package * per_chiplet;
  return a;
}

EnergyReport compute_energy(const CounterSet& c, const Config& cfg, const AreaReport& area) {
  const auto& m = cfg.machine;
  const auto& p = cfg.params;
  EnergyReport e;
  const double f_noc = m.freq_op_noc * 1e9, f_pu = m.freq_op_pu * 1e9;
  e.runtime_s = std::max(double(c.noc_cycles) / f_noc, double(c.pu_cycles) / f_pu);

  const double v_ref = voltage(1.0, m.process_node_nm, p);
  const double s_pu = std::pow(voltage(m.freq_op_pu, m.process_node_nm, p) / v_ref, 2);
  const double s_noc = std::pow(voltage(m.freq_op_noc, m.process_node_nm, p) / v_ref, 2);
  const SramModel sram = sram_model(m.spm_kib, p);
  const double width = m.noc_width_bits;
  const double pj = 1e-12;
  const double tiles = double(global_grid(m).tiles());
  const double chiplets = double(area.chiplets_per_package) * area.packages;

  const double instr = double(c.get("instr.int")) * p.pu_int_pj + double(c.get("instr.fp")) * p.pu_fp_pj +
                       double(c.get("instr.branch")) * p.pu_branch_pj + double(c.get("instr.mem")) * p.pu_mem_pj;
  e.items.add("pu", instr * s_pu * pj);
  e.items.add("sram", (double(c.get("sram.read_bits")) * sram.read_pj_bit +
                       double(c.get("sram.write_bits")) * sram.write_pj_bit) * pj);
  e.items.add("queue", (double(c.get("queue.read_bits")) * sram.read_pj_bit +
                        double(c.get("queue.write_bits")) * sram.write_pj_bit) * pj);
  e.items.add("tags", double(c.get("mem.tag_accesses")) * p.tag_read_cmp_pj * pj);
  const double flit_hops = double(c.get("flit_hops.noc")) + double(c.get("flit_hops.chiplet")) +
                           double(c.get("flit_hops.package")) + double(c.get("flit_hops.node"));
  e.items.add("router", flit_hops * width * p.router_pj_bit * s_noc * pj);
  e.items.add("wire", double(c.get("noc.flit_pitches")) * width * area.tile_pitch_mm * p.noc_wire_pj_bit_mm * s_noc * pj);
  e.items.add("d2d", double(c.get("flit_hops.chiplet")) * width * p.d2d_pj_bit * pj);
  e.items.add("offpackage",
              (double(c.get("flit_hops.package")) + double(c.get("flit_hops.node"))) * width * p.offpkg_pj_bit * pj);
  double dram = 0, dram_link = 0, refresh = 0;
  if (m.dram) {
    dram = (double(c.get("dram.read_bits")) + double(c.get("dram.write_bits"))) * p.dram_rw_pj_bit * pj;
    const double link_pj = m.dram->integration == DramIntegration::stacked_3d ? p.tsv_pj_bit : p.d2d_pj_bit;
    dram_link = double(c.get("dram.link_bits")) * link_pj * pj;
    const double bits = m.dram->capacity_gb * 8.0 * double(1ull << 30) * chiplets;
    refresh = bits * p.refresh_pj_bit * (e.runtime_s / (p.refresh_period_ms * 1e-3)) * pj;
  }
  e.items.add("dram", dram);
  e.items.add("dram_link", dram_link);
  e.items.add("dram_refresh", refresh);
  e.items.add("sram_static", sram.static_mw * 1e-3 * tiles * e.runtime_s);

  e.avg_power_w = e.runtime_s > 0 ? e.items.total / e.runtime_s : 0;
  const double silicon = area.die_mm2 * chiplets;
  e.power_density_w_mm2 = silicon > 0 ? e.avg_power_w / silicon : 0;
  return e;
}

CostReport compute_cost(const Config& cfg, const AreaReport& area) {
  const auto& m = cfg.machine;
  const auto& p = cfg.params;
  CostReport c;
  c.dies_per_wafer = dies_per_wafer(area.die_w_mm, area.die_h_mm, p.wafer_diameter_mm, p.scribe_mm, p.edge_loss_mm);
  c.die_yield = murphy_yield(area.die_mm2, p.defect_density_mm2);
  c.good_dies = double(c.dies_per_wafer) * c.die_yield;
  if (c.good_dies > 0) {
    c.die_cost = p.wafer_cost_usd / c.good_dies;
  } else {
    c.no_good_dies = true;
    c.die_cost = p.wafer_cost_usd;
  }
  const double chiplets = area.chiplets_per_package;
  const double dies = chiplets * c.die_cost;
  const bool interposer = m.dram && m.dram->integration == DramIntegration::interposer_2_5d;
  const double interp = interposer ? chiplets * p.interposer_frac * c.die_cost : 0.0;
  const double r = p.wafer_diameter_mm / 2 - p.edge_loss_mm;
  const double usd_per_mm2 = p.wafer_cost_usd / (std::numbers::pi * r * r);
  const double substrate = p.substrate_frac * usd_per_mm2 * area.package_mm2;
  const double bonding = p.bonding_frac * (dies + interp + substrate);
  const double hbm = m.dram ? chiplets * m.dram->capacity_gb * p.hbm_usd_per_gb : 0.0;
  c.package.add("compute_dies", dies);
  c.package.add("interposer", interp);
  c.package.add("substrate", substrate);
  c.package.add("bonding", bonding);
  c.package.add("hbm", hbm);
  for (const auto& [k, v] : c.package.items) c.system.add(k, v * area.packages);
  return c;
}

Reports compute_reports(const CounterSet& counters, const Config& cfg) {
  Reports r;
  r.area = compute_area(cfg);
  r.energy = compute_energy(counters, cfg, r.area);
  r.cost = compute_cost(cfg, r.area);
  return r;
}

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void table(std::ostringstream& os, const char* title, const char* unit, const Breakdown& b) {
  char buf[128];
  os << title << "\n";
  for (const auto& [k, v] : b.items) {
    std::snprintf(buf, sizeof buf, "  %-16s %16.6g %s\n", k.c_str(), v, unit);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "  %-16s %16.6g %s\n", "total", b.total, unit);
  os << buf;
}

}  // namespace

std::string format_reports(const Reports& r) {
  std::ostringstream os;
  table(os, "Area per chiplet", "mm^2", r.area.chiplet);
  table(os, "Energy", "J", r.energy.items);
  table(os, "Cost per package", "USD", r.cost.package);
  table(os, "Cost of system", "USD", r.cost.system);
  if (r.cost.no_good_dies) os << "warning: no good die fits on a wafer; die cost set to one wafer\n";
  os << "\n[values]\n";
  auto kv = [&os](const std::string& k, double v) { os << k << " = " << g17(v) << "\n"; };
  for (const auto& [k, v] : r.area.chiplet.items) kv("area." + k + "_mm2", v);
  kv("area.chiplet_mm2", r.area.chiplet.total);
  kv("area.tile_mm2", r.area.tile_mm2);
  kv("area.tile_pitch_mm", r.area.tile_pitch_mm);
  kv("area.die_w_mm", r.area.die_w_mm);
  kv("area.die_h_mm", r.area.die_h_mm);
  kv("area.hbm_mm2", r.area.hbm_mm2);
  kv("area.package_mm2", r.area.package_mm2);
  for (const auto& [k, v] : r.energy.items.items) kv("energy." + k + "_j", v);
  kv("energy.total_j", r.energy.items.total);
  kv("runtime_s", r.energy.runtime_s);
  kv("power.avg_w", r.energy.avg_power_w);
  kv("power.density_w_mm2", r.energy.power_density_w_mm2);
  kv("cost.dies_per_wafer", double(r.cost.dies_per_wafer));
  kv("cost.die_yield", r.cost.die_yield);
  kv("cost.die_usd", r.cost.die_cost);
  for (const auto& [k, v] : r.cost.package.items) kv("cost.package." + k + "_usd", v);
  kv("cost.package.total_usd", r.cost.package.total);
  for (const auto& [k, v] : r.cost.system.items) kv("cost.system." + k + "_usd", v);
  kv("cost.system.total_usd", r.cost.system.total);
  return os.str();
}

Reports postprocess(const std::filesystem::path& counters_path, const std::filesystem::path& config_path,
                    const std::vector<std::string>& overrides, Config* effective) {
  const CounterSet counters = read_counters(counters_path);
  Config cfg = parse_config(config_path);
  if (checksum(cfg) != counters.config_checksum)
    throw Error("configuration " + config_path.string() + " does not match the run that produced " +
                counters_path.string() + " (checksum mismatch)");
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const std::string key = eq == std::string::npos ? o : o.substr(0, eq);
    std::string trimmed = key;
    while (!trimmed.empty() && trimmed.back() == ' ') trimmed.pop_back();
    if (!is_postprocess_key(trimmed)) {
      // Distinguish typos from keys that exist but would need a new simulation.
      const auto keys = config_keys();
      if (std::find(keys.begin(), keys.end(), trimmed) == keys.end())
        throw ConfigError("unknown configuration key '" + trimmed + "'");
      throw ConfigError("'" + trimmed + "' changes simulated behavior and cannot be overridden in post-processing");
    }
    apply_override(cfg, o);
  }
  validate(cfg);
  if (effective) *effective = cfg;
  return compute_reports(counters, cfg);
}

}  // namespace tilesim
