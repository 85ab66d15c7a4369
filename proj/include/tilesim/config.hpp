#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tilesim {

enum class SpmMode { scratchpad, cache_direct, cache_assoc };
enum class Topology { mesh2d, folded_torus2d };
enum class ExtraPorts { none, ruche };
enum class DramIntegration { interposer_2_5d, stacked_3d };
enum class TsuPolicyKind { round_robin, priority, occupancy };
enum class PrefetchMode { none, next_line, pointer_indirect };
enum class Arbitration { round_robin, static_priority };
enum class ChipletLink { organic, silicon };

struct DramConfig {
  std::uint32_t channels = 8;
  double channel_bw_gbs = 64.0;
  double capacity_gb = 8.0;
  DramIntegration integration = DramIntegration::interposer_2_5d;
};

// Latency, energy, area and cost constants. Units are in the member names.
struct ModelParams {
  double sram_density_mb_mm2 = 3.5;
  double sram_read_pj_bit = 0.18;
  double sram_write_pj_bit = 0.28;
  double sram_rw_latency_ns = 0.82;
  double sram_bank_kib = 512.0;
  double sram_quadrupling_latency_ns = 1.0;
  double sram_mux_growth = 1.5;
  double sram_leak_mw_per_mib = 2.0;  // estimate
  double tag_read_cmp_pj = 6.3;
  double hbm_device_gb = 8.0;
  double hbm_device_area_mm2 = 110.0;
  double dram_rw_latency_ns = 50.0;
  double dram_rw_pj_bit = 3.7;
  double refresh_period_ms = 32.0;
  double refresh_pj_bit = 0.22;
  double tsv_pj_bit = 0.05;  // estimate, 3D-stacked DRAM link
  double mcm_phy_areal = 690.0;
  double mcm_phy_beach = 880.0;
  double si_phy_areal = 1070.0;
  double si_phy_beach = 1780.0;
  double d2d_latency_ns = 4.0;
  double d2d_pj_bit = 0.55;
  double noc_wire_ps_mm = 50.0;
  double noc_wire_pj_bit_mm = 0.15;
  double router_latency_ps = 500.0;
  double router_pj_bit = 0.1;
  double io_die_latency_ns = 20.0;
  double offpkg_pj_bit = 1.17;
  double wafer_cost_usd = 6047.0;
  double wafer_diameter_mm = 300.0;
  double scribe_mm = 0.2;
  double edge_loss_mm = 4.0;
  double defect_density_mm2 = 0.07;
  double interposer_frac = 0.20;
  double substrate_frac = 0.10;
  double bonding_frac = 0.05;
  double hbm_usd_per_gb = 7.5;
  double area_freq_scale = 0.5;
  double voltage_c0 = 0.06;
  double voltage_c_freq = 0.13;
  double voltage_c_node = 0.06;
  // Per-instruction PU energies and block areas are placeholder estimates.
  double pu_int_pj = 1.0;
  double pu_fp_pj = 4.0;
  double pu_branch_pj = 0.8;
  double pu_mem_pj = 1.5;
  double pu_area_mm2 = 0.04;
  double router_area_mm2 = 0.012;
  double memctrl_area_mm2 = 1.5;
};

struct MachineConfig {
  std::uint32_t tiles_x = 1, tiles_y = 1;
  std::uint32_t chiplets_x = 1, chiplets_y = 1;
  std::uint32_t packages_x = 1, packages_y = 1;
  std::uint32_t nodes_x = 1, nodes_y = 1;
  std::uint32_t pus_per_tile = 1;

  std::uint32_t spm_kib = 256;
  SpmMode spm_mode = SpmMode::scratchpad;
  std::uint32_t cache_ways = 4;
  std::uint32_t cacheline_bits = 512;
  PrefetchMode prefetch = PrefetchMode::none;

  Topology noc_topology = Topology::mesh2d;
  std::uint32_t noc_width_bits = 64;
  ExtraPorts extra_ports = ExtraPorts::none;
  std::uint32_t ruche_stride = 3;
  std::uint32_t reduction_tree_degree = 0;
  std::uint32_t num_physical_nocs = 1;
  Arbitration arbitration = Arbitration::round_robin;
  std::uint32_t buffer_slots_per_port = 4;
  ChipletLink chiplet_link = ChipletLink::organic;
  std::uint32_t inter_chiplet_links = 0;  // links per chiplet edge, 0 = one per edge tile
  std::uint32_t inter_node_mux_factor = 1;

  std::optional<DramConfig> dram;

  double freq_target_pu = 1.0, freq_op_pu = 1.0;
  double freq_target_noc = 1.0, freq_op_noc = 1.0;
  double process_node_nm = 7.0;

  std::uint32_t iq_capacity = 64;
  std::uint32_t cq_capacity = 16;
  std::map<std::uint32_t, std::uint32_t> iq_capacity_overrides;
  std::uint32_t queue_entry_bytes = 16;

  TsuPolicyKind tsu_policy = TsuPolicyKind::round_robin;
  std::vector<std::uint32_t> tsu_priority;
  double tsu_occupancy_threshold = 0.75;

  double termination_factor = 2.0;  // x network diameter
  double barrier_factor = 2.0;      // x network diameter
  double frame_interval_us = 10.0;

  bool cache_mode() const { return spm_mode != SpmMode::scratchpad; }
  std::uint32_t iq_capacity_for(std::uint32_t task_id) const;
};

struct Config {
  MachineConfig machine;
  ModelParams params;
};

// Flat `key = value` text, `#` comments, dotted keys for sections.
Config parse_config(const std::filesystem::path& path);
Config parse_config_text(std::string_view text, std::string_view origin = "<text>");

// Applies one `key=value` assignment; throws ConfigError on unknown keys or bad values.
void apply_override(Config& cfg, std::string_view key, std::string_view value);
void apply_override(Config& cfg, std::string_view assignment);

bool is_model_param(std::string_view key);
// Keys that may be changed when re-evaluating energy and cost of a finished run.
bool is_postprocess_key(std::string_view key);

void validate(const Config& cfg);
std::string serialize(const Config& cfg);
std::uint64_t checksum(const Config& cfg);
std::vector<std::string> config_keys();

}  // namespace tilesim
