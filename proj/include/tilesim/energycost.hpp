#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tilesim/config.hpp"
#include "tilesim/counters.hpp"

namespace tilesim {

double voltage(double freq_ghz, double node_nm, const ModelParams& p = {});
double murphy_yield(double area_mm2, double defect_density_mm2);

// Whole (die + scribe) rectangles that fit in the usable wafer disc. Counts
// the best of four grid alignments (edge- or center-aligned in x and y).
std::uint64_t dies_per_wafer(double die_w_mm, double die_h_mm, double wafer_diam_mm = 300.0, double scribe_mm = 0.2,
                             double edge_loss_mm = 4.0);

// Named line items with a total that is their sum in insertion order.
struct Breakdown {
  std::vector<std::pair<std::string, double>> items;
  double total = 0;
  void add(std::string name, double value);
  double get(const std::string& name) const;  // 0 when absent
};

struct AreaReport {
  double tile_mm2 = 0;
  double tile_pitch_mm = 0;
  double die_mm2 = 0;
  double die_w_mm = 0;
  double die_h_mm = 0;
  double hbm_mm2 = 0;  // per chiplet
  double package_mm2 = 0;
  std::uint32_t chiplets_per_package = 1;
  std::uint32_t packages = 1;
  std::uint32_t hbm_devices_per_chiplet = 0;
  Breakdown chiplet;  // per-chiplet items, mm^2
};

struct EnergyReport {
  Breakdown items;  // joules
  double runtime_s = 0;
  double avg_power_w = 0;
  double power_density_w_mm2 = 0;
};

struct CostReport {
  std::uint64_t dies_per_wafer = 0;
  double die_yield = 0;
  double good_dies = 0;
  double die_cost = 0;
  bool no_good_dies = false;  // die cost fell back to a whole wafer
  Breakdown package;  // USD per package
  Breakdown system;   // USD for all packages
};

struct Reports {
  AreaReport area;
  EnergyReport energy;
  CostReport cost;
};

// Area of one tile (PUs, routers, SPM) in mm^2.
double tile_area_mm2(const Config& cfg);
double tile_pitch_mm(const Config& cfg);

AreaReport compute_area(const Config& cfg);
EnergyReport compute_energy(const CounterSet& counters, const Config& cfg, const AreaReport& area);
CostReport compute_cost(const Config& cfg, const AreaReport& area);
Reports compute_reports(const CounterSet& counters, const Config& cfg);

// Human-readable tables followed by a `key = value` block (%.17g).
std::string format_reports(const Reports& r);

// Recomputes the reports of a finished run. Overrides are `key=value` strings
// restricted to model parameters, operating frequencies, and DRAM capacity.
Reports postprocess(const std::filesystem::path& counters_path, const std::filesystem::path& config_path,
                    const std::vector<std::string>& overrides, Config* effective = nullptr);

}  // namespace tilesim
