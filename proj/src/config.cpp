#include "tilesim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "tilesim/error.hpp"

namespace tilesim {

std::uint32_t MachineConfig::iq_capacity_for(std::uint32_t task_id) const {
  auto it = iq_capacity_overrides.find(task_id);
  return it == iq_capacity_overrides.end() ? iq_capacity : it->second;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct BadValue {
  std::string what;
};

std::uint32_t to_u32(std::string_view v) {
  std::uint32_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw BadValue{"expected unsigned integer, got '" + std::string(v) + "'"};
  return out;
}

double to_double(std::string_view v) {
  std::string s(v);
  char* end = nullptr;
  double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out))
    throw BadValue{"expected number, got '" + s + "'"};
  return out;
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

template <typename E>
struct EnumNames {
  std::vector<std::pair<E, std::string_view>> names;
  E parse(std::string_view v) const {
    for (auto& [e, n] : names)
      if (n == v) return e;
    std::string opts;
    for (auto& [e, n] : names) opts += (opts.empty() ? "" : "|") + std::string(n);
    throw BadValue{"expected one of {" + opts + "}, got '" + std::string(v) + "'"};
  }
  std::string_view name(E e) const {
    for (auto& [x, n] : names)
      if (x == e) return n;
    return "?";
  }
};

const EnumNames<SpmMode> kSpmModes{{{SpmMode::scratchpad, "scratchpad"},
                                    {SpmMode::cache_direct, "cache_direct"},
                                    {SpmMode::cache_assoc, "cache_assoc"}}};
const EnumNames<Topology> kTopologies{{{Topology::mesh2d, "mesh2d"}, {Topology::folded_torus2d, "folded_torus2d"}}};
const EnumNames<ExtraPorts> kExtraPorts{{{ExtraPorts::none, "none"}, {ExtraPorts::ruche, "ruche"}}};
const EnumNames<DramIntegration> kIntegrations{
    {{DramIntegration::interposer_2_5d, "interposer_2_5d"}, {DramIntegration::stacked_3d, "stacked_3d"}}};
const EnumNames<TsuPolicyKind> kPolicies{{{TsuPolicyKind::round_robin, "round_robin"},
                                          {TsuPolicyKind::priority, "priority"},
                                          {TsuPolicyKind::occupancy, "occupancy"}}};
const EnumNames<PrefetchMode> kPrefetch{{{PrefetchMode::none, "none"},
                                         {PrefetchMode::next_line, "next_line"},
                                         {PrefetchMode::pointer_indirect, "pointer_indirect"}}};
const EnumNames<Arbitration> kArbitration{
    {{Arbitration::round_robin, "round_robin"}, {Arbitration::static_priority, "static"}}};
const EnumNames<ChipletLink> kChipletLinks{{{ChipletLink::organic, "organic"}, {ChipletLink::silicon, "silicon"}}};

struct Field {
  std::string name;
  std::function<void(Config&, std::string_view)> set;
  std::function<std::string(const Config&)> get;  // empty string = omit on serialize
  bool model_param = false;
  bool postprocess = false;
};

template <typename M>
Field u32_field(std::string name, M MachineConfig::*member) {
  return {name, [member](Config& c, std::string_view v) { c.machine.*member = to_u32(v); },
          [member](const Config& c) { return std::to_string(c.machine.*member); }};
}

Field dbl_field(std::string name, double MachineConfig::*member, bool postprocess = false) {
  return {name, [member](Config& c, std::string_view v) { c.machine.*member = to_double(v); },
          [member](const Config& c) { return fmt_double(c.machine.*member); }, false, postprocess};
}

template <typename E>
Field enum_field(std::string name, E MachineConfig::*member, const EnumNames<E>& names) {
  return {name, [member, &names](Config& c, std::string_view v) { c.machine.*member = names.parse(v); },
          [member, &names](const Config& c) { return std::string(names.name(c.machine.*member)); }};
}

DramConfig& dram_of(Config& c) {
  if (!c.machine.dram) c.machine.dram.emplace();
  return *c.machine.dram;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(u32_field("tiles_x", &MachineConfig::tiles_x));
    f.push_back(u32_field("tiles_y", &MachineConfig::tiles_y));
    f.push_back(u32_field("chiplets_x", &MachineConfig::chiplets_x));
    f.push_back(u32_field("chiplets_y", &MachineConfig::chiplets_y));
    f.push_back(u32_field("packages_x", &MachineConfig::packages_x));
    f.push_back(u32_field("packages_y", &MachineConfig::packages_y));
    f.push_back(u32_field("nodes_x", &MachineConfig::nodes_x));
    f.push_back(u32_field("nodes_y", &MachineConfig::nodes_y));
    f.push_back(u32_field("pus_per_tile", &MachineConfig::pus_per_tile));
    f.push_back(u32_field("spm_kib", &MachineConfig::spm_kib));
    f.push_back(enum_field("spm_mode", &MachineConfig::spm_mode, kSpmModes));
    f.push_back(u32_field("cache_ways", &MachineConfig::cache_ways));
    f.push_back(u32_field("cacheline_bits", &MachineConfig::cacheline_bits));
    f.push_back(enum_field("prefetch", &MachineConfig::prefetch, kPrefetch));
    f.push_back(enum_field("noc_topology", &MachineConfig::noc_topology, kTopologies));
    f.push_back(u32_field("noc_width_bits", &MachineConfig::noc_width_bits));
    f.push_back(enum_field("extra_ports", &MachineConfig::extra_ports, kExtraPorts));
    f.push_back(u32_field("ruche_stride", &MachineConfig::ruche_stride));
    f.push_back(u32_field("reduction_tree_degree", &MachineConfig::reduction_tree_degree));
    f.push_back(u32_field("num_physical_nocs", &MachineConfig::num_physical_nocs));
    f.push_back(enum_field("noc_arbitration", &MachineConfig::arbitration, kArbitration));
    f.push_back(u32_field("buffer_slots_per_port", &MachineConfig::buffer_slots_per_port));
    f.push_back(enum_field("chiplet_link", &MachineConfig::chiplet_link, kChipletLinks));
    f.push_back(u32_field("inter_chiplet_links", &MachineConfig::inter_chiplet_links));
    f.push_back(u32_field("inter_node_mux_factor", &MachineConfig::inter_node_mux_factor));

    f.push_back({"dram.enabled",
                 [](Config& c, std::string_view v) {
                   if (v == "true" || v == "1") {
                     dram_of(c);
                   } else if (v == "false" || v == "0") {
                     c.machine.dram.reset();
                   } else {
                     throw BadValue{"expected true|false, got '" + std::string(v) + "'"};
                   }
                 },
                 [](const Config& c) { return std::string(c.machine.dram ? "true" : "false"); }});
    f.push_back({"dram.channels", [](Config& c, std::string_view v) { dram_of(c).channels = to_u32(v); },
                 [](const Config& c) { return c.machine.dram ? std::to_string(c.machine.dram->channels) : ""; }});
    f.push_back({"dram.channel_bw_gbs", [](Config& c, std::string_view v) { dram_of(c).channel_bw_gbs = to_double(v); },
                 [](const Config& c) { return c.machine.dram ? fmt_double(c.machine.dram->channel_bw_gbs) : ""; }});
    f.push_back({"dram.capacity_gb", [](Config& c, std::string_view v) { dram_of(c).capacity_gb = to_double(v); },
                 [](const Config& c) { return c.machine.dram ? fmt_double(c.machine.dram->capacity_gb) : ""; }});
    f.push_back({"dram.integration",
                 [](Config& c, std::string_view v) { dram_of(c).integration = kIntegrations.parse(v); },
                 [](const Config& c) {
                   return c.machine.dram ? std::string(kIntegrations.name(c.machine.dram->integration)) : "";
                 }});

    f.push_back(dbl_field("freq_target_pu", &MachineConfig::freq_target_pu, true));
    f.push_back(dbl_field("freq_op_pu", &MachineConfig::freq_op_pu, true));
    f.push_back(dbl_field("freq_target_noc", &MachineConfig::freq_target_noc, true));
    f.push_back(dbl_field("freq_op_noc", &MachineConfig::freq_op_noc, true));
    f.push_back(dbl_field("process_node_nm", &MachineConfig::process_node_nm, true));

    f.push_back(u32_field("queue.iq_capacity", &MachineConfig::iq_capacity));
    f.push_back(u32_field("queue.cq_capacity", &MachineConfig::cq_capacity));
    f.push_back(u32_field("queue.entry_bytes", &MachineConfig::queue_entry_bytes));
    f.push_back(enum_field("tsu.policy", &MachineConfig::tsu_policy, kPolicies));
    f.push_back({"tsu.priority",
                 [](Config& c, std::string_view v) {
                   c.machine.tsu_priority.clear();
                   std::string s(v);
                   std::stringstream ss(s);
                   std::string item;
                   while (std::getline(ss, item, ',')) c.machine.tsu_priority.push_back(to_u32(trim(item)));
                 },
                 [](const Config& c) {
                   std::string out;
                   for (auto id : c.machine.tsu_priority) out += (out.empty() ? "" : ",") + std::to_string(id);
                   return out;
                 }});
    f.push_back(dbl_field("tsu.occupancy_threshold", &MachineConfig::tsu_occupancy_threshold));
    f.push_back(dbl_field("termination_factor", &MachineConfig::termination_factor));
    f.push_back(dbl_field("barrier_factor", &MachineConfig::barrier_factor));
    f.push_back(dbl_field("frame_interval_us", &MachineConfig::frame_interval_us));

#define TILESIM_PARAM(name)                                                                      \
  f.push_back({#name, [](Config& c, std::string_view v) { c.params.name = to_double(v); },      \
               [](const Config& c) { return fmt_double(c.params.name); }, true, true});
    TILESIM_PARAM(sram_density_mb_mm2)
    TILESIM_PARAM(sram_read_pj_bit)
    TILESIM_PARAM(sram_write_pj_bit)
    TILESIM_PARAM(sram_rw_latency_ns)
    TILESIM_PARAM(sram_bank_kib)
    TILESIM_PARAM(sram_quadrupling_latency_ns)
    TILESIM_PARAM(sram_mux_growth)
    TILESIM_PARAM(sram_leak_mw_per_mib)
    TILESIM_PARAM(tag_read_cmp_pj)
    TILESIM_PARAM(hbm_device_gb)
    TILESIM_PARAM(hbm_device_area_mm2)
    TILESIM_PARAM(dram_rw_latency_ns)
    TILESIM_PARAM(dram_rw_pj_bit)
    TILESIM_PARAM(refresh_period_ms)
    TILESIM_PARAM(refresh_pj_bit)
    TILESIM_PARAM(tsv_pj_bit)
    TILESIM_PARAM(mcm_phy_areal)
    TILESIM_PARAM(mcm_phy_beach)
    TILESIM_PARAM(si_phy_areal)
    TILESIM_PARAM(si_phy_beach)
    TILESIM_PARAM(d2d_latency_ns)
    TILESIM_PARAM(d2d_pj_bit)
    TILESIM_PARAM(noc_wire_ps_mm)
    TILESIM_PARAM(noc_wire_pj_bit_mm)
    TILESIM_PARAM(router_latency_ps)
    TILESIM_PARAM(router_pj_bit)
    TILESIM_PARAM(io_die_latency_ns)
    TILESIM_PARAM(offpkg_pj_bit)
    TILESIM_PARAM(wafer_cost_usd)
    TILESIM_PARAM(wafer_diameter_mm)
    TILESIM_PARAM(scribe_mm)
    TILESIM_PARAM(edge_loss_mm)
    TILESIM_PARAM(defect_density_mm2)
    TILESIM_PARAM(interposer_frac)
    TILESIM_PARAM(substrate_frac)
    TILESIM_PARAM(bonding_frac)
    TILESIM_PARAM(hbm_usd_per_gb)
    TILESIM_PARAM(area_freq_scale)
    TILESIM_PARAM(voltage_c0)
    TILESIM_PARAM(voltage_c_freq)
    TILESIM_PARAM(voltage_c_node)
    TILESIM_PARAM(pu_int_pj)
    TILESIM_PARAM(pu_fp_pj)
    TILESIM_PARAM(pu_branch_pj)
    TILESIM_PARAM(pu_mem_pj)
    TILESIM_PARAM(pu_area_mm2)
    TILESIM_PARAM(router_area_mm2)
    TILESIM_PARAM(memctrl_area_mm2)
#undef TILESIM_PARAM
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.name == key) return &f;
  return nullptr;
}

constexpr std::string_view kIqPrefix = "queue.iq.";

void set_key(Config& cfg, std::string_view key, std::string_view value) {
  if (key.starts_with(kIqPrefix)) {
    auto id = to_u32(key.substr(kIqPrefix.size()));
    cfg.machine.iq_capacity_overrides[id] = to_u32(value);
    return;
  }
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  f->set(cfg, value);
}

}  // namespace

void apply_override(Config& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  try {
    set_key(cfg, key, value);
  } catch (const BadValue& e) {
    throw ConfigError("bad value for '" + std::string(key) + "': " + e.what);
  }
}

void apply_override(Config& cfg, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  apply_override(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

bool is_model_param(std::string_view key) {
  const Field* f = find_field(key);
  return f && f->model_param;
}

bool is_postprocess_key(std::string_view key) {
  if (key == "dram.capacity_gb") return true;
  const Field* f = find_field(key);
  return f && f->postprocess;
}

Config parse_config_text(std::string_view text, std::string_view origin) {
  Config cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    std::string where = std::string(origin) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    try {
      set_key(cfg, key, value);
    } catch (const BadValue& e) {
      throw ConfigError(where + ": bad value for '" + std::string(key) + "': " + e.what);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

Config parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

void validate(const Config& cfg) {
  const auto& m = cfg.machine;
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  for (auto [name, v] : {std::pair{"tiles_x", m.tiles_x}, {"tiles_y", m.tiles_y}, {"chiplets_x", m.chiplets_x},
                         {"chiplets_y", m.chiplets_y}, {"packages_x", m.packages_x}, {"packages_y", m.packages_y},
                         {"nodes_x", m.nodes_x}, {"nodes_y", m.nodes_y}, {"pus_per_tile", m.pus_per_tile},
                         {"spm_kib", m.spm_kib}, {"noc_width_bits", m.noc_width_bits},
                         {"buffer_slots_per_port", m.buffer_slots_per_port}, {"cache_ways", m.cache_ways},
                         {"queue.iq_capacity", m.iq_capacity}, {"queue.cq_capacity", m.cq_capacity},
                         {"queue.entry_bytes", m.queue_entry_bytes},
                         {"inter_node_mux_factor", m.inter_node_mux_factor}})
    require(v >= 1, std::string(name) + " must be >= 1");
  require(m.num_physical_nocs >= 1 && m.num_physical_nocs <= 3, "num_physical_nocs must be in [1,3]");
  require(m.cacheline_bits >= 64 && m.cacheline_bits % 8 == 0, "cacheline_bits must be a multiple of 8 and >= 64");
  if (m.cache_mode()) require(m.dram.has_value(), "cache mode requires DRAM (set dram.* keys)");
  if (m.prefetch != PrefetchMode::none) require(m.cache_mode(), "prefetching requires a cache spm_mode");
  if (m.dram) {
    require(m.dram->channels >= 1, "dram.channels must be >= 1");
    require(m.dram->channel_bw_gbs > 0 && m.dram->capacity_gb > 0, "dram bandwidth and capacity must be > 0");
  }
  if (m.extra_ports == ExtraPorts::ruche) {
    require(m.noc_topology == Topology::mesh2d, "ruche ports are only supported on mesh2d");
    require(m.ruche_stride >= 2, "ruche_stride must be >= 2");
  }
  if (m.noc_topology == Topology::folded_torus2d)
    require(m.buffer_slots_per_port >= 2, "folded torus needs buffer_slots_per_port >= 2");
  for (double f : {m.freq_target_pu, m.freq_op_pu, m.freq_target_noc, m.freq_op_noc})
    require(f > 0, "frequencies must be > 0");
  require(m.process_node_nm > 0, "process_node_nm must be > 0");
  require(m.tsu_occupancy_threshold > 0 && m.tsu_occupancy_threshold <= 1, "tsu.occupancy_threshold must be in (0,1]");
  require(m.frame_interval_us > 0, "frame_interval_us must be > 0");
  require(m.termination_factor >= 0 && m.barrier_factor >= 0, "termination/barrier factors must be >= 0");
  for (auto [id, cap] : m.iq_capacity_overrides) require(cap >= 1, "queue.iq." + std::to_string(id) + " must be >= 1");
  {
    auto sorted = m.tsu_priority;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "tsu.priority must not repeat task ids");
  }
  for (const auto& f : fields()) {
    if (!f.model_param) continue;
    double v = to_double(f.get(cfg));
    require(v > 0 || (f.name == "defect_density_mm2" && v >= 0), f.name + " must be > 0");
  }
}

std::string serialize(const Config& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    auto v = f.get(cfg);
    if (v.empty()) continue;
    out += f.name + " = " + v + "\n";
  }
  for (auto [id, cap] : cfg.machine.iq_capacity_overrides)
    out += std::string(kIqPrefix) + std::to_string(id) + " = " + std::to_string(cap) + "\n";
  return out;
}

std::uint64_t checksum(const Config& cfg) {
  // FNV-1a over the canonical serialization.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : serialize(cfg)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.name);
  return keys;
}

}  // namespace tilesim
