#include "tilesim/counters.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tilesim/error.hpp"

namespace tilesim {

const char* counter_name(Ctr c) {
  static const char* names[kNumCtr] = {
      "hops.noc",
      "hops.chiplet",
      "hops.package",
      "hops.node",
      "flit_hops.noc",
      "flit_hops.chiplet",
      "flit_hops.package",
      "flit_hops.node",
      "noc.flit_pitches",
      "dram.link_bits",
      "stall.backpressure",
      "stall.contention",
      "router.active_cycles",
      "mem.hits",
      "mem.misses",
      "mem.writebacks",
      "mem.prefetch.issued",
      "mem.prefetch.useful",
      "mem.tag_accesses",
      "mem.dram_reqs",
      "instr.int",
      "instr.fp",
      "instr.branch",
      "instr.mem",
      "sram.read_bits",
      "sram.write_bits",
      "queue.read_bits",
      "queue.write_bits",
      "dram.read_bits",
      "dram.write_bits",
      "msgs.injected",
      "msgs.ejected",
      "msgs.merged",
      "pu.busy_cycles",
      "pu.blocked_cycles",
      "tasks.executed",
      "app.work",
      "app.flops",
  };
  return names[static_cast<std::size_t>(c)];
}

void TileCounters::add(const TileCounters& o) {
  for (std::size_t i = 0; i < kNumCtr; ++i) v[i] += o.v[i];
  for (std::size_t i = 0; i < kMaxChannels; ++i) {
    injected[i] += o.injected[i];
    delivered[i] += o.delivered[i];
    merged[i] += o.merged[i];
    local[i] += o.local[i];
  }
  for (std::size_t i = 0; i < executed.size(); ++i) executed[i] += o.executed[i];
}

void add_tile_counters(CounterSet& set, const TileCounters& t, std::uint32_t num_channels) {
  for (std::size_t i = 0; i < kNumCtr; ++i) {
    if (static_cast<Ctr>(i) == Ctr::mem_dram_reqs) continue;  // reported per DRAM channel
    set.values[counter_name(static_cast<Ctr>(i))] += t.v[i];
  }
  for (std::uint32_t ch = 0; ch < num_channels; ++ch) {
    const auto s = std::to_string(ch);
    set.values["msgs.injected." + s] += t.injected[ch];
    set.values["msgs.delivered." + s] += t.delivered[ch];
    set.values["msgs.merged." + s] += t.merged[ch];
    set.values["msgs.local." + s] += t.local[ch];
  }
  for (std::uint32_t id = 0; id < num_channels && id < t.executed.size(); ++id)
    set.values["tasks.executed." + std::to_string(id)] += t.executed[id];
}

std::uint64_t CounterSet::get(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw Error("counter '" + name + "' missing from counters file");
  return it->second;
}

std::uint64_t CounterSet::get_or(const std::string& name, std::uint64_t fallback) const {
  auto it = values.find(name);
  return it == values.end() ? fallback : it->second;
}

std::uint64_t CounterSet::sum_prefix(const std::string& prefix) const {
  std::uint64_t s = 0;
  for (auto it = values.lower_bound(prefix); it != values.end() && it->first.compare(0, prefix.size(), prefix) == 0;
       ++it)
    s += it->second;
  return s;
}

std::string format_counters(const CounterSet& set) {
  std::ostringstream os;
  os << "# tilesim counters v1\n";
  os << "config_checksum = " << set.config_checksum << "\n";
  os << "grid = " << set.grid_width << "x" << set.grid_height << "\n";
  os << "runtime.noc_cycles = " << set.noc_cycles << "\n";
  os << "runtime.pu_cycles = " << set.pu_cycles << "\n";
  os << "---\n";
  for (const auto& [k, v] : set.values) os << k << " = " << v << "\n";
  return os.str();
}

namespace {

std::uint64_t parse_u64(std::string_view s, int line) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error("counters:" + std::to_string(line) + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

CounterSet parse_counters(const std::string& text) {
  CounterSet set;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  bool body = false;
  bool have_checksum = false;
  while (std::getline(is, raw)) {
    ++line;
    auto s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (s == "---") {
      body = true;
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string_view::npos) throw Error("counters:" + std::to_string(line) + ": expected 'name = value'");
    auto key = trim(s.substr(0, eq));
    auto val = trim(s.substr(eq + 1));
    if (body) {
      set.values[std::string(key)] = parse_u64(val, line);
    } else if (key == "config_checksum") {
      set.config_checksum = parse_u64(val, line);
      have_checksum = true;
    } else if (key == "grid") {
      auto x = val.find('x');
      if (x == std::string_view::npos) throw Error("counters:" + std::to_string(line) + ": bad grid");
      set.grid_width = static_cast<std::uint32_t>(parse_u64(val.substr(0, x), line));
      set.grid_height = static_cast<std::uint32_t>(parse_u64(val.substr(x + 1), line));
    } else if (key == "runtime.noc_cycles") {
      set.noc_cycles = parse_u64(val, line);
    } else if (key == "runtime.pu_cycles") {
      set.pu_cycles = parse_u64(val, line);
    } else {
      throw Error("counters:" + std::to_string(line) + ": unknown header field '" + std::string(key) + "'");
    }
  }
  if (!have_checksum) throw Error("counters file has no config_checksum header");
  return set;
}

void write_counters(const std::filesystem::path& path, const CounterSet& set) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << format_counters(set);
}

CounterSet read_counters(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read counters file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_counters(ss.str());
}

}  // namespace tilesim
