#include "tilesim/simcli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tilesim/error.hpp"
#include "tilesim/geometry.hpp"

namespace tilesim {

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void counter_fields(std::ostringstream& os, const TileCounters& c, std::uint32_t channels) {
  for (std::size_t i = 0; i < kNumCtr; ++i)
    if (c.v[i]) os << ' ' << counter_name(static_cast<Ctr>(i)) << '=' << c.v[i];
  for (std::uint32_t ch = 1; ch < channels && ch < kMaxChannels; ++ch) {
    if (c.injected[ch]) os << " msgs.injected." << ch << '=' << c.injected[ch];
    if (c.delivered[ch]) os << " msgs.delivered." << ch << '=' << c.delivered[ch];
  }
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
  if (!f) throw Error("error writing " + p.string());
}

}  // namespace

std::uint32_t default_workers(const Config& cfg) {
  const std::uint32_t host = std::max(1u, std::thread::hardware_concurrency());
  return std::min(host, global_grid(cfg.machine).width);
}

RunOutcome run_simulation(const RunRequest& req) {
  if (req.verbosity > 3) throw ConfigError("verbosity must be 0..3, got " + std::to_string(req.verbosity));
  RunOutcome out;
  out.config = req.config_path.empty() ? Config{} : parse_config(req.config_path);
  for (const auto& o : req.overrides) apply_override(out.config, o);
  if (req.frame_us) out.config.machine.frame_interval_us = *req.frame_us;
  validate(out.config);
  out.app = req.app;
  out.verbosity = req.verbosity;

  std::shared_ptr<const CsrGraph> graph;
  if (app_needs_graph(req.app)) {
    if (req.dataset.empty()) throw ConfigError("app '" + req.app + "' needs --dataset");
    graph = std::make_shared<const CsrGraph>(load_dataset(req.dataset, req.app_opts.seed));
    out.dataset = req.dataset;
  }
  auto app = make_app(req.app, graph, req.app_opts);

  SimOptions so;
  so.workers = req.workers ? req.workers : default_workers(out.config);
  so.header = req.header;
  so.verbosity = req.verbosity;
  Simulator sim(out.config, *app, so);
  out.result = sim.run();
  out.check = app->check();
  out.work = app->work();
  out.reports = compute_reports(out.result.counters, out.config);
  out.metrics = compute_metrics(out.result.counters, out.work, out.config, out.reports);
  if (!req.out_dir.empty()) write_artifacts(out, req.out_dir);
  return out;
}

std::string format_run_log(const RunOutcome& out) {
  const SimResult& r = out.result;
  const GridDims grid{r.counters.grid_width, r.counters.grid_height};
  std::uint32_t channels = 1;
  for (const auto& [k, v] : r.counters.values)
    if (k.rfind("tasks.executed.", 0) == 0) channels = std::max(channels, static_cast<std::uint32_t>(std::stoul(k.substr(15))) + 1);

  std::ostringstream os;
  os << "RUN app=" << out.app << " dataset=" << (out.dataset.empty() ? "none" : out.dataset) << " grid=" << grid.width
     << 'x' << grid.height << " frame_cycles=" << r.frame_cycles
     << " frame_us=" << g17(out.config.machine.frame_interval_us) << " noc_ghz=" << g17(out.config.machine.freq_op_noc)
     << " pu_ghz=" << g17(out.config.machine.freq_op_pu) << " pus_per_tile=" << out.config.machine.pus_per_tile
     << " config_checksum=" << r.counters.config_checksum << '\n';
  for (std::size_t f = 0; f < r.frames.size(); ++f) {
    const Frame& fr = r.frames[f];
    const std::uint64_t len = fr.end_cycle - fr.begin_cycle;
    os << "FRAME " << f << " * * begin=" << fr.begin_cycle << " end=" << fr.end_cycle << " cycles=" << len;
    counter_fields(os, fr.total, channels);
    os << '\n';
    for (std::uint32_t t = 0; t < fr.tiles.size(); ++t) {
      const TileCoord xy = tile_coord(t, grid);
      os << "FRAME " << f << ' ' << xy.x << ' ' << xy.y << " cycles=" << len;
      counter_fields(os, fr.tiles[t], channels);
      os << '\n';
    }
    for (std::uint32_t t = 0; t < fr.queues.size(); ++t) {
      const TileCoord xy = tile_coord(t, grid);
      const auto& q = fr.queues[t];
      const std::size_t ids = q.size() / 2;
      os << "QUEUE " << f << ' ' << xy.x << ' ' << xy.y;
      for (std::size_t i = 0; i < ids; ++i) os << " iq." << i + 1 << '=' << q[i];
      for (std::size_t i = 0; i < ids; ++i) os << " cq." << i + 1 << '=' << q[ids + i];
      os << '\n';
    }
  }
  const RunMetrics& m = out.metrics;
  os << "END noc_cycles=" << r.noc_cycles << " pu_cycles=" << r.pu_cycles << " epochs=" << r.epochs
     << " check=" << (out.check.ok ? "pass" : "fail") << " runtime_s=" << g17(m.runtime_s) << " teps=" << g17(m.teps)
     << " flops=" << g17(m.flops) << " hit_rate=" << g17(m.hit_rate) << " energy_j=" << g17(m.energy_j)
     << " system_cost_usd=" << g17(m.system_cost_usd) << " msgs.injected=" << r.counters.get_or("msgs.injected", 0)
     << " hops.noc=" << m.hops_noc << '\n';
  return os.str();
}

std::string format_summary(const RunOutcome& out) {
  using nlohmann::ordered_json;
  const SimResult& r = out.result;
  const RunMetrics& m = out.metrics;
  ordered_json j;
  j["app"] = out.app;
  j["dataset"] = out.dataset.empty() ? "none" : out.dataset;
  j["grid"] = {{"width", r.counters.grid_width}, {"height", r.counters.grid_height}};
  j["workers"] = r.workers;
  j["verbosity"] = out.verbosity;
  j["wall_seconds"] = r.wall_seconds;
  j["noc_cycles"] = r.noc_cycles;
  j["pu_cycles"] = r.pu_cycles;
  j["epochs"] = r.epochs;
  j["kernel_end"] = r.kernel_end;
  j["frame_cycles"] = r.frame_cycles;
  j["frames"] = r.frames.size();
  j["check"] = {{"ok", out.check.ok}, {"message", out.check.message}};
  ordered_json mj;
  mj["runtime_s"] = m.runtime_s;
  mj["teps"] = m.teps;
  mj["teps_m"] = m.edges;
  mj["teps_m_label"] = m.edges_label;
  mj["flop"] = m.flop;
  mj["flops"] = m.flops;
  mj["hit_rate"] = m.hit_rate;
  mj["arithmetic_intensity"] = m.arithmetic_intensity;
  mj["pu_utilization"] = m.pu_utilization;
  mj["router_utilization"] = m.router_utilization;
  mj["traffic"] = {{"noc", m.hops_noc}, {"chiplet", m.hops_chiplet}, {"package", m.hops_package}, {"node", m.hops_node}};
  mj["energy_j"] = m.energy_j;
  mj["power_w"] = m.avg_power_w;
  mj["system_cost_usd"] = m.system_cost_usd;
  j["metrics"] = mj;
  auto breakdown = [](const Breakdown& b) {
    ordered_json o;
    for (const auto& [k, v] : b.items) o[k] = v;
    o["total"] = b.total;
    return o;
  };
  j["energy_j"] = breakdown(out.reports.energy.items);
  j["area_mm2"] = breakdown(out.reports.area.chiplet);
  j["cost_usd"] = {{"package", breakdown(out.reports.cost.package)}, {"system", breakdown(out.reports.cost.system)}};
  ordered_json cj;
  for (const auto& [k, v] : r.counters.values) cj[k] = v;
  j["counters"] = cj;
  j["config_checksum"] = r.counters.config_checksum;
  return j.dump(2) + "\n";
}

void write_artifacts(const RunOutcome& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "config.effective", serialize(out.config));
  write_counters(dir / "counters.txt", out.result.counters);
  write_file(dir / "report.txt", format_reports(out.reports));
  write_file(dir / "run.log", format_run_log(out));
  write_file(dir / "summary.json", format_summary(out));
}

}  // namespace tilesim
