#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tilesim/apps/apps.hpp"
#include "tilesim/config.hpp"
#include "tilesim/energycost.hpp"
#include "tilesim/error.hpp"
#include "tilesim/simcli.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace tilesim;

namespace {

py::dict breakdown(const Breakdown& b) {
  py::dict d;
  for (const auto& [k, v] : b.items) d[py::str(k)] = v;
  d["total"] = b.total;
  return d;
}

py::dict reports_dict(const Reports& r) {
  py::dict d;
  d["area_mm2"] = breakdown(r.area.chiplet);
  d["die_mm2"] = r.area.die_mm2;
  d["energy_j"] = breakdown(r.energy.items);
  d["runtime_s"] = r.energy.runtime_s;
  d["power_w"] = r.energy.avg_power_w;
  d["cost_package_usd"] = breakdown(r.cost.package);
  d["cost_system_usd"] = breakdown(r.cost.system);
  d["dies_per_wafer"] = r.cost.dies_per_wafer;
  d["die_yield"] = r.cost.die_yield;
  d["text"] = format_reports(r);
  return d;
}

py::dict run(const std::string& app, const std::string& dataset, const std::vector<std::string>& overrides,
             const std::string& config, std::uint32_t workers, std::uint32_t verbosity, std::optional<double> frame_us,
             bool header, std::uint32_t root, const std::string& barrier, std::uint32_t iterations,
             std::uint32_t spmm_cols, std::uint32_t bin_width, std::uint64_t seed, const std::string& out_dir) {
  RunRequest req;
  req.app = app;
  req.dataset = dataset;
  req.overrides = overrides;
  req.config_path = config;
  req.workers = workers;
  req.verbosity = verbosity;
  req.frame_us = frame_us;
  req.header = header;
  req.app_opts.root = root;
  req.app_opts.epoch = parse_epoch_mode(barrier);
  req.app_opts.iterations = iterations;
  req.app_opts.spmm_cols = spmm_cols;
  req.app_opts.bin_width = bin_width;
  req.app_opts.seed = seed;
  req.out_dir = out_dir;

  RunOutcome out;
  {
    py::gil_scoped_release release;
    out = run_simulation(req);
  }
  const auto& r = out.result;
  py::dict d;
  d["app"] = out.app;
  d["dataset"] = out.dataset;
  d["noc_cycles"] = r.noc_cycles;
  d["pu_cycles"] = r.pu_cycles;
  d["epochs"] = r.epochs;
  d["kernel_end"] = r.kernel_end;
  d["frames"] = r.frames.size();
  d["workers"] = r.workers;
  d["wall_seconds"] = r.wall_seconds;
  d["check_ok"] = out.check.ok;
  d["check_message"] = out.check.message;
  d["counters"] = r.counters.values;
  d["config_checksum"] = r.counters.config_checksum;
  const auto& m = out.metrics;
  py::dict md;
  md["runtime_s"] = m.runtime_s;
  md["teps"] = m.teps;
  md["flops"] = m.flops;
  md["hit_rate"] = m.hit_rate;
  md["pu_utilization"] = m.pu_utilization;
  md["router_utilization"] = m.router_utilization;
  md["energy_j"] = m.energy_j;
  md["power_w"] = m.avg_power_w;
  md["system_cost_usd"] = m.system_cost_usd;
  d["metrics"] = md;
  d["reports"] = reports_dict(out.reports);
  d["log"] = format_run_log(out);
  d["summary_json"] = format_summary(out);
  return d;
}

}  // namespace

PYBIND11_MODULE(_tilesim, m) {
  m.doc() = "Tiled manycore architecture simulator";

  // Later registrations are tried first, so the base class goes first.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());

  m.def("run", &run, py::arg("app"), py::arg("dataset") = "", py::arg("overrides") = std::vector<std::string>{},
        py::arg("config") = "", py::arg("workers") = 0, py::arg("verbosity") = 0, py::arg("frame_us") = py::none(),
        py::arg("header") = true, py::arg("root") = 0, py::arg("barrier") = "none", py::arg("iterations") = 10,
        py::arg("spmm_cols") = 8, py::arg("bin_width") = 1, py::arg("seed") = 1, py::arg("out_dir") = "",
        "Simulate one app; overrides are 'key=value' strings. Returns a dict of results.");
  m.def(
      "postprocess",
      [](const std::string& counters, const std::string& config, const std::vector<std::string>& overrides) {
        return reports_dict(postprocess(counters, config, overrides));
      },
      py::arg("counters"), py::arg("config"), py::arg("overrides") = std::vector<std::string>{},
      "Recompute area, energy and cost reports from a counters file and its configuration.");
  m.def("app_names", &app_names);
  m.def("config_keys", &config_keys);
  m.def(
      "default_config", [] { return serialize(Config{}); }, "Serialized built-in configuration.");
  m.def("murphy_yield", &murphy_yield, py::arg("area_mm2"), py::arg("defect_density_mm2"));
  m.def(
      "voltage", [](double f, double node) { return voltage(f, node); }, py::arg("freq_ghz"), py::arg("node_nm"));
  m.def("dies_per_wafer", &dies_per_wafer, py::arg("die_w_mm"), py::arg("die_h_mm"), py::arg("wafer_diam_mm") = 300.0,
        py::arg("scribe_mm") = 0.2, py::arg("edge_loss_mm") = 4.0);

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
