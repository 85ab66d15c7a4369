#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tilesim/energycost.hpp"
#include "tilesim/error.hpp"
#include "tilesim/simcli.hpp"

using namespace tilesim;

namespace {

int do_run(const RunRequest& req, bool quiet) {
  const RunOutcome out = run_simulation(req);
  if (!quiet) {
    const auto& r = out.result;
    std::printf("%s on %s: %llu NoC cycles (%llu PU cycles), %zu frames, %u workers, %.2f s wall\n", out.app.c_str(),
                out.dataset.empty() ? "generated input" : out.dataset.c_str(),
                static_cast<unsigned long long>(r.noc_cycles), static_cast<unsigned long long>(r.pu_cycles),
                r.frames.size(), r.workers, r.wall_seconds);
    std::fputs(format_metrics(out.metrics).c_str(), stdout);
    if (!req.out_dir.empty()) std::printf("artifacts in %s\n", req.out_dir.string().c_str());
  }
  if (!out.check.ok) {
    std::fprintf(stderr, "check failed: %s\n", out.check.message.c_str());
    return 1;
  }
  if (!quiet) std::printf("check passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Tiled manycore architecture simulator"};
  cli.require_subcommand(1);

  RunRequest req;
  std::string config_path, out_dir, barrier = "none";
  bool no_header = false, quiet = false;
  auto* run = cli.add_subcommand("run", "Simulate one app on one dataset");
  run->add_option("--app", req.app, "Application")->envname("TILESIM_APP")->required();
  run->add_option("--dataset", req.dataset, "rmat:<scale>[:<edge factor>], hand64, edgelist:<path>, or a CSR file")
      ->envname("TILESIM_DATASET");
  run->add_option("--config", config_path, "Configuration file")->envname("TILESIM_CONFIG");
  run->add_option("--workers", req.workers, "Host threads (0: host cores capped at grid columns)")
      ->envname("TILESIM_WORKERS");
  run->add_option("--verbosity,-v", req.verbosity, "Log detail 0..3")
      ->envname("TILESIM_VERBOSITY")
      ->check(CLI::Range(0, 3));
  run->add_option("--frame-us", req.frame_us, "Frame interval in microseconds of DUT time")
      ->envname("TILESIM_FRAME_US");
  run->add_option("--set", req.overrides, "Configuration override key=value (repeatable)")->allow_extra_args(false);
  run->add_flag("--no-header", no_header, "Messages carry no header flit")->envname("TILESIM_NO_HEADER");
  run->add_option("--seed", req.app_opts.seed, "Seed for generated datasets and dense operands")
      ->envname("TILESIM_SEED");
  run->add_option("--out-dir", out_dir, "Directory for the log, counters and reports")->envname("TILESIM_OUT_DIR");
  run->add_option("--root", req.app_opts.root, "Source vertex of bfs and sssp");
  run->add_option("--barrier", barrier, "Epoch barriers of bfs, sssp and wcc: none, local or global");
  run->add_option("--iterations", req.app_opts.iterations, "PageRank iterations");
  run->add_option("--damping", req.app_opts.damping, "PageRank damping factor");
  run->add_option("--spmm-cols", req.app_opts.spmm_cols, "Columns of the dense SPMM operand");
  run->add_option("--bin-width", req.app_opts.bin_width, "Histogram bin width");
  run->add_option("--fft-n", req.app_opts.fft_n, "FFT size per dimension (must equal the grid width)");
  run->add_option("--chunk", req.app_opts.chunk, "Messages an init task sends before yielding");
  run->add_flag("--quiet,-q", quiet, "Print nothing on success");

  std::string counters_path, pp_config, pp_out;
  std::vector<std::string> pp_overrides;
  auto* pp = cli.add_subcommand("postprocess", "Recompute area, energy and cost reports of a finished run");
  pp->add_option("--counters", counters_path, "Counters file of the run")->required();
  pp->add_option("--config", pp_config, "Effective configuration of the run")->required();
  pp->add_option("--set", pp_overrides, "Model parameter override key=value (repeatable)")->allow_extra_args(false);
  pp->add_option("--out", pp_out, "Write the reports here instead of stdout");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e);
  }

  try {
    if (*run) {
      req.config_path = config_path;
      req.out_dir = out_dir;
      req.header = !no_header;
      req.app_opts.epoch = parse_epoch_mode(barrier);
      return do_run(req, quiet);
    }
    const std::string text = format_reports(postprocess(counters_path, pp_config, pp_overrides));
    if (pp_out.empty()) {
      std::fputs(text.c_str(), stdout);
    } else {
      std::ofstream f(pp_out, std::ios::binary);
      if (!f) throw Error("cannot write " + pp_out);
      f << text;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
