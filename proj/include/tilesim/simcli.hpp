#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tilesim/apps/apps.hpp"
#include "tilesim/apps/metrics.hpp"
#include "tilesim/config.hpp"
#include "tilesim/energycost.hpp"
#include "tilesim/simulator.hpp"

namespace tilesim {

struct RunRequest {
  std::string app;
  std::string dataset;                // ignored by apps without a graph
  std::filesystem::path config_path;  // empty: built-in defaults
  std::vector<std::string> overrides;  // key=value, applied after the file
  std::uint32_t workers = 0;           // 0: host parallelism capped at grid columns
  std::uint32_t verbosity = 0;         // 0..3
  std::optional<double> frame_us;
  bool header = true;  // false models header-less messages
  AppOptions app_opts;
  std::filesystem::path out_dir;  // empty: write nothing
};

struct RunOutcome {
  Config config;  // after overrides
  std::uint32_t verbosity = 0;
  std::string app;
  std::string dataset;
  SimResult result;
  CheckResult check;
  RunWork work;
  Reports reports;
  RunMetrics metrics;
};

std::uint32_t default_workers(const Config& cfg);

// Builds the config, loads the dataset, simulates, checks against the oracle,
// and writes the artifacts when out_dir is set. Hard errors throw.
RunOutcome run_simulation(const RunRequest& req);

// Line-oriented run log:
//   RUN k=v ...                         always
//   FRAME <idx> * * k=v ...             verbosity >= 1, whole-grid frame deltas
//   FRAME <idx> <x> <y> k=v ...         verbosity >= 2, per tile
//   QUEUE <idx> <x> <y> iq.<id>=n cq.<id>=n ...   verbosity >= 3
//   END k=v ...                         always
// Counter fields are deltas over the frame and omitted when zero; `cycles` is
// the frame length. Lines of a lower verbosity are a subset of a higher one.
std::string format_run_log(const RunOutcome& out);

// Machine-readable summary (JSON).
std::string format_summary(const RunOutcome& out);

// config.effective, counters.txt, report.txt, run.log, summary.json
void write_artifacts(const RunOutcome& out, const std::filesystem::path& dir);

}  // namespace tilesim
