#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "tilesim/config.hpp"
#include "tilesim/counters.hpp"
#include "tilesim/geometry.hpp"
#include "tilesim/task.hpp"

namespace tilesim {

// One router traversal, reported to SimOptions::hop_observer.
struct HopEvent {
  std::uint64_t cycle = 0;
  std::uint32_t tile = 0;
  std::uint32_t next_tile = 0;  // equals tile for an ejection
  Port out = Port::local;
  std::uint32_t src = 0;
  std::uint32_t dest = 0;
  std::uint32_t seq = 0;
  std::uint64_t ts_before = 0;
  std::uint64_t ts_after = 0;
};

struct SimOptions {
  std::uint32_t workers = 1;
  bool header = true;          // count a header flit per message
  std::uint32_t verbosity = 0;  // 0..3, controls what frame data is kept
  // Called for every hop; only honored with a single worker.
  std::function<void(const HopEvent&)> hop_observer;
};

// Counter deltas of one logging frame.
struct Frame {
  std::uint64_t begin_cycle = 0;
  std::uint64_t end_cycle = 0;
  TileCounters total;
  std::vector<TileCounters> tiles;  // verbosity >= 2
  // verbosity >= 3: per tile, input then channel queue occupancy by task id
  std::vector<std::vector<std::uint16_t>> queues;
};

struct SimResult {
  std::uint64_t noc_cycles = 0;
  std::uint64_t pu_cycles = 0;
  std::vector<std::uint64_t> kernel_end;  // cycle at which each kernel finished
  std::uint64_t epochs = 0;               // global barriers taken
  CounterSet counters;
  std::vector<TileCounters> tiles;
  std::vector<Frame> frames;
  std::uint64_t frame_cycles = 0;
  std::uint32_t workers = 1;  // workers actually used
  double wall_seconds = 0;
};

class Simulator {
 public:
  Simulator(const Config& cfg, Application& app, SimOptions opts = {});
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  SimResult run();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

// Bytes of SPM taken by the input and channel queues of the given task ids.
std::uint64_t queue_reserve_bytes(const MachineConfig& m, const std::vector<std::uint32_t>& task_ids);

}  // namespace tilesim
