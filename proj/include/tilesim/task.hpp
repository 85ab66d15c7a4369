#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tilesim/config.hpp"
#include "tilesim/geometry.hpp"
#include "tilesim/layout.hpp"
#include "tilesim/noc.hpp"

namespace tilesim {

namespace detail {
struct ExecFrame;
}

// Handle given to task bodies. Every call is charged to the running PU.
class TaskContext {
 public:
  explicit TaskContext(detail::ExecFrame* f) : f_(f) {}

  std::uint32_t tile() const;
  TileCoord coord() const;
  std::uint32_t pu() const;
  std::uint32_t kernel() const;
  std::uint64_t cycle() const;  // NoC cycle at which the task started

  // CPI=1 instruction accounting.
  void compute(std::uint32_t int_ops, std::uint32_t fp_ops = 0, std::uint32_t branches = 0);
  // SPM or cache access; adds its latency.
  void load(std::uint64_t addr, std::uint32_t bits = 32);
  void store(std::uint64_t addr, std::uint32_t bits = 32);
  // Invokes task `task_id` on `dest_tile`. Timestamped at the current PU time.
  void send(std::uint32_t task_id, std::uint32_t dest_tile, const Args& args);
  // Replaces the triggering input-queue entry instead of consuming it.
  void requeue(const Args& args);
  // Schedules this tile's init task to run again.
  void rearm_init();
  void add_flops(std::uint64_t n);

 private:
  detail::ExecFrame* f_;
};

// Synchronization applied when a kernel's activity drains.
enum class EpochMode { none, local, global };
const char* epoch_mode_name(EpochMode m);
EpochMode parse_epoch_mode(const std::string& s);

struct TaskDescriptor {
  std::uint32_t id = 1;  // also the logical channel and input queue of the task
  std::string name;
  std::function<void(TaskContext&, const Args&)> body;
  std::vector<std::uint32_t> targets;  // task ids this task may send to
  std::uint32_t max_emit = 1;          // messages per invocation per target, 0 = unbounded
  std::uint32_t payload_bits = 32;     // modeled payload, excluding the header
  CombineFn combine;                   // optional, enables reduction combining
  std::function<std::uint64_t(const Args&)> combine_key;  // defaults to args[0]
  // Addresses a queued invocation will touch, for pointer-indirect prefetching.
  std::function<void(const Args&, std::vector<std::uint64_t>&)> prefetch_addresses;
};

struct KernelSpec {
  std::string name;
  // Runs on every tile at kernel start; returns true once the tile's init work is finished.
  std::function<bool(TaskContext&)> init;
  std::vector<std::uint32_t> init_targets;
  std::uint32_t init_max_emit = 1;
  std::vector<TaskDescriptor> tasks;
  EpochMode epoch = EpochMode::none;
  // Called per tile at an epoch boundary; returns true to run init again.
  std::function<bool(std::uint32_t tile)> on_epoch;
};

// Throws ConfigError if task ids are invalid or the send graph has a cycle.
void validate_kernel(const KernelSpec& k);

struct SimSetup {
  const Config* config = nullptr;
  GridDims grid;
  std::uint32_t tiles = 0;
  DataLayout* layout = nullptr;
};

struct CheckResult {
  bool ok = true;
  std::string message;
};

struct RunWork {
  double edges = 0;  // m in TEPS
  double flops = 0;
  std::string edges_label;
};

class Application {
 public:
  virtual ~Application() = default;
  virtual std::string name() const = 0;
  // Per-app configuration hook, e.g. queue capacities.
  virtual void configure(Config&) const {}
  // Largest task id used by any kernel; sizes the queues reserved in the SPM.
  virtual std::uint32_t max_task_id() const = 0;
  virtual void setup(const SimSetup& s) = 0;
  virtual std::vector<KernelSpec> kernels() = 0;
  virtual CheckResult check() const = 0;
  virtual RunWork work() const = 0;
};

// Queue state seen by the task scheduling unit. Index 0 is the init task.
struct QueueView {
  bool ready = false;  // head runnable now and its targets have room
  std::uint32_t size = 0;
  std::uint32_t capacity = 1;
};

// Picks the next task id, or -1 when nothing is ready.
int schedule_next(std::span<const QueueView> queues, TsuPolicyKind policy, std::span<const std::uint32_t> priority,
                  double threshold, std::uint32_t& cursor);

}  // namespace tilesim
