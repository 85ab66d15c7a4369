#include "tilesim/simulator.hpp"

#include <algorithm>
#include <barrier>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <thread>

#include "tilesim/energycost.hpp"
#include "tilesim/error.hpp"
#include "tilesim/memory.hpp"
#include "tilesim/ring.hpp"

namespace tilesim {

const char* epoch_mode_name(EpochMode m) {
  switch (m) {
    case EpochMode::none: return "none";
    case EpochMode::local: return "local";
    case EpochMode::global: return "global";
  }
  return "none";
}

EpochMode parse_epoch_mode(const std::string& s) {
  if (s == "none") return EpochMode::none;
  if (s == "local") return EpochMode::local;
  if (s == "global") return EpochMode::global;
  throw ConfigError("barrier mode must be none, local or global, got '" + s + "'");
}

void validate_kernel(const KernelSpec& k) {
  std::vector<const TaskDescriptor*> by_id(kMaxChannels, nullptr);
  for (const auto& t : k.tasks) {
    if (t.id == 0 || t.id >= kMaxChannels)
      throw ConfigError("kernel '" + k.name + "': task id " + std::to_string(t.id) + " out of range 1.." +
                        std::to_string(kMaxChannels - 1));
    if (by_id[t.id]) throw ConfigError("kernel '" + k.name + "': task id " + std::to_string(t.id) + " registered twice");
    if (!t.body) throw ConfigError("kernel '" + k.name + "': task '" + t.name + "' has no body");
    by_id[t.id] = &t;
  }
  auto check_targets = [&](const std::vector<std::uint32_t>& targets, const std::string& who) {
    for (auto id : targets)
      if (id >= kMaxChannels || !by_id[id])
        throw ConfigError("kernel '" + k.name + "': " + who + " targets unknown task id " + std::to_string(id));
  };
  check_targets(k.init_targets, "init");
  for (const auto& t : k.tasks) check_targets(t.targets, "task '" + t.name + "'");
  if (!k.init) throw ConfigError("kernel '" + k.name + "' has no init task");
  if (k.epoch != EpochMode::none && !k.on_epoch)
    throw ConfigError("kernel '" + k.name + "' uses epoch barriers but has no epoch handler");

  // Depth-first search for a cycle in the task -> target graph.
  std::vector<int> state(kMaxChannels, 0);
  std::function<void(std::uint32_t)> visit = [&](std::uint32_t id) {
    state[id] = 1;
    for (auto t : by_id[id]->targets) {
      if (state[t] == 1)
        throw ConfigError("kernel '" + k.name + "': task graph has a cycle through task id " + std::to_string(t));
      if (state[t] == 0) visit(t);
    }
    state[id] = 2;
  };
  for (const auto& t : k.tasks)
    if (state[t.id] == 0) visit(t.id);
}

int schedule_next(std::span<const QueueView> q, TsuPolicyKind policy, std::span<const std::uint32_t> priority,
                  double threshold, std::uint32_t& cursor) {
  const auto n = static_cast<std::uint32_t>(q.size());
  if (n == 0) return -1;
  auto round_robin = [&]() -> int {
    for (std::uint32_t k = 0; k < n; ++k) {
      const std::uint32_t id = (cursor + k) % n;
      if (q[id].ready) {
        cursor = (id + 1) % n;
        return static_cast<int>(id);
      }
    }
    return -1;
  };
  switch (policy) {
    case TsuPolicyKind::round_robin: return round_robin();
    case TsuPolicyKind::priority: {
      for (auto id : priority)
        if (id < n && q[id].ready) return static_cast<int>(id);
      for (std::uint32_t id = 0; id < n; ++id) {
        if (std::find(priority.begin(), priority.end(), id) != priority.end()) continue;
        if (q[id].ready) return static_cast<int>(id);
      }
      return -1;
    }
    case TsuPolicyKind::occupancy: {
      bool over = false;
      for (std::uint32_t id = 0; id < n; ++id)
        if (q[id].capacity > 0 && double(q[id].size) > threshold * q[id].capacity) over = true;
      if (!over) return round_robin();
      int best = -1;
      double best_frac = -1;
      for (std::uint32_t id = 0; id < n; ++id) {
        if (!q[id].ready) continue;
        const double frac = q[id].capacity ? double(q[id].size) / q[id].capacity : 0.0;
        if (frac > best_frac) {
          best = static_cast<int>(id);
          best_frac = frac;
        }
      }
      return best;
    }
  }
  return -1;
}

std::uint64_t queue_reserve_bytes(const MachineConfig& m, const std::vector<std::uint32_t>& ids) {
  std::uint64_t entries = 0;
  for (auto id : ids) entries += m.iq_capacity_for(id) + m.cq_capacity;
  return entries * m.queue_entry_bytes;
}

namespace detail {

struct IqEntry {
  Args args{};
  std::uint64_t ts = 0;
};

struct Emission {
  Args args{};
  std::uint64_t ts = 0;
  std::uint32_t dest = 0;
  std::uint32_t task = 0;
};

struct PuRt {
  std::uint64_t free_ps = 0;
  std::uint64_t free_noc = 0;  // free_ps rounded up to a NoC cycle
  std::uint64_t busy_cycles = 0;
  std::vector<Emission> outbox;
  std::size_t outbox_head = 0;
  bool blocked() const { return outbox_head < outbox.size(); }
};

struct TileRt {
  std::vector<Ring<IqEntry>> iq;   // by task id
  std::vector<Ring<Message>> cq;   // by channel (= task id)
  std::vector<PuRt> pu;
  std::vector<Ring<Message>> inbuf;       // [noc][port][channel]
  std::vector<std::uint32_t> port_count;  // [noc][port]
  std::uint32_t occupied = 0;             // bit noc*P+port: input buffers hold messages
  std::uint32_t arrivals = 0;             // bit noc*P+port: link register written last cycle
  std::vector<std::uint16_t> credits;     // [noc][port][channel], for output ports
  std::vector<std::uint64_t> out_busy;    // [noc][port]
  std::vector<std::uint32_t> in_cursor;   // [noc][port]
  std::vector<std::uint32_t> out_rr;      // [noc][port]
  std::vector<std::uint32_t> inj_cursor;  // [noc]
  std::uint32_t buffered = 0;
  std::uint32_t cq_count = 0;
  std::uint32_t iq_count = 0;
  std::uint32_t tsu_cursor = 0;
  std::uint32_t seq = 0;
  std::uint64_t router_cycle = 0;
  std::uint64_t retry = 0;                  // next cycle the router needs to look at its buffers
  std::uint32_t iq_wait = 0;                // channels whose ejection found the input queue full
  std::vector<std::uint8_t> stall_reason;   // [noc][port]: 0 contention, 1 backpressure
  bool init_armed = false;
  bool dirty = false;
  TileMemory mem;
  DramChannel* dram = nullptr;
  TileCounters ctr;
};

constexpr std::uint64_t kNoRetry = std::numeric_limits<std::uint64_t>::max();

struct LinkReg {
  std::uint64_t stamp = 0;  // cycle + 1 at which it was written
  Message msg;
};

struct ArrivalNote {
  std::uint32_t tile = 0;
  std::uint32_t bit = 0;
};

struct CreditNote {
  std::uint32_t tile = 0;
  std::uint32_t slot = 0;  // index into the tile's credits
};

struct ExecFrame {
  Simulator::Impl* sim = nullptr;
  TileRt* tile = nullptr;
  std::uint32_t tile_id = 0;
  std::uint32_t pu = 0;
  std::uint32_t task = 0;
  std::uint64_t cycle = 0;
  std::uint64_t t0_ps = 0;
  std::uint64_t cycles = 0;
  std::vector<Emission>* emits = nullptr;
  const std::vector<std::uint8_t>* allowed = nullptr;  // send targets of the running task
  bool requeued = false;
  Args requeue_args{};
  bool rearm = false;
};

}  // namespace detail

using namespace detail;

namespace {

struct KernelRt {
  const KernelSpec* spec = nullptr;
  std::vector<const TaskDescriptor*> task;               // by id
  std::vector<std::vector<std::uint8_t>> allowed;        // by id (0 = init): may send to
  std::vector<std::vector<std::array<std::uint32_t, 3>>> needs;  // by id: (target, cq free, iq free)
  std::vector<std::uint16_t> flits;                      // by id
};

struct WorkerRt {
  std::uint32_t index = 0;
  std::vector<std::uint32_t> tiles;
  std::array<std::vector<std::vector<std::uint32_t>>, 2> inbox;  // [parity][source worker]
  std::array<std::vector<std::vector<CreditNote>>, 2> credit_inbox;
  std::array<std::vector<std::vector<ArrivalNote>>, 2> arrival_inbox;
  std::priority_queue<std::pair<std::uint64_t, std::uint32_t>, std::vector<std::pair<std::uint64_t, std::uint32_t>>,
                      std::greater<>>
      timers;
  std::vector<std::uint64_t> active;  // bitmap over tile ids, this cycle
  std::uint32_t active_lo = 0, active_hi = 0;  // word range holding this worker's tiles
  std::vector<Emission> emits;
  std::vector<std::uint64_t> addrs;
  std::array<QueueView, kMaxChannels> views{};
  bool woke = false;
  bool progress = false;
  std::exception_ptr error;
};

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// Whether task `id` could place its worst-case emissions right now.
bool room(const KernelRt& kr, const TileRt& tr, std::uint32_t id) {
  for (const auto& [tgt, need_cq, need_iq] : kr.needs[id])
    if (tr.cq[tgt].free() < need_cq || tr.iq[tgt].free() < need_iq) return false;
  return true;
}

}  // namespace

struct Simulator::Impl {
  Impl(const Config& c, Application& a, SimOptions o);

  SimResult run();
  void worker_cycle(WorkerRt& w, std::uint64_t c);
  void process_tile(WorkerRt& w, std::uint32_t t, std::uint64_t c);
  void absorb(WorkerRt& w, std::uint32_t t, std::uint64_t c);
  void receive(WorkerRt& w, std::uint32_t t, std::uint32_t noc, std::uint32_t port, const Message& m, std::uint64_t c);
  void route(WorkerRt& w, std::uint32_t t, std::uint64_t c);
  void transfer(WorkerRt& w, std::uint32_t t, std::uint32_t noc, std::uint32_t in, std::uint32_t ch, std::uint32_t out,
                std::uint64_t c);
  void inject(WorkerRt& w, std::uint32_t t, std::uint64_t c);
  void execute(WorkerRt& w, std::uint32_t t, std::uint64_t c);
  void run_task(WorkerRt& w, std::uint32_t t, std::uint32_t pu, std::uint32_t id, std::uint64_t c);
  bool try_place(WorkerRt& w, std::uint32_t t, const Emission& e);
  int pick_task(WorkerRt& w, std::uint32_t t, std::uint64_t c);
  void followup(WorkerRt& w, std::uint32_t t, std::uint64_t c);
  void wake(WorkerRt& from, std::uint32_t tile, std::uint64_t c);
  void credit_back(WorkerRt& w, std::uint32_t t, std::uint32_t noc, std::uint32_t port, std::uint32_t ch,
                   std::uint64_t c);
  void on_ejected(WorkerRt& w, std::uint32_t t, std::uint32_t ch, const Args& args, std::uint64_t c);
  void complete_cycle();
  void start_kernel(std::uint32_t k, std::uint64_t at);
  void snapshot_frame(std::uint64_t boundary);
  TileCounters adjusted(std::uint32_t t, std::uint64_t boundary) const;

  std::size_t port_idx(std::uint32_t noc, std::uint32_t port) const { return std::size_t{noc} * P + port; }
  static_assert(kMaxChannels == 8, "buffer stride");
  std::size_t buf_idx(std::uint32_t noc, std::uint32_t port, std::uint32_t ch) const {
    return ((std::size_t{noc} * P + port) << 3) + ch;
  }
  std::size_t reg_idx(std::uint32_t tile, std::uint32_t noc, std::uint32_t port, std::uint64_t parity) const {
    return ((std::size_t{tile} * N + noc) * P + port) * 2 + (parity & 1);
  }

  Config cfg;
  Application& app;
  SimOptions opts;
  GridDims grid;
  std::uint32_t T = 0;  // tiles
  NetworkTopology topo;
  std::uint32_t P = 5, N = 1, C = 1;
  std::uint32_t diameter = 0;
  std::uint64_t term_cycles = 0, barrier_cycles = 0;
  std::uint64_t noc_ps = 1000, pu_ps = 1000;
  bool torus = false;
  std::uint32_t degree = 0;
  std::uint32_t max_lat = 1;

  std::vector<std::int32_t> nbr;  // [tile][port]
  std::array<std::uint8_t, kNumPorts * kNumPorts> need{};  // credits to enter an output, by [in][out]
  std::vector<std::uint32_t> lat, busy_mult, pitch;
  std::vector<LinkLevel> level;

  std::vector<KernelSpec> kernels;
  std::vector<KernelRt> krt;
  std::uint32_t kernel = 0;

  DataLayout layout;
  MemoryTiming timing;
  std::vector<DramChannel> dram;
  std::vector<TileRt> tiles;
  std::vector<LinkReg> links;
  std::vector<WorkerRt> workers;
  std::vector<std::uint32_t> owner;

  std::uint64_t cur = 0;
  std::uint64_t last_progress = 0;
  std::uint64_t watchdog = 0;
  bool done = false;
  std::exception_ptr error;
  SimResult result;

  std::uint64_t frame_cycles = 0;
  std::uint64_t next_frame = 0;
  std::vector<TileCounters> snap;
};

Simulator::Impl::Impl(const Config& c, Application& a, SimOptions o)
    : cfg(c), app(a), opts(std::move(o)), grid(global_grid(c.machine)), topo(c.machine) {
  app.configure(cfg);
  validate(cfg);
  const auto& m = cfg.machine;
  T = static_cast<std::uint32_t>(grid.tiles());
  torus = m.noc_topology == Topology::folded_torus2d;
  P = (m.extra_ports == ExtraPorts::ruche || (torus && (m.nodes_x > 1 || m.nodes_y > 1))) ? 9 : 5;
  N = m.num_physical_nocs;
  degree = m.reduction_tree_degree;
  diameter = topo.diameter();
  term_cycles = static_cast<std::uint64_t>(std::llround(m.termination_factor * diameter));
  barrier_cycles = static_cast<std::uint64_t>(std::llround(m.barrier_factor * diameter));
  noc_ps = static_cast<std::uint64_t>(std::llround(1000.0 / m.freq_op_noc));
  pu_ps = static_cast<std::uint64_t>(std::llround(1000.0 / m.freq_op_pu));
  if (noc_ps == 0 || pu_ps == 0) throw ConfigError("operating frequency too high");

  const std::uint32_t max_id = app.max_task_id();
  if (max_id == 0 || max_id >= kMaxChannels)
    throw ConfigError("application task ids must lie in 1.." + std::to_string(kMaxChannels - 1));
  C = max_id + 1;
  std::vector<std::uint32_t> ids;
  for (std::uint32_t id = 1; id <= max_id; ++id) ids.push_back(id);
  const std::uint64_t reserve = queue_reserve_bytes(m, ids);
  if (!m.cache_mode() && reserve >= std::uint64_t{m.spm_kib} * 1024)
    throw CapacityError("queues need " + std::to_string(reserve) + " bytes, more than the SPM holds");

  layout = DataLayout(m, reserve);
  SimSetup setup;
  setup.config = &cfg;
  setup.grid = grid;
  setup.tiles = T;
  setup.layout = &layout;
  app.setup(setup);
  layout.check_capacity();

  kernels = app.kernels();
  if (kernels.empty()) throw ConfigError("application defines no kernels");
  for (const auto& k : kernels) validate_kernel(k);
  krt.resize(kernels.size());
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    auto& kr = krt[i];
    const auto& ks = kernels[i];
    kr.spec = &ks;
    kr.task.assign(C, nullptr);
    kr.allowed.assign(C, {});
    kr.needs.assign(C, {});
    kr.flits.assign(C, 1);
    for (const auto& t : ks.tasks) {
      if (t.id >= C) throw ConfigError("task id " + std::to_string(t.id) + " exceeds the declared maximum");
      kr.task[t.id] = &t;
      kr.flits[t.id] = flits_for(t.payload_bits, m.noc_width_bits, opts.header);
    }
    auto fill = [&](std::uint32_t id, const std::vector<std::uint32_t>& targets, std::uint32_t max_emit) {
      kr.allowed[id].assign(C, 0);
      for (auto tgt : targets) {
        if (tgt >= C) throw ConfigError("target task id out of range");
        kr.allowed[id][tgt] = 1;
        const std::uint32_t want = max_emit == 0 ? 1 : max_emit;
        kr.needs[id].push_back({tgt, std::min(want, m.cq_capacity), std::min(want, m.iq_capacity_for(tgt))});
      }
    };
    fill(0, ks.init_targets, ks.init_max_emit);
    for (const auto& t : ks.tasks) fill(t.id, t.targets, t.max_emit);
  }

  // Per-port link tables.
  const double pitch_mm = tile_pitch_mm(cfg);
  nbr.assign(std::size_t{T} * P, -1);
  lat.assign(std::size_t{T} * P, 0);
  busy_mult.assign(std::size_t{T} * P, 1);
  pitch.assign(std::size_t{T} * P, 0);
  level.assign(std::size_t{T} * P, LinkLevel::noc);
  for (std::uint32_t t = 0; t < T; ++t) {
    for (std::uint32_t p = 0; p < P; ++p) {
      if (p == static_cast<std::uint32_t>(kLocalPort)) continue;
      std::uint32_t u = 0;
      if (!topo.neighbor(t, static_cast<Port>(p), u)) continue;
      const std::size_t i = std::size_t{t} * P + p;
      nbr[i] = static_cast<std::int32_t>(u);
      level[i] = topo.level(t, static_cast<Port>(p));
      pitch[i] = topo.pitches(t, static_cast<Port>(p));
      lat[i] = hop_latency_cycles(cfg.params, m.freq_op_noc, level[i], pitch[i] * pitch_mm);
      max_lat = std::max(max_lat, lat[i]);
      if (level[i] == LinkLevel::node) busy_mult[i] = m.inter_node_mux_factor;
      if (level[i] == LinkLevel::chiplet && m.inter_chiplet_links > 0) {
        const bool x_link = p == static_cast<std::uint32_t>(Port::east) || p == static_cast<std::uint32_t>(Port::west);
        const std::uint32_t edge = x_link ? m.tiles_y : m.tiles_x;
        busy_mult[i] = (edge + m.inter_chiplet_links - 1) / m.inter_chiplet_links;
      }
    }
  }

  // Memory system.
  const SramModel sram = sram_model(m.spm_kib, cfg.params);
  timing.mode = m.spm_mode;
  timing.prefetch = m.prefetch;
  timing.pu_ps = pu_ps;
  timing.sram_cycles =
      static_cast<std::uint32_t>(std::max(1.0, std::ceil(sram.latency_ns * m.freq_op_pu - 1e-9)));
  timing.line_bytes = m.cacheline_bits / 8;
  timing.slice_bytes = address_slice_bytes(m);
  timing.geometry = cache_geometry(m, reserve);

  tiles.resize(T);
  const std::uint32_t cx_count = m.chiplets_x * m.packages_x * m.nodes_x;
  const std::uint32_t channels = m.dram ? m.dram->channels : 0;
  if (m.dram) dram.resize(std::size_t{cx_count} * m.chiplets_y * m.packages_y * m.nodes_y * channels);
  for (std::uint32_t t = 0; t < T; ++t) {
    auto& tr = tiles[t];
    tr.iq.reserve(C);
    tr.cq.reserve(C);
    for (std::uint32_t id = 0; id < C; ++id) {
      tr.iq.emplace_back(id == 0 ? 1 : m.iq_capacity_for(id));
      tr.cq.emplace_back(id == 0 ? 1 : m.cq_capacity);
    }
    tr.pu.resize(m.pus_per_tile);
    tr.inbuf.reserve(std::size_t{N} * P * kMaxChannels);
    for (std::size_t i = 0; i < std::size_t{N} * P * kMaxChannels; ++i)
      tr.inbuf.emplace_back(i % kMaxChannels < C ? m.buffer_slots_per_port : 0);
    tr.port_count.assign(std::size_t{N} * P, 0);
    tr.credits.assign(std::size_t{N} * P * kMaxChannels, 0);
    for (std::uint32_t n = 0; n < N; ++n)
      for (std::uint32_t p = 0; p < P; ++p)
        if (nbr[std::size_t{t} * P + p] >= 0)
          for (std::uint32_t ch = 0; ch < C; ++ch) tr.credits[buf_idx(n, p, ch)] = static_cast<std::uint16_t>(m.buffer_slots_per_port);
    tr.out_busy.assign(std::size_t{N} * P, 0);
    tr.in_cursor.assign(std::size_t{N} * P, 0);
    tr.stall_reason.assign(std::size_t{N} * P, 0);
    tr.out_rr.assign(std::size_t{N} * P, 0);
    tr.inj_cursor.assign(N, 0);

    std::uint64_t round_trip = 0;
    if (m.dram) {
      const TileCoord xy = tile_coord(t, grid);
      const std::uint32_t lx = xy.x % m.tiles_x, ly = xy.y % m.tiles_y;
      const std::uint32_t chip = (xy.y / m.tiles_y) * cx_count + xy.x / m.tiles_x;
      const std::uint32_t ch = static_cast<std::uint32_t>(std::uint64_t{lx} * channels / m.tiles_x);
      tr.dram = &dram[std::size_t{chip} * channels + ch];
      // Controller for channel `ch` sits below the middle of its column stripe.
      const std::uint32_t s0 = static_cast<std::uint32_t>(ceil_div(std::uint64_t{ch} * m.tiles_x, channels));
      const std::uint32_t s1 = static_cast<std::uint32_t>(ceil_div(std::uint64_t{ch + 1} * m.tiles_x, channels));
      const std::uint32_t mid = (s0 + std::max(s0 + 1, s1) - 1) / 2;
      const std::uint32_t dist = (m.tiles_y - ly) + (lx > mid ? lx - mid : mid - lx);
      const double bus_ns = dist * pitch_mm * cfg.params.noc_wire_ps_mm / 1000.0;
      round_trip = static_cast<std::uint64_t>(std::ceil(cfg.params.dram_rw_latency_ns + 2 * bus_ns - 1e-9));
    }
    tr.mem = TileMemory(&timing, t, round_trip);
  }
  // Bubble flow control on rings: entering a ring, from the local port or
  // another dimension, must leave a free slot behind.
  for (std::uint32_t p = 0; p < kNumPorts; ++p)
    for (std::uint32_t q = 0; q < kNumPorts; ++q) {
      const bool enter = p == static_cast<std::uint32_t>(kLocalPort) ||
                         !NetworkTopology::same_dimension(static_cast<Port>(p), static_cast<Port>(q));
      need[p * kNumPorts + q] = torus && enter ? 2 : 1;
    }
  links.resize(std::size_t{T} * N * P * 2);

  // Column slices for workers. With DRAM, cuts fall on channel stripe edges so
  // each channel is driven by exactly one worker.
  std::vector<std::uint32_t> cuts;  // allowed slice starts
  for (std::uint32_t x = 0; x < grid.width; ++x) {
    if (x == 0 || !m.dram) {
      cuts.push_back(x);
      continue;
    }
    auto stripe = [&](std::uint32_t col) {
      return std::uint64_t{col / m.tiles_x} * channels + std::uint64_t{col % m.tiles_x} * channels / m.tiles_x;
    };
    if (stripe(x) != stripe(x - 1)) cuts.push_back(x);
  }
  const std::uint32_t W = std::max<std::uint32_t>(1, std::min<std::uint32_t>(opts.workers, static_cast<std::uint32_t>(cuts.size())));
  std::vector<std::uint32_t> starts{0};
  for (std::uint32_t w = 1; w < W; ++w) {
    const double target = double(grid.width) * w / W;
    auto it = std::lower_bound(cuts.begin(), cuts.end(), static_cast<std::uint32_t>(std::llround(target)));
    std::uint32_t s = it == cuts.end() ? cuts.back() : *it;
    if (s <= starts.back()) {
      auto nx = std::upper_bound(cuts.begin(), cuts.end(), starts.back());
      if (nx == cuts.end()) break;
      s = *nx;
    }
    starts.push_back(s);
  }
  workers.resize(starts.size());
  owner.assign(T, 0);
  for (std::uint32_t w = 0; w < workers.size(); ++w) {
    workers[w].index = w;
    const std::uint32_t x0 = starts[w], x1 = w + 1 < starts.size() ? starts[w + 1] : grid.width;
    for (std::uint32_t y = 0; y < grid.height; ++y)
      for (std::uint32_t x = x0; x < x1; ++x) owner[tile_index({x, y}, grid)] = w;
    for (auto& box : workers[w].inbox) box.assign(starts.size(), {});
    for (auto& box : workers[w].credit_inbox) box.assign(starts.size(), {});
    for (auto& box : workers[w].arrival_inbox) box.assign(starts.size(), {});
  }
  for (std::uint32_t t = 0; t < T; ++t) workers[owner[t]].tiles.push_back(t);
  for (auto& w : workers) {
    w.active.assign((T + 63) / 64, 0);
    w.active_lo = w.tiles.front() >> 6;
    w.active_hi = (w.tiles.back() >> 6) + 1;
  }

  watchdog = 10ull * diameter + max_lat + 1000;
  frame_cycles = static_cast<std::uint64_t>(std::llround(m.frame_interval_us * 1000.0 * m.freq_op_noc));
  if (frame_cycles == 0) frame_cycles = 1;
}

void Simulator::Impl::wake(WorkerRt& from, std::uint32_t tile, std::uint64_t c) {
  workers[owner[tile]].inbox[c & 1][from.index].push_back(tile);
  from.woke = true;
}

void Simulator::Impl::credit_back(WorkerRt& w, std::uint32_t t, std::uint32_t noc, std::uint32_t port,
                                  std::uint32_t ch, std::uint64_t c) {
  // Credits land in the upstream router at the start of the next cycle.
  const auto u = static_cast<std::uint32_t>(nbr[std::size_t{t} * P + port]);
  const auto q = static_cast<std::uint32_t>(opposite(static_cast<Port>(port)));
  workers[owner[u]].credit_inbox[c & 1][w.index].push_back(
      CreditNote{u, static_cast<std::uint32_t>(buf_idx(noc, q, ch))});
  w.woke = true;
}

void Simulator::Impl::absorb(WorkerRt& w, std::uint32_t t, std::uint64_t c) {
  if (c == 0) return;
  TileRt& tr = tiles[t];
  const LinkReg* regs = &links[reg_idx(t, 0, 0, c - 1)];
  for (std::uint32_t bits = tr.arrivals; bits != 0; bits &= bits - 1) {
    const auto b = static_cast<std::uint32_t>(std::countr_zero(bits));
    receive(w, t, b / P, b % P, regs[b * 2].msg, c);
  }
  tr.arrivals = 0;
}

void Simulator::Impl::receive(WorkerRt& w, std::uint32_t t, std::uint32_t noc, std::uint32_t port, const Message& m,
                              std::uint64_t c) {
  TileRt& tr = tiles[t];
  w.progress = true;
  if (degree > 0 && m.combinable) {
    const TaskDescriptor* td = krt[kernel].task[m.channel];
    for (std::uint32_t p = 0; p < P; ++p) {
      Ring<Message>& ring = tr.inbuf[buf_idx(noc, p, m.channel)];
      for (std::size_t i = 0; i < ring.size(); ++i) {
        Message& b = ring[i];
        if (b.dest != m.dest || b.key != m.key || !b.combinable || b.merged + m.merged > degree) continue;
        b.args = td->combine(b.args, m.args);
        b.merged += m.merged;
        b.ts = std::max(b.ts, m.ts);
        ++tr.ctr[Ctr::msgs_merged];
        ++tr.ctr.merged[m.channel];
        credit_back(w, t, noc, port, m.channel, c);
        return;
      }
    }
  }
  Ring<Message>& buf = tr.inbuf[buf_idx(noc, port, m.channel)];
  buf.push_back(m);
  buf[buf.size() - 1].out_port = static_cast<std::uint8_t>(topo.route(t, m.dest));
  if (tr.port_count[port_idx(noc, port)]++ == 0) tr.occupied |= 1u << port_idx(noc, port);
  ++tr.buffered;
}

void Simulator::Impl::on_ejected(WorkerRt& w, std::uint32_t t, std::uint32_t ch, const Args& args, std::uint64_t c) {
  TileRt& tr = tiles[t];
  ++tr.ctr.delivered[ch];
  tr.ctr[Ctr::queue_write_bits] += std::uint64_t{cfg.machine.queue_entry_bytes} * 8;
  ++tr.iq_count;
  if (timing.prefetch == PrefetchMode::pointer_indirect && tr.dram) {
    const TaskDescriptor* td = krt[kernel].task[ch];
    if (td && td->prefetch_addresses) {
      w.addrs.clear();
      td->prefetch_addresses(args, w.addrs);
      for (auto a : w.addrs) tr.mem.prefetch(a, c * noc_ps, tr.dram, tr.ctr);
    }
  }
}

void Simulator::Impl::transfer(WorkerRt& w, std::uint32_t t, std::uint32_t noc, std::uint32_t in, std::uint32_t ch,
                               std::uint32_t out, std::uint64_t c) {
  TileRt& tr = tiles[t];
  Message m = tr.inbuf[buf_idx(noc, in, ch)].pop_front();
  if (m.ts < c) tr.ctr[tr.stall_reason[port_idx(noc, in)] ? Ctr::stall_backpressure : Ctr::stall_contention] += c - m.ts;
  if (--tr.port_count[port_idx(noc, in)] == 0) tr.occupied &= ~(1u << port_idx(noc, in));
  --tr.buffered;
  if (in != static_cast<std::uint32_t>(kLocalPort)) credit_back(w, t, noc, in, ch, c);
  w.progress = true;
  if (tr.router_cycle != c + 1) {
    tr.router_cycle = c + 1;
    ++tr.ctr[Ctr::router_active_cycles];
  }
  HopEvent ev;
  if (opts.hop_observer) {
    ev.cycle = c;
    ev.tile = t;
    ev.out = static_cast<Port>(out);
    ev.src = m.src;
    ev.dest = m.dest;
    ev.seq = m.seq;
    ev.ts_before = m.ts;
  }
  if (out == static_cast<std::uint32_t>(kLocalPort)) {
    const std::uint64_t ts = c + m.flits;
    tr.iq[ch].push_back(IqEntry{m.args, ts});
    tr.out_busy[port_idx(noc, out)] = c + m.flits;
    ++tr.ctr[Ctr::msgs_ejected];
    on_ejected(w, t, ch, m.args, c);
    if (opts.hop_observer) {
      ev.next_tile = t;
      ev.ts_after = ts;
      opts.hop_observer(ev);
    }
    return;
  }
  const std::size_t li = std::size_t{t} * P + out;
  const auto u = static_cast<std::uint32_t>(nbr[li]);
  const auto r = static_cast<std::uint32_t>(opposite(static_cast<Port>(out)));
  m.ts = c + lat[li] + m.flits - 1;
  LinkReg& reg = links[reg_idx(u, noc, r, c)];
  reg.stamp = c + 1;
  reg.msg = m;
  --tr.credits[buf_idx(noc, out, ch)];
  tr.out_busy[port_idx(noc, out)] = c + std::uint64_t{m.flits} * busy_mult[li];
  switch (level[li]) {
    case LinkLevel::noc:
      ++tr.ctr[Ctr::hops_noc];
      tr.ctr[Ctr::flit_hops_noc] += m.flits;
      tr.ctr[Ctr::noc_flit_pitches] += std::uint64_t{m.flits} * pitch[li];
      break;
    case LinkLevel::chiplet:
      ++tr.ctr[Ctr::hops_chiplet];
      tr.ctr[Ctr::flit_hops_chiplet] += m.flits;
      break;
    case LinkLevel::package:
      ++tr.ctr[Ctr::hops_package];
      tr.ctr[Ctr::flit_hops_package] += m.flits;
      break;
    case LinkLevel::node:
      ++tr.ctr[Ctr::hops_node];
      tr.ctr[Ctr::flit_hops_node] += m.flits;
      break;
  }
  workers[owner[u]].arrival_inbox[c & 1][w.index].push_back(ArrivalNote{u, static_cast<std::uint32_t>(port_idx(noc, r))});
  w.woke = true;
  if (opts.hop_observer) {
    ev.next_tile = u;
    ev.ts_after = m.ts;
    opts.hop_observer(ev);
  }
}

void Simulator::Impl::route(WorkerRt& w, std::uint32_t t, std::uint64_t c) {
  TileRt& tr = tiles[t];
  tr.retry = kNoRetry;
  tr.iq_wait = 0;
  if (tr.buffered == 0) return;
  std::array<int, kNumPorts> nom_ch{};
  std::array<std::uint32_t, kNumPorts> out_mask{};
  const std::uint32_t all_ports = (1u << P) - 1;
  for (std::uint32_t n = 0; n < N; ++n) {
    std::uint32_t outs = 0;
    for (std::uint32_t pb = (tr.occupied >> (n * P)) & all_ports; pb != 0; pb &= pb - 1) {
      const auto p = static_cast<std::uint32_t>(std::countr_zero(pb));
      const std::uint32_t start = tr.in_cursor[port_idx(n, p)];
      for (std::uint32_t k = 0; k < C; ++k) {
        const std::uint32_t ch = start + k < C ? start + k : start + k - C;
        const Ring<Message>& ring = tr.inbuf[buf_idx(n, p, ch)];
        if (ring.empty()) continue;
        const Message& m = ring.front();
        if (m.ts > c) {
          tr.retry = std::min(tr.retry, m.ts);
          continue;
        }
        const std::uint32_t q = m.out_port;
        const std::uint64_t busy_until = tr.out_busy[port_idx(n, q)];
        if (busy_until > c) {
          tr.retry = std::min(tr.retry, busy_until);
          tr.stall_reason[port_idx(n, p)] = 0;
          continue;
        }
        // Blocked heads below are retried when a credit comes back or the
        // input queue drains; both wake this tile.
        if (q == static_cast<std::uint32_t>(kLocalPort)) {
          if (tr.iq[ch].full()) {
            tr.iq_wait |= 1u << ch;
            tr.stall_reason[port_idx(n, p)] = 1;
            continue;
          }
        } else {
          if (tr.credits[buf_idx(n, q, ch)] < need[p * kNumPorts + q]) {
            tr.stall_reason[port_idx(n, p)] = 1;
            continue;
          }
        }
        nom_ch[p] = static_cast<int>(ch);
        if (!(outs >> q & 1u)) out_mask[q] = 0;
        out_mask[q] |= 1u << p;
        outs |= 1u << q;
        break;
      }
    }
    if (outs == 0) continue;
    for (; outs != 0; outs &= outs - 1) {
      const auto q = static_cast<std::uint32_t>(std::countr_zero(outs));
      const int g = arbitrate(out_mask[q], tr.out_rr[port_idx(n, q)], cfg.machine.arbitration, static_cast<int>(P));
      for (std::uint32_t pb = out_mask[q]; pb != 0; pb &= pb - 1)
        tr.stall_reason[port_idx(n, static_cast<std::uint32_t>(std::countr_zero(pb)))] = 0;
      const auto ch = static_cast<std::uint32_t>(nom_ch[g]);
      tr.in_cursor[port_idx(n, g)] = ch + 1 < C ? ch + 1 : 0;
      transfer(w, t, n, static_cast<std::uint32_t>(g), ch, q, c);
    }
    // Losers and the messages behind the winners try again next cycle.
    tr.retry = c + 1;
  }
}

void Simulator::Impl::inject(WorkerRt& w, std::uint32_t t, std::uint64_t c) {
  TileRt& tr = tiles[t];
  if (tr.cq_count == 0) return;
  const std::uint32_t local = static_cast<std::uint32_t>(kLocalPort);
  for (std::uint32_t n = 0; n < N; ++n) {
    for (std::uint32_t k = 0; k < C; ++k) {
      const std::uint32_t ch = tr.inj_cursor[n] + k < C ? tr.inj_cursor[n] + k : tr.inj_cursor[n] + k - C;
      if (ch % N != n) continue;
      Ring<Message>& cq = tr.cq[ch];
      if (cq.empty() || cq.front().ts > c) continue;
      Ring<Message>& buf = tr.inbuf[buf_idx(n, local, ch)];
      if (buf.full()) continue;
      buf.push_back(cq.pop_front());
      buf[buf.size() - 1].out_port = static_cast<std::uint8_t>(topo.route(t, buf[buf.size() - 1].dest));
      --tr.cq_count;
      if (tr.port_count[port_idx(n, local)]++ == 0) tr.occupied |= 1u << port_idx(n, local);
      ++tr.buffered;
      ++tr.ctr[Ctr::msgs_injected];
      ++tr.ctr.injected[ch];
      tr.ctr[Ctr::queue_read_bits] += std::uint64_t{cfg.machine.queue_entry_bytes} * 8;
      tr.inj_cursor[n] = ch + 1 < C ? ch + 1 : 0;
      tr.retry = c + 1;
      w.progress = true;
      break;
    }
  }
}

bool Simulator::Impl::try_place(WorkerRt& w, std::uint32_t t, const Emission& e) {
  TileRt& tr = tiles[t];
  const std::uint64_t entry_bits = std::uint64_t{cfg.machine.queue_entry_bytes} * 8;
  if (e.dest == t) {
    if (tr.iq[e.task].full()) return false;
    tr.iq[e.task].push_back(IqEntry{e.args, e.ts});
    ++tr.ctr.local[e.task];
    on_ejected(w, t, e.task, e.args, e.ts);
    return true;
  }
  if (tr.cq[e.task].full()) return false;
  const TaskDescriptor* td = krt[kernel].task[e.task];
  Message m;
  m.args = e.args;
  m.ts = e.ts;
  m.dest = e.dest;
  m.src = t;
  m.seq = tr.seq++;
  m.channel = static_cast<std::uint8_t>(e.task);
  m.flits = krt[kernel].flits[e.task];
  if (td->combine) {
    m.combinable = true;
    m.key = td->combine_key ? td->combine_key(e.args) : e.args[0];
  }
  tr.cq[e.task].push_back(m);
  ++tr.cq_count;
  tr.ctr[Ctr::queue_write_bits] += entry_bits;
  return true;
}

int Simulator::Impl::pick_task(WorkerRt& w, std::uint32_t t, std::uint64_t c) {
  TileRt& tr = tiles[t];
  const KernelRt& kr = krt[kernel];
  if (!tr.init_armed && tr.iq_count == 0) return -1;
  std::fill_n(w.views.begin(), C, QueueView{});
  bool any = false;
  w.views[0].ready = tr.init_armed && room(kr, tr, 0);
  w.views[0].size = tr.init_armed ? 1 : 0;
  any |= w.views[0].ready;
  for (std::uint32_t id = 1; id < C; ++id) {
    auto& q = tr.iq[id];
    QueueView& v = w.views[id];
    v.size = static_cast<std::uint32_t>(q.size());
    v.capacity = static_cast<std::uint32_t>(q.capacity());
    v.ready = kr.task[id] && !q.empty() && q.front().ts <= c && room(kr, tr, id);
    any |= v.ready;
  }
  if (!any) return -1;
  return schedule_next(std::span<const QueueView>(w.views.data(), C), cfg.machine.tsu_policy, cfg.machine.tsu_priority, cfg.machine.tsu_occupancy_threshold,
                       tr.tsu_cursor);
}

void Simulator::Impl::run_task(WorkerRt& w, std::uint32_t t, std::uint32_t pu, std::uint32_t id, std::uint64_t c) {
  TileRt& tr = tiles[t];
  PuRt& p = tr.pu[pu];
  const KernelRt& kr = krt[kernel];
  ExecFrame f;
  f.sim = this;
  f.tile = &tr;
  f.tile_id = t;
  f.pu = pu;
  f.task = id;
  f.cycle = c;
  f.t0_ps = std::max(p.free_ps, c * noc_ps);
  f.emits = &w.emits;
  f.allowed = &kr.allowed[id];
  w.emits.clear();
  TaskContext ctx(&f);
  try {
    if (id == 0) {
      tr.init_armed = false;
      if (!kr.spec->init(ctx)) tr.init_armed = true;
    } else {
      IqEntry& e = tr.iq[id].front();
      const Args args = e.args;
      tr.ctr[Ctr::queue_read_bits] += std::uint64_t{cfg.machine.queue_entry_bytes} * 8;
      kr.task[id]->body(ctx, args);
      if (f.requeued) {
        e.args = f.requeue_args;
        e.ts = std::max(c + 1, ceil_div(f.t0_ps + f.cycles * pu_ps, noc_ps));
      } else {
        tr.iq[id].pop_front();
        --tr.iq_count;
      }
    }
  } catch (const std::exception& ex) {
    const TileCoord xy = tile_coord(t, grid);
    throw SimulationError("tile (" + std::to_string(xy.x) + "," + std::to_string(xy.y) + ") task " +
                          std::to_string(id) + " at cycle " + std::to_string(c) + ": " + ex.what());
  }
  p.free_ps = f.t0_ps + f.cycles * pu_ps;
  p.free_noc = ceil_div(p.free_ps, noc_ps);
  p.busy_cycles += f.cycles;
  tr.ctr[Ctr::pu_busy_cycles] += f.cycles;
  ++tr.ctr[Ctr::tasks_executed];
  ++tr.ctr.executed[id];
  if (f.rearm) tr.init_armed = true;
  tr.dirty = true;
  w.progress = true;
  for (const auto& e : w.emits) {
    if (e.dest >= T) {
      throw SimulationError("task " + std::to_string(id) + " on tile " + std::to_string(t) +
                            " sent to nonexistent tile " + std::to_string(e.dest));
    }
    if (p.blocked() || !try_place(w, t, e)) p.outbox.push_back(e);
  }
}

void Simulator::Impl::execute(WorkerRt& w, std::uint32_t t, std::uint64_t c) {
  TileRt& tr = tiles[t];
  const std::uint64_t now = c * noc_ps;
  for (std::uint32_t pu = 0; pu < tr.pu.size(); ++pu) {
    PuRt& p = tr.pu[pu];
    if (p.blocked()) {
      while (p.outbox_head < p.outbox.size() && try_place(w, t, p.outbox[p.outbox_head])) {
        ++p.outbox_head;
        w.progress = true;
      }
      if (p.blocked()) {
        ++tr.ctr[Ctr::pu_blocked_cycles];
        continue;
      }
      p.outbox.clear();
      p.outbox_head = 0;
      p.free_ps = std::max(p.free_ps, now);
      p.free_noc = std::max(p.free_noc, c);
    }
    while (p.free_ps <= now && !p.blocked()) {
      const int id = pick_task(w, t, c);
      if (id < 0) break;
      run_task(w, t, pu, static_cast<std::uint32_t>(id), c);
    }
  }
}

void Simulator::Impl::followup(WorkerRt& w, std::uint32_t t, std::uint64_t c) {
  TileRt& tr = tiles[t];
  constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();
  bool blocked = false;
  std::uint64_t min_free = kNever, max_free = 0;
  for (const auto& p : tr.pu) {
    blocked |= p.blocked();
    const std::uint64_t f = p.free_noc;
    min_free = std::min(min_free, f);
    max_free = std::max(max_free, f);
  }
  const KernelRt& kr = krt[kernel];
  if (kr.spec->epoch == EpochMode::local && tr.dirty && !blocked && !tr.init_armed && tr.iq_count == 0 &&
      max_free <= c) {
    tr.dirty = false;
    if (kr.spec->on_epoch(t)) {
      tr.init_armed = true;
      w.progress = true;
    }
  }
  std::uint64_t next = kNever;
  if (blocked) {
    next = c + 1;
  } else {
    if (tr.buffered > 0) {
      next = std::min(next, tr.retry);
      for (std::uint32_t ch = 0; ch < C; ++ch)
        if (((tr.iq_wait >> ch) & 1u) && !tr.iq[ch].full()) next = c + 1;
    }
    // A full injection buffer or a task without queue room only unblocks
    // through this tile's own router or PU, which wake it themselves.
    if (tr.cq_count > 0) {
      // Emissions carry the PU time at which they were produced.
      for (std::uint32_t ch = 1; ch < C; ++ch)
        if (!tr.cq[ch].empty() && !tr.inbuf[buf_idx(ch % N, static_cast<std::uint32_t>(kLocalPort), ch)].full())
          next = std::min(next, std::max(c + 1, tr.cq[ch].front().ts));
    }
    if (tr.init_armed || tr.iq_count > 0) {
      const std::uint64_t e = std::max(c + 1, min_free);
      if (tr.init_armed && room(kr, tr, 0)) next = std::min(next, e);
      for (std::uint32_t id = 1; id < C; ++id)
        if (!tr.iq[id].empty() && room(kr, tr, id)) next = std::min(next, std::max(e, tr.iq[id].front().ts));
    }
    if (max_free > c) next = std::min(next, max_free);
  }
  if (next == c + 1) {
    wake(w, t, c);
  } else if (next != kNever) {
    w.timers.emplace(next, t);
  }
}

void Simulator::Impl::process_tile(WorkerRt& w, std::uint32_t t, std::uint64_t c) {
  absorb(w, t, c);
  route(w, t, c);
  inject(w, t, c);
  execute(w, t, c);
  followup(w, t, c);
}

void Simulator::Impl::worker_cycle(WorkerRt& w, std::uint64_t c) {
  w.woke = false;
  w.progress = false;
  auto add = [&](std::uint32_t t) { w.active[t >> 6] |= std::uint64_t{1} << (t & 63); };
  if (c > 0) {
    for (auto& list : w.inbox[(c - 1) & 1]) {
      for (auto t : list) add(t);
      list.clear();
    }
    for (auto& list : w.arrival_inbox[(c - 1) & 1]) {
      for (const auto& note : list) {
        tiles[note.tile].arrivals |= 1u << note.bit;
        add(note.tile);
      }
      list.clear();
    }
    // Returned credits only matter to a router holding messages.
    for (auto& list : w.credit_inbox[(c - 1) & 1]) {
      for (const auto& note : list) {
        TileRt& tr = tiles[note.tile];
        ++tr.credits[note.slot];
        if (tr.buffered > 0) add(note.tile);
      }
      list.clear();
    }
  }
  while (!w.timers.empty() && w.timers.top().first <= c) {
    add(w.timers.top().second);
    w.timers.pop();
  }
  // Ascending tile order keeps results independent of the worker count.
  for (std::uint32_t i = w.active_lo; i < w.active_hi; ++i) {
    for (std::uint64_t bits = std::exchange(w.active[i], 0); bits != 0; bits &= bits - 1)
      process_tile(w, i * 64 + static_cast<std::uint32_t>(std::countr_zero(bits)), c);
  }
}

TileCounters Simulator::Impl::adjusted(std::uint32_t t, std::uint64_t boundary) const {
  TileCounters tc = tiles[t].ctr;
  const std::uint64_t b_ps = boundary * noc_ps;
  std::uint64_t ahead = 0;
  for (const auto& p : tiles[t].pu)
    if (p.free_ps > b_ps) ahead += (p.free_ps - b_ps) / pu_ps;
  tc[Ctr::pu_busy_cycles] -= std::min(ahead, tc[Ctr::pu_busy_cycles]);
  return tc;
}

void Simulator::Impl::snapshot_frame(std::uint64_t boundary) {
  Frame f;
  f.begin_cycle = result.frames.empty() ? 0 : result.frames.back().end_cycle;
  f.end_cycle = boundary;
  if (opts.verbosity >= 2) f.tiles.resize(T);
  if (opts.verbosity >= 3) f.queues.resize(T);
  for (std::uint32_t t = 0; t < T; ++t) {
    TileCounters now = adjusted(t, boundary);
    TileCounters d;
    for (std::size_t i = 0; i < kNumCtr; ++i) d.v[i] = now.v[i] - snap[t].v[i];
    for (std::size_t i = 0; i < kMaxChannels; ++i) {
      d.injected[i] = now.injected[i] - snap[t].injected[i];
      d.delivered[i] = now.delivered[i] - snap[t].delivered[i];
      d.merged[i] = now.merged[i] - snap[t].merged[i];
      d.local[i] = now.local[i] - snap[t].local[i];
    }
    for (std::size_t i = 0; i < d.executed.size(); ++i) d.executed[i] = now.executed[i] - snap[t].executed[i];
    f.total.add(d);
    if (opts.verbosity >= 2) f.tiles[t] = d;
    if (opts.verbosity >= 3) {
      auto& q = f.queues[t];
      for (std::uint32_t id = 1; id < C; ++id) q.push_back(static_cast<std::uint16_t>(tiles[t].iq[id].size()));
      for (std::uint32_t id = 1; id < C; ++id) q.push_back(static_cast<std::uint16_t>(tiles[t].cq[id].size()));
    }
    snap[t] = now;
  }
  result.frames.push_back(std::move(f));
}

void Simulator::Impl::start_kernel(std::uint32_t k, std::uint64_t at) {
  kernel = k;
  for (std::uint32_t t = 0; t < T; ++t) {
    auto& tr = tiles[t];
    tr.init_armed = true;
    tr.dirty = false;
    for (auto& p : tr.pu) {
      p.free_ps = std::max(p.free_ps, at * noc_ps);
      p.free_noc = std::max(p.free_noc, at);
    }
    workers[owner[t]].timers.emplace(at, t);
  }
}

void Simulator::Impl::complete_cycle() {
  const std::uint64_t c = cur;
  bool woke = false, progress = false, timers = false;
  std::uint64_t next_timer = std::numeric_limits<std::uint64_t>::max();
  for (auto& w : workers) {
    if (w.error && !error) error = w.error;
    woke |= w.woke;
    progress |= w.progress;
    if (!w.timers.empty()) {
      timers = true;
      next_timer = std::min(next_timer, w.timers.top().first);
    }
  }
  if (error) {
    done = true;
    return;
  }
  if (progress) last_progress = c;
  std::uint64_t next;
  if (woke) {
    if (!timers && c - last_progress > watchdog) {
      error = std::make_exception_ptr(SimulationError(
          "deadlock: no message or task progressed for " + std::to_string(c - last_progress) +
          " cycles (last progress at cycle " + std::to_string(last_progress) + ")"));
      done = true;
      return;
    }
    next = c + 1;
  } else if (timers) {
    next = std::max(c + 1, next_timer);
  } else {
    // Quiescent: every queue, buffer and PU is idle at cycle c.
    const KernelSpec& ks = kernels[kernel];
    bool rearmed = false;
    if (ks.epoch == EpochMode::global) {
      for (std::uint32_t t = 0; t < T; ++t)
        if (ks.on_epoch(t)) {
          tiles[t].init_armed = true;
          rearmed = true;
        }
    }
    if (rearmed) {
      ++result.epochs;
      next = c + barrier_cycles;
      for (std::uint32_t t = 0; t < T; ++t) {
        for (auto& p : tiles[t].pu) {
          p.free_ps = std::max(p.free_ps, next * noc_ps);
          p.free_noc = std::max(p.free_noc, next);
        }
        if (tiles[t].init_armed) workers[owner[t]].timers.emplace(next, t);
      }
      last_progress = next;
    } else {
      const std::uint64_t end = c + term_cycles;
      result.kernel_end.push_back(end);
      if (kernel + 1 < kernels.size()) {
        start_kernel(kernel + 1, end);
        next = end;
        last_progress = end;
      } else {
        result.noc_cycles = end;
        while (opts.verbosity >= 1 && next_frame <= end) {
          snapshot_frame(next_frame);
          next_frame += frame_cycles;
        }
        if (opts.verbosity >= 1 && (result.frames.empty() || result.frames.back().end_cycle < end))
          snapshot_frame(end);
        done = true;
        return;
      }
    }
  }
  while (opts.verbosity >= 1 && next_frame <= next) {
    snapshot_frame(next_frame);
    next_frame += frame_cycles;
  }
  cur = next;
}

SimResult Simulator::Impl::run() {
  const auto wall0 = std::chrono::steady_clock::now();
  snap.assign(T, TileCounters{});
  next_frame = frame_cycles;
  start_kernel(0, 0);
  cur = 0;
  const auto W = static_cast<std::uint32_t>(workers.size());
  if (W == 1 || opts.hop_observer) {
    while (!done) {
      try {
        for (auto& w : workers) worker_cycle(w, cur);
      } catch (...) {
        error = std::current_exception();
        break;
      }
      complete_cycle();
    }
  } else {
    auto on_complete = [this]() noexcept {
      try {
        complete_cycle();
      } catch (...) {
        error = std::current_exception();
        done = true;
      }
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(W), on_complete);
    auto body = [&](std::uint32_t wi) {
      WorkerRt& w = workers[wi];
      while (true) {
        if (!w.error) {
          try {
            worker_cycle(w, cur);
          } catch (...) {
            w.error = std::current_exception();
          }
        }
        sync.arrive_and_wait();
        if (done) break;
      }
    };
    std::vector<std::thread> threads;
    for (std::uint32_t wi = 1; wi < W; ++wi) threads.emplace_back(body, wi);
    body(0);
    for (auto& th : threads) th.join();
  }
  if (error) std::rethrow_exception(error);

  result.workers = W;
  result.frame_cycles = frame_cycles;
  result.tiles.resize(T);
  std::uint64_t pu_max = 0;
  for (std::uint32_t t = 0; t < T; ++t) {
    result.tiles[t] = tiles[t].ctr;
    for (const auto& p : tiles[t].pu) pu_max = std::max(pu_max, p.busy_cycles);
  }
  result.pu_cycles = pu_max;
  CounterSet& cs = result.counters;
  cs.config_checksum = checksum(cfg);
  cs.grid_width = grid.width;
  cs.grid_height = grid.height;
  cs.noc_cycles = result.noc_cycles;
  cs.pu_cycles = result.pu_cycles;
  for (const auto& tc : result.tiles) add_tile_counters(cs, tc, C);
  std::uint64_t dram_total = 0;
  for (std::size_t i = 0; i < dram.size(); ++i) {
    cs.values["mem.dram_reqs." + std::to_string(i)] = dram[i].requests();
    dram_total += dram[i].requests();
  }
  cs.values["mem.dram_reqs"] = dram_total;
  cs.values["runtime.epochs"] = result.epochs;
  for (std::size_t k = 0; k < result.kernel_end.size(); ++k)
    cs.values["runtime.kernel_end." + std::to_string(k)] = result.kernel_end[k];
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return result;
}

Simulator::Simulator(const Config& cfg, Application& app, SimOptions opts)
    : impl_(std::make_unique<Impl>(cfg, app, std::move(opts))) {}

Simulator::~Simulator() = default;

SimResult Simulator::run() { return impl_->run(); }

// TaskContext ---------------------------------------------------------------

std::uint32_t TaskContext::tile() const { return f_->tile_id; }
TileCoord TaskContext::coord() const { return tile_coord(f_->tile_id, f_->sim->grid); }
std::uint32_t TaskContext::pu() const { return f_->pu; }
std::uint32_t TaskContext::kernel() const { return f_->sim->kernel; }
std::uint64_t TaskContext::cycle() const { return f_->cycle; }

void TaskContext::compute(std::uint32_t int_ops, std::uint32_t fp_ops, std::uint32_t branches) {
  f_->cycles += std::uint64_t{int_ops} + fp_ops + branches;
  auto& ctr = f_->tile->ctr;
  ctr[Ctr::instr_int] += int_ops;
  ctr[Ctr::instr_fp] += fp_ops;
  ctr[Ctr::instr_branch] += branches;
}

void TaskContext::load(std::uint64_t addr, std::uint32_t bits) {
  auto* s = f_->sim;
  auto& tr = *f_->tile;
  ++tr.ctr[Ctr::instr_mem];
  f_->cycles += tr.mem.access(addr, false, bits, f_->t0_ps + f_->cycles * s->pu_ps, tr.dram, tr.ctr);
}

void TaskContext::store(std::uint64_t addr, std::uint32_t bits) {
  auto* s = f_->sim;
  auto& tr = *f_->tile;
  ++tr.ctr[Ctr::instr_mem];
  f_->cycles += tr.mem.access(addr, true, bits, f_->t0_ps + f_->cycles * s->pu_ps, tr.dram, tr.ctr);
}

void TaskContext::send(std::uint32_t task_id, std::uint32_t dest_tile, const Args& args) {
  auto* s = f_->sim;
  if (task_id >= s->C || !(*f_->allowed)[task_id])
    throw SimulationError("task " + std::to_string(f_->task) + " sent to task " + std::to_string(task_id) +
                          ", which is not one of its declared targets");
  // Writing the channel queue entry is an SPM store.
  ++f_->tile->ctr[Ctr::instr_mem];
  f_->cycles += s->timing.sram_cycles;
  Emission e;
  e.args = args;
  e.dest = dest_tile;
  e.task = task_id;
  e.ts = ceil_div(f_->t0_ps + f_->cycles * s->pu_ps, s->noc_ps);
  f_->emits->push_back(e);
}

void TaskContext::requeue(const Args& args) {
  if (f_->task == 0) throw SimulationError("init tasks cannot requeue; return false to yield instead");
  f_->requeued = true;
  f_->requeue_args = args;
}

void TaskContext::rearm_init() { f_->rearm = true; }

void TaskContext::add_flops(std::uint64_t n) { f_->tile->ctr[Ctr::app_flops] += n; }

}  // namespace tilesim
