#pragma once

#include <cstdint>
#include <queue>
#include <vector>

#include "tilesim/config.hpp"
#include "tilesim/task.hpp"

namespace tilesim::test {

inline Config grid(std::uint32_t w, std::uint32_t h, Topology topo = Topology::mesh2d) {
  Config c;
  c.machine.tiles_x = w;
  c.machine.tiles_y = h;
  c.machine.noc_topology = topo;
  return c;
}

inline Config cached(Config c) {
  c.machine.spm_mode = SpmMode::cache_direct;
  c.machine.dram = DramConfig{};
  return c;
}

// All-pairs hop counts of the plain 4-neighbor grid graph, by BFS from every tile.
inline std::vector<std::vector<int>> grid_distances(std::uint32_t w, std::uint32_t h, bool torus) {
  const std::uint32_t n = w * h;
  auto nbrs = [&](std::uint32_t t) {
    std::vector<std::uint32_t> out;
    const std::int64_t x = t % w, y = t / w;
    auto add = [&](std::int64_t nx, std::int64_t ny) {
      if (torus) {
        nx = (nx + w) % w;
        ny = (ny + h) % h;
      } else if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
        return;
      }
      const auto u = static_cast<std::uint32_t>(ny * w + nx);
      if (u != t) out.push_back(u);
    };
    add(x + 1, y);
    add(x - 1, y);
    add(x, y + 1);
    add(x, y - 1);
    return out;
  };
  std::vector<std::vector<int>> d(n, std::vector<int>(n, -1));
  for (std::uint32_t s = 0; s < n; ++s) {
    std::queue<std::uint32_t> q;
    d[s][s] = 0;
    q.push(s);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto v : nbrs(u))
        if (d[s][v] < 0) {
          d[s][v] = d[s][u] + 1;
          q.push(v);
        }
    }
  }
  return d;
}

// A kernel whose init does nothing.
class EmptyApp : public Application {
 public:
  std::string name() const override { return "empty"; }
  std::uint32_t max_task_id() const override { return 1; }
  void setup(const SimSetup&) override {}
  std::vector<KernelSpec> kernels() override {
    KernelSpec k;
    k.name = "empty";
    k.init = [](TaskContext&) { return true; };
    return {k};
  }
  CheckResult check() const override { return {}; }
  RunWork work() const override { return {}; }
};

// Every tile sends `per_tile` messages to pseudo-random tiles (itself included);
// receivers count them. Optionally combinable so reduction trees merge.
class ScatterApp : public Application {
 public:
  ScatterApp(std::uint32_t per_tile, bool combinable) : per_tile_(per_tile), combinable_(combinable) {}

  std::string name() const override { return "scatter"; }
  std::uint32_t max_task_id() const override { return 1; }
  void setup(const SimSetup& s) override {
    tiles_ = s.tiles;
    sent_.assign(tiles_, 0);
    got_.assign(tiles_, 0);
  }
  std::vector<KernelSpec> kernels() override {
    KernelSpec k;
    k.name = "scatter";
    k.init_targets = {1};
    k.init_max_emit = 4;
    k.init = [this](TaskContext& ctx) {
      const std::uint32_t t = ctx.tile();
      for (int i = 0; i < 4 && sent_[t] < per_tile_; ++i, ++sent_[t]) {
        std::uint64_t z = (std::uint64_t{t} << 32 | sent_[t]) * 0x9e3779b97f4a7c15ull;
        z ^= z >> 29;
        const auto dest = static_cast<std::uint32_t>(z % tiles_);
        ctx.compute(2);
        ctx.send(1, dest, Args{dest, 1, 0, 0});
      }
      return sent_[t] == per_tile_;
    };
    TaskDescriptor d;
    d.id = 1;
    d.name = "count";
    d.body = [this](TaskContext& ctx, const Args& a) {
      got_[ctx.tile()] += a[1];
      ctx.compute(1);
    };
    if (combinable_) d.combine = [](const Args& x, const Args& y) { return Args{x[0], x[1] + y[1], 0, 0}; };
    k.tasks.push_back(std::move(d));
    return {k};
  }
  CheckResult check() const override {
    std::uint64_t total = 0;
    for (auto g : got_) total += g;
    if (total != std::uint64_t{per_tile_} * tiles_) return {false, "lost messages"};
    return {};
  }
  RunWork work() const override { return {}; }
  std::uint64_t received(std::uint32_t t) const { return got_[t]; }

 private:
  std::uint32_t per_tile_;
  bool combinable_;
  std::uint32_t tiles_ = 0;
  std::vector<std::uint32_t> sent_;
  std::vector<std::uint64_t> got_;
};

}  // namespace tilesim::test
