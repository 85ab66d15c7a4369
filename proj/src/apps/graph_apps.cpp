#include <algorithm>

#include "common.hpp"
#include "tilesim/apps/oracle.hpp"

namespace tilesim::apps {

namespace {

constexpr std::uint32_t kVisit = 1;
constexpr std::uint32_t kAccum = 1;

enum class LabelKind { bfs, sssp, wcc };

// Label-correcting propagation shared by BFS (hop count), SSSP (path weight)
// and WCC (minimum vertex id over the symmetrized graph).
class LabelApp : public Application {
 public:
  LabelApp(LabelKind kind, std::shared_ptr<const CsrGraph> g, const AppOptions& o)
      : kind_(kind), input_(std::move(g)), opts_(o) {
    if (kind_ == LabelKind::wcc) {
      sym_ = std::make_shared<CsrGraph>(symmetrize(*input_));
      graph_ = sym_.get();
    } else {
      graph_ = input_.get();
      if (opts_.root >= graph_->num_vertices())
        throw ConfigError("root vertex " + std::to_string(opts_.root) + " out of range, graph has " +
                          std::to_string(graph_->num_vertices()) + " vertices");
    }
  }

  std::string name() const override {
    switch (kind_) {
      case LabelKind::bfs: return "bfs";
      case LabelKind::sssp: return "sssp";
      case LabelKind::wcc: return "wcc";
    }
    return "";
  }
  std::uint32_t max_task_id() const override { return kVisit; }

  void setup(const SimSetup& s) override {
    tiles_ = s.tiles;
    layout_ = s.layout;
    pg_.place(*graph_, s, "graph", kind_ == LabelKind::sssp);
    label_arr_ = s.layout->add("label", pg_.vertices, 4);
    work_arr_ = s.layout->add("worklist", pg_.vertices, 4);
    const auto n = graph_->num_vertices();
    label_.assign(n, kUnreached);
    queued_.assign(n, 0);
    work_.assign(tiles_, {});
    next_.assign(tiles_, {});
    pos_.assign(tiles_, 0);
    cursor_.assign(tiles_, {});
    snapshot_.assign(tiles_, 0);
    if (kind_ == LabelKind::wcc) {
      for (std::uint32_t v = 0; v < n; ++v) {
        label_[v] = v;
        work_[pg_.vertices.owner(v)].push_back(v);
      }
    } else {
      label_[opts_.root] = 0;
      work_[pg_.vertices.owner(opts_.root)].push_back(opts_.root);
    }
  }

  std::vector<KernelSpec> kernels() override {
    KernelSpec k;
    k.name = name();
    k.epoch = opts_.epoch;
    k.init = [this](TaskContext& ctx) { return explore(ctx); };
    k.init_targets = {kVisit};
    k.init_max_emit = opts_.chunk;
    k.on_epoch = [this](std::uint32_t t) {
      work_[t].swap(next_[t]);
      next_[t].clear();
      for (auto v : work_[t]) queued_[v] = 0;
      pos_[t] = 0;
      return !work_[t].empty();
    };

    TaskDescriptor visit;
    visit.id = kVisit;
    visit.name = "visit";
    visit.payload_bits = 64;  // vertex id and candidate label
    visit.body = [this](TaskContext& ctx, const Args& a) { relax(ctx, a); };
    visit.combine = [](const Args& x, const Args& y) { return x[1] <= y[1] ? x : y; };
    visit.prefetch_addresses = [this](const Args& a, std::vector<std::uint64_t>& out) {
      out.push_back(layout_->address(label_arr_, a[0]));
    };
    k.tasks.push_back(std::move(visit));
    return {k};
  }

  CheckResult check() const override {
    std::vector<std::uint64_t> want;
    switch (kind_) {
      case LabelKind::bfs: want = oracle_bfs(*graph_, opts_.root); break;
      case LabelKind::sssp: want = oracle_sssp(*graph_, opts_.root); break;
      case LabelKind::wcc: want = oracle_wcc(*graph_); break;
    }
    return compare_out(label_, want, name() + " label");
  }

  RunWork work() const override {
    if (kind_ == LabelKind::wcc) return {double(graph_->num_edges()), 0, "edges of the symmetrized graph"};
    return {double(reachable_edges(*graph_, opts_.root)), 0, "edges reachable from the root"};
  }

 private:
  // Sends candidate labels along the edges of queued vertices, at most
  // `chunk` messages per call.
  bool explore(TaskContext& ctx) {
    const std::uint32_t t = ctx.tile();
    auto& list = work_[t];
    auto& c = cursor_[t];
    std::uint32_t budget = opts_.chunk;
    while (budget > 0) {
      if (!c.in_vertex) {
        if (pos_[t] == list.size()) {
          list.clear();
          pos_[t] = 0;
          return true;
        }
        const std::uint32_t v = list[pos_[t]++];
        ctx.load(layout_->address(work_arr_, v));
        ctx.load(layout_->address(pg_.ranges, v), 128);
        ctx.load(layout_->address(label_arr_, v));
        ctx.compute(3, 0, 1);
        // Dequeued before scanning so an update during the scan queues it again.
        if (opts_.epoch == EpochMode::none) queued_[v] = 0;
        c.vertex = v;
        c.edge = graph_->row_ptr[v];
        c.in_vertex = true;
        snapshot_[t] = label_[v];
      }
      const auto v = static_cast<std::uint32_t>(c.vertex);
      const auto end = graph_->row_ptr[v + 1];
      while (c.edge < end && budget > 0) {
        const auto e = c.edge++;
        const std::uint32_t u = graph_->col_idx[e];
        ctx.load(layout_->address(pg_.cols, e));
        std::uint64_t cand = snapshot_[t];
        if (kind_ == LabelKind::bfs) {
          cand += 1;
        } else if (kind_ == LabelKind::sssp) {
          ctx.load(layout_->address(pg_.weights, e));
          cand += static_cast<std::uint64_t>(graph_->values[e]);
        }
        ctx.compute(3, 0, 1);
        ctx.send(kVisit, pg_.vertices.owner(u), {u, cand, 0, 0});
        --budget;
      }
      if (c.edge == end) c.in_vertex = false;
    }
    return false;
  }

  void relax(TaskContext& ctx, const Args& a) {
    const auto u = static_cast<std::uint32_t>(a[0]);
    ctx.load(layout_->address(label_arr_, u));
    ctx.compute(1, 0, 1);
    if (a[1] >= label_[u]) return;
    label_[u] = a[1];
    ctx.store(layout_->address(label_arr_, u));
    const std::uint32_t t = ctx.tile();
    if (queued_[u]) return;
    queued_[u] = 1;
    ctx.store(layout_->address(work_arr_, u));
    ctx.compute(2);
    if (opts_.epoch == EpochMode::none) {
      work_[t].push_back(u);
      ctx.rearm_init();
    } else {
      next_[t].push_back(u);
    }
  }

  LabelKind kind_;
  std::shared_ptr<const CsrGraph> input_;
  std::shared_ptr<const CsrGraph> sym_;
  const CsrGraph* graph_ = nullptr;
  AppOptions opts_;
  std::uint32_t tiles_ = 0;
  const DataLayout* layout_ = nullptr;
  PlacedGraph pg_;
  std::uint32_t label_arr_ = 0, work_arr_ = 0;
  std::vector<std::uint64_t> label_;
  std::vector<std::uint8_t> queued_;
  std::vector<std::vector<std::uint32_t>> work_, next_;
  std::vector<std::size_t> pos_;
  std::vector<EdgeCursor> cursor_;
  std::vector<std::uint64_t> snapshot_;  // label of the vertex being scanned, per tile
};

// Power iteration with one global barrier per iteration.
class PageRankApp : public Application {
 public:
  PageRankApp(std::shared_ptr<const CsrGraph> g, const AppOptions& o) : graph_(std::move(g)), opts_(o) {
    if (opts_.iterations == 0) throw ConfigError("pagerank needs at least one iteration");
  }

  std::string name() const override { return "pagerank"; }
  std::uint32_t max_task_id() const override { return kAccum; }

  void setup(const SimSetup& s) override {
    tiles_ = s.tiles;
    layout_ = s.layout;
    pg_.place(*graph_, s, "graph", false);
    rank_arr_ = s.layout->add("rank", pg_.vertices, 4);
    acc_arr_ = s.layout->add("accum", pg_.vertices, 4);
    const auto n = graph_->num_vertices();
    rank_.assign(n, 1.0 / n);
    acc_.assign(n, 0.0);
    iter_.assign(tiles_, 0);
    updated_.assign(tiles_, 0);
    cursor_.assign(tiles_, {});
    share_.assign(tiles_, 0.0);
  }

  std::vector<KernelSpec> kernels() override {
    KernelSpec k;
    k.name = "pagerank";
    k.epoch = EpochMode::global;
    k.init = [this](TaskContext& ctx) { return step(ctx); };
    k.init_targets = {kAccum};
    k.init_max_emit = opts_.chunk;
    k.on_epoch = [this](std::uint32_t t) {
      ++iter_[t];
      updated_[t] = 0;
      cursor_[t] = {};
      cursor_[t].vertex = pg_.vertices.begin(t);
      return iter_[t] <= opts_.iterations;
    };

    TaskDescriptor acc;
    acc.id = kAccum;
    acc.name = "accumulate";
    acc.payload_bits = 64;
    acc.body = [this](TaskContext& ctx, const Args& a) {
      const auto v = static_cast<std::uint32_t>(a[0]);
      ctx.load(layout_->address(acc_arr_, v));
      ctx.compute(1, 1);
      acc_[v] += dval(a[1]);
      ctx.store(layout_->address(acc_arr_, v));
      ctx.add_flops(1);
    };
    acc.combine = [](const Args& x, const Args& y) { return Args{x[0], dbits(dval(x[1]) + dval(y[1])), 0, 0}; };
    acc.prefetch_addresses = [this](const Args& a, std::vector<std::uint64_t>& out) {
      out.push_back(layout_->address(acc_arr_, a[0]));
    };
    k.tasks.push_back(std::move(acc));
    return {k};
  }

  CheckResult check() const override {
    return compare_out(rank_, oracle_pagerank(*graph_, opts_.iterations, opts_.damping), "pagerank rank");
  }

  RunWork work() const override {
    const double e = double(graph_->num_edges()), v = graph_->num_vertices();
    return {e * opts_.iterations, (e + 3 * v) * opts_.iterations, "edges x iterations"};
  }

 private:
  bool step(TaskContext& ctx) {
    const std::uint32_t t = ctx.tile();
    const auto n = graph_->num_vertices();
    const auto begin = pg_.vertices.begin(t), end = pg_.vertices.end(t);
    if (!updated_[t]) {
      // Fold the previous iteration's contributions into the ranks.
      if (iter_[t] > 0) {
        for (auto v = begin; v < end; ++v) {
          ctx.load(layout_->address(acc_arr_, v));
          rank_[v] = (1.0 - opts_.damping) / n + opts_.damping * acc_[v];
          acc_[v] = 0.0;
          ctx.compute(1, 2, 1);
          ctx.store(layout_->address(rank_arr_, v));
          ctx.store(layout_->address(acc_arr_, v));
          ctx.add_flops(3);
        }
      }
      updated_[t] = 1;
      cursor_[t] = {};
      cursor_[t].vertex = begin;
    }
    if (iter_[t] >= opts_.iterations) return true;
    auto& c = cursor_[t];
    std::uint32_t budget = opts_.chunk;
    while (budget > 0) {
      if (!c.in_vertex) {
        if (c.vertex >= end) return true;
        const auto v = static_cast<std::uint32_t>(c.vertex);
        ctx.load(layout_->address(pg_.ranges, v), 128);
        ctx.compute(2, 0, 1);
        if (graph_->degree(v) == 0) {
          ++c.vertex;
          continue;
        }
        ctx.load(layout_->address(rank_arr_, v));
        ctx.compute(0, 1);
        ctx.add_flops(1);
        share_[t] = rank_[v] / static_cast<double>(graph_->degree(v));
        c.edge = graph_->row_ptr[v];
        c.in_vertex = true;
      }
      const auto v = static_cast<std::uint32_t>(c.vertex);
      const auto stop = graph_->row_ptr[v + 1];
      while (c.edge < stop && budget > 0) {
        const auto e = c.edge++;
        const std::uint32_t u = graph_->col_idx[e];
        ctx.load(layout_->address(pg_.cols, e));
        ctx.compute(3, 0, 1);
        ctx.send(kAccum, pg_.vertices.owner(u), {u, dbits(share_[t]), 0, 0});
        --budget;
      }
      if (c.edge == stop) {
        c.in_vertex = false;
        ++c.vertex;
      }
    }
    return false;
  }

  std::shared_ptr<const CsrGraph> graph_;
  AppOptions opts_;
  std::uint32_t tiles_ = 0;
  const DataLayout* layout_ = nullptr;
  PlacedGraph pg_;
  std::uint32_t rank_arr_ = 0, acc_arr_ = 0;
  std::vector<double> rank_, acc_;
  std::vector<std::uint32_t> iter_;
  std::vector<std::uint8_t> updated_;
  std::vector<EdgeCursor> cursor_;
  std::vector<double> share_;
};

}  // namespace

std::unique_ptr<Application> make_label_app(const std::string& name, std::shared_ptr<const CsrGraph> g,
                                            const AppOptions& o) {
  LabelKind kind = LabelKind::bfs;
  if (name == "sssp") kind = LabelKind::sssp;
  else if (name == "wcc") kind = LabelKind::wcc;
  return std::make_unique<LabelApp>(kind, require_graph(g, name.c_str()), o);
}

std::unique_ptr<Application> make_pagerank(std::shared_ptr<const CsrGraph> g, const AppOptions& o) {
  return std::make_unique<PageRankApp>(require_graph(g, "pagerank"), o);
}

}  // namespace tilesim::apps
