#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "tilesim/apps/oracle.hpp"

namespace tilesim::apps {

double dense_value(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 of (seed, index), mapped to [0.5, 2)
  std::uint64_t z = seed * 0x9e3779b97f4a7c15ull + index + 1;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return 0.5 + 1.5 * double(z >> 11) / double(1ull << 53);
}

namespace {

constexpr std::uint32_t kAccum = 1;
constexpr std::uint32_t kSpmmLanes = 3;  // dense values per message

// Y = A X for a dense X with k columns (k = 1 is SPMV), pushed from the owner
// of row j of X along column j of A.
class SpmvApp : public Application {
 public:
  SpmvApp(std::shared_ptr<const CsrGraph> g, const AppOptions& o, std::uint32_t cols)
      : a_(std::move(g)), at_(transpose(*a_)), opts_(o), k_(cols) {
    if (k_ == 0) throw ConfigError("spmm needs at least one dense column");
  }

  std::string name() const override { return k_ == 1 ? "spmv" : "spmm"; }
  std::uint32_t max_task_id() const override { return kAccum; }

  void setup(const SimSetup& s) override {
    layout_ = s.layout;
    tiles_ = s.tiles;
    pg_.place(at_, s, "matrix_t", true);
    const auto n = a_->num_vertices();
    const auto dense = std::size_t{n} * k_;
    x_.resize(dense);
    for (std::size_t i = 0; i < dense; ++i) x_[i] = dense_value(opts_.seed, i);
    y_.assign(dense, 0.0);
    x_arr_ = s.layout->add("x", pg_.vertices, 4 * k_);
    y_arr_ = s.layout->add("y", pg_.vertices, 4 * k_);
    cursor_.assign(tiles_, {});
    lane_.assign(tiles_, 0);
    for (std::uint32_t t = 0; t < tiles_; ++t) cursor_[t].vertex = pg_.vertices.begin(t);
  }

  std::vector<KernelSpec> kernels() override {
    KernelSpec k;
    k.name = name();
    k.init = [this](TaskContext& ctx) { return push(ctx); };
    k.init_targets = {kAccum};
    k.init_max_emit = opts_.chunk;
    TaskDescriptor acc;
    acc.id = kAccum;
    acc.name = "accumulate";
    acc.payload_bits = 32 + 32 * lanes();
    acc.body = [this](TaskContext& ctx, const Args& a) {
      const auto row = static_cast<std::uint32_t>(a[0] & 0xffffffffu);
      const auto first = static_cast<std::uint32_t>(a[0] >> 32);
      const std::uint32_t n = std::min(lanes(), k_ - first);
      ctx.load(layout_->address(y_arr_, row), 32 * n);
      for (std::uint32_t l = 0; l < n; ++l) y_[std::size_t{row} * k_ + first + l] += dval(a[1 + l]);
      ctx.compute(1, n);
      ctx.store(layout_->address(y_arr_, row), 32 * n);
      ctx.add_flops(n);
    };
    acc.combine = [](const Args& x, const Args& y) {
      return Args{x[0], dbits(dval(x[1]) + dval(y[1])), dbits(dval(x[2]) + dval(y[2])), dbits(dval(x[3]) + dval(y[3]))};
    };
    acc.prefetch_addresses = [this](const Args& a, std::vector<std::uint64_t>& out) {
      out.push_back(layout_->address(y_arr_, a[0] & 0xffffffffu));
    };
    k.tasks.push_back(std::move(acc));
    return {k};
  }

  CheckResult check() const override {
    if (k_ == 1) return compare_out(y_, oracle_spmv(*a_, x_), "spmv y");
    return compare_out(y_, oracle_spmm(*a_, x_, k_), "spmm C");
  }

  RunWork work() const override {
    const double nnz = double(a_->num_edges());
    return {nnz, 2 * nnz * k_, "nonzeros"};
  }

  std::uint32_t lanes() const { return k_ == 1 ? 1 : kSpmmLanes; }

 private:
  bool push(TaskContext& ctx) {
    const std::uint32_t t = ctx.tile();
    const auto end = pg_.vertices.end(t);
    auto& c = cursor_[t];
    const std::uint32_t groups = (k_ + lanes() - 1) / lanes();
    std::uint32_t budget = opts_.chunk;
    while (budget > 0) {
      if (!c.in_vertex) {
        if (c.vertex >= end) return true;
        const auto j = static_cast<std::uint32_t>(c.vertex);
        ctx.load(layout_->address(pg_.ranges, j), 128);
        ctx.load(layout_->address(x_arr_, j), 32 * k_);
        ctx.compute(2, 0, 1);
        c.edge = at_.row_ptr[j];
        c.in_vertex = true;
        lane_[t] = 0;
      }
      const auto j = static_cast<std::uint32_t>(c.vertex);
      const auto stop = at_.row_ptr[j + 1];
      while (c.edge < stop && budget > 0) {
        const auto e = c.edge;
        const std::uint32_t i = at_.col_idx[e];
        if (lane_[t] == 0) {
          ctx.load(layout_->address(pg_.cols, e));
          ctx.load(layout_->address(pg_.weights, e));
        }
        const double a = at_.values[e];
        const std::uint32_t first = lane_[t] * lanes();
        const std::uint32_t n = std::min(lanes(), k_ - first);
        Args msg{std::uint64_t{i} | (std::uint64_t{first} << 32), 0, 0, 0};
        for (std::uint32_t l = 0; l < n; ++l) msg[1 + l] = dbits(a * x_[std::size_t{j} * k_ + first + l]);
        ctx.compute(3, n, 1);
        ctx.add_flops(n);
        ctx.send(kAccum, pg_.vertices.owner(i), msg);
        --budget;
        if (++lane_[t] == groups) {
          lane_[t] = 0;
          ++c.edge;
        }
      }
      if (c.edge == stop) {
        c.in_vertex = false;
        ++c.vertex;
      }
    }
    return false;
  }

  std::shared_ptr<const CsrGraph> a_;
  CsrGraph at_;
  AppOptions opts_;
  std::uint32_t k_;
  std::uint32_t tiles_ = 0;
  const DataLayout* layout_ = nullptr;
  PlacedGraph pg_;
  std::uint32_t x_arr_ = 0, y_arr_ = 0;
  std::vector<double> x_, y_;
  std::vector<EdgeCursor> cursor_;
  std::vector<std::uint32_t> lane_;
};

// Counts column indices into bins of width `bin_width`.
class HistogramApp : public Application {
 public:
  HistogramApp(std::shared_ptr<const CsrGraph> g, const AppOptions& o) : g_(std::move(g)), opts_(o) {
    if (opts_.bin_width == 0) throw ConfigError("histogram bin width must be positive");
    bins_ = std::max<std::uint32_t>(1, (g_->num_vertices() + opts_.bin_width - 1) / opts_.bin_width);
  }

  std::string name() const override { return "histogram"; }
  std::uint32_t max_task_id() const override { return kAccum; }

  void setup(const SimSetup& s) override {
    layout_ = s.layout;
    pg_.place(*g_, s, "input", false);
    bin_part_ = Partition::block(bins_, s.tiles);
    count_arr_ = s.layout->add("bins", bin_part_, 4);
    counts_.assign(bins_, 0);
    next_.assign(s.tiles, 0);
    for (std::uint32_t t = 0; t < s.tiles; ++t) next_[t] = g_->row_ptr[pg_.vertices.begin(t)];
  }

  std::vector<KernelSpec> kernels() override {
    KernelSpec k;
    k.name = "histogram";
    k.init_targets = {kAccum};
    k.init_max_emit = opts_.chunk;
    k.init = [this](TaskContext& ctx) {
      const std::uint32_t t = ctx.tile();
      const auto end = g_->row_ptr[pg_.vertices.end(t)];
      for (std::uint32_t sent = 0; sent < opts_.chunk; ++sent) {
        if (next_[t] >= end) return true;
        const auto e = next_[t]++;
        ctx.load(layout_->address(pg_.cols, e));
        const std::uint32_t bin = std::min(g_->col_idx[e] / opts_.bin_width, bins_ - 1);
        ctx.compute(4, 0, 1);
        ctx.send(kAccum, bin_part_.owner(bin), {bin, 1, 0, 0});
      }
      return next_[t] >= end;
    };
    TaskDescriptor acc;
    acc.id = kAccum;
    acc.name = "count";
    acc.payload_bits = 64;
    acc.body = [this](TaskContext& ctx, const Args& a) {
      ctx.load(layout_->address(count_arr_, a[0]));
      counts_[a[0]] += a[1];
      ctx.compute(1);
      ctx.store(layout_->address(count_arr_, a[0]));
    };
    acc.combine = [](const Args& x, const Args& y) { return Args{x[0], x[1] + y[1], 0, 0}; };
    acc.prefetch_addresses = [this](const Args& a, std::vector<std::uint64_t>& out) {
      out.push_back(layout_->address(count_arr_, a[0]));
    };
    k.tasks.push_back(std::move(acc));
    return {k};
  }

  CheckResult check() const override {
    return compare_out(counts_, oracle_histogram(g_->col_idx, opts_.bin_width, bins_), "histogram bins");
  }

  RunWork work() const override { return {double(g_->num_edges()), 0, "elements"}; }

 private:
  std::shared_ptr<const CsrGraph> g_;
  AppOptions opts_;
  std::uint32_t bins_ = 1;
  const DataLayout* layout_ = nullptr;
  PlacedGraph pg_;
  Partition bin_part_;
  std::uint32_t count_arr_ = 0;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> next_;
};

}  // namespace

std::unique_ptr<Application> make_spmv(std::shared_ptr<const CsrGraph> g, const AppOptions& o) {
  return std::make_unique<SpmvApp>(require_graph(g, "spmv"), o, 1);
}

std::unique_ptr<Application> make_spmm(std::shared_ptr<const CsrGraph> g, const AppOptions& o) {
  return std::make_unique<SpmvApp>(require_graph(g, "spmm"), o, o.spmm_cols);
}

std::unique_ptr<Application> make_histogram(std::shared_ptr<const CsrGraph> g, const AppOptions& o) {
  return std::make_unique<HistogramApp>(require_graph(g, "histogram"), o);
}

}  // namespace tilesim::apps
