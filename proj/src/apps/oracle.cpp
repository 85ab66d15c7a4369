#include "tilesim/apps/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <queue>
#include <sstream>

#include "tilesim/error.hpp"

namespace tilesim {

std::vector<std::uint64_t> oracle_bfs(const CsrGraph& g, std::uint32_t root) {
  std::vector<std::uint64_t> d(g.num_vertices(), kUnreached);
  std::deque<std::uint32_t> q{root};
  d[root] = 0;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    for (auto e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) {
      const auto v = g.col_idx[e];
      if (d[v] == kUnreached) {
        d[v] = d[u] + 1;
        q.push_back(v);
      }
    }
  }
  return d;
}

std::vector<std::uint64_t> oracle_sssp(const CsrGraph& g, std::uint32_t root) {
  std::vector<std::uint64_t> d(g.num_vertices(), kUnreached);
  using Item = std::pair<std::uint64_t, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[root] = 0;
  pq.emplace(0, root);
  while (!pq.empty()) {
    const auto [du, u] = pq.top();
    pq.pop();
    if (du != d[u]) continue;
    for (auto e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) {
      const auto v = g.col_idx[e];
      const std::uint64_t nd = du + static_cast<std::uint64_t>(g.values[e]);
      if (nd < d[v]) {
        d[v] = nd;
        pq.emplace(nd, v);
      }
    }
  }
  return d;
}

std::vector<std::uint64_t> oracle_wcc(const CsrGraph& g) {
  const auto n = g.num_vertices();
  std::vector<std::uint32_t> parent(n);
  for (std::uint32_t v = 0; v < n; ++v) parent[v] = v;
  auto find = [&](std::uint32_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (std::uint32_t u = 0; u < n; ++u)
    for (auto e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) {
      const auto a = find(u), b = find(g.col_idx[e]);
      // keep the smaller id as the root so it becomes the label
      if (a < b) parent[b] = a;
      else if (b < a) parent[a] = b;
    }
  std::vector<std::uint64_t> label(n);
  for (std::uint32_t v = 0; v < n; ++v) label[v] = find(v);
  return label;
}

std::vector<double> oracle_pagerank(const CsrGraph& g, std::uint32_t iterations, double damping) {
  const auto n = g.num_vertices();
  std::vector<double> rank(n, 1.0 / n), next(n);
  for (std::uint32_t it = 0; it < iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::uint32_t u = 0; u < n; ++u) {
      const auto deg = g.degree(u);
      if (deg == 0) continue;
      const double share = rank[u] / static_cast<double>(deg);
      for (auto e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) next[g.col_idx[e]] += share;
    }
    for (std::uint32_t v = 0; v < n; ++v) rank[v] = (1.0 - damping) / n + damping * next[v];
  }
  return rank;
}

std::vector<double> oracle_spmv(const CsrGraph& a, const std::vector<double>& x) {
  std::vector<double> y(a.num_vertices(), 0.0);
  for (std::uint32_t i = 0; i < a.num_vertices(); ++i)
    for (auto e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) y[i] += double(a.values[e]) * x[a.col_idx[e]];
  return y;
}

std::vector<double> oracle_spmm(const CsrGraph& a, const std::vector<double>& b, std::uint32_t k) {
  std::vector<double> c(std::size_t{a.num_vertices()} * k, 0.0);
  for (std::uint32_t i = 0; i < a.num_vertices(); ++i)
    for (auto e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e)
      for (std::uint32_t j = 0; j < k; ++j)
        c[std::size_t{i} * k + j] += double(a.values[e]) * b[std::size_t{a.col_idx[e]} * k + j];
  return c;
}

std::vector<std::uint64_t> oracle_histogram(const std::vector<std::uint32_t>& values, std::uint32_t bin_width,
                                            std::uint32_t bins) {
  std::vector<std::uint64_t> h(bins, 0);
  for (auto v : values) ++h[std::min(v / bin_width, bins - 1)];
  return h;
}

std::vector<std::complex<double>> oracle_dft3d(const std::vector<std::complex<double>>& in, std::uint32_t n) {
  // Twiddles indexed by (j*k) mod n keep the direct sum accurate.
  std::vector<std::complex<double>> w(n);
  for (std::uint32_t i = 0; i < n; ++i) w[i] = std::polar(1.0, -2.0 * std::numbers::pi * i / n);
  std::vector<std::complex<double>> out(std::size_t{n} * n * n);
  for (std::uint32_t kx = 0; kx < n; ++kx)
    for (std::uint32_t ky = 0; ky < n; ++ky)
      for (std::uint32_t kz = 0; kz < n; ++kz) {
        std::complex<double> s = 0;
        for (std::uint32_t x = 0; x < n; ++x)
          for (std::uint32_t y = 0; y < n; ++y)
            for (std::uint32_t z = 0; z < n; ++z)
              s += in[(std::size_t{x} * n + y) * n + z] * w[(kx * x + ky * y + kz * z) % n];
        out[(std::size_t{kx} * n + ky) * n + kz] = s;
      }
  return out;
}

namespace {

CheckResult size_mismatch(std::size_t got, std::size_t want, const std::string& what) {
  return {false, what + ": shape mismatch, got " + std::to_string(got) + " elements, expected " + std::to_string(want)};
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

CheckResult compare_out(const std::vector<std::uint64_t>& got, const std::vector<std::uint64_t>& want,
                        const std::string& what) {
  if (got.size() != want.size()) return size_mismatch(got.size(), want.size(), what);
  for (std::size_t i = 0; i < got.size(); ++i)
    if (got[i] != want[i]) {
      auto show = [](std::uint64_t v) { return v == kUnreached ? std::string("inf") : std::to_string(v); };
      return {false, what + "[" + std::to_string(i) + "] = " + show(got[i]) + ", expected " + show(want[i])};
    }
  return {true, what + ": " + std::to_string(got.size()) + " values match"};
}

CheckResult compare_out(const std::vector<double>& got, const std::vector<double>& want, const std::string& what,
                        double rel_tol) {
  if (got.size() != want.size()) return size_mismatch(got.size(), want.size(), what);
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double scale = std::max({std::abs(want[i]), std::abs(got[i]), 1.0});
    if (!(std::abs(got[i] - want[i]) <= rel_tol * scale))
      return {false, what + "[" + std::to_string(i) + "] = " + fmt(got[i]) + ", expected " + fmt(want[i])};
  }
  return {true, what + ": " + std::to_string(got.size()) + " values match"};
}

CheckResult compare_out(const std::vector<std::complex<double>>& got, const std::vector<std::complex<double>>& want,
                        const std::string& what, double rel_tol) {
  if (got.size() != want.size()) return size_mismatch(got.size(), want.size(), what);
  double peak = 0;
  for (const auto& v : want) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (!(std::abs(got[i] - want[i]) <= rel_tol * std::max(peak, 1.0)))
      return {false, what + "[" + std::to_string(i) + "] = (" + fmt(got[i].real()) + "," + fmt(got[i].imag()) +
                         "), expected (" + fmt(want[i].real()) + "," + fmt(want[i].imag()) + ")"};
  }
  return {true, what + ": " + std::to_string(got.size()) + " values match"};
}

std::uint64_t reachable_edges(const CsrGraph& g, std::uint32_t root) {
  const auto d = oracle_bfs(g, root);
  std::uint64_t m = 0;
  for (std::uint32_t v = 0; v < g.num_vertices(); ++v)
    if (d[v] != kUnreached) m += g.degree(v);
  return m;
}

}  // namespace tilesim
