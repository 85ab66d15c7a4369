#include "tilesim/apps/csr.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "tilesim/error.hpp"

namespace tilesim {

void CsrGraph::validate() const {
  if (row_ptr.empty() || row_ptr.front() != 0) throw Error("CSR row_ptr must start at 0");
  if (row_ptr.back() != col_idx.size()) throw Error("CSR row_ptr does not end at the edge count");
  if (values.size() != col_idx.size()) throw Error("CSR values and col_idx differ in length");
  for (std::size_t i = 1; i < row_ptr.size(); ++i)
    if (row_ptr[i] < row_ptr[i - 1]) throw Error("CSR row_ptr decreases at row " + std::to_string(i - 1));
  const auto v = num_vertices();
  for (std::size_t e = 0; e < col_idx.size(); ++e)
    if (col_idx[e] >= v) throw Error("CSR column index " + std::to_string(col_idx[e]) + " out of range at edge " +
                                     std::to_string(e));
}

CsrGraph csr_from_edges(std::uint32_t n, std::vector<Edge> edges, bool drop_self_loops) {
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& a, const Edge& b) { return a.src != b.src ? a.src < b.src : a.dst < b.dst; });
  CsrGraph g;
  g.row_ptr.assign(std::size_t{n} + 1, 0);
  g.col_idx.reserve(edges.size());
  g.values.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.src >= n || e.dst >= n) throw Error("edge endpoint out of range");
    if (drop_self_loops && e.src == e.dst) continue;
    if (i > 0 && edges[i - 1].src == e.src && edges[i - 1].dst == e.dst) continue;
    g.col_idx.push_back(e.dst);
    g.values.push_back(e.weight);
    ++g.row_ptr[e.src + 1];
  }
  for (std::uint32_t v = 0; v < n; ++v) g.row_ptr[v + 1] += g.row_ptr[v];
  return g;
}

CsrGraph transpose(const CsrGraph& g) {
  const auto n = g.num_vertices();
  CsrGraph t;
  t.row_ptr.assign(std::size_t{n} + 1, 0);
  for (auto c : g.col_idx) ++t.row_ptr[c + 1];
  for (std::uint32_t v = 0; v < n; ++v) t.row_ptr[v + 1] += t.row_ptr[v];
  t.col_idx.resize(g.col_idx.size());
  t.values.resize(g.values.size());
  std::vector<std::uint64_t> fill(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::uint32_t u = 0; u < n; ++u) {
    for (auto e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) {
      const auto pos = fill[g.col_idx[e]]++;
      t.col_idx[pos] = u;
      t.values[pos] = g.values[e];
    }
  }
  return t;
}

CsrGraph symmetrize(const CsrGraph& g) {
  std::vector<Edge> edges;
  edges.reserve(g.num_edges() * 2);
  for (std::uint32_t u = 0; u < g.num_vertices(); ++u)
    for (auto e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) {
      edges.push_back({u, g.col_idx[e], g.values[e]});
      edges.push_back({g.col_idx[e], u, g.values[e]});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.src != b.src) return a.src < b.src;
    if (a.dst != b.dst) return a.dst < b.dst;
    return a.weight < b.weight;
  });
  return csr_from_edges(g.num_vertices(), std::move(edges));
}

CsrGraph rmat_generate(std::uint32_t scale, std::uint32_t edge_factor, std::uint64_t seed) {
  if (scale < 1 || scale > 31) throw ConfigError("RMAT scale must be in 1..31");
  constexpr double a = 0.57, b = 0.19, c = 0.19;
  const std::uint32_t n = 1u << scale;
  const std::uint64_t m = std::uint64_t{edge_factor} * n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> weight(1, 255);
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    std::uint32_t src = 0, dst = 0;
    for (std::uint32_t bit = 0; bit < scale; ++bit) {
      const double r = unit(rng);
      const std::uint32_t step = 1u << (scale - 1 - bit);
      // quadrants: a top-left, b top-right, c bottom-left, d bottom-right
      if (r >= a + b) src += step;
      if ((r >= a && r < a + b) || r >= a + b + c) dst += step;
    }
    edges.push_back({src, dst, static_cast<float>(weight(rng))});
  }
  return csr_from_edges(n, std::move(edges));
}

CsrGraph hand64_graph() {
  std::vector<Edge> e;
  auto add = [&](std::uint32_t s, std::uint32_t d, float w) { e.push_back({s, d, w}); };
  // 0..15: ring with forward chords
  for (std::uint32_t i = 0; i < 16; ++i) {
    add(i, (i + 1) % 16, float(1 + i % 5));
    if (i % 3 == 0) add(i, (i + 5) % 16, float(2 + i % 7));
  }
  // 16..31: 4x4 grid, edges both ways
  for (std::uint32_t r = 0; r < 4; ++r)
    for (std::uint32_t c = 0; c < 4; ++c) {
      const std::uint32_t v = 16 + r * 4 + c;
      if (c + 1 < 4) {
        add(v, v + 1, float(1 + (r + c) % 4));
        add(v + 1, v, float(3 + c));
      }
      if (r + 1 < 4) {
        add(v, v + 4, float(2 + r));
        add(v + 4, v, float(1 + (v % 3)));
      }
    }
  // bridges from the ring into the grid
  add(4, 16, 9);
  add(12, 27, 4);
  // 32..43: hub with fan-out and fan-in
  for (std::uint32_t i = 33; i < 44; ++i) {
    add(32, i, float(i - 31));
    if (i % 2) add(i, 32, 1);
  }
  add(31, 32, 6);
  // 44..55: chain with shortcuts that are longer in weight
  for (std::uint32_t i = 44; i < 55; ++i) add(i, i + 1, 1);
  add(44, 50, 20);
  add(46, 55, 3);
  // 56..59: separate component not reachable from 0
  add(56, 57, 2);
  add(57, 58, 2);
  add(58, 59, 2);
  add(59, 56, 2);
  // 60..63: isolated except 62 -> 63
  add(62, 63, 7);
  return csr_from_edges(64, std::move(e));
}

namespace {

constexpr char kMagic[8] = {'T', 'I', 'L', 'E', 'C', 'S', 'R', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::ifstream& in, T& v, const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("truncated CSR file " + path.string());
}

template <typename T>
void get_array(std::ifstream& in, std::vector<T>& v, std::size_t n, const std::filesystem::path& path) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw Error("truncated CSR file " + path.string());
}

}  // namespace

// Host byte order is assumed little-endian.
void write_csr(const std::filesystem::path& path, const CsrGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put(out, kVersion);
  put(out, std::uint64_t{g.num_vertices()});
  put(out, g.num_edges());
  out.write(reinterpret_cast<const char*>(g.row_ptr.data()), static_cast<std::streamsize>(g.row_ptr.size() * 8));
  out.write(reinterpret_cast<const char*>(g.col_idx.data()), static_cast<std::streamsize>(g.col_idx.size() * 4));
  out.write(reinterpret_cast<const char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * 4));
  if (!out) throw Error("failed writing " + path.string());
}

CsrGraph read_csr(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open CSR file " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw Error(path.string() + " is not a CSR file");
  std::uint32_t version = 0;
  std::uint64_t v = 0, e = 0;
  get(in, version, path);
  if (version != kVersion) throw Error("unsupported CSR version " + std::to_string(version) + " in " + path.string());
  get(in, v, path);
  get(in, e, path);
  if (v >= (1ull << 32)) throw Error("CSR file has too many vertices");
  CsrGraph g;
  get_array(in, g.row_ptr, v + 1, path);
  get_array(in, g.col_idx, e, path);
  get_array(in, g.values, e, path);
  g.validate();
  return g;
}

CsrGraph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge list " + path.string());
  std::vector<Edge> edges;
  std::uint32_t n = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#%");
    if (cut != std::string::npos) line.resize(cut);
    std::istringstream ss(line);
    std::uint64_t s = 0, d = 0;
    if (!(ss >> s)) continue;
    if (!(ss >> d)) throw Error(path.string() + ":" + std::to_string(lineno) + ": expected 'src dst [weight]'");
    double w = 1.0;
    ss >> w;
    if (s >= 0xffffffffu || d >= 0xffffffffu) throw Error(path.string() + ":" + std::to_string(lineno) + ": vertex id too large");
    edges.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(d), static_cast<float>(w)});
    n = std::max(n, static_cast<std::uint32_t>(std::max(s, d) + 1));
  }
  return csr_from_edges(n, std::move(edges));
}

CsrGraph load_dataset(const std::string& spec, std::uint64_t seed) {
  if (spec == "hand64") return hand64_graph();
  if (spec.rfind("rmat:", 0) == 0) {
    std::istringstream ss(spec.substr(5));
    std::uint32_t scale = 0, ef = 16;
    char sep = 0;
    if (!(ss >> scale)) throw ConfigError("bad dataset '" + spec + "', expected rmat:<scale>[:<edge_factor>]");
    if (ss >> sep) {
      if (sep != ':' || !(ss >> ef)) throw ConfigError("bad dataset '" + spec + "'");
    }
    return rmat_generate(scale, ef, seed);
  }
  if (spec.rfind("edgelist:", 0) == 0) return read_edge_list(spec.substr(9));
  return read_csr(spec);
}

}  // namespace tilesim
