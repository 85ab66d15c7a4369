#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <vector>

#include "tilesim/apps/apps.hpp"
#include "tilesim/apps/csr.hpp"
#include "tilesim/error.hpp"
#include "tilesim/layout.hpp"
#include "tilesim/task.hpp"

namespace tilesim::apps {

inline std::uint64_t dbits(double v) { return std::bit_cast<std::uint64_t>(v); }
inline double dval(std::uint64_t b) { return std::bit_cast<double>(b); }

// CSR arrays of one graph placed on the tiles: vertices block-partitioned,
// edges following their source vertex.
struct PlacedGraph {
  const CsrGraph* g = nullptr;
  Partition vertices;
  std::uint32_t ranges = 0;  // (begin, end) pair per vertex, 16 bytes
  std::uint32_t cols = 0;
  std::uint32_t weights = 0;

  void place(const CsrGraph& graph, const SimSetup& s, const char* prefix, bool with_weights) {
    g = &graph;
    vertices = Partition::block(graph.num_vertices(), s.tiles);
    std::vector<std::uint64_t> bounds(std::size_t{s.tiles} + 1);
    for (std::uint32_t t = 0; t <= s.tiles; ++t) bounds[t] = graph.row_ptr[vertices.begin(t)];
    Partition edges = Partition::from_bounds(bounds);
    const std::string p(prefix);
    ranges = s.layout->add(p + ".row_ptr", vertices, 16);
    cols = s.layout->add(p + ".col_idx", edges, 4);
    if (with_weights) weights = s.layout->add(p + ".values", edges, 4);
  }
};

// Position of an init task that walks the edges of its tile's vertices.
struct EdgeCursor {
  std::uint64_t vertex = 0;
  std::uint64_t edge = 0;
  bool in_vertex = false;
};

inline std::shared_ptr<const CsrGraph> require_graph(const std::shared_ptr<const CsrGraph>& g, const char* app) {
  if (!g) throw ConfigError(std::string("app '") + app + "' needs a graph dataset");
  return g;
}

std::unique_ptr<Application> make_label_app(const std::string& name, std::shared_ptr<const CsrGraph> g,
                                            const AppOptions& o);
std::unique_ptr<Application> make_pagerank(std::shared_ptr<const CsrGraph> g, const AppOptions& o);
std::unique_ptr<Application> make_spmv(std::shared_ptr<const CsrGraph> g, const AppOptions& o);
std::unique_ptr<Application> make_spmm(std::shared_ptr<const CsrGraph> g, const AppOptions& o);
std::unique_ptr<Application> make_histogram(std::shared_ptr<const CsrGraph> g, const AppOptions& o);
std::unique_ptr<Application> make_fft3d(const AppOptions& o);

// Deterministic dense operand entries in [0.5, 2).
double dense_value(std::uint64_t seed, std::uint64_t index);

}  // namespace tilesim::apps
