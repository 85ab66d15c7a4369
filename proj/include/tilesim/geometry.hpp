#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <vector>

#include "tilesim/config.hpp"

namespace tilesim {

struct TileCoord {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  auto operator<=>(const TileCoord&) const = default;
};

struct GridDims {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint64_t tiles() const { return std::uint64_t{width} * height; }
  auto operator<=>(const GridDims&) const = default;
};

GridDims global_grid(const MachineConfig& cfg);

// Row-major tile numbering of the flattened grid.
inline std::uint32_t tile_index(TileCoord c, GridDims g) { return c.y * g.width + c.x; }
inline TileCoord tile_coord(std::uint32_t index, GridDims g) { return {index % g.width, index / g.width}; }

// DUT address space: scratchpad mode spans the SPMs, cache mode spans the attached DRAM.
std::uint64_t total_address_bytes(const MachineConfig& cfg);
std::uint64_t address_slice_bytes(const MachineConfig& cfg);
std::uint64_t slice_base(std::uint32_t tile, std::uint64_t total_bytes, std::uint64_t tile_count);
std::uint32_t tile_index_of_address(std::uint64_t addr, std::uint64_t total_bytes, std::uint64_t tile_count);
TileCoord tile_of_address(std::uint64_t addr, const MachineConfig& cfg);

// Router ports. South is +y, East is +x.
enum class Port : std::uint8_t {
  north = 0,
  south,
  east,
  west,
  local,
  ruche_north,
  ruche_south,
  ruche_east,
  ruche_west,
};
constexpr int kNumPorts = 9;
constexpr int kLocalPort = static_cast<int>(Port::local);
Port opposite(Port p);
const char* port_name(Port p);

// Hierarchy level crossed by a link.
enum class LinkLevel : std::uint8_t { noc = 0, chiplet, package, node };

// Dimension-ordered output port on a single-level mesh or folded torus.
// Returns Port::local when cur == dest.
Port dor_output_port(TileCoord cur, TileCoord dest, Topology topology, GridDims dims);

// One dimension of the hierarchical router graph. The 2D network is the
// Cartesian product of the X and Y dimension graphs.
class DimGraph {
 public:
  enum Dir : std::uint8_t { plus = 0, minus = 1, express_plus = 2, express_minus = 3, none = 255 };
  struct Edge {
    std::int32_t to = -1;
    LinkLevel level = LinkLevel::noc;
    std::uint32_t pitches = 1;  // physical wire length in tile pitches
  };

  DimGraph() = default;
  // tiles/chiplets/packages are per-level counts along this dimension.
  DimGraph(std::uint32_t tiles, std::uint32_t chiplets, std::uint32_t packages, std::uint32_t nodes, Topology topo,
           std::uint32_t ruche_stride);

  std::uint32_t size() const { return n_; }
  const Edge& edge(std::uint32_t pos, Dir d) const { return edges_[pos * 4 + d]; }
  std::uint16_t distance(std::uint32_t a, std::uint32_t b) const { return dist_[std::size_t{a} * n_ + b]; }
  Dir next_dir(std::uint32_t cur, std::uint32_t dst) const { return static_cast<Dir>(next_[std::size_t{cur} * n_ + dst]); }
  std::uint32_t diameter() const { return diameter_; }
  LinkLevel level_between(std::uint32_t a, std::uint32_t b) const;

 private:
  std::uint32_t n_ = 0;
  std::uint32_t tiles_ = 1, chiplets_ = 1, packages_ = 1;
  std::vector<Edge> edges_;
  std::vector<std::uint16_t> dist_;
  std::vector<std::uint8_t> next_;
  std::uint32_t diameter_ = 0;
};

// Router graph of the whole DUT with its routing tables.
class NetworkTopology {
 public:
  explicit NetworkTopology(const MachineConfig& cfg);

  GridDims dims() const { return dims_; }
  const DimGraph& x() const { return x_; }
  const DimGraph& y() const { return y_; }
  bool has_ruche() const { return ruche_; }

  // Neighbor across an output port; returns false when the port is unconnected.
  bool neighbor(std::uint32_t tile, Port p, std::uint32_t& out) const;
  Port route(std::uint32_t cur, std::uint32_t dest) const;
  LinkLevel level(std::uint32_t tile, Port p) const;
  std::uint32_t pitches(std::uint32_t tile, Port p) const;
  std::uint32_t hop_distance(std::uint32_t a, std::uint32_t b) const;
  std::uint32_t diameter() const { return x_.diameter() + y_.diameter(); }
  // True when moving through `p` stays in the dimension the message arrived on.
  static bool same_dimension(Port in, Port out);

 private:
  const DimGraph::Edge* edge_of(std::uint32_t tile, Port p) const;

  GridDims dims_;
  DimGraph x_, y_;
  bool ruche_ = false;
};

std::uint32_t network_diameter(const MachineConfig& cfg);

}  // namespace tilesim
