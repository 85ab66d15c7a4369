#include "tilesim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "tilesim/error.hpp"

namespace tilesim {

GridDims global_grid(const MachineConfig& c) {
  return {c.tiles_x * c.chiplets_x * c.packages_x * c.nodes_x, c.tiles_y * c.chiplets_y * c.packages_y * c.nodes_y};
}

std::uint64_t total_address_bytes(const MachineConfig& c) {
  const std::uint64_t tiles = global_grid(c).tiles();
  if (!c.cache_mode()) return tiles * std::uint64_t{c.spm_kib} * 1024;
  const std::uint64_t chiplets = std::uint64_t{c.chiplets_x} * c.chiplets_y * c.packages_x * c.packages_y *
                                 c.nodes_x * c.nodes_y;
  const auto per_device = static_cast<std::uint64_t>(std::llround(c.dram->capacity_gb * double(1ull << 30)));
  return per_device * chiplets;
}

std::uint64_t address_slice_bytes(const MachineConfig& c) { return total_address_bytes(c) / global_grid(c).tiles(); }

std::uint64_t slice_base(std::uint32_t tile, std::uint64_t total_bytes, std::uint64_t tile_count) {
  return std::uint64_t{tile} * (total_bytes / tile_count);
}

std::uint32_t tile_index_of_address(std::uint64_t addr, std::uint64_t total_bytes, std::uint64_t tile_count) {
  const std::uint64_t slice = total_bytes / tile_count;
  if (slice == 0 || addr >= slice * tile_count)
    throw Error("address 0x" + [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%llx", static_cast<unsigned long long>(addr));
      return std::string(b);
    }() + " is outside the DUT address space");
  return static_cast<std::uint32_t>(addr / slice);
}

TileCoord tile_of_address(std::uint64_t addr, const MachineConfig& cfg) {
  const auto g = global_grid(cfg);
  return tile_coord(tile_index_of_address(addr, total_address_bytes(cfg), g.tiles()), g);
}

Port opposite(Port p) {
  switch (p) {
    case Port::north: return Port::south;
    case Port::south: return Port::north;
    case Port::east: return Port::west;
    case Port::west: return Port::east;
    case Port::ruche_north: return Port::ruche_south;
    case Port::ruche_south: return Port::ruche_north;
    case Port::ruche_east: return Port::ruche_west;
    case Port::ruche_west: return Port::ruche_east;
    case Port::local: return Port::local;
  }
  return Port::local;
}

const char* port_name(Port p) {
  static const char* names[] = {"N", "S", "E", "W", "PU", "RN", "RS", "RE", "RW"};
  return names[static_cast<int>(p)];
}

Port dor_output_port(TileCoord cur, TileCoord dest, Topology topology, GridDims dims) {
  auto step = [topology](std::uint32_t c, std::uint32_t d, std::uint32_t n, Port pos, Port neg) {
    if (topology == Topology::mesh2d || n <= 2) return d > c ? pos : neg;
    const std::uint32_t fwd = (d + n - c) % n;
    return fwd <= n - fwd ? pos : neg;
  };
  if (cur.x != dest.x) return step(cur.x, dest.x, dims.width, Port::east, Port::west);
  if (cur.y != dest.y) return step(cur.y, dest.y, dims.height, Port::south, Port::north);
  return Port::local;
}

DimGraph::DimGraph(std::uint32_t tiles, std::uint32_t chiplets, std::uint32_t packages, std::uint32_t nodes,
                   Topology topo, std::uint32_t ruche_stride)
    : n_(tiles * chiplets * packages * nodes), tiles_(tiles), chiplets_(chiplets), packages_(packages) {
  if (n_ > std::numeric_limits<std::uint16_t>::max()) throw ConfigError("grid dimension too large");
  const std::uint32_t span = tiles * chiplets * packages;
  const bool ring = topo == Topology::folded_torus2d && span >= 3;
  const std::uint32_t pitch = ring ? 2 : 1;
  edges_.assign(std::size_t{n_} * 4, Edge{});
  auto link = [&](std::uint32_t from, Dir d, std::uint32_t to, std::uint32_t pitches) {
    edges_[from * 4 + d] = Edge{static_cast<std::int32_t>(to), level_between(from, to), pitches};
  };
  for (std::uint32_t p = 0; p < n_; ++p) {
    const std::uint32_t node = p / span, local = p % span;
    if (local + 1 < span) link(p, plus, p + 1, pitch);
    if (local > 0) link(p, minus, p - 1, pitch);
    if (ring) {
      if (local == span - 1) link(p, plus, node * span, pitch);
      if (local == 0) link(p, minus, node * span + span - 1, pitch);
      // Node-to-node mesh links use the second port set on torus edge tiles.
      if (local == span - 1 && node + 1 < nodes) link(p, express_plus, p + 1, 1);
      if (local == 0 && node > 0) link(p, express_minus, p - 1, 1);
    } else {
      if (local == span - 1 && node + 1 < nodes) link(p, plus, p + 1, 1);
      if (local == 0 && node > 0) link(p, minus, p - 1, 1);
      if (ruche_stride >= 2) {
        if (local + ruche_stride < span) link(p, express_plus, p + ruche_stride, ruche_stride);
        if (local >= ruche_stride) link(p, express_minus, p - ruche_stride, ruche_stride);
      }
    }
  }

  dist_.assign(std::size_t{n_} * n_, std::numeric_limits<std::uint16_t>::max());
  std::vector<std::uint32_t> queue(n_);
  for (std::uint32_t s = 0; s < n_; ++s) {
    std::uint16_t* d = &dist_[std::size_t{s} * n_];
    std::size_t head = 0, tail = 0;
    d[s] = 0;
    queue[tail++] = s;
    while (head < tail) {
      const std::uint32_t u = queue[head++];
      for (int k = 0; k < 4; ++k) {
        const auto& e = edges_[u * 4 + k];
        if (e.to < 0 || d[e.to] != std::numeric_limits<std::uint16_t>::max()) continue;
        d[e.to] = static_cast<std::uint16_t>(d[u] + 1);
        queue[tail++] = static_cast<std::uint32_t>(e.to);
      }
    }
    for (std::uint32_t t = 0; t < n_; ++t) diameter_ = std::max<std::uint32_t>(diameter_, d[t]);
  }

  // Distances are symmetric, so dist(neighbor, dst) == dist(dst, neighbor).
  next_.assign(std::size_t{n_} * n_, none);
  static constexpr Dir kPreference[] = {express_plus, express_minus, plus, minus};
  for (std::uint32_t c = 0; c < n_; ++c) {
    for (std::uint32_t t = 0; t < n_; ++t) {
      if (c == t) continue;
      const auto want = distance(c, t) - 1;
      for (Dir dir : kPreference) {
        const auto& e = edges_[c * 4 + dir];
        if (e.to >= 0 && distance(static_cast<std::uint32_t>(e.to), t) == want) {
          next_[std::size_t{c} * n_ + t] = dir;
          break;
        }
      }
    }
  }
}

LinkLevel DimGraph::level_between(std::uint32_t a, std::uint32_t b) const {
  const std::uint32_t chip = tiles_, pkg = tiles_ * chiplets_, node = tiles_ * chiplets_ * packages_;
  if (a / node != b / node) return LinkLevel::node;
  if (a / pkg != b / pkg) return LinkLevel::package;
  if (a / chip != b / chip) return LinkLevel::chiplet;
  return LinkLevel::noc;
}

NetworkTopology::NetworkTopology(const MachineConfig& cfg)
    : dims_(global_grid(cfg)),
      x_(cfg.tiles_x, cfg.chiplets_x, cfg.packages_x, cfg.nodes_x, cfg.noc_topology,
         cfg.extra_ports == ExtraPorts::ruche ? cfg.ruche_stride : 0),
      y_(cfg.tiles_y, cfg.chiplets_y, cfg.packages_y, cfg.nodes_y, cfg.noc_topology,
         cfg.extra_ports == ExtraPorts::ruche ? cfg.ruche_stride : 0),
      ruche_(cfg.extra_ports == ExtraPorts::ruche) {}

namespace {

struct DirPort {
  bool is_x;
  DimGraph::Dir dir;
};

DirPort decode(Port p) {
  switch (p) {
    case Port::east: return {true, DimGraph::plus};
    case Port::west: return {true, DimGraph::minus};
    case Port::ruche_east: return {true, DimGraph::express_plus};
    case Port::ruche_west: return {true, DimGraph::express_minus};
    case Port::south: return {false, DimGraph::plus};
    case Port::north: return {false, DimGraph::minus};
    case Port::ruche_south: return {false, DimGraph::express_plus};
    case Port::ruche_north: return {false, DimGraph::express_minus};
    case Port::local: break;
  }
  return {true, DimGraph::none};
}

Port encode(bool is_x, DimGraph::Dir d) {
  static constexpr Port xs[] = {Port::east, Port::west, Port::ruche_east, Port::ruche_west};
  static constexpr Port ys[] = {Port::south, Port::north, Port::ruche_south, Port::ruche_north};
  return is_x ? xs[d] : ys[d];
}

}  // namespace

const DimGraph::Edge* NetworkTopology::edge_of(std::uint32_t tile, Port p) const {
  const auto [is_x, dir] = decode(p);
  if (dir == DimGraph::none) return nullptr;
  const TileCoord c = tile_coord(tile, dims_);
  const auto& e = is_x ? x_.edge(c.x, dir) : y_.edge(c.y, dir);
  return e.to < 0 ? nullptr : &e;
}

bool NetworkTopology::neighbor(std::uint32_t tile, Port p, std::uint32_t& out) const {
  const auto* e = edge_of(tile, p);
  if (!e) return false;
  TileCoord c = tile_coord(tile, dims_);
  if (decode(p).is_x)
    c.x = static_cast<std::uint32_t>(e->to);
  else
    c.y = static_cast<std::uint32_t>(e->to);
  out = tile_index(c, dims_);
  return true;
}

Port NetworkTopology::route(std::uint32_t cur, std::uint32_t dest) const {
  const TileCoord c = tile_coord(cur, dims_), d = tile_coord(dest, dims_);
  if (c.x != d.x) return encode(true, x_.next_dir(c.x, d.x));
  if (c.y != d.y) return encode(false, y_.next_dir(c.y, d.y));
  return Port::local;
}

LinkLevel NetworkTopology::level(std::uint32_t tile, Port p) const {
  const auto* e = edge_of(tile, p);
  return e ? e->level : LinkLevel::noc;
}

std::uint32_t NetworkTopology::pitches(std::uint32_t tile, Port p) const {
  const auto* e = edge_of(tile, p);
  return e ? e->pitches : 0;
}

std::uint32_t NetworkTopology::hop_distance(std::uint32_t a, std::uint32_t b) const {
  const TileCoord ca = tile_coord(a, dims_), cb = tile_coord(b, dims_);
  return x_.distance(ca.x, cb.x) + y_.distance(ca.y, cb.y);
}

bool NetworkTopology::same_dimension(Port in, Port out) {
  if (in == Port::local || out == Port::local) return false;
  return decode(in).is_x == decode(out).is_x;
}

std::uint32_t network_diameter(const MachineConfig& cfg) { return NetworkTopology(cfg).diameter(); }

}  // namespace tilesim
