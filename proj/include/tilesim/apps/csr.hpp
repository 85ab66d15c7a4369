#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tilesim {

struct CsrGraph {
  std::vector<std::uint64_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<float> values;

  std::uint32_t num_vertices() const { return static_cast<std::uint32_t>(row_ptr.size() - 1); }
  std::uint64_t num_edges() const { return col_idx.size(); }
  std::uint64_t degree(std::uint32_t v) const { return row_ptr[v + 1] - row_ptr[v]; }
  // Throws Error if the arrays are inconsistent.
  void validate() const;
};

struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  float weight = 1.0f;
};

// Sorts by (src, dst), keeps the first of each duplicate pair.
CsrGraph csr_from_edges(std::uint32_t num_vertices, std::vector<Edge> edges, bool drop_self_loops = true);
CsrGraph transpose(const CsrGraph& g);
// Union of g and its transpose; duplicate pairs keep the smaller weight.
CsrGraph symmetrize(const CsrGraph& g);

// Graph500 R-MAT with a=0.57, b=0.19, c=0.19, d=0.05. Integer weights 1..255.
CsrGraph rmat_generate(std::uint32_t scale, std::uint32_t edge_factor = 16, std::uint64_t seed = 1);

// Fixed 64-vertex graph with several components, hubs, chains and isolated vertices.
CsrGraph hand64_graph();

// Binary format: "TILECSR\0", u32 version, u64 V, u64 E, row_ptr (u64), col_idx (u32), values (f32).
void write_csr(const std::filesystem::path& path, const CsrGraph& g);
CsrGraph read_csr(const std::filesystem::path& path);
// Whitespace separated "src dst [weight]" lines; '#' and '%' start comments.
CsrGraph read_edge_list(const std::filesystem::path& path);

// "rmat:<scale>[:<edge_factor>]", "hand64", "edgelist:<path>", or a path to a CSR file.
CsrGraph load_dataset(const std::string& spec, std::uint64_t seed = 1);

}  // namespace tilesim
