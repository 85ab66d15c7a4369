#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tilesim/apps/csr.hpp"
#include "tilesim/task.hpp"

namespace tilesim {

struct AppOptions {
  std::uint32_t root = 0;          // bfs, sssp
  EpochMode epoch = EpochMode::none;  // bfs, sssp, wcc
  std::uint32_t iterations = 10;   // pagerank
  double damping = 0.85;           // pagerank
  std::uint32_t spmm_cols = 8;     // spmm: columns of the dense operand
  std::uint32_t bin_width = 1;     // histogram
  std::uint32_t fft_n = 0;         // fft3d; 0 takes the grid width
  std::uint32_t chunk = 8;         // messages an init task emits before yielding
  std::uint64_t seed = 1;          // dense operands and the FFT input
};

std::vector<std::string> app_names();
bool app_needs_graph(const std::string& name);

// `graph` may be null for apps that do not read a graph.
std::unique_ptr<Application> make_app(const std::string& name, std::shared_ptr<const CsrGraph> graph,
                                      const AppOptions& opts = {});

}  // namespace tilesim
