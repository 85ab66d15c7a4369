#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tilesim/apps/csr.hpp"
#include "tilesim/task.hpp"

namespace tilesim {

constexpr std::uint64_t kUnreached = std::numeric_limits<std::uint64_t>::max();

// Sequential host references for the benchmark kernels.
std::vector<std::uint64_t> oracle_bfs(const CsrGraph& g, std::uint32_t root);
std::vector<std::uint64_t> oracle_sssp(const CsrGraph& g, std::uint32_t root);  // Dijkstra
std::vector<std::uint64_t> oracle_wcc(const CsrGraph& g);  // smallest vertex id per component
std::vector<double> oracle_pagerank(const CsrGraph& g, std::uint32_t iterations, double damping);
std::vector<double> oracle_spmv(const CsrGraph& a, const std::vector<double>& x);
// b and the result are row-major V x k.
std::vector<double> oracle_spmm(const CsrGraph& a, const std::vector<double>& b, std::uint32_t k);
std::vector<std::uint64_t> oracle_histogram(const std::vector<std::uint32_t>& values, std::uint32_t bin_width,
                                            std::uint32_t bins);
// Direct O(n^6) DFT of an n^3 tensor indexed [x][y][z].
std::vector<std::complex<double>> oracle_dft3d(const std::vector<std::complex<double>>& in, std::uint32_t n);

// Exact comparison; names the first differing index.
CheckResult compare_out(const std::vector<std::uint64_t>& got, const std::vector<std::uint64_t>& want,
                        const std::string& what);
// Relative tolerance, with `rel_tol` used as the absolute floor near zero.
CheckResult compare_out(const std::vector<double>& got, const std::vector<double>& want, const std::string& what,
                        double rel_tol = 1e-6);
CheckResult compare_out(const std::vector<std::complex<double>>& got, const std::vector<std::complex<double>>& want,
                        const std::string& what, double rel_tol = 1e-6);

// Edges leaving the vertices reachable from root.
std::uint64_t reachable_edges(const CsrGraph& g, std::uint32_t root);

}  // namespace tilesim
