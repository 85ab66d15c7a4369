#include "common.hpp"

namespace tilesim {

std::vector<std::string> app_names() {
  return {"bfs", "sssp", "pagerank", "wcc", "spmv", "spmm", "fft3d", "histogram"};
}

bool app_needs_graph(const std::string& name) { return name != "fft3d"; }

std::unique_ptr<Application> make_app(const std::string& name, std::shared_ptr<const CsrGraph> graph,
                                      const AppOptions& opts) {
  if (opts.chunk == 0) throw ConfigError("init chunk must be at least 1");
  if (name == "bfs" || name == "sssp" || name == "wcc") return apps::make_label_app(name, std::move(graph), opts);
  if (name == "pagerank") return apps::make_pagerank(std::move(graph), opts);
  if (name == "spmv") return apps::make_spmv(std::move(graph), opts);
  if (name == "spmm") return apps::make_spmm(std::move(graph), opts);
  if (name == "histogram") return apps::make_histogram(std::move(graph), opts);
  if (name == "fft3d") return apps::make_fft3d(opts);
  std::string known;
  for (const auto& n : app_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown app '" + name + "' (known: " + known + ")");
}

}  // namespace tilesim
