#include "perclab/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "perclab/combinatorial_map.hpp"

namespace perclab {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

int to_int(const std::string& s, const std::string& spec) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw std::invalid_argument("graph spec '" + spec + "': '" + s + "' is not an integer");
  return v;
}

}  // namespace

std::vector<Graph> oracle_corpus(std::size_t max_edges) {
  std::vector<Graph> all;
  all.push_back(build_path(3));
  all.push_back(build_path(8));
  all.push_back(build_cycle(4));
  all.push_back(build_cycle(7));
  all.push_back(build_star(5));
  all.push_back(build_tree(3, 2));
  all.push_back(build_tree(4, 2));
  all.push_back(build_complete(4));
  all.push_back(build_complete(5));
  all.push_back(build_grid(2, 4));
  all.push_back(build_grid(3, 3));
  all.push_back(build_grid(3, 4));
  {
    // the wheel around a vertex of {3,7}: 7 spokes and the 7-cycle rim
    const auto tiling = build_tiling(3, 7, 3);
    const Graph& g = tiling.graph();
    VertexId centre = 0;
    while (!tiling.vertex_is_interior(centre)) ++centre;
    Ball b = ball(g, centre, 1);
    all.push_back(std::move(b.graph));
  }
  std::vector<Graph> out;
  for (auto& g : all)
    if (g.edge_count() <= max_edges) out.push_back(std::move(g));
  return out;
}

Graph graph_from_spec(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw std::invalid_argument("empty graph spec");
  const std::string& family = parts[0];
  auto arg = [&](std::size_t i) {
    if (i >= parts.size())
      throw std::invalid_argument("graph spec '" + spec + "': missing parameter " +
                                  std::to_string(i));
    return to_int(parts[i], spec);
  };
  auto arity = [&](std::size_t n) {
    if (parts.size() != n + 1)
      throw std::invalid_argument("graph spec '" + spec + "': expected " + std::to_string(n) +
                                  " parameters");
  };
  if (family == "file") {
    const std::string path = spec.substr(5);
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("graph spec: cannot read '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    // map files start with the graph block, so parse_map accepts both
    if (text.find("\nrotation ") != std::string::npos) return parse_map(text).graph();
    return parse_graph(text);
  }
  if (family == "tree") return arity(2), build_tree(arg(1), arg(2));
  if (family == "path") return arity(1), build_path(arg(1));
  if (family == "cycle") return arity(1), build_cycle(arg(1));
  if (family == "star") return arity(1), build_star(arg(1));
  if (family == "complete") return arity(1), build_complete(arg(1));
  if (family == "grid") return arity(2), build_grid(arg(1), arg(2));
  if (family == "tiling") return arity(3), build_tiling(arg(1), arg(2), arg(3)).graph();
  if (family == "dual") return arity(3), dual(build_tiling(arg(1), arg(2), arg(3))).map.graph();
  throw std::invalid_argument("unknown graph family '" + family + "' in spec '" + spec + "'");
}

}  // namespace perclab
