#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "perclab/graph.hpp"

namespace perclab {

/// Small graphs for exact checks: paths, cycles, a star, trees, complete
/// graphs, grid pieces and a vertex neighbourhood of the {3,7} tiling.
std::vector<Graph> oracle_corpus(std::size_t max_edges = 16);

/// Graph from a short text spec:
///   tree:k:depth  path:n  cycle:n  star:n  grid:w:h  complete:n
///   tiling:p:q:layers  dual:p:q:layers  file:<path>
/// Tiling specs give the underlying graph of the map.
Graph graph_from_spec(const std::string& spec);

}  // namespace perclab
