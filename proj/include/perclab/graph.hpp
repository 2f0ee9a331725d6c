#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perclab/stats.hpp"

namespace perclab {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Distance value for "not reachable".
inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

struct Edge {
  VertexId u = 0;
  VertexId v = 0;

  VertexId other(VertexId w) const noexcept { return w == u ? v : u; }
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Incidence {
  VertexId to = 0;
  EdgeId edge = 0;
};

struct GraphOptions {
  /// Parallel edges are rejected unless explicitly allowed (small oracle
  /// fixtures use them).
  bool allow_parallel_edges = false;
  /// Likewise for disconnected graphs (independence fixtures).
  bool allow_disconnected = false;
};

/// Immutable finite connected graph with CSR adjacency. Neighbor lists keep the
/// order in which edges were supplied, so constructions that pass edges in a
/// rotation order get rotation-ordered adjacency for free.
class Graph {
 public:
  Graph() = default;
  Graph(std::string family_tag, std::size_t vertex_count, std::vector<Edge> edges,
        std::vector<VertexId> boundary = {}, GraphOptions options = {});

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }

  std::span<const Incidence> neighbors(VertexId v) const noexcept {
    return {incidences_.data() + offsets_[v], incidences_.data() + offsets_[v + 1]};
  }
  std::size_t degree(VertexId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  std::size_t max_degree() const noexcept { return max_degree_; }

  bool is_boundary(VertexId v) const noexcept { return boundary_mask_[v] != 0; }
  const std::vector<VertexId>& boundary_vertices() const noexcept { return boundary_; }
  const std::string& family_tag() const noexcept { return family_tag_; }

  /// Edge id joining u and v, or kUnreachable when not adjacent.
  EdgeId find_edge(VertexId u, VertexId v) const noexcept;
  bool is_forest() const noexcept { return edges_.size() + 1 == vertex_count_; }

 private:
  std::string family_tag_;
  std::size_t vertex_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Incidence> incidences_;
  std::vector<VertexId> boundary_;
  std::vector<std::uint8_t> boundary_mask_;
  std::size_t max_degree_ = 0;
};

/// Breadth-first distances from `source`, stopping at `max_radius`;
/// unreached vertices get kUnreachable.
std::vector<std::uint32_t> bfs_distances(const Graph& g, VertexId source,
                                         std::uint32_t max_radius = kUnreachable);

/// Dense all-pairs distance table for the vertices in `window` (row-major,
/// window-local indices).
std::vector<std::uint32_t> window_distances(const Graph& g, std::span<const VertexId> window);

/// Rooted k-regular tree truncated at distance `depth`; root 0, ids breadth-first.
Graph build_tree(int k, int depth);

Graph build_path(int edges);
Graph build_cycle(int vertices);
Graph build_star(int leaves);
Graph build_grid(int width, int height);
Graph build_complete(int vertices);

struct Ball {
  Graph graph;
  std::vector<VertexId> original_ids;  // ball-local id -> id in the source graph
};

/// Induced subgraph on {u : d(v,u) <= r}; vertices at distance exactly r are
/// the boundary. Ball-local ids follow BFS order from v (v itself is 0).
Ball ball(const Graph& g, VertexId v, std::uint32_t r);

struct GrowthResult {
  std::vector<std::pair<std::uint32_t, std::uint64_t>> sizes;  // (n, |B(v,n)|)
  LinearFit fit;  // log|B(v,n)| against n on the stable window
  std::uint32_t window_lo = 0;
  std::uint32_t window_hi = 0;
};

/// Ball growth from v up to n_max. The fit uses n in [n_max/2, n_max] so the
/// early non-asymptotic radii are excluded; throws std::domain_error if that
/// window has fewer than 4 points or n_max reaches the truncation frontier.
GrowthResult growth_rate(const Graph& g, VertexId v, std::uint32_t n_max);

/// Line-based text form:
///   graph <family_tag, percent-encoded spaces> <V> <E>
///   u v            (one line per edge, in edge-id order)
///   boundary <count> id id ...
std::string serialize(const Graph& g);
Graph parse_graph(std::string_view text);

/// FNV-1a hash of the serialization.
std::uint64_t graph_hash(const Graph& g);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace perclab
