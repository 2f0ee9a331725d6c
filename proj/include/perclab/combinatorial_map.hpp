#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perclab/graph.hpp"

namespace perclab {

using DartId = std::uint32_t;
using FaceId = std::uint32_t;

/// Rotation-system representation of a planar map patch.
///
/// Edge e carries darts 2e (from edge(e).u to edge(e).v) and 2e+1 (reverse), so
/// alpha(d) = d ^ 1. sigma(d) is the next dart counterclockwise around
/// origin(d). Faces are the orbits of phi = sigma . alpha; with this convention
/// a face lies to the right of each of its darts and is traversed clockwise.
/// Faces flagged outer are the unbounded region(s) of the patch.
class CombinatorialMap {
 public:
  CombinatorialMap() = default;

  /// `rotation[v]` lists the edges at v in counterclockwise order. Every face
  /// orbit containing one of `outer_darts` is flagged outer.
  CombinatorialMap(Graph graph, const std::vector<std::vector<EdgeId>>& rotation,
                   const std::vector<DartId>& outer_darts);

  const Graph& graph() const noexcept { return graph_; }
  std::size_t dart_count() const noexcept { return sigma_.size(); }
  std::size_t face_count() const noexcept { return face_first_dart_.size(); }

  static constexpr DartId alpha(DartId d) noexcept { return d ^ 1U; }
  DartId sigma(DartId d) const noexcept { return sigma_[d]; }
  DartId phi(DartId d) const noexcept { return sigma_[alpha(d)]; }
  VertexId origin(DartId d) const noexcept {
    const Edge& e = graph_.edges()[d >> 1];
    return (d & 1U) ? e.v : e.u;
  }
  VertexId target(DartId d) const noexcept { return origin(alpha(d)); }
  EdgeId edge_of(DartId d) const noexcept { return d >> 1; }
  /// Dart leaving v along edge e.
  DartId dart_from(VertexId v, EdgeId e) const noexcept {
    return graph_.edges()[e].u == v ? 2 * e : 2 * e + 1;
  }
  /// Some dart leaving v (the first in its rotation).
  DartId first_dart(VertexId v) const noexcept { return vertex_first_dart_[v]; }

  FaceId face_of(DartId d) const noexcept { return face_of_[d]; }
  DartId face_first_dart(FaceId f) const noexcept { return face_first_dart_[f]; }
  std::size_t face_size(FaceId f) const noexcept { return face_size_[f]; }
  bool face_is_outer(FaceId f) const noexcept { return face_outer_[f] != 0; }
  std::size_t interior_face_count() const noexcept;

  /// A vertex is interior when no outer face touches it.
  bool vertex_is_interior(VertexId v) const noexcept { return vertex_interior_[v] != 0; }
  /// An edge is interior when neither side is an outer face.
  bool edge_is_interior(EdgeId e) const noexcept {
    return !face_is_outer(face_of_[2 * e]) && !face_is_outer(face_of_[2 * e + 1]);
  }

  /// Structural checks: alpha is a fixed-point-free involution, sigma is a
  /// single cycle at every vertex, and V - E + F = 2. Returns an empty string
  /// when valid, otherwise a description of the first violation.
  std::string validate() const;
  long euler_characteristic() const noexcept {
    return static_cast<long>(graph_.vertex_count()) - static_cast<long>(graph_.edge_count()) +
           static_cast<long>(face_count());
  }

 private:
  Graph graph_;
  std::vector<DartId> sigma_;
  std::vector<DartId> vertex_first_dart_;
  std::vector<FaceId> face_of_;
  std::vector<DartId> face_first_dart_;
  std::vector<std::uint32_t> face_size_;
  std::vector<std::uint8_t> face_outer_;
  std::vector<std::uint8_t> vertex_interior_;
};

/// Patch of the {p_gon, q_deg} tiling grown face layer by face layer around a
/// central p_gon-gon. layers = 1 is the central face alone; each further layer
/// adds every face touching the current boundary, so all previous boundary
/// vertices become interior with degree q_deg. Vertex ids follow creation
/// order (layer, then rotation order along the boundary).
CombinatorialMap build_tiling(int p_gon, int q_deg, int layers);

/// A dual map together with the bijections back to the primal.
struct DualMap {
  CombinatorialMap map;
  std::vector<FaceId> vertex_to_primal_face;  // dual vertex -> primal interior face
  std::vector<EdgeId> edge_to_primal_edge;    // dual edge -> primal edge
  std::vector<EdgeId> primal_edge_to_dual;    // primal edge -> dual edge or kUnreachable
  std::vector<VertexId> face_to_primal_vertex;  // dual face -> primal vertex or kUnreachable
};

/// One dual vertex per interior face of `m`; one dual edge per interior primal
/// edge, crossing it. Primal edges on the outer face have no dual; the dual
/// vertices of faces carrying such edges form the dual boundary.
DualMap dual(const CombinatorialMap& m);

/// Canonical code of the ball of radius r around `root`, as a rooted oriented
/// planar map: breadth-first labelling following rotations, minimised over
/// the starting dart at the root. Equal codes mean the balls are isomorphic by
/// an orientation-preserving map fixing the root.
std::vector<std::uint32_t> canonical_code(const CombinatorialMap& m, VertexId root,
                                          std::uint32_t radius);

/// Map sub-patch induced on `keep` (a vertex mask): edges with both endpoints
/// kept, rotations restricted. Used to compare dual(dual(M)) with the interior
/// of M. `old_ids` receives new -> old vertex ids.
CombinatorialMap induced_submap(const CombinatorialMap& m, const std::vector<std::uint8_t>& keep,
                                std::vector<VertexId>* old_ids = nullptr);

/// Text form: the graph serialization followed by
///   rotation <v> e e e ...   (one line per vertex, ccw edge order)
///   outer <count> d d ...    (outer-face darts, one per outer orbit)
std::string serialize(const CombinatorialMap& m);
CombinatorialMap parse_map(std::string_view text);

}  // namespace perclab
