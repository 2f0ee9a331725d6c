#include "perclab/combinatorial_map.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace perclab {

CombinatorialMap::CombinatorialMap(Graph graph, const std::vector<std::vector<EdgeId>>& rotation,
                                   const std::vector<DartId>& outer_darts)
    : graph_(std::move(graph)) {
  const std::size_t nv = graph_.vertex_count();
  const std::size_t nd = 2 * graph_.edge_count();
  if (rotation.size() != nv) throw std::invalid_argument("CombinatorialMap: rotation size");
  sigma_.assign(nd, kUnreachable);
  vertex_first_dart_.assign(nv, kUnreachable);
  for (VertexId v = 0; v < nv; ++v) {
    const auto& rot = rotation[v];
    if (rot.size() != graph_.degree(v)) {
      throw std::invalid_argument("CombinatorialMap: rotation at vertex " + std::to_string(v) +
                                  " does not list every incident edge");
    }
    for (std::size_t i = 0; i < rot.size(); ++i) {
      const Edge& e = graph_.edge(rot[i]);
      if (e.u != v && e.v != v) {
        throw std::invalid_argument("CombinatorialMap: rotation lists a non-incident edge");
      }
      const DartId d = dart_from(v, rot[i]);
      const DartId next = dart_from(v, rot[(i + 1) % rot.size()]);
      if (sigma_[d] != kUnreachable) {
        throw std::invalid_argument("CombinatorialMap: edge repeated in rotation");
      }
      sigma_[d] = next;
    }
    if (!rot.empty()) vertex_first_dart_[v] = dart_from(v, rot.front());
  }

  face_of_.assign(nd, kUnreachable);
  for (DartId start = 0; start < nd; ++start) {
    if (face_of_[start] != kUnreachable) continue;
    const FaceId f = static_cast<FaceId>(face_first_dart_.size());
    face_first_dart_.push_back(start);
    std::uint32_t len = 0;
    DartId d = start;
    do {
      face_of_[d] = f;
      ++len;
      d = phi(d);
    } while (d != start);
    face_size_.push_back(len);
  }
  face_outer_.assign(face_first_dart_.size(), 0);
  for (DartId d : outer_darts) {
    if (d >= nd) throw std::invalid_argument("CombinatorialMap: outer dart out of range");
    face_outer_[face_of_[d]] = 1;
  }
  vertex_interior_.assign(nv, 1);
  for (DartId d = 0; d < nd; ++d) {
    if (face_outer_[face_of_[d]]) vertex_interior_[origin(d)] = 0;
  }
}

std::size_t CombinatorialMap::interior_face_count() const noexcept {
  return static_cast<std::size_t>(std::count(face_outer_.begin(), face_outer_.end(), 0));
}

std::string CombinatorialMap::validate() const {
  const std::size_t nd = dart_count();
  for (DartId d = 0; d < nd; ++d) {
    if (alpha(d) == d || alpha(alpha(d)) != d) return "alpha is not a fixed-point-free involution";
    if (origin(sigma(d)) != origin(d)) return "sigma leaves the origin vertex";
  }
  for (VertexId v = 0; v < graph_.vertex_count(); ++v) {
    const DartId start = vertex_first_dart_[v];
    std::size_t len = 0;
    DartId d = start;
    do {
      ++len;
      d = sigma(d);
    } while (d != start && len <= nd);
    if (len != graph_.degree(v)) {
      return "sigma at vertex " + std::to_string(v) + " is not a single cycle";
    }
  }
  if (euler_characteristic() != 2) {
    return "Euler characteristic " + std::to_string(euler_characteristic()) + " != 2";
  }
  return {};
}

namespace {

struct PatchBuilder {
  int p_gon;
  int q_deg;
  std::vector<std::vector<VertexId>> rot;  // ccw neighbor lists
  std::vector<int> faces_at;
  std::vector<VertexId> boundary;

  VertexId fresh() {
    rot.emplace_back();
    faces_at.push_back(0);
    return static_cast<VertexId>(rot.size() - 1);
  }

  void add_face(const std::vector<VertexId>& cycle) {
    if (static_cast<int>(cycle.size()) != p_gon) {
      throw std::logic_error("build_tiling: produced a face with wrong side count");
    }
    for (VertexId v : cycle) ++faces_at[v];
  }

  void seed_central_face() {
    for (int i = 0; i < p_gon; ++i) fresh();
    for (int i = 0; i < p_gon; ++i) {
      // ccw at b_i: next boundary vertex first, previous boundary vertex last
      rot[i] = {VertexId((i + 1) % p_gon), VertexId((i + p_gon - 1) % p_gon)};
      boundary.push_back(VertexId(i));
    }
    std::vector<VertexId> face(boundary);
    add_face(face);
  }

  // Adds every face touching the current boundary. Boundary vertex b_i is
  // missing m_i = q - faces(b_i) faces. Consecutive boundary edges belong to
  // the same new face exactly when the vertex between them has m_i == 1, so the
  // new faces across the old boundary are maximal runs between vertices with
  // m_i >= 2. Such a vertex also gets m_i - 1 radiating edges with m_i - 2
  // corner faces between them.
  void expand() {
    const std::size_t m = boundary.size();
    std::vector<int> missing(m);
    for (std::size_t i = 0; i < m; ++i) {
      missing[i] = q_deg - faces_at[boundary[i]];
      if (missing[i] < 1) throw std::logic_error("build_tiling: saturated boundary vertex");
    }
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < m; ++i) {
      if (missing[i] >= 2) starts.push_back(i);
    }
    if (starts.empty()) throw std::logic_error("build_tiling: boundary has no run starts");
    const std::size_t runs = starts.size();
    // r_j old edges in run j, from starts[j] to starts[j+1] (cyclic)
    std::vector<int> run_len(runs), run_extra(runs);
    for (std::size_t j = 0; j < runs; ++j) {
      const std::size_t a = starts[j], b = starts[(j + 1) % runs];
      run_len[j] = static_cast<int>(runs == 1 ? m : (b + m - a) % m);
      run_extra[j] = p_gon - run_len[j] - 3;  // new path vertices; -1 means shared apex
      if (run_extra[j] < -1) {
        throw std::logic_error("build_tiling: run of " + std::to_string(run_len[j]) +
                               " boundary edges cannot fit in a " + std::to_string(p_gon) +
                               "-gon");
      }
    }

    std::vector<VertexId> next_boundary;
    // (position key, old vertex) per new vertex; sorted later for rotations
    std::vector<std::vector<std::pair<long, VertexId>>> old_nbrs;
    auto make_new = [&]() {
      const VertexId v = fresh();
      old_nbrs.resize(rot.size());
      return v;
    };
    old_nbrs.resize(rot.size());

    std::vector<std::vector<VertexId>> radiating(runs);
    VertexId carried = kUnreachable;  // apex shared with the previous run
    VertexId first_endpoint = kUnreachable;
    for (std::size_t j = 0; j < runs; ++j) {
      const std::size_t ai = starts[j];
      const VertexId a = boundary[ai];
      const int count = missing[ai] - 1;
      auto& rad = radiating[j];
      for (int t = 0; t < count; ++t) {
        VertexId w;
        const bool wraps = t == count - 1 && j == runs - 1 && j != 0 && run_extra[j] == -1;
        if (t == 0 && carried != kUnreachable) {
          if (wraps && carried != first_endpoint) {
            throw std::logic_error("build_tiling: apex shared by three runs");
          }
          w = carried;
        } else if (wraps) {
          w = first_endpoint;
        } else {
          w = make_new();
          next_boundary.push_back(w);
        }
        if (j == 0 && t == 0) first_endpoint = w;
        rad.push_back(w);
        rot[a].push_back(w);
        long key = static_cast<long>(ai);
        if (w == first_endpoint && j == runs - 1 && j != 0) key = -1;
        old_nbrs[w].emplace_back(key, a);
        if (t + 1 < count) {
          // corner face a, w, path..., w'  (w' created on the next iteration)
          std::vector<VertexId> path;
          for (int k = 0; k < p_gon - 3; ++k) {
            const VertexId x = make_new();
            next_boundary.push_back(x);
            path.push_back(x);
          }
          corner_paths_.push_back(path);
        }
      }
      carried = kUnreachable;
      // run face path from the last radiating endpoint of a to the first of b
      if (run_extra[j] >= 0) {
        std::vector<VertexId> path;
        for (int k = 0; k < run_extra[j]; ++k) {
          const VertexId x = make_new();
          next_boundary.push_back(x);
          path.push_back(x);
        }
        run_paths_.push_back(path);
      } else {
        run_paths_.emplace_back();
        if (j + 1 < runs) carried = rad.back();
      }
    }
    if (runs == 1 && run_extra[0] == -1) {
      throw std::logic_error("build_tiling: single run closing on itself");
    }

    // faces: corners and runs, for side-count and saturation checks
    std::size_t corner_index = 0;
    for (std::size_t j = 0; j < runs; ++j) {
      const VertexId a = boundary[starts[j]];
      const auto& rad = radiating[j];
      for (std::size_t t = 0; t + 1 < rad.size(); ++t) {
        std::vector<VertexId> face{a, rad[t]};
        const auto& path = corner_paths_[corner_index++];
        face.insert(face.end(), path.begin(), path.end());
        face.push_back(rad[t + 1]);
        add_face(face);
      }
      const std::size_t ai = starts[j];
      std::vector<VertexId> face;
      for (int k = 0; k <= run_len[j]; ++k) face.push_back(boundary[(ai + k) % m]);
      const auto& next_rad = radiating[(j + 1) % runs];
      const VertexId b_first = next_rad.front();
      const VertexId a_last = rad.back();
      face.push_back(b_first);
      if (b_first != a_last) {
        const auto& path = run_paths_[j];
        face.insert(face.end(), path.rbegin(), path.rend());
        face.push_back(a_last);
      }
      add_face(face);
    }
    for (VertexId b : boundary) {
      if (faces_at[b] != q_deg) throw std::logic_error("build_tiling: vertex left unsaturated");
    }

    // rotations of the new boundary: [next, old neighbors from the forward
    // side backwards, prev]
    const std::size_t nb = next_boundary.size();
    for (std::size_t i = 0; i < nb; ++i) {
      const VertexId w = next_boundary[i];
      auto olds = old_nbrs[w];
      std::sort(olds.begin(), olds.end());
      std::vector<VertexId> r{next_boundary[(i + 1) % nb]};
      for (auto it = olds.rbegin(); it != olds.rend(); ++it) r.push_back(it->second);
      r.push_back(next_boundary[(i + nb - 1) % nb]);
      rot[w] = std::move(r);
    }
    boundary = std::move(next_boundary);
    corner_paths_.clear();
    run_paths_.clear();
  }

  std::vector<std::vector<VertexId>> corner_paths_;
  std::vector<std::vector<VertexId>> run_paths_;
};

}  // namespace

CombinatorialMap build_tiling(int p_gon, int q_deg, int layers) {
  if (p_gon < 3 || q_deg < 3) throw std::invalid_argument("build_tiling: p, q must be >= 3");
  if (layers < 1) throw std::invalid_argument("build_tiling: layers must be >= 1");
  // 1/p + 1/q > 1/2  <=>  2(p + q) > pq
  if (2 * (p_gon + q_deg) > p_gon * q_deg) {
    throw std::invalid_argument("build_tiling: {" + std::to_string(p_gon) + "," +
                                std::to_string(q_deg) + "} is spherical");
  }
  PatchBuilder b{p_gon, q_deg, {}, {}, {}, {}, {}};
  b.seed_central_face();
  for (int l = 1; l < layers; ++l) b.expand();

  const std::size_t nv = b.rot.size();
  std::vector<Edge> edges;
  std::vector<std::vector<EdgeId>> rotation(nv);
  // edge ids in order of (smaller endpoint, rotation position)
  std::vector<std::vector<EdgeId>> edge_at(nv);
  for (VertexId v = 0; v < nv; ++v) edge_at[v].assign(b.rot[v].size(), kUnreachable);
  for (VertexId v = 0; v < nv; ++v) {
    for (std::size_t i = 0; i < b.rot[v].size(); ++i) {
      const VertexId u = b.rot[v][i];
      if (u < v) continue;
      const auto it = std::find(b.rot[u].begin(), b.rot[u].end(), v);
      if (it == b.rot[u].end()) throw std::logic_error("build_tiling: asymmetric rotation");
      const EdgeId id = static_cast<EdgeId>(edges.size());
      edges.push_back({v, u});
      edge_at[v][i] = id;
      edge_at[u][static_cast<std::size_t>(it - b.rot[u].begin())] = id;
    }
  }
  for (VertexId v = 0; v < nv; ++v) rotation[v] = edge_at[v];

  std::vector<VertexId> boundary = b.boundary;
  const std::string tag = "tiling {" + std::to_string(p_gon) + "," + std::to_string(q_deg) +
                          "} layers=" + std::to_string(layers);
  Graph g(tag, nv, std::move(edges), boundary);
  // the boundary walk b0 -> b1 has the outer face on its right
  const EdgeId e01 = g.find_edge(boundary[0], boundary[1]);
  const DartId outer = g.edge(e01).u == boundary[0] ? 2 * e01 : 2 * e01 + 1;
  return CombinatorialMap(std::move(g), rotation, {outer});
}

DualMap dual(const CombinatorialMap& m) {
  DualMap out;
  const Graph& g = m.graph();
  std::vector<VertexId> face_to_dual(m.face_count(), kUnreachable);
  for (FaceId f = 0; f < m.face_count(); ++f) {
    if (m.face_is_outer(f)) continue;
    face_to_dual[f] = static_cast<VertexId>(out.vertex_to_primal_face.size());
    out.vertex_to_primal_face.push_back(f);
  }
  if (out.vertex_to_primal_face.empty()) throw std::invalid_argument("dual: map has no interior face");

  std::vector<Edge> dual_edges;
  out.primal_edge_to_dual.assign(g.edge_count(), kUnreachable);
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    if (!m.edge_is_interior(e)) continue;
    out.primal_edge_to_dual[e] = static_cast<EdgeId>(dual_edges.size());
    out.edge_to_primal_edge.push_back(e);
    // dual dart 2k starts at the face right of primal dart 2e
    dual_edges.push_back({face_to_dual[m.face_of(2 * e)], face_to_dual[m.face_of(2 * e + 1)]});
  }

  std::vector<std::vector<EdgeId>> rotation(out.vertex_to_primal_face.size());
  std::vector<std::uint8_t> touches_outer(out.vertex_to_primal_face.size(), 0);
  for (VertexId dv = 0; dv < rotation.size(); ++dv) {
    const FaceId f = out.vertex_to_primal_face[dv];
    std::vector<DartId> around;
    DartId d = m.face_first_dart(f);
    do {
      around.push_back(d);
      d = m.phi(d);
    } while (d != m.face_first_dart(f));
    // phi runs clockwise around f; the dual rotation is counterclockwise
    for (auto it = around.rbegin(); it != around.rend(); ++it) {
      const EdgeId de = out.primal_edge_to_dual[m.edge_of(*it)];
      if (de == kUnreachable) {
        touches_outer[dv] = 1;
      } else {
        rotation[dv].push_back(de);
      }
    }
  }
  std::vector<VertexId> boundary;
  for (VertexId dv = 0; dv < touches_outer.size(); ++dv) {
    if (touches_outer[dv]) boundary.push_back(dv);
  }
  Graph dg("dual of " + g.family_tag(), rotation.size(), std::move(dual_edges), boundary,
           {.allow_parallel_edges = true});

  // A dual face orbit is interior when it winds once around an interior
  // primal vertex; everything else belongs to the outer region.
  CombinatorialMap provisional(dg, rotation, {});
  std::vector<DartId> outer_darts;
  out.face_to_primal_vertex.assign(provisional.face_count(), kUnreachable);
  for (FaceId f = 0; f < provisional.face_count(); ++f) {
    std::vector<EdgeId> crossed;
    DartId d = provisional.face_first_dart(f);
    do {
      crossed.push_back(out.edge_to_primal_edge[provisional.edge_of(d)]);
      d = provisional.phi(d);
    } while (d != provisional.face_first_dart(f));
    const Edge& e0 = g.edge(crossed.front());
    VertexId common = kUnreachable;
    for (VertexId cand : {e0.u, e0.v}) {
      const bool all = std::all_of(crossed.begin(), crossed.end(), [&](EdgeId e) {
        return g.edge(e).u == cand || g.edge(e).v == cand;
      });
      if (all) common = cand;
    }
    if (common != kUnreachable && m.vertex_is_interior(common) &&
        crossed.size() == g.degree(common)) {
      out.face_to_primal_vertex[f] = common;
    } else {
      outer_darts.push_back(provisional.face_first_dart(f));
    }
  }
  out.map = CombinatorialMap(std::move(dg), rotation, outer_darts);
  return out;
}

std::vector<std::uint32_t> canonical_code(const CombinatorialMap& m, VertexId root,
                                          std::uint32_t radius) {
  const Graph& g = m.graph();
  const auto dist = bfs_distances(g, root, radius);
  auto inside = [&](VertexId v) { return dist[v] != kUnreachable; };
  std::vector<std::uint32_t> best;
  std::vector<std::uint32_t> label(g.vertex_count());
  const DartId first = m.first_dart(root);
  if (first == kUnreachable) return {0};
  DartId start = first;
  do {
    std::fill(label.begin(), label.end(), kUnreachable);
    std::vector<std::uint32_t> code;
    std::vector<std::pair<VertexId, DartId>> queue{{root, start}};
    label[root] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto [v, entry] = queue[head];
      std::vector<std::uint32_t> row;
      DartId d = entry;
      do {
        const VertexId u = m.target(d);
        if (inside(u)) {
          if (label[u] == kUnreachable) {
            label[u] = static_cast<std::uint32_t>(queue.size());
            queue.emplace_back(u, CombinatorialMap::alpha(d));
          }
          row.push_back(label[u]);
        }
        d = m.sigma(d);
      } while (d != entry);
      code.push_back(static_cast<std::uint32_t>(row.size()));
      code.insert(code.end(), row.begin(), row.end());
    }
    if (best.empty() || code < best) best = std::move(code);
    start = m.sigma(start);
  } while (start != first);
  return best;
}

CombinatorialMap induced_submap(const CombinatorialMap& m, const std::vector<std::uint8_t>& keep,
                                std::vector<VertexId>* old_ids) {
  const Graph& g = m.graph();
  std::vector<VertexId> new_id(g.vertex_count(), kUnreachable);
  std::vector<VertexId> olds;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (keep.at(v)) {
      new_id[v] = static_cast<VertexId>(olds.size());
      olds.push_back(v);
    }
  }
  std::vector<Edge> edges;
  std::vector<EdgeId> new_edge(g.edge_count(), kUnreachable);
  std::vector<EdgeId> old_edge;
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edge(e);
    if (new_id[ed.u] != kUnreachable && new_id[ed.v] != kUnreachable) {
      new_edge[e] = static_cast<EdgeId>(edges.size());
      old_edge.push_back(e);
      edges.push_back({new_id[ed.u], new_id[ed.v]});
    }
  }
  std::vector<std::vector<EdgeId>> rotation(olds.size());
  for (VertexId nv = 0; nv < olds.size(); ++nv) {
    const DartId first = m.first_dart(olds[nv]);
    DartId d = first;
    do {
      if (new_edge[m.edge_of(d)] != kUnreachable) rotation[nv].push_back(new_edge[m.edge_of(d)]);
      d = m.sigma(d);
    } while (d != first);
  }
  Graph sub(g.family_tag() + " submap", olds.size(), std::move(edges), {},
            {.allow_parallel_edges = true});
  CombinatorialMap provisional(sub, rotation, {});
  // interior faces are those that are unchanged interior faces of m
  std::vector<DartId> outer;
  for (FaceId f = 0; f < provisional.face_count(); ++f) {
    const DartId d0 = provisional.face_first_dart(f);
    const DartId o0 = 2 * old_edge[provisional.edge_of(d0)] + (d0 & 1U);
    const FaceId of = m.face_of(o0);
    bool same = !m.face_is_outer(of) && m.face_size(of) == provisional.face_size(f);
    DartId d = d0;
    do {
      const DartId od = 2 * old_edge[provisional.edge_of(d)] + (d & 1U);
      if (m.face_of(od) != of) same = false;
      d = provisional.phi(d);
    } while (d != d0 && same);
    if (!same) outer.push_back(d0);
  }
  // rebuild boundary marks: vertices on an outer face
  CombinatorialMap result(provisional.graph(), rotation, outer);
  std::vector<VertexId> boundary;
  for (VertexId v = 0; v < olds.size(); ++v) {
    if (!result.vertex_is_interior(v)) boundary.push_back(v);
  }
  Graph marked(sub.family_tag(), olds.size(), result.graph().edges(), boundary,
               {.allow_parallel_edges = true});
  if (old_ids) *old_ids = olds;
  return CombinatorialMap(std::move(marked), rotation, outer);
}

std::string serialize(const CombinatorialMap& m) {
  std::ostringstream os;
  os << serialize(m.graph());
  const Graph& g = m.graph();
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    os << "rotation " << v;
    const DartId first = m.first_dart(v);
    DartId d = first;
    do {
      os << ' ' << m.edge_of(d);
      d = m.sigma(d);
    } while (d != first);
    os << '\n';
  }
  std::vector<DartId> outer;
  for (FaceId f = 0; f < m.face_count(); ++f) {
    if (m.face_is_outer(f)) outer.push_back(m.face_first_dart(f));
  }
  os << "outer " << outer.size();
  for (DartId d : outer) os << ' ' << d;
  os << '\n';
  return os.str();
}

CombinatorialMap parse_map(std::string_view text) {
  const auto pos = text.find("\nrotation ");
  if (pos == std::string_view::npos) throw std::invalid_argument("parse_map: no rotation table");
  Graph g = parse_graph(text.substr(0, pos + 1));
  std::istringstream is{std::string(text.substr(pos + 1))};
  std::vector<std::vector<EdgeId>> rotation(g.vertex_count());
  std::string word;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    VertexId id = 0;
    if (!(is >> word >> id) || word != "rotation" || id != v) {
      throw std::invalid_argument("parse_map: bad rotation line for vertex " + std::to_string(v));
    }
    rotation[v].resize(g.degree(v));
    for (auto& e : rotation[v]) {
      if (!(is >> e)) throw std::invalid_argument("parse_map: truncated rotation");
    }
  }
  std::size_t count = 0;
  if (!(is >> word >> count) || word != "outer") throw std::invalid_argument("parse_map: no outer line");
  std::vector<DartId> outer(count);
  for (auto& d : outer) {
    if (!(is >> d)) throw std::invalid_argument("parse_map: truncated outer list");
  }
  return CombinatorialMap(std::move(g), rotation, outer);
}

}  // namespace perclab
