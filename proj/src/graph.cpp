#include "perclab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>

namespace perclab {

Graph::Graph(std::string family_tag, std::size_t vertex_count, std::vector<Edge> edges,
             std::vector<VertexId> boundary, GraphOptions options)
    : family_tag_(std::move(family_tag)),
      vertex_count_(vertex_count),
      edges_(std::move(edges)),
      boundary_(std::move(boundary)) {
  if (vertex_count_ == 0) throw std::invalid_argument("Graph: needs at least one vertex");
  if (edges_.size() >= kUnreachable) throw std::invalid_argument("Graph: too many edges");
  std::vector<std::size_t> deg(vertex_count_, 0);
  std::set<std::pair<VertexId, VertexId>> seen;
  for (const Edge& e : edges_) {
    if (e.u >= vertex_count_ || e.v >= vertex_count_) {
      throw std::invalid_argument("Graph: edge endpoint out of range");
    }
    if (e.u == e.v) throw std::invalid_argument("Graph: self-loop");
    if (!options.allow_parallel_edges &&
        !seen.emplace(std::min(e.u, e.v), std::max(e.u, e.v)).second) {
      throw std::invalid_argument("Graph: parallel edge " + std::to_string(e.u) + "-" +
                                  std::to_string(e.v));
    }
    ++deg[e.u];
    ++deg[e.v];
  }
  offsets_.assign(vertex_count_ + 1, 0);
  for (std::size_t v = 0; v < vertex_count_; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
  incidences_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (EdgeId id = 0; id < edges_.size(); ++id) {
    const Edge& e = edges_[id];
    incidences_[fill[e.u]++] = {e.v, id};
    incidences_[fill[e.v]++] = {e.u, id};
  }
  max_degree_ = deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());

  boundary_mask_.assign(vertex_count_, 0);
  std::sort(boundary_.begin(), boundary_.end());
  boundary_.erase(std::unique(boundary_.begin(), boundary_.end()), boundary_.end());
  for (VertexId b : boundary_) {
    if (b >= vertex_count_) throw std::invalid_argument("Graph: boundary id out of range");
    boundary_mask_[b] = 1;
  }

  if (options.allow_disconnected) return;
  const auto dist = bfs_distances(*this, 0);
  if (std::any_of(dist.begin(), dist.end(), [](auto d) { return d == kUnreachable; })) {
    throw std::invalid_argument("Graph: not connected");
  }
}

EdgeId Graph::find_edge(VertexId u, VertexId v) const noexcept {
  for (const Incidence& inc : neighbors(u)) {
    if (inc.to == v) return inc.edge;
  }
  return kUnreachable;
}

std::vector<std::uint32_t> bfs_distances(const Graph& g, VertexId source,
                                         std::uint32_t max_radius) {
  std::vector<std::uint32_t> dist(g.vertex_count(), kUnreachable);
  std::vector<VertexId> queue;
  queue.reserve(g.vertex_count());
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexId x = queue[head];
    if (dist[x] >= max_radius) continue;
    for (const Incidence& inc : g.neighbors(x)) {
      if (dist[inc.to] == kUnreachable) {
        dist[inc.to] = dist[x] + 1;
        queue.push_back(inc.to);
      }
    }
  }
  return dist;
}

std::vector<std::uint32_t> window_distances(const Graph& g, std::span<const VertexId> window) {
  const std::size_t w = window.size();
  std::vector<std::uint32_t> out(w * w);
  for (std::size_t i = 0; i < w; ++i) {
    const auto d = bfs_distances(g, window[i]);
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = d[window[j]];
  }
  return out;
}

Graph build_tree(int k, int depth) {
  if (k < 3) throw std::invalid_argument("build_tree: degree k must be >= 3");
  if (depth < 1) throw std::invalid_argument("build_tree: depth must be >= 1");
  // level sizes: 1, k, k(k-1), ...
  std::size_t total = 1, level = static_cast<std::size_t>(k);
  for (int d = 1; d <= depth; ++d) {
    total += level;
    if (total > (std::size_t{1} << 31)) throw std::invalid_argument("build_tree: too large");
    level *= static_cast<std::size_t>(k - 1);
  }
  std::vector<Edge> edges;
  edges.reserve(total - 1);
  std::vector<VertexId> frontier{0}, next, boundary;
  VertexId fresh = 1;
  for (int d = 1; d <= depth; ++d) {
    next.clear();
    for (VertexId parent : frontier) {
      const int children = parent == 0 ? k : k - 1;
      for (int c = 0; c < children; ++c) {
        edges.push_back({parent, fresh});
        next.push_back(fresh++);
      }
    }
    frontier.swap(next);
  }
  boundary = frontier;
  return Graph("tree k=" + std::to_string(k) + " depth=" + std::to_string(depth), total,
               std::move(edges), std::move(boundary));
}

Graph build_path(int edges) {
  if (edges < 1) throw std::invalid_argument("build_path: need at least one edge");
  std::vector<Edge> es;
  for (int i = 0; i < edges; ++i) es.push_back({VertexId(i), VertexId(i + 1)});
  return Graph("path n=" + std::to_string(edges), edges + 1, std::move(es));
}

Graph build_cycle(int vertices) {
  if (vertices < 3) throw std::invalid_argument("build_cycle: need at least 3 vertices");
  std::vector<Edge> es;
  for (int i = 0; i < vertices; ++i) es.push_back({VertexId(i), VertexId((i + 1) % vertices)});
  return Graph("cycle n=" + std::to_string(vertices), vertices, std::move(es));
}

Graph build_star(int leaves) {
  if (leaves < 1) throw std::invalid_argument("build_star: need at least one leaf");
  std::vector<Edge> es;
  for (int i = 1; i <= leaves; ++i) es.push_back({0, VertexId(i)});
  return Graph("star leaves=" + std::to_string(leaves), leaves + 1, std::move(es));
}

Graph build_grid(int width, int height) {
  if (width < 1 || height < 1 || width * height < 2) {
    throw std::invalid_argument("build_grid: degenerate dimensions");
  }
  std::vector<Edge> es;
  auto id = [width](int x, int y) { return VertexId(y * width + x); };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x + 1 < width) es.push_back({id(x, y), id(x + 1, y)});
      if (y + 1 < height) es.push_back({id(x, y), id(x, y + 1)});
    }
  }
  std::vector<VertexId> boundary;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x == 0 || y == 0 || x == width - 1 || y == height - 1) boundary.push_back(id(x, y));
    }
  }
  return Graph("grid " + std::to_string(width) + "x" + std::to_string(height), width * height,
               std::move(es), std::move(boundary));
}

Graph build_complete(int vertices) {
  if (vertices < 2) throw std::invalid_argument("build_complete: need at least 2 vertices");
  std::vector<Edge> es;
  for (int i = 0; i < vertices; ++i) {
    for (int j = i + 1; j < vertices; ++j) es.push_back({VertexId(i), VertexId(j)});
  }
  return Graph("complete n=" + std::to_string(vertices), vertices, std::move(es));
}

Ball ball(const Graph& g, VertexId v, std::uint32_t r) {
  if (v >= g.vertex_count()) throw std::out_of_range("ball: vertex out of range");
  const auto dist = bfs_distances(g, v, r);
  // BFS order: re-run to collect vertices in discovery order
  std::vector<VertexId> order{v};
  std::vector<VertexId> local(g.vertex_count(), kUnreachable);
  local[v] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const VertexId x = order[head];
    for (const Incidence& inc : g.neighbors(x)) {
      if (dist[inc.to] != kUnreachable && local[inc.to] == kUnreachable) {
        local[inc.to] = static_cast<VertexId>(order.size());
        order.push_back(inc.to);
      }
    }
  }
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    if (local[e.u] != kUnreachable && local[e.v] != kUnreachable) {
      edges.push_back({local[e.u], local[e.v]});
    }
  }
  std::vector<VertexId> boundary;
  for (VertexId i = 0; i < order.size(); ++i) {
    if (dist[order[i]] == r) boundary.push_back(i);
  }
  Ball out;
  out.graph = Graph(g.family_tag() + " ball r=" + std::to_string(r), order.size(),
                    std::move(edges), std::move(boundary), {.allow_parallel_edges = true});
  out.original_ids = std::move(order);
  return out;
}

GrowthResult growth_rate(const Graph& g, VertexId v, std::uint32_t n_max) {
  const auto dist = bfs_distances(g, v);
  std::uint32_t frontier = kUnreachable;
  for (VertexId b : g.boundary_vertices()) frontier = std::min(frontier, dist[b]);
  if (frontier != kUnreachable && n_max >= frontier) {
    throw std::domain_error("growth_rate: n_max " + std::to_string(n_max) +
                            " reaches the truncation frontier at distance " +
                            std::to_string(frontier));
  }
  GrowthResult out;
  std::vector<std::uint64_t> shell(n_max + 1, 0);
  for (auto d : dist) {
    if (d <= n_max) ++shell[d];
  }
  std::uint64_t cumulative = 0;
  for (std::uint32_t n = 0; n <= n_max; ++n) {
    cumulative += shell[n];
    out.sizes.emplace_back(n, cumulative);
  }
  out.window_lo = n_max / 2;
  out.window_hi = n_max;
  if (out.window_hi + 1 - out.window_lo < 4) {
    throw std::domain_error("growth_rate: fit window has fewer than 4 points");
  }
  std::vector<double> xs, ys;
  for (std::uint32_t n = out.window_lo; n <= out.window_hi; ++n) {
    xs.push_back(n);
    ys.push_back(std::log(static_cast<double>(out.sizes[n].second)));
  }
  out.fit = linear_fit(xs, ys);
  return out;
}

namespace {
// Spaces and '%' are percent-encoded so the tag stays one token.
std::string encode_tag(const std::string& tag) {
  if (tag.empty()) return "%";
  std::string t;
  for (char c : tag) {
    if (c == ' ') t += "%20";
    else if (c == '%') t += "%25";
    else t += c;
  }
  return t;
}

std::string decode_tag(const std::string& token) {
  if (token == "%") return {};
  std::string t;
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (token[i] == '%' && token.compare(i, 3, "%20") == 0) {
      t += ' ';
      i += 2;
    } else if (token[i] == '%' && token.compare(i, 3, "%25") == 0) {
      t += '%';
      i += 2;
    } else {
      t += token[i];
    }
  }
  return t;
}
}  // namespace

std::string serialize(const Graph& g) {
  std::ostringstream os;
  os << "graph " << encode_tag(g.family_tag()) << ' ' << g.vertex_count() << ' '
     << g.edge_count() << '\n';
  for (const Edge& e : g.edges()) os << e.u << ' ' << e.v << '\n';
  os << "boundary " << g.boundary_vertices().size();
  for (VertexId b : g.boundary_vertices()) os << ' ' << b;
  os << '\n';
  return os.str();
}

Graph parse_graph(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string word, tag;
  std::size_t v = 0, e = 0;
  if (!(is >> word >> tag >> v >> e) || word != "graph") {
    throw std::invalid_argument("parse_graph: bad header");
  }
  std::vector<Edge> edges(e);
  for (auto& edge : edges) {
    if (!(is >> edge.u >> edge.v)) throw std::invalid_argument("parse_graph: truncated edge list");
  }
  std::size_t nb = 0;
  if (!(is >> word >> nb) || word != "boundary") {
    throw std::invalid_argument("parse_graph: missing boundary line");
  }
  std::vector<VertexId> boundary(nb);
  for (auto& b : boundary) {
    if (!(is >> b)) throw std::invalid_argument("parse_graph: truncated boundary list");
  }
  return Graph(decode_tag(tag), v, std::move(edges), std::move(boundary),
               {.allow_parallel_edges = true, .allow_disconnected = true});
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t graph_hash(const Graph& g) { return fnv1a(serialize(g)); }

}  // namespace perclab
