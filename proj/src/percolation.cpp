#include "perclab/percolation.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "perclab/parallel.hpp"

namespace perclab {

std::size_t Configuration::open_count() const noexcept {
  return static_cast<std::size_t>(std::count(open.begin(), open.end(), 1));
}

Configuration sample_config(const Graph& g, double p, const Seed& seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_config: p outside [0,1]");
  Configuration c;
  c.graph_hash = graph_hash(g);
  c.p = p;
  c.seed = seed;
  c.open.resize(g.edge_count());
  const EdgeSampler s(seed, p);
  for (EdgeId e = 0; e < g.edge_count(); ++e) c.open[e] = s(e) ? 1 : 0;
  return c;
}

Configuration make_config(const Graph& g, std::vector<std::uint8_t> open, double p) {
  if (open.size() != g.edge_count()) throw std::invalid_argument("make_config: wrong bit count");
  Configuration c;
  c.graph_hash = graph_hash(g);
  c.p = p;
  c.open = std::move(open);
  c.origin = "explicit";
  return c;
}

ClusterIndex::ClusterIndex(const Graph& g, const Configuration& config)
    : parent_(g.vertex_count()), size_(g.vertex_count(), 1), boundary_(g.vertex_count(), 0) {
  if (config.open.size() != g.edge_count()) {
    throw std::invalid_argument("ClusterIndex: configuration does not match graph");
  }
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    parent_[v] = v;
    boundary_[v] = g.is_boundary(v) ? 1 : 0;
  }
  clusters_ = g.vertex_count();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    if (config.open[e]) unite(g.edge(e).u, g.edge(e).v);
  }
}

VertexId ClusterIndex::find(VertexId v) const noexcept {
  VertexId root = v;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[v] != root) {
    const VertexId next = parent_[v];
    parent_[v] = root;
    v = next;
  }
  return root;
}

VertexId ClusterIndex::unite(VertexId a, VertexId b) noexcept {
  a = find(a);
  b = find(b);
  if (a == b) return a;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  boundary_[a] |= boundary_[b];
  --clusters_;
  return a;
}

std::vector<std::uint64_t> ClusterIndex::volumes() const {
  std::vector<std::uint64_t> out;
  for (VertexId v = 0; v < parent_.size(); ++v) {
    if (parent_[v] == v) out.push_back(size_[v]);
  }
  std::sort(out.rbegin(), out.rend());
  return out;
}

ClusterExplorer::ClusterExplorer(const Graph& g)
    : g_(&g), stamp_(g.vertex_count(), 0), depth_(g.vertex_count(), 0),
      side_(g.vertex_count(), 0) {}

void ClusterExplorer::next_generation() {
  if (++generation_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    generation_ = 1;
  }
}

std::uint32_t intrinsic_distance(const Graph& g, const Configuration& config, VertexId u,
                                 VertexId v) {
  ClusterExplorer ex(g);
  return ex.intrinsic_distance(u, v, config, std::numeric_limits<std::uint64_t>::max());
}

ClusterStats cluster_stats(const Graph& g, const Configuration& config, VertexId v) {
  const auto ambient = bfs_distances(g, v);
  ClusterExplorer ex(g);
  return ex.explore(v, config, ambient.data());
}

ConRadSearch::ConRadSearch(const Graph& g, VertexId x, VertexId y)
    : g_(&g), x_(x), y_(y), dx_(bfs_distances(g, x)), dy_(bfs_distances(g, y)),
      stamp_(g.vertex_count(), 0) {
  std::uint32_t top = 0;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    const std::uint32_t m = std::min(dx_[v], dy_[v]);
    if (m != kUnreachable) top = std::max(top, m);
  }
  buckets_.resize(top + 2);
}

std::uint32_t con_rad(const Graph& g, const Configuration& config, VertexId x, VertexId y) {
  ConRadSearch search(g, x, y);
  return search(config);
}

GhostField ghost_sample(const Graph& g, double h, const Seed& seed) {
  if (!(h > 0)) throw std::invalid_argument("ghost_sample: h must be positive");
  GhostField f;
  f.graph_hash = graph_hash(g);
  f.h = h;
  f.seed = seed;
  f.included.resize(g.vertex_count());
  const double q = -std::expm1(-h);
  const std::uint64_t key = rng::key(seed, rng::Domain::ghost);
  for (VertexId v = 0; v < g.vertex_count(); ++v) f.included[v] = rng::uniform(key, v) < q;
  return f;
}

Estimate magnetization_estimate(const Graph& g, double p, double h, VertexId v,
                                std::uint64_t samples, std::uint64_t master_seed,
                                unsigned workers) {
  if (!(h > 0)) throw std::invalid_argument("magnetization_estimate: h must be positive");
  if (samples == 0) throw std::invalid_argument("magnetization_estimate: need samples");
  const RunningStats stats = sharded_reduce(
      samples, workers, RunningStats{},
      [&](RunningStats& acc, std::uint64_t b, std::uint64_t e) {
        ClusterExplorer ex(g);
        for (std::uint64_t i = b; i < e; ++i) {
          const EdgeSampler open(Seed{master_seed, i}, p);
          const auto st = ex.explore(v, open, nullptr);
          acc.add(-std::expm1(-h * static_cast<double>(st.volume)));
        }
      },
      [](RunningStats& total, const RunningStats& part) { total.merge(part); });
  return stats.estimate("rao-blackwellized cluster volume, i.i.d. samples");
}

unsigned furcation_degree(const Graph& g, const Configuration& config, VertexId v,
                          std::uint32_t horizon) {
  const auto ambient = bfs_distances(g, v, horizon);
  ClusterExplorer ex(g);
  std::vector<std::uint8_t> claimed(g.vertex_count(), 0);
  unsigned count = 0;
  for (const Incidence& inc : g.neighbors(v)) {
    if (!config(inc.edge) || claimed[inc.to]) continue;
    ExploreLimits limits;
    limits.blocked = v;
    ex.explore(inc.to, config, nullptr, limits);
    bool reaches = false;
    for (VertexId u : ex.members()) {
      claimed[u] = 1;
      if (ambient[u] != kUnreachable && ambient[u] >= horizon) reaches = true;
    }
    if (reaches) ++count;
  }
  return count;
}

Configuration dual_config(const CombinatorialMap& primal, const DualMap& d,
                          const Configuration& config) {
  const Graph& g = primal.graph();
  if (config.open.size() != g.edge_count()) {
    throw std::invalid_argument("dual_config: configuration does not match the primal map");
  }
  Configuration c;
  c.graph_hash = graph_hash(d.map.graph());
  c.p = 1.0 - config.p;
  c.seed = config.seed;
  c.origin = "dual";
  c.open.resize(d.map.graph().edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const EdgeId de = d.primal_edge_to_dual[e];
    if (de == kUnreachable) {
      c.untransported.push_back(e);
    } else {
      c.open[de] = config.open[e] ? 0 : 1;
    }
  }
  return c;
}

TreeCluster TreeClusterSampler::sample(const Seed& seed, std::uint32_t max_depth,
                                       std::uint64_t max_volume) const {
  CounterRng rng(seed, rng::Domain::tree);
  TreeCluster out;
  out.level.push_back(1);
  out.volume = 1;
  std::uint64_t current = 1;
  for (std::uint32_t n = 1; n <= max_depth && current > 0; ++n) {
    const std::uint64_t trials = current * static_cast<std::uint64_t>(n == 1 ? k_ : k_ - 1);
    std::uint64_t next = 0;
    for (std::uint64_t t = 0; t < trials; ++t) next += rng.bernoulli(p_) ? 1 : 0;
    if (next == 0) break;
    out.level.push_back(next);
    out.volume += next;
    current = next;
    if (n == max_depth) out.reached_max_depth = true;
    if (out.volume > max_volume) break;
  }
  return out;
}

bool TreeClusterSampler::branch_survives(CounterRng& rng, std::uint32_t horizon) const {
  // the branch root sits at depth 1; explore depth-first and stop at the
  // first vertex at depth `horizon`
  if (horizon <= 1) return true;
  std::vector<std::uint32_t> stack{1};  // depths of pending vertices
  while (!stack.empty()) {
    const std::uint32_t d = stack.back();
    stack.pop_back();
    for (int c = 0; c < k_ - 1; ++c) {
      if (!rng.bernoulli(p_)) continue;
      if (d + 1 >= horizon) return true;
      stack.push_back(d + 1);
    }
  }
  return false;
}

unsigned TreeClusterSampler::furcation_degree(const Seed& seed, std::uint32_t horizon) const {
  CounterRng rng(seed, rng::Domain::tree);
  unsigned count = 0;
  for (int c = 0; c < k_; ++c) {
    if (rng.bernoulli(p_) && branch_survives(rng, horizon)) ++count;
  }
  return count;
}

void write_observables_jsonl(std::ostream& os, const Graph& g, double p, VertexId v,
                             std::uint64_t samples, std::uint64_t master_seed) {
  const auto ambient = bfs_distances(g, v);
  const std::uint64_t hash = graph_hash(g);
  ClusterExplorer ex(g);
  for (std::uint64_t i = 0; i < samples; ++i) {
    const EdgeSampler open(Seed{master_seed, i}, p);
    const auto st = ex.explore(v, open, ambient.data());
    nlohmann::json rec{{"graph_hash", hash},
                       {"p", p},
                       {"master_seed", master_seed},
                       {"stream", i},
                       {"vertex", v},
                       {"volume", st.volume},
                       {"rad_ext", st.rad_ext},
                       {"rad_int", st.rad_int},
                       {"touches_boundary", st.touches_boundary}};
    os << rec.dump() << '\n';
  }
}

}  // namespace perclab
