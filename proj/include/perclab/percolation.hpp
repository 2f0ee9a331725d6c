#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "perclab/combinatorial_map.hpp"
#include "perclab/graph.hpp"
#include "perclab/rng.hpp"
#include "perclab/stats.hpp"

namespace perclab {

/// Bond states of one sample, evaluated on demand. Edge e is open iff its
/// uniform U_e = uniform(key, e) satisfies U_e < p, so samples at different p
/// with the same seed are monotonically coupled.
class EdgeSampler {
 public:
  EdgeSampler(const Seed& seed, double p) noexcept
      : key_(rng::key(seed, rng::Domain::edge)), p_(p) {}

  double uniform(EdgeId e) const noexcept { return rng::uniform(key_, e); }
  bool operator()(EdgeId e) const noexcept { return uniform(e) < p_; }
  double p() const noexcept { return p_; }

 private:
  std::uint64_t key_;
  double p_;
};

/// One materialized Bernoulli bond sample with its provenance.
struct Configuration {
  std::uint64_t graph_hash = 0;
  double p = 0.0;
  Seed seed;
  std::vector<std::uint8_t> open;  // one entry per edge
  /// "sampled", "explicit", or "dual" (bits transported from a primal sample).
  std::string origin = "sampled";
  /// For dual configurations: primal edges without a dual partner.
  std::vector<EdgeId> untransported;

  bool operator()(EdgeId e) const noexcept { return open[e] != 0; }
  std::size_t open_count() const noexcept;
};

Configuration sample_config(const Graph& g, double p, const Seed& seed);
/// Wraps explicit bits (test fixtures, enumeration).
Configuration make_config(const Graph& g, std::vector<std::uint8_t> open, double p = 0.0);

/// Union-find over the open subgraph with per-root volume and a flag for
/// clusters that touch the graph's boundary.
class ClusterIndex {
 public:
  ClusterIndex(const Graph& g, const Configuration& config);

  VertexId find(VertexId v) const noexcept;
  bool same_cluster(VertexId u, VertexId v) const noexcept { return find(u) == find(v); }
  std::uint64_t volume(VertexId v) const noexcept { return size_[find(v)]; }
  bool touches_boundary(VertexId v) const noexcept { return boundary_[find(v)] != 0; }
  std::size_t cluster_count() const noexcept { return clusters_; }
  /// Volumes of all clusters, largest first.
  std::vector<std::uint64_t> volumes() const;

 private:
  VertexId unite(VertexId a, VertexId b) noexcept;

  mutable std::vector<VertexId> parent_;
  std::vector<std::uint64_t> size_;
  std::vector<std::uint8_t> boundary_;
  std::size_t clusters_ = 0;
};

struct ClusterStats {
  std::uint64_t volume = 0;
  std::uint32_t rad_ext = 0;
  std::uint32_t rad_int = 0;
  bool touches_boundary = false;
  /// Exploration stopped at a limit; volume and radii are lower bounds.
  bool truncated = false;
  /// shell[n] = |{u : d_int(v,u) = n}| for n <= rad_int (when requested).
  std::vector<std::uint64_t> shell;
};

struct ExploreLimits {
  std::uint32_t max_intrinsic_radius = kUnreachable;
  std::uint64_t max_volume = std::numeric_limits<std::uint64_t>::max();
  /// Vertex treated as deleted (kUnreachable for none).
  VertexId blocked = kUnreachable;
  bool record_shells = false;
};

/// Breadth-first cluster exploration over a lazily evaluated configuration.
/// Scratch arrays are reused across calls with generation stamps, so one
/// explorer per worker serves any number of samples without reallocation.
class ClusterExplorer {
 public:
  explicit ClusterExplorer(const Graph& g);

  /// `ambient` (may be null) holds graph distances from v, used for rad_ext;
  /// when null rad_ext is left 0.
  template <class Open>
  ClusterStats explore(VertexId v, const Open& open, const std::uint32_t* ambient,
                       const ExploreLimits& limits = {});

  /// Vertices reached by the last explore() call, in BFS order.
  const std::vector<VertexId>& members() const noexcept { return queue_; }
  /// Intrinsic distance of a member of the last exploration.
  std::uint32_t depth(VertexId u) const noexcept {
    return stamp_[u] == generation_ ? depth_[u] : kUnreachable;
  }
  bool reached(VertexId u) const noexcept { return stamp_[u] == generation_; }

  /// Intrinsic distance from u to v by bidirectional BFS; kUnreachable if the
  /// two are not connected. The search also returns kUnreachable with `capped`
  /// set once more than max_volume vertices were visited, or once the distance
  /// is known to exceed max_distance.
  template <class Open>
  std::uint32_t intrinsic_distance(VertexId u, VertexId v, const Open& open,
                                   std::uint64_t max_volume, bool* capped = nullptr,
                                   std::uint32_t max_distance = kUnreachable);

  const Graph& graph() const noexcept { return *g_; }

 private:
  void next_generation();

  const Graph* g_;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::uint32_t> depth_;
  std::vector<std::uint8_t> side_;
  std::vector<VertexId> queue_;
  std::vector<VertexId> queue_b_;
  std::uint32_t generation_ = 0;
};

/// Hop count of a shortest open path, or kUnreachable.
std::uint32_t intrinsic_distance(const Graph& g, const Configuration& config, VertexId u,
                                 VertexId v);

/// Volume and both radii of K_v. Always rad_ext <= rad_int.
ClusterStats cluster_stats(const Graph& g, const Configuration& config, VertexId v);

/// Minimal r such that x and y are joined by an open path inside
/// B(x,r) ∪ B(y,r); kUnreachable when x and y are not connected. An edge
/// belongs to the union when both its endpoints lie in one of the two balls,
/// so an open edge between distinct x and y gives 1.
std::uint32_t con_rad(const Graph& g, const Configuration& config, VertexId x, VertexId y);

/// Same quantity, for repeated use with fixed x, y: `dx`, `dy` are the ambient
/// distance arrays from x and y. Runs a bottleneck search over edge levels,
/// which visits only B(x,r) ∪ B(y,r) for the answer r.
class ConRadSearch {
 public:
  ConRadSearch(const Graph& g, VertexId x, VertexId y);
  /// Returns kUnreachable when the answer exceeds max_radius.
  template <class Open>
  std::uint32_t operator()(const Open& open, std::uint32_t max_radius = kUnreachable);

 private:
  const Graph* g_;
  VertexId x_, y_;
  std::vector<std::uint32_t> dx_, dy_;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::vector<VertexId>> buckets_;
  std::uint32_t generation_ = 0;
};

struct GhostField {
  std::uint64_t graph_hash = 0;
  double h = 0.0;
  Seed seed;
  std::vector<std::uint8_t> included;
};

/// Each vertex included independently with probability 1 - exp(-h).
GhostField ghost_sample(const Graph& g, double h, const Seed& seed);

/// Rao-Blackwellized estimate of M_{p,h}(v) = E[1 - exp(-h |K_v|)] from
/// `samples` independent cluster explorations (sample i uses stream i).
Estimate magnetization_estimate(const Graph& g, double p, double h, VertexId v,
                                std::uint64_t samples, std::uint64_t master_seed,
                                unsigned workers = 1);

/// Number of distinct clusters of G - v, among those containing an open
/// neighbor of v, that reach graph distance `horizon` from v.
unsigned furcation_degree(const Graph& g, const Configuration& config, VertexId v,
                          std::uint32_t horizon);

/// ω†(e†) = 1 - ω(e) transported through the edge bijection of `d`. Primal
/// edges with no dual partner are listed in `untransported`; p is recorded as
/// the effective dual parameter 1 - p.
Configuration dual_config(const CombinatorialMap& primal, const DualMap& d,
                          const Configuration& config);

/// Sampler for the cluster of the root of the infinite k-regular tree, level by
/// level, without building the tree. Level sizes stop at `max_depth`.
struct TreeCluster {
  std::vector<std::uint64_t> level;  // level[n] = |∂B_int(root, n)|
  std::uint64_t volume = 0;
  bool reached_max_depth = false;
};

class TreeClusterSampler {
 public:
  TreeClusterSampler(int k, double p) : k_(k), p_(p) {}
  /// Stops early once volume exceeds `max_volume`.
  TreeCluster sample(const Seed& seed, std::uint32_t max_depth,
                     std::uint64_t max_volume = std::numeric_limits<std::uint64_t>::max()) const;
  /// Whether an open branch hanging off the root through one open edge
  /// reaches depth `horizon` (depth-first, stops at the first success).
  bool branch_survives(CounterRng& rng, std::uint32_t horizon) const;
  /// Open branches at the root reaching `horizon`; 3 of 3 is a trifurcation.
  unsigned furcation_degree(const Seed& seed, std::uint32_t horizon) const;

 private:
  int k_;
  double p_;
};

/// JSON-lines observable dump: one record per sample with keys
/// graph_hash, p, master_seed, stream, vertex, volume, rad_ext, rad_int,
/// touches_boundary.
void write_observables_jsonl(std::ostream& os, const Graph& g, double p, VertexId v,
                             std::uint64_t samples, std::uint64_t master_seed);

// ---------------------------------------------------------------------------

template <class Open>
ClusterStats ClusterExplorer::explore(VertexId v, const Open& open, const std::uint32_t* ambient,
                                      const ExploreLimits& limits) {
  next_generation();
  ClusterStats st;
  queue_.clear();
  queue_.push_back(v);
  stamp_[v] = generation_;
  depth_[v] = 0;
  if (limits.record_shells) st.shell.push_back(1);
  for (std::size_t head = 0; head < queue_.size(); ++head) {
    const VertexId x = queue_[head];
    const std::uint32_t dx = depth_[x];
    st.rad_int = dx;
    if (ambient && ambient[x] > st.rad_ext) st.rad_ext = ambient[x];
    if (g_->is_boundary(x)) st.touches_boundary = true;
    if (dx >= limits.max_intrinsic_radius) {
      // members at the cap are counted but not expanded
      bool more = false;
      for (const Incidence& inc : g_->neighbors(x)) {
        if (inc.to != limits.blocked && stamp_[inc.to] != generation_ && open(inc.edge)) {
          more = true;
          break;
        }
      }
      if (more) st.truncated = true;
      continue;
    }
    for (const Incidence& inc : g_->neighbors(x)) {
      const VertexId y = inc.to;
      if (stamp_[y] == generation_ || y == limits.blocked) continue;
      if (!open(inc.edge)) continue;
      stamp_[y] = generation_;
      depth_[y] = dx + 1;
      queue_.push_back(y);
      if (limits.record_shells) {
        if (st.shell.size() <= dx + 1) st.shell.push_back(0);
        ++st.shell[dx + 1];
      }
    }
    if (queue_.size() > limits.max_volume) {
      st.truncated = true;
      break;
    }
  }
  st.volume = queue_.size();
  if (st.truncated) {
    // radii over what was reached
    for (VertexId x : queue_) {
      st.rad_int = std::max(st.rad_int, depth_[x]);
      if (ambient) st.rad_ext = std::max(st.rad_ext, ambient[x]);
    }
  }
  return st;
}

template <class Open>
std::uint32_t ClusterExplorer::intrinsic_distance(VertexId u, VertexId v, const Open& open,
                                                  std::uint64_t max_volume, bool* capped,
                                                  std::uint32_t max_distance) {
  if (capped) *capped = false;
  if (u == v) return 0;
  next_generation();
  // two frontiers grown one full level at a time, smaller side first
  std::vector<VertexId>& fa = queue_;
  std::vector<VertexId>& fb = queue_b_;
  fa.assign(1, u);
  fb.assign(1, v);
  stamp_[u] = stamp_[v] = generation_;
  depth_[u] = depth_[v] = 0;
  side_[u] = 0;
  side_[v] = 1;
  std::uint64_t visited = 2;
  std::vector<VertexId> next;
  while (!fa.empty() && !fb.empty()) {
    const bool grow_a = fa.size() <= fb.size();
    std::vector<VertexId>& frontier = grow_a ? fa : fb;
    const std::uint8_t side = grow_a ? 0 : 1;
    std::uint32_t best = kUnreachable;
    next.clear();
    for (VertexId x : frontier) {
      for (const Incidence& inc : g_->neighbors(x)) {
        const VertexId y = inc.to;
        if (stamp_[y] == generation_ && side_[y] == side) continue;
        if (!open(inc.edge)) continue;
        if (stamp_[y] == generation_) {
          best = std::min(best, depth_[x] + 1 + depth_[y]);
          continue;
        }
        stamp_[y] = generation_;
        side_[y] = side;
        depth_[y] = depth_[x] + 1;
        next.push_back(y);
      }
    }
    if (best != kUnreachable) return best;
    visited += next.size();
    frontier.swap(next);
    // no meeting yet: the distance exceeds the sum of the frontier depths
    if (!fa.empty() && !fb.empty() && depth_[fa[0]] + depth_[fb[0]] >= max_distance) {
      if (capped) *capped = true;
      return kUnreachable;
    }
    if (visited > max_volume) {
      if (capped) *capped = true;
      return kUnreachable;
    }
  }
  return kUnreachable;
}

template <class Open>
std::uint32_t ConRadSearch::operator()(const Open& open, std::uint32_t max_radius) {
  if (x_ == y_) return 0;
  if (++generation_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    generation_ = 1;
  }
  for (auto& b : buckets_) b.clear();
  // bottleneck search over edge levels, buckets in increasing order
  stamp_[x_] = generation_;
  buckets_[0].push_back(x_);
  for (std::uint32_t r = 0; r < buckets_.size() && r <= max_radius; ++r) {
    auto& bucket = buckets_[r];
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      const VertexId a = bucket[i];
      if (a == y_) return r;
      for (const Incidence& inc : g_->neighbors(a)) {
        const VertexId b = inc.to;
        if (stamp_[b] == generation_ || !open(inc.edge)) continue;
        stamp_[b] = generation_;
        const std::uint32_t lb = std::max(
            r, std::min(std::max(dx_[a], dx_[b]), std::max(dy_[a], dy_[b])));
        buckets_[lb].push_back(b);
      }
    }
  }
  return kUnreachable;
}

}  // namespace perclab
