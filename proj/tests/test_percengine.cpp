#include <cmath>

#include "doctest.h"
#include "perclab/combinatorial_map.hpp"
#include "perclab/percolation.hpp"

using namespace perclab;

namespace {

Configuration all(const Graph& g, std::uint8_t bit) {
  return make_config(g, std::vector<std::uint8_t>(g.edge_count(), bit));
}

// reference: smallest r whose ball union (edges inside one ball) connects x, y
std::uint32_t con_rad_reference(const Graph& g, const Configuration& c, VertexId x, VertexId y) {
  const auto dx = bfs_distances(g, x), dy = bfs_distances(g, y);
  for (std::uint32_t r = 0; r <= g.vertex_count(); ++r) {
    std::vector<std::uint8_t> bits(g.edge_count(), 0);
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      const Edge& ed = g.edge(e);
      const bool inside = std::max(dx[ed.u], dx[ed.v]) <= r || std::max(dy[ed.u], dy[ed.v]) <= r;
      bits[e] = c.open[e] && inside;
    }
    const auto restricted = make_config(g, bits);
    if (intrinsic_distance(g, restricted, x, y) != kUnreachable) return r;
  }
  return kUnreachable;
}

}  // namespace

TEST_CASE("sampling extremes and determinism") {
  const Graph g = build_grid(5, 5);
  CHECK(sample_config(g, 0.0, {1, 2}).open_count() == 0);
  CHECK(sample_config(g, 1.0, {1, 2}).open_count() == g.edge_count());
  CHECK(sample_config(g, 0.4, {7, 3}).open == sample_config(g, 0.4, {7, 3}).open);
  CHECK(sample_config(g, 0.4, {7, 3}).open != sample_config(g, 0.4, {7, 4}).open);
  CHECK_THROWS(sample_config(g, 1.5, {1, 1}));
}

TEST_CASE("single edge open frequency is binomial") {
  const Graph g = build_path(1);
  const int n = 100000;
  int open = 0;
  for (int i = 0; i < n; ++i) open += sample_config(g, 0.5, {11, std::uint64_t(i)}).open[0];
  const double sigma = std::sqrt(n * 0.25);
  CHECK(std::abs(open - n / 2.0) < 3 * sigma);
}

TEST_CASE("clusters") {
  const Graph g = build_grid(4, 4);
  const ClusterIndex closed(g, all(g, 0));
  CHECK(closed.cluster_count() == g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) CHECK(closed.volume(v) == 1);
  const ClusterIndex open(g, all(g, 1));
  CHECK(open.cluster_count() == 1);
  CHECK(open.volume(3) == g.vertex_count());

  const Graph path = build_path(2);
  const ClusterIndex ab(path, make_config(path, {1, 0}));
  CHECK(ab.same_cluster(0, 1));
  CHECK_FALSE(ab.same_cluster(1, 2));
  CHECK(ab.volumes() == std::vector<std::uint64_t>{2, 1});
}

TEST_CASE("union-find and BFS agree; radii and distances are ordered") {
  const CombinatorialMap m = build_tiling(3, 7, 4);
  const Graph& g = m.graph();
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto c = sample_config(g, 0.3, {5, s});
    const ClusterIndex idx(g, c);
    std::uint64_t total = 0;
    for (auto v : idx.volumes()) total += v;
    CHECK(total == g.vertex_count());
    for (VertexId u = 0; u < g.vertex_count(); u += 7) {
      const auto st = cluster_stats(g, c, u);
      CHECK(st.rad_ext <= st.rad_int);
      CHECK(st.volume == idx.volume(u));
      const auto du = bfs_distances(g, u);
      for (VertexId v = 0; v < g.vertex_count(); v += 5) {
        const auto d = intrinsic_distance(g, c, u, v);
        CHECK((d != kUnreachable) == idx.same_cluster(u, v));
        if (d != kUnreachable) CHECK(d >= du[v]);
      }
    }
  }
}

TEST_CASE("monotone coupling in p") {
  // volume and extrinsic radius are increasing; the intrinsic radius is not
  // (an extra open edge can shorten paths)
  const Graph g = build_grid(8, 8);
  for (std::uint64_t s = 0; s < 30; ++s) {
    std::uint64_t prev_volume = 0;
    std::uint32_t prev_rad = 0;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const auto st = cluster_stats(g, sample_config(g, p, {9, s}), 27);
      CHECK(st.volume >= prev_volume);
      CHECK(st.rad_ext >= prev_rad);
      prev_volume = st.volume;
      prev_rad = st.rad_ext;
    }
  }
}

TEST_CASE("intrinsic distance and cluster stats examples") {
  const Graph t = build_tree(3, 3);
  const auto all_open = all(t, 1);
  const auto d = bfs_distances(t, 0);
  for (VertexId v = 0; v < t.vertex_count(); ++v) CHECK(intrinsic_distance(t, all_open, 0, v) == d[v]);
  CHECK(intrinsic_distance(t, all_open, 4, 4) == 0);
  auto bits = all_open.open;
  bits[t.find_edge(0, 1)] = 0;
  CHECK(intrinsic_distance(t, make_config(t, bits), 0, 4) == kUnreachable);

  const auto iso = cluster_stats(t, all(t, 0), 2);
  CHECK(iso.volume == 1);
  CHECK(iso.rad_ext == 0);
  CHECK(iso.rad_int == 0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto st = cluster_stats(t, sample_config(t, 0.6, {1, s}), 0);
    CHECK(st.rad_ext == st.rad_int);
  }

  // open path 0-1-5-4 in a 2x4 grid (0 1 2 3 / 4 5 6 7): 4 is adjacent to 0
  // but only reachable the long way round
  const Graph grid = build_grid(4, 2);
  std::vector<std::uint8_t> b(grid.edge_count(), 0);
  b[grid.find_edge(0, 1)] = 1;
  b[grid.find_edge(1, 5)] = 1;
  b[grid.find_edge(5, 4)] = 1;
  const auto folded = make_config(grid, b);
  CHECK(intrinsic_distance(grid, folded, 0, 4) == 3);
  const auto st = cluster_stats(grid, folded, 0);
  CHECK(st.volume == 4);
  CHECK(st.rad_int == 3);
  CHECK(st.rad_ext == 2);
  const auto s4 = cluster_stats(grid, folded, 4);
  CHECK(s4.rad_int == 3);
  CHECK(s4.rad_ext == 2);
}

TEST_CASE("con_rad") {
  const Graph g = build_path(1);
  CHECK(con_rad(g, all(g, 1), 0, 1) == 1);
  CHECK(con_rad(g, all(g, 1), 0, 0) == 0);
  CHECK(con_rad(g, all(g, 0), 0, 1) == kUnreachable);
  const CombinatorialMap m = build_tiling(3, 7, 4);
  const Graph& h = m.graph();
  ConRadSearch search(h, 0, 1);
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto c = sample_config(h, 0.45, {3, s});
    const auto r = search(c);
    CHECK(r == con_rad_reference(h, c, 0, 1));
    CHECK(r == con_rad(h, c, 0, 1));
  }
}

TEST_CASE("ghost field and magnetization") {
  const Graph g = build_grid(30, 30);
  const double h = 0.3;
  const auto f = ghost_sample(g, h, {4, 4});
  std::size_t in = 0;
  for (auto b : f.included) in += b;
  const double q = 1 - std::exp(-h);
  const double n = static_cast<double>(g.vertex_count());
  CHECK(std::abs(static_cast<double>(in) - n * q) < 4 * std::sqrt(n * q * (1 - q)));
  CHECK_THROWS(ghost_sample(g, 0.0, {1, 1}));

  const auto m0 = magnetization_estimate(g, 0.0, 0.7, 0, 100, 3);
  CHECK(m0.mean == doctest::Approx(1 - std::exp(-0.7)).epsilon(1e-12));
  const auto big = magnetization_estimate(g, 0.5, 60.0, 0, 100, 3);
  CHECK(big.mean > 0.999);
  CHECK_THROWS(magnetization_estimate(g, 0.5, -1.0, 0, 100, 3));
  // worker count does not change the result
  const auto a = magnetization_estimate(g, 0.45, 0.05, 100, 9000, 8, 1);
  const auto b = magnetization_estimate(g, 0.45, 0.05, 100, 9000, 8, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("furcation degree") {
  const Graph t = build_tree(3, 5);
  CHECK(furcation_degree(t, all(t, 0), 0, 5) == 0);
  CHECK(furcation_degree(t, all(t, 1), 0, 5) == 3);
  // keep only the branch through vertex 1
  auto bits = all(t, 1).open;
  bits[t.find_edge(0, 2)] = 0;
  bits[t.find_edge(0, 3)] = 0;
  CHECK(furcation_degree(t, make_config(t, bits), 0, 5) == 1);
  // a cycle: both neighbors of a vertex lie in one cluster after deletion
  const Graph c = build_cycle(12);
  CHECK(furcation_degree(c, all(c, 1), 0, 3) == 1);
}

TEST_CASE("dual configurations") {
  const CombinatorialMap m = build_tiling(4, 4, 4);
  const DualMap d = dual(m);
  const Graph& g = m.graph();
  const auto open = sample_config(g, 1.0, {1, 1});
  const auto dc = dual_config(m, d, open);
  CHECK(dc.open_count() == 0);
  CHECK(dc.p == 0.0);
  CHECK(dc.untransported.size() == g.boundary_vertices().size());
  const auto half = sample_config(g, 0.5, {2, 2});
  const auto dh = dual_config(m, d, half);
  CHECK(dh.p == 0.5);
  // transporting twice returns the original bits on doubly-interior edges
  const DualMap dd = dual(d.map);
  const auto back = dual_config(d.map, dd, dh);
  for (EdgeId k = 0; k < dd.map.graph().edge_count(); ++k) {
    const EdgeId primal = d.edge_to_primal_edge[dd.edge_to_primal_edge[k]];
    CHECK(back.open[k] == half.open[primal]);
  }
}

TEST_CASE("tree cluster sampler matches the explicit tree") {
  // mean generation sizes k (k-1)^(n-1) p^n
  const TreeClusterSampler sampler(3, 0.5);
  const int n = 20000;
  std::vector<double> sums(6, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto c = sampler.sample({21, std::uint64_t(i)}, 5);
    for (std::size_t l = 0; l < c.level.size(); ++l) sums[l] += static_cast<double>(c.level[l]);
  }
  for (int l = 1; l <= 5; ++l) {
    CHECK(sums[l] / n == doctest::Approx(1.5).epsilon(0.06));
  }
}
