#include <cmath>

#include "doctest.h"
#include "perclab/estimators.hpp"
#include "perclab/oracle.hpp"
#include "perclab/percolation.hpp"

using namespace perclab;

namespace {

MonteCarloSource mc(std::uint64_t samples, std::uint64_t seed = 11, unsigned workers = 1) {
  MonteCarloSource s;
  s.samples = samples;
  s.master_seed = seed;
  s.workers = workers;
  return s;
}

// vertices reachable from s through the open edges of `mask`
std::vector<std::uint8_t> mask_cluster(const Graph& g, EdgeMask mask, VertexId s) {
  std::vector<std::uint8_t> in(g.vertex_count(), 0);
  std::vector<VertexId> stack{s};
  in[s] = 1;
  while (!stack.empty()) {
    const VertexId x = stack.back();
    stack.pop_back();
    for (const Incidence& inc : g.neighbors(x)) {
      if (!((mask >> inc.edge) & 1U) || in[inc.to]) continue;
      in[inc.to] = 1;
      stack.push_back(inc.to);
    }
  }
  return in;
}

}  // namespace

TEST_CASE("tree critical points are exact") {
  CHECK(estimate_pc(TreeSite{3}).value == 0.5);
  CHECK(estimate_pc(TreeSite{4}).value == doctest::Approx(1.0 / 3.0));
  CHECK(estimate_pc(TreeSite{3}).exact);
  CHECK_THROWS(estimate_pc(TreeSite{2}));
}

TEST_CASE("log-spaced points and survival curves") {
  const auto pts = log_spaced(8, 256, 4);
  CHECK(pts.front() == 8);
  CHECK(pts.back() == 256);
  CHECK(std::is_sorted(pts.begin(), pts.end()));
  const auto c = SurvivalCurve::from_hits({10, 6, 6, 1}, 10);
  CHECK(c.nonincreasing());
  CHECK(c.prob[1] == doctest::Approx(0.6));
  CHECK(c.band[0].hi == doctest::Approx(1.0));
  CHECK_FALSE(SurvivalCurve::from_hits({3, 4}, 10).nonincreasing());
}

TEST_CASE("invasion thresholds reproduce the coupled arm probabilities exactly") {
  const Graph g = build_grid(7, 7);
  PcScan scan;
  scan.root = deepest_vertex(g);
  CHECK(scan.root == 24);
  scan.radii = {1, 2, 3};
  scan.p_lo = 0.0;
  scan.p_hi = 1.0;
  scan.grid = 21;
  const auto source = mc(400, 5);
  const auto dist = bfs_distances(g, scan.root);
  // the estimator may refuse on so few samples; the arm curves are what matter
  PcEstimate est;
  try {
    est = estimate_pc(g, scan, source);
  } catch (const std::domain_error&) {
    return;
  }
  ClusterExplorer ex(g);
  for (std::size_t i : {3u, 8u, 12u, 17u}) {
    const double p = est.p_grid[i];
    for (std::size_t s = 0; s < scan.radii.size(); ++s) {
      std::uint64_t hits = 0;
      for (std::uint64_t k = 0; k < source.samples; ++k) {
        ex.explore(scan.root, EdgeSampler(Seed{source.master_seed, k}, p), nullptr);
        for (VertexId w : ex.members())
          if (dist[w] == scan.radii[s]) {
            ++hits;
            break;
          }
      }
      CHECK(est.arm_prob[s][i] == doctest::Approx(hits / 400.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("square lattice crossing lands at one half") {
  const Graph g = build_tiling(4, 4, 20).graph();
  PcScan scan;
  scan.root = deepest_vertex(g);
  scan.radii = {4, 8, 16};
  scan.p_lo = 0.3;
  scan.p_hi = 0.7;
  const auto est = estimate_pc(g, scan, mc(20000));
  CHECK(std::abs(est.value - 0.5) < 0.02);
  CHECK(est.error > 0);
  CHECK(est.crossings.size() == 1);

  // worker count does not change anything
  auto source = mc(20000);
  source.workers = 3;
  const auto again = estimate_pc(g, scan, source);
  CHECK(again.value == est.value);
  CHECK(again.arm_prob == est.arm_prob);

  // a range entirely below the threshold has no crossing
  scan.p_lo = 0.05;
  scan.p_hi = 0.3;
  CHECK_THROWS_AS(estimate_pc(g, scan, mc(5000)), std::domain_error);
  scan.radii = {4, 8};
  CHECK_THROWS_AS(estimate_pc(g, scan, mc(10)), std::invalid_argument);
}

TEST_CASE("merge diagnostic on the square lattice sits at the same threshold") {
  const Graph g = build_tiling(4, 4, 30).graph();
  PcScan scan;
  scan.root = deepest_vertex(g);
  scan.radii = {3, 6, 12};
  scan.p_lo = 0.3;
  scan.p_hi = 0.9;
  const auto est = estimate_pu_merge(g, scan, mc(2000));
  CHECK(std::abs(est.value - 0.5) < 0.06);
}

TEST_CASE("duality bookkeeping on the square lattice") {
  const auto m = build_tiling(4, 4, 16);
  const auto d = dual(m);
  PcScan ds;
  ds.root = deepest_vertex(d.map.graph());
  ds.radii = {3, 6, 12};
  ds.p_lo = 0.3;
  ds.p_hi = 0.7;
  PcScan ms = ds;
  ms.root = deepest_vertex(m.graph());
  const auto r = pu_duality(d, ds, m.graph(), ms, mc(10000), 1000);
  CHECK(r.pu_transported == doctest::Approx(1.0 - r.pc_dual.value));
  CHECK(std::abs(r.pc_dual.value - 0.5) < 0.03);
  CHECK(std::abs(r.pc_dual.value + r.pu_transported - 1.0) < 1e-12);
  if (r.merge_available) CHECK(r.joint_error > 0);
}

TEST_CASE("tree tails: radius equals extrinsic radius and matches the recursion") {
  TailOptions o;
  o.n_max = 64;
  const auto r = tail_exponents(TreeSite{3}, 0.5, o, mc(100000));
  CHECK(r.rad_int.hits == r.rad_ext.hits);
  CHECK(r.volume.nonincreasing());
  CHECK(r.rad_int.nonincreasing());
  const auto exact = tree_recursion(3, 0.5, 0.0, 64);
  for (std::uint32_t n : {1u, 4u, 16u, 40u}) {
    const double p = r.rad_int.prob[n - 1];
    const double se = std::sqrt(p * (1 - p) / 100000.0);
    CHECK(std::abs(p - exact.radius_tail[n]) < 4 * se + 1e-12);
  }
  // volume tail against the hitting-time distribution
  const auto dist = tree_volume_distribution(3, 0.5, 64);
  double surv = 1.0;
  for (std::uint32_t n = 1; n <= 32; ++n) {
    const double p = r.volume.prob[n - 1];
    const double se = std::sqrt(surv * (1 - surv) / 100000.0);
    CHECK(std::abs(p - surv) < 4 * se + 1e-12);
    surv -= dist[n];
  }
  CHECK(r.volume_fit.fit.slope < -0.3);
  CHECK(r.volume_fit.fit.slope > -0.7);

  TailOptions narrow = o;
  narrow.fit_min = 5;
  narrow.fit_max = 7;
  CHECK_THROWS_AS(tail_exponents(TreeSite{3}, 0.5, narrow, mc(100)), std::domain_error);
  narrow.fit_max = 100;
  CHECK_THROWS_AS(tail_exponents(TreeSite{3}, 0.5, narrow, mc(100)), std::domain_error);
}

TEST_CASE("graph survival curves are monotone in n and in p") {
  const Graph g = build_grid(12, 12);
  const VertexId v = deepest_vertex(g);
  TailOptions o;
  o.n_max = 8;
  const auto lo = tail_exponents(g, v, 0.45, o, mc(3000));
  const auto hi = tail_exponents(g, v, 0.55, o, mc(3000));
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(lo.volume.hits[i] <= hi.volume.hits[i]);
    CHECK(lo.rad_ext.hits[i] <= hi.rad_ext.hits[i]);
  }
  CHECK(lo.rad_ext.nonincreasing());
  CHECK(hi.rad_int.nonincreasing());
  for (std::size_t i = 0; i < 8; ++i) CHECK(hi.rad_ext.hits[i] <= hi.rad_int.hits[i]);
}

TEST_CASE("ballisticity trivial cases and refusal") {
  const Graph tree = build_tree(3, 6);
  const auto t = ballisticity(tree, 0, 1, 0.6, 8, {1.0, 1.5}, mc(5000));
  CHECK(t.max_ratio == 1.0);
  CHECK(t.ratio_tail[0] == 0.0);
  CHECK(t.conditional_tail.hits[1] == 0);  // d_int >= 2 never happens for neighbours

  const Graph grid = build_grid(6, 6);
  const auto full = ballisticity(grid, 14, 15, 1.0, 8, {1.0}, mc(200));
  CHECK(full.hits == 200);
  CHECK(full.max_ratio == 1.0);
  CHECK(full.ratio_tail[0] == 0.0);

  CHECK_THROWS_AS(ballisticity(grid, 0, 35, 0.05, 20, {1.0}, mc(500)), std::domain_error);

  const auto crit = ballisticity(grid, 14, 15, 0.5, 12, {1.0, 2.0}, mc(20000));
  CHECK(crit.conditional_tail.prob[0] == 1.0);
  CHECK(crit.rate > 0);
  CHECK(crit.max_ratio > 1.0);
}

TEST_CASE("magnetization scaling: p = 0 control and tree recursion") {
  const auto zero = magnetization_scaling(TreeSite{3}, 0.0, {0.01, 0.03, 0.1}, mc(20000));
  for (std::size_t j = 0; j < zero.h.size(); ++j)
    CHECK(zero.estimate[j].mean == doctest::Approx(-std::expm1(-zero.h[j])));
  // at p = 0 the magnetization is 1 - e^{-h} exactly, so the fit has no noise
  std::vector<double> lx, ly;
  for (double h : zero.h) {
    lx.push_back(std::log(h));
    ly.push_back(std::log(-std::expm1(-h)));
  }
  CHECK(zero.fit.slope == doctest::Approx(linear_fit(lx, ly).slope).epsilon(1e-9));

  const auto tree = magnetization_scaling(TreeSite{3}, 0.5, {0.01, 0.03, 0.1}, mc(20000));
  for (double z : tree.z) CHECK(std::abs(z) < 4);
  CHECK(tree.exact_fit.slope > 0.3);
  CHECK(tree.exact_fit.slope < 0.5);

  // too small h for the sample size is dropped with a warning
  const auto thin = magnetization_scaling(TreeSite{3}, 0.0, {1e-6, 0.2, 0.3}, mc(1000));
  CHECK(thin.dropped_h.size() == 1);
  CHECK_FALSE(thin.warnings.empty());

  const Graph g = build_tree(3, 8);
  const auto on_graph = magnetization_scaling(g, 0, 0.5, {0.05, 0.1}, mc(5000));
  const auto exact = tree_recursion(3, 0.5, 0.1, 1, 8).magnetization;
  CHECK(std::abs(on_graph.estimate[1].mean - exact) < 4 * on_graph.estimate[1].std_error);
}

TEST_CASE("multi-arm: independence on disjoint components") {
  std::vector<Edge> edges;
  for (VertexId i = 0; i < 6; ++i) edges.push_back({i, i + 1});
  for (VertexId i = 7; i < 13; ++i) edges.push_back({i, i + 1});
  GraphOptions opt;
  opt.allow_disconnected = true;
  const Graph g("two paths", 14, edges, {}, opt);
  const auto r = multi_arm(g, {0, 7}, 0.6, ArmMode::volume, {3, 3}, mc(100000));
  CHECK(r.bound_holds);
  CHECK(std::abs(r.ratio - 1.0) < 0.05);
  const double single = 0.6 * 0.6;
  CHECK(std::abs(r.single[0].mean - single) < 4 * r.single[0].std_error);
  CHECK(r.pairwise_distance[1] == kUnreachable);
}

TEST_CASE("multi-arm joint event matches exhaustive enumeration") {
  const Graph g = build_tree(3, 2);  // 9 edges
  const VertexId a = 4, b = 9;       // leaves under different children of the root
  const std::uint64_t n = 3;
  auto pred = [&](EdgeMask mask) {
    const auto ka = mask_cluster(g, mask, a);
    if (ka[b]) return false;
    const auto kb = mask_cluster(g, mask, b);
    std::uint64_t va = 0, vb = 0;
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      va += ka[v];
      vb += kb[v];
    }
    return va >= n && vb >= n;
  };
  for (double p : {0.3, 0.7}) {
    const double exact = exact_event_prob(g, EventSpec::custom(pred, false), p).value;
    const auto r = multi_arm(g, {a, b}, p, ArmMode::volume, {3, 3}, mc(50000));
    CHECK(std::abs(r.joint.mean - exact) < 4 * r.joint.std_error + 1e-12);
    CHECK(r.bound_holds);
  }
  const auto rad = multi_arm(g, {a, b}, 0.5, ArmMode::rad_int, {1}, mc(1000));
  CHECK(rad.single.size() == 2);
  CHECK(to_string(parse_arm_mode("boundary_reach")) == "boundary_reach");
  CHECK_THROWS(parse_arm_mode("ghost"));
  CHECK_THROWS(multi_arm(g, {a, b}, 0.5, ArmMode::volume, {3}, mc(10)));
}

TEST_CASE("trifurcation on the tree against the recursion") {
  const auto curve = trifurcation_curve(TreeSite{3}, {0.6, 0.7}, 64, mc(20000));
  for (const auto& pt : curve.points) {
    CHECK(std::abs(pt.z) < 4);
    CHECK(pt.estimate.mean <= pt.bk_product + 4 * pt.estimate.std_error);
    CHECK(pt.exact >= pt.exact_infinite);
  }
  CHECK(curve.ratio_band >= 1.0);
  CHECK_THROWS(trifurcation_curve(TreeSite{3}, {0.5}, 64, mc(10)));
  CHECK_THROWS(trifurcation_curve(TreeSite{4}, {0.6}, 64, mc(10)));

  // the explicit finite tree with horizon at its depth gives the same law
  const Graph g = build_tree(3, 6);
  const auto finite = trifurcation_curve(g, 0, 0.5, {0.7}, 6, mc(20000));
  const double exact = std::pow(0.7 * tree_branch_reach(3, 0.7, 5), 3);
  const auto& pt = finite.points[0];
  CHECK(std::abs(pt.estimate.mean - exact) < 4 * pt.estimate.std_error);
}

TEST_CASE("logarithmic density") {
  const auto full = delta_log(TreeSite{3}, 0.5, {1.0}, 8, mc(64));
  CHECK(full.points[0].delta == doctest::Approx(1.0));
  CHECK(full.points[0].std_error == doctest::Approx(0.0).epsilon(1e-12));

  const Graph g = build_grid(15, 15);
  const auto grid = delta_log(g, deepest_vertex(g), 0.5, {1.0}, 5, mc(32));
  CHECK(grid.points[0].delta == doctest::Approx(1.0));

  const auto super = delta_log(TreeSite{3}, 0.5, {0.55}, 20, mc(20000));
  CHECK(std::abs(super.points[0].delta - std::log(1.1) / std::log(2.0)) < 0.05);
  CHECK(super.slope_through_origin > 0);

  const auto crit = delta_log(TreeSite{3}, 0.5, {0.5}, 20, mc(20000));
  // E|K ∩ B(n)| grows linearly, so the slope is about log((n+1)/n)/log 2
  CHECK(crit.points[0].delta < 0.15);
}

TEST_CASE("explorer caps: distance and radius") {
  const Graph path = build_path(5);
  ClusterExplorer ex(path);
  auto open = [](EdgeId) { return true; };
  bool capped = false;
  CHECK(ex.intrinsic_distance(0, 5, open, 1000, &capped, 5) == 5);
  CHECK_FALSE(capped);
  CHECK(ex.intrinsic_distance(0, 5, open, 1000, &capped, 4) == kUnreachable);
  CHECK(capped);
  ConRadSearch search(path, 0, 5);
  CHECK(search(open) == 3);
  CHECK(search(open, 3) == 3);
  CHECK(search(open, 2) == kUnreachable);
}

TEST_CASE("p_u geometry: all open, connectivity bookkeeping, sandwich") {
  const auto m = build_tiling(3, 7, 5);
  const auto d = dual(m);
  const Graph& g = m.graph();
  const VertexId x = deepest_vertex(g);
  const EdgeId e = g.neighbors(x)[0].edge;
  PuGeometryOptions o;
  o.n_max = 6;

  const auto all = pu_geometry(m, d, e, 1.0, o, mc(200));
  CHECK(all.connected == 200);
  CHECK(all.dint_tail.hits[1] == 0);
  CHECK(all.conrad_tail.hits[1] == 0);

  const auto r = pu_geometry(m, d, e, 0.45, o, mc(5000));
  CHECK(r.connected + r.disconnected + r.unresolved == 5000);
  // independent count of x <-> y with the same samples
  ClusterExplorer ex(g);
  const VertexId y = g.edges()[e].other(x);
  std::uint64_t conn = 0;
  for (std::uint64_t i = 0; i < 5000; ++i) {
    ex.explore(g.edges()[e].u, EdgeSampler(Seed{11, i}, 0.45), nullptr);
    conn += ex.reached(g.edges()[e].v) ? 1 : 0;
  }
  (void)y;
  CHECK(r.connected == conn);
  CHECK(r.distinctness_violations == 0);
  CHECK(r.dint_tail.nonincreasing());
  CHECK(r.conrad_tail.nonincreasing());
  if (r.sandwich_samples > 0) {
    CHECK(r.c_lower > 0);
    CHECK(r.c_lower <= r.c_upper);
  }
  CHECK_THROWS(pu_geometry(m, d, e, 0.01, o, mc(50)));
}
