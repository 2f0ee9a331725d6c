#include <cmath>

#include "doctest.h"
#include "perclab/oracle.hpp"

using namespace perclab;

namespace {

Graph two_parallel_edges() {
  GraphOptions opt;
  opt.allow_parallel_edges = true;
  return Graph("parallel", 2, {{0, 1}, {0, 1}}, {}, opt);
}

Graph two_components() {
  GraphOptions opt;
  opt.allow_disconnected = true;
  return Graph("pair-of-edges", 4, {{0, 1}, {2, 3}}, {}, opt);
}

bool connected_in(const Graph& g, EdgeMask open, VertexId a, VertexId b) {
  std::vector<VertexId> stack{a};
  std::vector<std::uint8_t> seen(g.vertex_count(), 0);
  seen[a] = 1;
  while (!stack.empty()) {
    const VertexId x = stack.back();
    stack.pop_back();
    for (const Incidence& inc : g.neighbors(x)) {
      if (((open >> inc.edge) & 1U) && !seen[inc.to]) {
        seen[inc.to] = 1;
        stack.push_back(inc.to);
      }
    }
  }
  return seen[b];
}

// witness split: W ⊆ open joins w-u and open \ W joins w-v
bool disjoint_by_split(const Graph& g, EdgeMask open, VertexId w, VertexId u, VertexId v) {
  EdgeMask sub = open;
  for (;;) {
    if (connected_in(g, sub, w, u) && connected_in(g, open & ~sub, w, v)) return true;
    if (sub == 0) return false;
    sub = (sub - 1) & open;
  }
}

// Brute force over ghost subsets for ℓ = 2 or 3: every ghost pattern is
// enumerated with its probability and the witness is searched by splitting
// the open edges.
double brute_disjoint_ghost(const Graph& g, double p, const std::vector<double>& h,
                            const std::vector<VertexId>& vs) {
  const std::size_t nv = g.vertex_count(), ne = g.edge_count(), l = vs.size();
  auto hits = [&](EdgeMask m, VertexId a, std::uint32_t ghosts) {
    for (VertexId x = 0; x < nv; ++x) {
      if (((ghosts >> x) & 1U) && connected_in(g, m, a, x)) return true;
    }
    return false;
  };
  double total = 0.0;
  for (EdgeMask m = 0; m < (EdgeMask{1} << ne); ++m) {
    const int k = __builtin_popcount(m);
    const double pm = std::pow(p, k) * std::pow(1 - p, static_cast<double>(ne - k));
    std::vector<std::uint32_t> gh(l, 0);
    const std::uint32_t patterns = 1U << nv;
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double w) {
      if (i == l) {
        bool ok = false;
        EdgeMask s1 = m;
        for (;;) {
          if (hits(s1, vs[0], gh[0])) {
            const EdgeMask rest = m & ~s1;
            if (l == 2) {
              ok = hits(rest, vs[1], gh[1]);
            } else {
              EdgeMask s2 = rest;
              for (;;) {
                if (hits(s2, vs[1], gh[1]) && hits(rest & ~s2, vs[2], gh[2])) {
                  ok = true;
                  break;
                }
                if (s2 == 0) break;
                s2 = (s2 - 1) & rest;
              }
            }
          }
          if (ok || s1 == 0) break;
          s1 = (s1 - 1) & m;
        }
        if (ok) total += pm * w;
        return;
      }
      const double q = -std::expm1(-h[i]);
      for (std::uint32_t s = 0; s < patterns; ++s) {
        const int c = __builtin_popcount(s);
        gh[i] = s;
        rec(i + 1, w * std::pow(q, c) * std::pow(1 - q, static_cast<double>(nv - c)));
      }
    };
    rec(0, 1.0);
  }
  return total;
}

}  // namespace

TEST_CASE("exact event probabilities on tiny graphs") {
  const double p = 0.3;
  CHECK(exact_event_prob(build_path(1), EventSpec::connection(0, 1), p).value ==
        doctest::Approx(p).epsilon(1e-15));
  CHECK(exact_event_prob(two_parallel_edges(), EventSpec::connection(0, 1), p).value ==
        doctest::Approx(2 * p - p * p).epsilon(1e-15));
  CHECK(exact_event_prob(build_path(2), EventSpec::connection(0, 2), p).value ==
        doctest::Approx(p * p).epsilon(1e-15));
  // volume >= 2 at the centre of a 3-star: 1 - (1-p)^3
  CHECK(exact_event_prob(build_star(3), EventSpec::volume_at_least(0, 2), p).value ==
        doctest::Approx(1 - std::pow(1 - p, 3)));
  const auto poly = exact_event_prob(build_path(1), EventSpec::connection(0, 1), 0.2).poly;
  const Rational r = poly.exact(rational_from_double(0.2));
  CHECK(r.num * 5 == r.den);
}

TEST_CASE("rational_from_double picks the shortest decimal") {
  const Rational a = rational_from_double(0.2);
  CHECK(a.num == 1);
  CHECK(a.den == 5);
  const Rational b = rational_from_double(0.125);
  CHECK(b.num == 1);
  CHECK(b.den == 8);
  const Rational c = rational_from_double(0.3);
  CHECK(c.num == 3);
  CHECK(c.den == 10);
  CHECK_THROWS(rational_from_double(std::nan("")));
}

TEST_CASE("flow test for disjoint connections agrees with witness splitting") {
  const Graph g = build_complete(4);
  std::size_t positives = 0;
  for (EdgeMask m = 0; m < (EdgeMask{1} << g.edge_count()); ++m) {
    for (VertexId w = 0; w < 4; ++w) {
      for (VertexId u = 0; u < 4; ++u) {
        for (VertexId v = 0; v < 4; ++v) {
          const bool flow = disjoint_connections(g, m, w, u, v);
          CHECK(flow == disjoint_by_split(g, m, w, u, v));
          positives += flow;
        }
      }
    }
  }
  CHECK(positives > 0);
}

TEST_CASE("disjoint occurrence: flow and witness search agree") {
  const Graph g = build_grid(3, 2);
  const double p = 0.45;
  for (VertexId w = 0; w < g.vertex_count(); ++w) {
    for (VertexId u = 0; u < g.vertex_count(); ++u) {
      const VertexId v = (u + 2) % static_cast<VertexId>(g.vertex_count());
      const auto fast = disjoint_occurrence_prob(g, EventSpec::connection(u, w), EventSpec::connection(w, v), p);
      const auto a = EventSpec::custom([&, u, w](EdgeMask m) { return connected_in(g, m, u, w); }, true);
      const auto b = EventSpec::custom([&, v, w](EdgeMask m) { return connected_in(g, m, w, v); }, true);
      const auto slow = disjoint_occurrence_prob(g, a, b, p);
      CHECK(fast.poly.coeff == slow.poly.coeff);
    }
  }
  CHECK_THROWS(disjoint_occurrence_prob(g, EventSpec::custom([](EdgeMask) { return true; }, false),
                                        EventSpec::connection(0, 1), p));
}

TEST_CASE("A∘B with a trivial event reduces to the other event") {
  const Graph g = build_cycle(5);
  const double p = 0.6;
  const auto ab = disjoint_occurrence_prob(g, EventSpec::connection(2, 2), EventSpec::connection(2, 4), p);
  const auto b = exact_event_prob(g, EventSpec::connection(2, 4), p);
  CHECK(ab.value == doctest::Approx(b.value).epsilon(1e-14));
  // two disjoint routes around a cycle from 0 back to 0 exist only when all edges are open
  const auto loop = disjoint_occurrence_prob(g, EventSpec::connection(0, 1), EventSpec::connection(0, 1), p);
  const double pc = std::pow(p, 5);
  CHECK(loop.value == doctest::Approx(pc).epsilon(1e-14));
}

TEST_CASE("BK holds for every triple, with the bridge criterion matching flow") {
  for (const Graph& g : {build_complete(4), build_grid(3, 3), build_cycle(6), build_tree(3, 2)}) {
    for (double p : {0.2, 0.5, 0.85}) {
      const BkSweep s = verify_bk_all_triples(g, p);
      CHECK(s.violations == 0);
      CHECK(s.min_slack >= 0.0);
      CHECK(s.checked == g.vertex_count() * g.vertex_count() * (g.vertex_count() + 1) / 2);
    }
  }
  // bridge-based counts equal flow-based counts for one triple
  const Graph g = build_grid(3, 3);
  const auto flow = disjoint_occurrence_prob(g, EventSpec::connection(0, 4), EventSpec::connection(4, 8), 0.5);
  const auto bk = verify_bk(g, EventSpec::connection(0, 4), EventSpec::connection(4, 8), 0.5);
  CHECK(bk.holds);
  CHECK(bk.prob_disjoint == doctest::Approx(flow.value));
  CHECK(bk.slack == doctest::Approx(bk.prob_a * bk.prob_b - bk.prob_disjoint).epsilon(1e-12));
}

TEST_CASE("distance table partitions every pair") {
  const Graph g = build_grid(3, 2);
  const DistanceTable t(g);
  const double p = 0.37;
  for (VertexId u = 0; u < g.vertex_count(); ++u) {
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      double shells = 0.0;
      for (std::uint32_t j = 0; j < g.vertex_count(); ++j) shells += t.range(u, v, j, j)(p);
      CHECK(shells == doctest::Approx(t.tau(u, v)(p)).epsilon(1e-13));
      CHECK(t.tau(u, v)(p) == doctest::Approx(exact_event_prob(g, EventSpec::connection(u, v), p).value));
    }
  }
  CHECK(t.range(0, 0, 0, 0)(p) == doctest::Approx(1.0));
}

TEST_CASE("entrywise inequalities hold exactly on small graphs") {
  const DistanceTable path(build_path(3));
  const DistanceTable grid(build_grid(3, 3));
  for (std::uint32_t n = 0; n <= 3; ++n) {
    for (std::uint32_t m = 0; m <= 3; ++m) {
      const auto a = verify_entrywise_inequalities(path, 0.5, n, m);
      CHECK(a.extrinsic_holds);
      CHECK(a.intrinsic_holds);
      const auto b = verify_entrywise_inequalities(grid, 0.3, n, m);
      CHECK(b.extrinsic_holds);
      CHECK(b.intrinsic_holds);
      CHECK(b.extrinsic_min_slack >= 0.0);
      CHECK(b.intrinsic_min_slack >= 0.0);
    }
  }
  // path 0-1-2-3 at n = m = 1: C_2(0,2) = p² and (C_1 S_1)(0,2) = τ(0,1)τ(1,2) = p²
  const auto tight = verify_entrywise_inequalities(path, 0.5, 1, 1);
  CHECK(tight.extrinsic_min_slack == doctest::Approx(0.0));
}

TEST_CASE("inverse BK on disjoint components factorises") {
  const std::vector<double> h{0.5, 0.8};
  const auto r = verify_inverse_bk(two_components(), {0.4}, h, {0, 2}).front();
  const double m1 = 0.4 * -std::expm1(-2 * 0.5) + 0.6 * -std::expm1(-0.5);
  const double m2 = 0.4 * -std::expm1(-2 * 0.8) + 0.6 * -std::expm1(-0.8);
  CHECK(r.prob_disjoint_occurrence == doctest::Approx(m1 * m2).epsilon(1e-13));
  CHECK(r.prob_distinct_clusters == doctest::Approx(m1 * m2).epsilon(1e-13));
  CHECK(r.holds);
}

TEST_CASE("inverse BK ghost integration matches brute force") {
  SUBCASE("two vertices on a cycle") {
    const Graph g = build_cycle(4);
    const std::vector<double> h{0.5, 0.3};
    const auto r = verify_inverse_bk(g, {0.6}, h, {0, 1}).front();
    CHECK(r.prob_disjoint_occurrence == doctest::Approx(brute_disjoint_ghost(g, 0.6, h, {0, 1})).epsilon(1e-12));
  }
  SUBCASE("three vertices on a star") {
    const Graph g = build_star(3);
    const std::vector<double> h{0.4, 0.7, 0.2};
    const auto r = verify_inverse_bk(g, {0.5}, h, {0, 1, 2}).front();
    CHECK(r.prob_disjoint_occurrence == doctest::Approx(brute_disjoint_ghost(g, 0.5, h, {0, 1, 2})).epsilon(1e-12));
  }
  SUBCASE("three vertices on a triangle with a tail") {
    const Graph g("kite", 4, {{0, 1}, {1, 2}, {2, 0}, {2, 3}});
    const std::vector<double> h{0.3, 0.3, 0.6};
    const auto r = verify_inverse_bk(g, {0.7}, h, {0, 1, 3}).front();
    CHECK(r.prob_disjoint_occurrence == doctest::Approx(brute_disjoint_ghost(g, 0.7, h, {0, 1, 3})).epsilon(1e-12));
  }
}

TEST_CASE("inverse BK and diagrammatic bounds with proof constants") {
  const Graph g = build_path(6);
  const auto rs = verify_inverse_bk(g, {0.2, 0.5, 0.8}, {0.5, 0.5}, {1, 4});
  for (const auto& r : rs) {
    CHECK(r.holds);
    CHECK(r.prob_distinct_clusters <= r.prob_disjoint_occurrence + 1e-15);
    CHECK(r.prod_inf_magnetization <= r.prod_sup_magnetization);
    // for two vertices the printed constants vanish
    CHECK(r.inverse_bk_printed_correction == 0.0);
    CHECK(r.diagrammatic_printed_correction == 0.0);
  }
  const auto star = verify_inverse_bk(build_star(4), {0.3, 0.7}, {0.4, 0.4, 0.4}, {1, 2, 3});
  for (const auto& r : star) CHECK(r.holds);
  CHECK_THROWS_AS(verify_inverse_bk(build_grid(4, 4), {0.5}, {1, 1}, {0, 1}), OracleCapExceeded);
}

TEST_CASE("tree recursion closed forms") {
  CHECK(tree_recursion(3, 0.3, 0.1, 5).chi == doctest::Approx(3.25));
  CHECK(tree_recursion(3, 0.3, 0.0, 5).magnetization == 0.0);
  CHECK(tree_recursion(3, 0.0, 0.7, 5).magnetization == doctest::Approx(-std::expm1(-0.7)));
  CHECK(tree_recursion(3, 0.75, 0.1, 5).branch_survival == doctest::Approx((2 * 0.75 - 1) / (0.75 * 0.75)));
  CHECK(tree_recursion(3, 0.5, 0.1, 5).branch_survival == 0.0);
  CHECK(std::isinf(tree_recursion(3, 0.6, 0.1, 5).chi));
  const auto r = tree_recursion(4, 0.2, 0.1, 6);
  CHECK(r.sphere[3] == doctest::Approx(4 * 9 * 0.008));
  CHECK(r.ball[2] == doctest::Approx(1 + 0.8 + 4 * 3 * 0.04));
}

TEST_CASE("truncated tree recursion equals exact enumeration") {
  const int depth = 3;
  const Graph g = build_tree(3, depth);
  for (double p : {0.35, 0.6}) {
    const auto r = tree_recursion(3, p, 0.4, depth + 1, depth);
    for (std::uint32_t n = 1; n <= depth; ++n) {
      const double exact = exact_event_prob(g, EventSpec::radius_at_least(0, n, true), p).value;
      CHECK(r.radius_tail[n] == doctest::Approx(exact).epsilon(1e-12));
    }
    CHECK(r.radius_tail[depth + 1] == 0.0);
    CHECK(r.theta == doctest::Approx(r.radius_tail[depth]).epsilon(1e-14));
    const double mag = exact_event_prob(g, EventSpec::ghost_connection(0, 0.4), p).value;
    CHECK(r.magnetization == doctest::Approx(mag).epsilon(1e-12));
  }
  const Graph small = build_tree(3, 2);
  double chi = 0.0;
  for (VertexId v = 0; v < small.vertex_count(); ++v) {
    chi += exact_event_prob(small, EventSpec::connection(0, v), 0.45).value;
  }
  CHECK(tree_recursion(3, 0.45, 0.1, 2, 2).chi == doctest::Approx(chi).epsilon(1e-13));
}

TEST_CASE("tree volume distribution") {
  const double p = 0.3;
  const auto d = tree_volume_distribution(3, p, 3000);
  CHECK(d[1] == doctest::Approx(std::pow(1 - p, 3)));
  CHECK(d[2] == doctest::Approx(3 * p * std::pow(1 - p, 4)));
  double mass = 0.0, mean = 0.0;
  for (std::size_t n = 1; n < d.size(); ++n) {
    mass += d[n];
    mean += n * d[n];
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mean == doctest::Approx(tree_recursion(3, p, 0.1, 1).chi).epsilon(1e-6));
}

TEST_CASE("oracle caps and golden json") {
  CHECK_THROWS_AS(exact_event_prob(build_grid(5, 5), EventSpec::connection(0, 1), 0.5), OracleCapExceeded);
  const Graph g = build_path(3);
  const std::string doc = oracle_golden_json(g, {verify_entrywise_inequalities(g, 0.5, 1, 1)},
                                             {verify_bk_all_triples(g, 0.5)}, {});
  CHECK(doc.find("\"entrywise\"") != std::string::npos);
  CHECK(doc.find("\"hash\"") != std::string::npos);
}
