#include "perclab/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <unordered_map>

#include "json.hpp"

#include "perclab/parallel.hpp"

namespace perclab {

namespace {

constexpr std::uint64_t kEnumChunk = 1 << 14;

void require_cap(const Graph& g, std::size_t cap, const char* what) {
  if (g.edge_count() > cap) throw OracleCapExceeded(what, g.edge_count(), cap);
  if (g.vertex_count() > 64) {
    throw std::invalid_argument(std::string(what) + ": oracle supports at most 64 vertices");
  }
}

/// Vertex bitmask reachable from s over edges in `open`; optional distances.
std::uint64_t reach(const Graph& g, EdgeMask open, VertexId s, std::uint32_t* dist = nullptr) {
  std::uint64_t seen = std::uint64_t{1} << s;
  VertexId queue[64];
  std::size_t tail = 0;
  queue[tail++] = s;
  if (dist) {
    std::fill(dist, dist + g.vertex_count(), kUnreachable);
    dist[s] = 0;
  }
  for (std::size_t head = 0; head < tail; ++head) {
    const VertexId x = queue[head];
    for (const Incidence& inc : g.neighbors(x)) {
      if (!((open >> inc.edge) & 1U)) continue;
      const std::uint64_t bit = std::uint64_t{1} << inc.to;
      if (seen & bit) continue;
      seen |= bit;
      if (dist) dist[inc.to] = dist[x] + 1;
      queue[tail++] = inc.to;
    }
  }
  return seen;
}

struct EventEvaluator {
  const Graph& g;
  const EventSpec& ev;
  std::vector<std::uint32_t> ambient;  // distances from ev.u (extrinsic radius)

  EventEvaluator(const Graph& graph, const EventSpec& e) : g(graph), ev(e) {
    if (e.kind == EventSpec::Kind::radius_at_least && !e.intrinsic) ambient = bfs_distances(g, e.u);
    if (e.kind != EventSpec::Kind::custom &&
        (e.u >= g.vertex_count() || e.v >= g.vertex_count())) {
      throw std::invalid_argument("event refers to a vertex outside the graph");
    }
  }

  double operator()(EdgeMask open) const {
    switch (ev.kind) {
      case EventSpec::Kind::connection:
        return (reach(g, open, ev.u) >> ev.v) & 1U ? 1.0 : 0.0;
      case EventSpec::Kind::volume_at_least:
        return static_cast<std::uint64_t>(std::popcount(reach(g, open, ev.u))) >= ev.n ? 1.0 : 0.0;
      case EventSpec::Kind::radius_at_least: {
        std::uint32_t dist[64];
        const std::uint64_t k = reach(g, open, ev.u, dist);
        std::uint32_t r = 0;
        for (VertexId x = 0; x < g.vertex_count(); ++x) {
          if (!((k >> x) & 1U)) continue;
          r = std::max(r, ev.intrinsic ? dist[x] : ambient[x]);
        }
        return r >= ev.n ? 1.0 : 0.0;
      }
      case EventSpec::Kind::ghost_connection:
        return -std::expm1(-ev.h * std::popcount(reach(g, open, ev.u)));
      case EventSpec::Kind::custom:
        return ev.predicate(open) ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

using Coeffs = std::vector<double>;

Coeffs merge_coeffs_init(std::size_t e) { return Coeffs(e + 1, 0.0); }

template <class Weight>
Coeffs enumerate(const Graph& g, Weight&& weight, unsigned workers) {
  const std::size_t e = g.edge_count();
  const std::uint64_t total = std::uint64_t{1} << e;
  return sharded_reduce(
      total, workers, merge_coeffs_init(e),
      [&](Coeffs& acc, std::uint64_t b, std::uint64_t end) {
        for (std::uint64_t m = b; m < end; ++m) {
          const double w = weight(static_cast<EdgeMask>(m));
          if (w != 0.0) acc[std::popcount(m)] += w;
        }
      },
      [](Coeffs& t, const Coeffs& part) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += part[i];
      },
      kEnumChunk);
}

BigInt pow_big(const BigInt& base, std::size_t e) {
  BigInt r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= base;
  return r;
}

double big_ratio(const BigInt& num, const BigInt& den) {
  // both may exceed double range only for absurd denominators; scale down
  BigInt n = num, d = den;
  while (boost::multiprecision::msb(boost::multiprecision::abs(d)) > 1000) {
    n >>= 64;
    d >>= 64;
  }
  return n.convert_to<double>() / d.convert_to<double>();
}

/// Numerators of p^k (1-p)^(E-k) over b^E at p = a/b, for k = 0..E.
std::vector<BigInt> basis(const Rational& p, std::size_t e) {
  std::vector<BigInt> out(e + 1);
  const BigInt q = p.den - p.num;
  for (std::size_t k = 0; k <= e; ++k) out[k] = pow_big(p.num, k) * pow_big(q, e - k);
  return out;
}

BigInt scaled_with(const ExactPoly& poly, const std::vector<BigInt>& base) {
  BigInt s = 0;
  for (std::size_t k = 0; k < poly.coeff.size(); ++k) {
    if (poly.coeff[k] != 0.0) s += BigInt(static_cast<long long>(std::llround(poly.coeff[k]))) * base[k];
  }
  return s;
}

bool is_connection(const EventSpec& e) { return e.kind == EventSpec::Kind::connection; }

}  // namespace

// ---------------------------------------------------------------------------

EventSpec EventSpec::connection(VertexId a, VertexId b) {
  EventSpec e;
  e.kind = Kind::connection;
  e.u = a;
  e.v = b;
  return e;
}

EventSpec EventSpec::volume_at_least(VertexId a, std::uint64_t n) {
  EventSpec e;
  e.kind = Kind::volume_at_least;
  e.u = e.v = a;
  e.n = n;
  return e;
}

EventSpec EventSpec::radius_at_least(VertexId a, std::uint64_t n, bool intrinsic) {
  EventSpec e;
  e.kind = Kind::radius_at_least;
  e.u = e.v = a;
  e.n = n;
  e.intrinsic = intrinsic;
  return e;
}

EventSpec EventSpec::ghost_connection(VertexId a, double h) {
  if (!(h >= 0)) throw std::invalid_argument("ghost_connection: h must be >= 0");
  EventSpec e;
  e.kind = Kind::ghost_connection;
  e.u = e.v = a;
  e.h = h;
  return e;
}

EventSpec EventSpec::custom(std::function<bool(EdgeMask)> pred, bool increasing) {
  EventSpec e;
  e.kind = Kind::custom;
  e.predicate = std::move(pred);
  e.increasing = increasing;
  return e;
}

std::string EventSpec::describe() const {
  switch (kind) {
    case Kind::connection:
      return "connection(" + std::to_string(u) + "," + std::to_string(v) + ")";
    case Kind::volume_at_least:
      return "volume(" + std::to_string(u) + ")>=" + std::to_string(n);
    case Kind::radius_at_least:
      return std::string(intrinsic ? "rad_int(" : "rad_ext(") + std::to_string(u) +
             ")>=" + std::to_string(n);
    case Kind::ghost_connection:
      return "ghost(" + std::to_string(u) + ",h=" + std::to_string(h) + ")";
    case Kind::custom:
      return increasing ? "custom(increasing)" : "custom";
  }
  return "?";
}

double Rational::to_double() const { return big_ratio(num, den); }

Rational rational_from_double(double p) {
  if (!std::isfinite(p)) throw std::invalid_argument("rational_from_double: non-finite value");
  char buf[64];
  for (int prec = 0; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*e", prec, p);
    if (std::strtod(buf, nullptr) == p) break;
  }
  // buf = [-]d.ddde[+-]xx
  std::string s(buf);
  const auto epos = s.find('e');
  std::string mant = s.substr(0, epos);
  const int exp10 = std::stoi(s.substr(epos + 1));
  bool negative = false;
  if (!mant.empty() && mant[0] == '-') {
    negative = true;
    mant.erase(0, 1);
  }
  std::string digits;
  int frac = 0;
  bool after = false;
  for (char c : mant) {
    if (c == '.') {
      after = true;
      continue;
    }
    digits.push_back(c);
    if (after) ++frac;
  }
  BigInt num(digits);
  BigInt den = 1;
  const int shift = frac - exp10;  // value = digits * 10^-shift
  if (shift >= 0) {
    den = pow_big(BigInt(10), static_cast<std::size_t>(shift));
  } else {
    num *= pow_big(BigInt(10), static_cast<std::size_t>(-shift));
  }
  const BigInt g = boost::multiprecision::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (negative) num = -num;
  return {num, den};
}

double ExactPoly::operator()(double p) const {
  std::vector<double> terms;
  terms.reserve(coeff.size());
  for (std::size_t k = 0; k < coeff.size(); ++k) {
    if (coeff[k] == 0.0) continue;
    terms.push_back(coeff[k] * std::pow(p, static_cast<double>(k)) *
                    std::pow(1.0 - p, static_cast<double>(edges - k)));
  }
  return pairwise_sum(terms);
}

BigInt ExactPoly::scaled(const Rational& p) const {
  if (!integral) throw std::logic_error("ExactPoly: exact evaluation needs integer coefficients");
  return scaled_with(*this, basis(p, edges));
}

Rational ExactPoly::exact(const Rational& p) const {
  return {scaled(p), pow_big(p.den, edges)};
}

EventProbability exact_event_prob(const Graph& g, const EventSpec& event, double p,
                                  unsigned workers) {
  require_cap(g, kEventCap, "exact_event_prob");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("exact_event_prob: p outside [0,1]");
  const EventEvaluator eval(g, event);
  EventProbability out;
  out.poly.edges = g.edge_count();
  out.poly.coeff = enumerate(g, eval, workers);
  out.poly.integral = event.kind != EventSpec::Kind::ghost_connection;
  out.value = out.poly(p);
  return out;
}

bool disjoint_connections(const Graph& g, EdgeMask open, VertexId w, VertexId u, VertexId v) {
  if (u == w) return (reach(g, open, w) >> v) & 1U;
  if (v == w) return (reach(g, open, w) >> u) & 1U;
  // unit-capacity flow; arcs 2e (u->v) and 2e+1 (v->u), plus sink arcs
  const std::size_t ne = g.edge_count();
  const std::size_t nv = g.vertex_count();
  const VertexId sink = static_cast<VertexId>(nv);
  std::vector<int> flow(2 * ne, 0);  // net flow along edge e in direction u->v is flow[2e]-flow[2e+1]
  int sink_used_u = 0, sink_used_v = 0;
  const bool same = u == v;
  for (int round = 0; round < 2; ++round) {
    std::vector<std::int64_t> via(nv + 1, -2);  // arc index used to enter, -1 for source
    std::vector<VertexId> queue{w};
    via[w] = -1;
    bool found = false;
    for (std::size_t head = 0; head < queue.size() && !found; ++head) {
      const VertexId x = queue[head];
      for (const Incidence& inc : g.neighbors(x)) {
        if (!((open >> inc.edge) & 1U)) continue;
        const Edge& e = g.edge(inc.edge);
        const std::size_t arc = 2 * inc.edge + (e.u == x ? 0 : 1);
        // residual: capacity 1 each way, cancel opposite flow first
        const int used = flow[arc] - flow[arc ^ 1];
        if (used >= 1) continue;
        if (via[inc.to] != -2) continue;
        via[inc.to] = static_cast<std::int64_t>(arc);
        queue.push_back(inc.to);
      }
      if (same ? via[u] != -2 : false) found = true;
    }
    VertexId end = kUnreachable;
    if (same) {
      if (via[u] != -2) end = u;
    } else {
      if (via[u] != -2 && !sink_used_u) end = u;
      else if (via[v] != -2 && !sink_used_v) end = v;
    }
    if (end == kUnreachable) return false;
    if (!same) (end == u ? sink_used_u : sink_used_v) = 1;
    for (VertexId x = end; via[x] != -1;) {
      const std::size_t arc = static_cast<std::size_t>(via[x]);
      if (flow[arc ^ 1] > 0) {
        --flow[arc ^ 1];
      } else {
        ++flow[arc];
      }
      const Edge& e = g.edge(static_cast<EdgeId>(arc / 2));
      x = (arc & 1U) ? e.v : e.u;
    }
    (void)sink;
  }
  return true;
}

namespace {

/// Witness-subset search: A∘B holds on ω iff some W ⊆ ω has A(W) and B(ω\W).
template <class Eval>
std::vector<std::uint8_t> truth_table(std::size_t e, const Eval& eval) {
  std::vector<std::uint8_t> t(std::size_t{1} << e);
  for (std::size_t m = 0; m < t.size(); ++m) t[m] = eval(static_cast<EdgeMask>(m)) != 0.0;
  return t;
}

}  // namespace

EventProbability disjoint_occurrence_prob(const Graph& g, const EventSpec& a, const EventSpec& b,
                                          double p, unsigned workers) {
  require_cap(g, kDisjointCap, "disjoint_occurrence_prob");
  if (!a.increasing || !b.increasing) {
    throw std::invalid_argument("disjoint_occurrence_prob: only increasing events are supported");
  }
  if (a.kind == EventSpec::Kind::ghost_connection || b.kind == EventSpec::Kind::ghost_connection) {
    throw std::invalid_argument("disjoint_occurrence_prob: ghost events are handled by verify_inverse_bk");
  }
  EventProbability out;
  out.poly.edges = g.edge_count();
  out.poly.integral = true;
  // shared-endpoint connection pairs: w is the shared vertex
  VertexId w = kUnreachable, x = 0, y = 0;
  if (is_connection(a) && is_connection(b)) {
    for (VertexId cand : {a.u, a.v}) {
      if (cand == b.u || cand == b.v) {
        w = cand;
        x = a.u == cand ? a.v : a.u;
        y = b.u == cand ? b.v : b.u;
        break;
      }
    }
  }
  if (w != kUnreachable) {
    out.poly.coeff = enumerate(
        g, [&](EdgeMask m) { return disjoint_connections(g, m, w, x, y) ? 1.0 : 0.0; }, workers);
  } else {
    const EventEvaluator ea(g, a), eb(g, b);
    const auto ta = truth_table(g.edge_count(), ea);
    const auto tb = truth_table(g.edge_count(), eb);
    out.poly.coeff = enumerate(
        g,
        [&](EdgeMask m) {
          if (!ta[m] || !tb[m]) return 0.0;
          // all submasks W of m, including m and 0
          EdgeMask sub = m;
          for (;;) {
            if (ta[sub] && tb[m & ~sub]) return 1.0;
            if (sub == 0) break;
            sub = (sub - 1) & m;
          }
          return 0.0;
        },
        workers);
  }
  out.value = out.poly(p);
  return out;
}

BkResult verify_bk(const Graph& g, const EventSpec& a, const EventSpec& b, double p,
                   unsigned workers) {
  const auto pa = exact_event_prob(g, a, p, workers);
  const auto pb = exact_event_prob(g, b, p, workers);
  const auto pab = disjoint_occurrence_prob(g, a, b, p, workers);
  BkResult r;
  r.description = a.describe() + " o " + b.describe();
  r.p = p;
  r.prob_a = pa.value;
  r.prob_b = pb.value;
  r.prob_disjoint = pab.value;
  const Rational q = rational_from_double(p);
  const auto base = basis(q, g.edge_count());
  const BigInt den = pow_big(q.den, g.edge_count());
  const BigInt lhs = scaled_with(pab.poly, base) * den;
  const BigInt rhs = scaled_with(pa.poly, base) * scaled_with(pb.poly, base);
  r.holds = lhs <= rhs;
  r.slack = big_ratio(rhs - lhs, den * den);
  return r;
}

namespace {

/// Per configuration and centre w: fb[x] = first bridge on every open path
/// from w to x (kUnreachable when x is 2-edge-connected to w); x outside K_w
/// is not in `cluster`.
struct BridgeScan {
  const Graph& g;
  std::uint32_t disc[64], low[64];
  bool bridge[64];  // indexed by edge (E <= 18)

  explicit BridgeScan(const Graph& graph) : g(graph) {}

  void dfs(VertexId x, EdgeId parent_edge, EdgeMask open, std::uint32_t& time) {
    disc[x] = low[x] = ++time;
    for (const Incidence& inc : g.neighbors(x)) {
      if (!((open >> inc.edge) & 1U) || inc.edge == parent_edge) continue;
      if (disc[inc.to] == 0) {
        dfs(inc.to, inc.edge, open, time);
        low[x] = std::min(low[x], low[inc.to]);
        if (low[inc.to] > disc[x]) bridge[inc.edge] = true;
      } else {
        low[x] = std::min(low[x], disc[inc.to]);
      }
    }
  }

  std::uint64_t run(EdgeMask open, VertexId w, EdgeId* fb) {
    std::fill(disc, disc + g.vertex_count(), 0);
    std::fill(bridge, bridge + g.edge_count(), false);
    std::uint32_t time = 0;
    dfs(w, kUnreachable, open, time);
    std::uint64_t cluster = std::uint64_t{1} << w;
    VertexId queue[64];
    std::size_t tail = 0;
    queue[tail++] = w;
    fb[w] = kUnreachable;
    for (std::size_t head = 0; head < tail; ++head) {
      const VertexId x = queue[head];
      for (const Incidence& inc : g.neighbors(x)) {
        if (!((open >> inc.edge) & 1U)) continue;
        const std::uint64_t bit = std::uint64_t{1} << inc.to;
        if (cluster & bit) continue;
        cluster |= bit;
        fb[inc.to] = fb[x] != kUnreachable ? fb[x] : (bridge[inc.edge] ? inc.edge : kUnreachable);
        queue[tail++] = inc.to;
      }
    }
    return cluster;
  }
};

}  // namespace

BkSweep verify_bk_all_triples(const Graph& g, double p, unsigned workers) {
  require_cap(g, kDisjointCap, "verify_bk_all_triples");
  const std::size_t nv = g.vertex_count(), ne = g.edge_count();
  // counts[((u*V + w)*V + v)*(E+1) + k] for u <= v, and conn[(u*V+v)*(E+1)+k]
  const std::size_t triple = nv * nv * nv * (ne + 1);
  const std::size_t pair = nv * nv * (ne + 1);
  using Acc = std::vector<std::uint64_t>;
  const Acc counts = sharded_reduce(
      std::uint64_t{1} << ne, workers, Acc(triple + pair, 0),
      [&](Acc& acc, std::uint64_t b, std::uint64_t end) {
        BridgeScan scan(g);
        EdgeId fb[64];
        for (std::uint64_t mm = b; mm < end; ++mm) {
          const auto m = static_cast<EdgeMask>(mm);
          const int k = std::popcount(m);
          for (VertexId w = 0; w < nv; ++w) {
            const std::uint64_t cl = scan.run(m, w, fb);
            for (VertexId v = 0; v < nv; ++v) {
              if ((cl >> v) & 1U) ++acc[triple + (w * nv + v) * (ne + 1) + k];
            }
            for (VertexId u = 0; u < nv; ++u) {
              if (!((cl >> u) & 1U)) continue;
              for (VertexId v = u; v < nv; ++v) {
                if (!((cl >> v) & 1U)) continue;
                const bool ok = u == v ? fb[u] == kUnreachable
                                       : (fb[u] == kUnreachable || fb[v] == kUnreachable ||
                                          fb[u] != fb[v]);
                if (ok) ++acc[((u * nv + w) * nv + v) * (ne + 1) + k];
              }
            }
          }
        }
      },
      [](Acc& t, const Acc& part) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += part[i];
      },
      kEnumChunk);

  const Rational q = rational_from_double(p);
  const auto base = basis(q, ne);
  const BigInt den = pow_big(q.den, ne);
  auto poly_at = [&](std::size_t offset) {
    BigInt s = 0;
    for (std::size_t k = 0; k <= ne; ++k) {
      if (counts[offset + k]) s += BigInt(counts[offset + k]) * base[k];
    }
    return s;
  };
  std::vector<BigInt> tau(nv * nv);
  for (std::size_t i = 0; i < nv * nv; ++i) tau[i] = poly_at(triple + i * (ne + 1));
  BkSweep out;
  out.p = p;
  bool first = true;
  for (VertexId u = 0; u < nv; ++u) {
    for (VertexId w = 0; w < nv; ++w) {
      for (VertexId v = u; v < nv; ++v) {
        const BigInt lhs = poly_at(((u * nv + w) * nv + v) * (ne + 1)) * den;
        const BigInt rhs = tau[u * nv + w] * tau[w * nv + v];
        ++out.checked;
        const double slack = big_ratio(rhs - lhs, den * den);
        if (lhs > rhs) ++out.violations;
        if (first || slack < out.min_slack) {
          first = false;
          out.min_slack = slack;
          out.worst = "u=" + std::to_string(u) + " w=" + std::to_string(w) +
                      " v=" + std::to_string(v);
        }
      }
    }
  }
  return out;
}

DistanceTable::DistanceTable(const Graph& g, unsigned workers)
    : nv_(g.vertex_count()), ne_(g.edge_count()) {
  require_cap(g, kDisjointCap, "DistanceTable");
  ambient_.resize(nv_ * nv_);
  for (VertexId u = 0; u < nv_; ++u) {
    const auto d = bfs_distances(g, u);
    std::copy(d.begin(), d.end(), ambient_.begin() + u * nv_);
  }
  const std::size_t size = nv_ * nv_ * (nv_ + 1) * (ne_ + 1);
  using Acc = std::vector<std::uint64_t>;
  counts_ = sharded_reduce(
      std::uint64_t{1} << ne_, workers, Acc(size, 0),
      [&](Acc& acc, std::uint64_t b, std::uint64_t end) {
        std::uint32_t dist[64];
        for (std::uint64_t mm = b; mm < end; ++mm) {
          const auto m = static_cast<EdgeMask>(mm);
          const int k = std::popcount(m);
          for (VertexId u = 0; u < nv_; ++u) {
            reach(g, m, u, dist);
            for (VertexId v = 0; v < nv_; ++v) {
              const std::size_t j = dist[v] == kUnreachable ? nv_ : dist[v];
              ++acc[((u * nv_ + v) * (nv_ + 1) + j) * (ne_ + 1) + k];
            }
          }
        }
      },
      [](Acc& t, const Acc& part) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += part[i];
      },
      kEnumChunk);
}

ExactPoly DistanceTable::range(VertexId u, VertexId v, std::uint32_t lo, std::uint32_t hi) const {
  ExactPoly out;
  out.edges = ne_;
  out.coeff.assign(ne_ + 1, 0.0);
  const std::size_t top = std::min<std::size_t>(hi, nv_ - 1);
  for (std::size_t j = lo; j <= top; ++j) {
    for (std::size_t k = 0; k <= ne_; ++k) {
      out.coeff[k] += static_cast<double>(counts_[((u * nv_ + v) * (nv_ + 1) + j) * (ne_ + 1) + k]);
    }
  }
  return out;
}

EntrywiseResult verify_entrywise_inequalities(const DistanceTable& t, double p, std::uint32_t n,
                                              std::uint32_t m) {
  const std::size_t nv = t.vertices(), ne = t.edges();
  const Rational q = rational_from_double(p);
  const auto base = basis(q, ne);
  const BigInt den = pow_big(q.den, ne);
  // exact numerators of P(d_int(u,v) = j), j = 0..V-1
  std::vector<BigInt> shell(nv * nv * nv);
  for (VertexId u = 0; u < nv; ++u) {
    for (VertexId v = 0; v < nv; ++v) {
      for (std::uint32_t j = 0; j < nv; ++j) shell[(u * nv + v) * nv + j] = scaled_with(t.range(u, v, j, j), base);
    }
  }
  auto sum_range = [&](VertexId u, VertexId v, std::uint32_t lo, std::uint32_t hi) {
    BigInt s = 0;
    for (std::uint32_t j = lo; j <= std::min<std::uint32_t>(hi, nv - 1); ++j) s += shell[(u * nv + v) * nv + j];
    return s;
  };
  std::vector<BigInt> tau(nv * nv);
  for (VertexId u = 0; u < nv; ++u) {
    for (VertexId v = 0; v < nv; ++v) tau[u * nv + v] = sum_range(u, v, 0, kUnreachable);
  }
  EntrywiseResult r;
  r.p = p;
  r.n = n;
  r.m = m;
  bool first = true;
  const BigInt den2 = den * den;
  for (VertexId u = 0; u < nv; ++u) {
    for (VertexId v = 0; v < nv; ++v) {
      // C_{n+m}(u,v) <= Σ_w C_m(u,w) S_n(w,v)
      const BigInt lhs_c = t.distance(u, v) >= n + m ? tau[u * nv + v] * den : BigInt(0);
      BigInt rhs_c = 0;
      // A^int_{n,n+m}(u,v) <= Σ_w B^int_m(u,w) S^int_n(w,v)
      const BigInt lhs_a = sum_range(u, v, n, n + m) * den;
      BigInt rhs_a = 0;
      for (VertexId w = 0; w < nv; ++w) {
        if (t.distance(u, w) >= m && t.distance(w, v) == n) rhs_c += tau[u * nv + w] * tau[w * nv + v];
        if (n < nv) rhs_a += sum_range(u, w, 0, m) * shell[(w * nv + v) * nv + n];
      }
      const double sc = big_ratio(rhs_c - lhs_c, den2);
      const double sa = big_ratio(rhs_a - lhs_a, den2);
      if (lhs_c > rhs_c) r.extrinsic_holds = false;
      if (lhs_a > rhs_a) r.intrinsic_holds = false;
      if (first) {
        r.extrinsic_min_slack = sc;
        r.intrinsic_min_slack = sa;
        first = false;
      } else {
        r.extrinsic_min_slack = std::min(r.extrinsic_min_slack, sc);
        r.intrinsic_min_slack = std::min(r.intrinsic_min_slack, sa);
      }
    }
  }
  return r;
}

EntrywiseResult verify_entrywise_inequalities(const Graph& g, double p, std::uint32_t n,
                                              std::uint32_t m) {
  return verify_entrywise_inequalities(DistanceTable(g), p, n, m);
}

// ---------------------------------------------------------------------------
// inverse BK

namespace {

/// Calls fn(endpoint, edge mask) for every simple open path starting at a,
/// including the empty path.
template <class Fn>
void simple_paths(const Graph& g, EdgeMask open, VertexId a, Fn&& fn) {
  struct Frame {
    VertexId x;
    std::size_t next;
  };
  std::vector<Frame> stack{{a, 0}};
  std::vector<EdgeId> path_edges;
  std::uint64_t on_path = std::uint64_t{1} << a;
  EdgeMask mask = 0;
  fn(a, mask);
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto nb = g.neighbors(f.x);
    if (f.next >= nb.size()) {
      on_path &= ~(std::uint64_t{1} << f.x);
      stack.pop_back();
      if (!path_edges.empty()) {
        mask &= ~(EdgeMask{1} << path_edges.back());
        path_edges.pop_back();
      }
      continue;
    }
    const Incidence inc = nb[f.next++];
    if (!((open >> inc.edge) & 1U) || ((on_path >> inc.to) & 1U)) continue;
    on_path |= std::uint64_t{1} << inc.to;
    mask |= EdgeMask{1} << inc.edge;
    path_edges.push_back(inc.edge);
    fn(inc.to, mask);
    stack.push_back({inc.to, 0});
  }
}

/// Exact P over the ghost fields restricted to cluster K of the event
/// "∃ s ∈ G_1, w ∈ G_2 with (s,w) related", where `row[s]` is the vertex
/// mask of w related to s. Vertices with identical rows are merged into
/// classes; a class is hit with probability 1 - e^{-h1 |class|}.
struct RowClasses {
  std::vector<std::uint64_t> rows;
  std::vector<int> sizes;
};

RowClasses compress(const std::vector<std::uint64_t>& row, std::uint64_t members) {
  std::map<std::uint64_t, int> count;
  for (VertexId s = 0; s < row.size(); ++s) {
    if (((members >> s) & 1U) && row[s] != 0) ++count[row[s]];
  }
  RowClasses c;
  for (auto [r, n] : count) {
    c.rows.push_back(r);
    c.sizes.push_back(n);
  }
  return c;
}

/// Σ over subsets of classes hit by G_1 of P(hit pattern) · f(union of rows).
template <class F>
double sum_over_hits(const RowClasses& c, double h1, F&& f) {
  const std::size_t n = c.rows.size();
  if (n > 22) throw std::domain_error("verify_inverse_bk: cluster too large for exact ghost integration");
  std::vector<double> hit(n), miss(n);
  for (std::size_t i = 0; i < n; ++i) {
    miss[i] = std::exp(-h1 * c.sizes[i]);
    hit[i] = 1.0 - miss[i];
  }
  const std::size_t total = std::size_t{1} << n;
  std::vector<std::uint64_t> uni(total, 0);
  std::vector<double> prob(total, 1.0);
  double miss_all = 1.0;
  for (std::size_t i = 0; i < n; ++i) miss_all *= miss[i];
  prob[0] = miss_all;
  double sum = prob[0] * f(std::uint64_t{0});
  for (std::size_t s = 1; s < total; ++s) {
    const std::size_t low = static_cast<std::size_t>(std::countr_zero(s));
    const std::size_t rest = s & (s - 1);
    uni[s] = uni[rest] | c.rows[low];
    prob[s] = prob[rest] / miss[low] * hit[low];
    sum += prob[s] * f(uni[s]);
  }
  return sum;
}

struct GhostConfigWeights {
  double circ = 0.0;
  double distinct = 0.0;
};

class InverseBkKernel {
 public:
  InverseBkKernel(const Graph& g, const std::vector<double>& h, const std::vector<VertexId>& vs)
      : g_(g), h_(h), vs_(vs) {}

  GhostConfigWeights operator()(EdgeMask open, std::vector<std::uint64_t>& cluster_of) const {
    const std::size_t l = vs_.size();
    for (std::size_t i = 0; i < l; ++i) cluster_of[i] = reach(g_, open, vs_[i]);
    GhostConfigWeights out;
    bool distinct = true;
    for (std::size_t i = 0; i < l; ++i) {
      for (std::size_t j = i + 1; j < l; ++j) {
        if (cluster_of[i] == cluster_of[j]) distinct = false;
      }
    }
    auto single = [&](std::size_t i) { return -std::expm1(-h_[i] * std::popcount(cluster_of[i])); };
    if (distinct) {
      double prod = 1.0;
      for (std::size_t i = 0; i < l; ++i) prod *= single(i);
      out.distinct = prod;
      out.circ = prod;
      return out;
    }
    // group vertices by cluster
    double circ = 1.0;
    std::vector<int> done(l, 0);
    for (std::size_t i = 0; i < l; ++i) {
      if (done[i]) continue;
      std::vector<std::size_t> group{i};
      for (std::size_t j = i + 1; j < l; ++j) {
        if (cluster_of[j] == cluster_of[i]) group.push_back(j);
      }
      for (auto j : group) done[j] = 1;
      if (group.size() == 1) {
        circ *= single(i);
      } else if (group.size() == 2) {
        circ *= pair_weight(open, cluster_of[i], group[0], group[1]);
      } else {
        circ *= triple_weight(open, cluster_of[i], group[0], group[1], group[2]);
      }
    }
    out.circ = circ;
    return out;
  }

 private:
  // P(∃ s∈G_a, w∈G_b: disjoint paths v_a→s, v_b→w)
  double pair_weight(EdgeMask open, std::uint64_t k, std::size_t a, std::size_t b) const {
    std::vector<std::uint64_t> row(g_.vertex_count(), 0);
    std::unordered_map<EdgeMask, std::uint64_t> memo;
    simple_paths(g_, open, vs_[a], [&](VertexId s, EdgeMask path) {
      auto it = memo.find(path);
      if (it == memo.end()) it = memo.emplace(path, reach(g_, open & ~path, vs_[b])).first;
      row[s] |= it->second;
    });
    const RowClasses c = compress(row, k);
    const double hb = h_[b];
    return sum_over_hits(c, h_[a], [&](std::uint64_t u) { return -std::expm1(-hb * std::popcount(u)); });
  }

  double triple_weight(EdgeMask open, std::uint64_t k, std::size_t a, std::size_t b,
                       std::size_t c3) const {
    const std::size_t nv = g_.vertex_count();
    // rel[s*nv + w] = mask of z with pairwise disjoint paths a→s, b→w, c→z
    std::vector<std::uint64_t> rel(nv * nv, 0);
    std::unordered_map<EdgeMask, std::uint64_t> memo;
    simple_paths(g_, open, vs_[a], [&](VertexId s, EdgeMask pa) {
      simple_paths(g_, open & ~pa, vs_[b], [&](VertexId w, EdgeMask pb) {
        const EdgeMask used = pa | pb;
        auto it = memo.find(used);
        if (it == memo.end()) it = memo.emplace(used, reach(g_, open & ~used, vs_[c3])).first;
        rel[s * nv + w] |= it->second;
      });
    });
    // classes of w by their column (the z-masks as a function of s)
    std::map<std::vector<std::uint64_t>, int> wclass_count;
    std::vector<std::vector<std::uint64_t>> wcols;
    for (VertexId w = 0; w < nv; ++w) {
      if (!((k >> w) & 1U)) continue;
      std::vector<std::uint64_t> col(nv);
      bool any = false;
      for (VertexId s = 0; s < nv; ++s) {
        col[s] = rel[s * nv + w];
        any |= col[s] != 0;
      }
      if (any) ++wclass_count[col];
    }
    std::vector<int> wsize;
    for (auto& [col, n] : wclass_count) {
      wcols.push_back(col);
      wsize.push_back(n);
    }
    // rows for the outer sum: s -> identity of its z-masks across w classes;
    // the inner sum for a given S1 needs X_w = ∪_{s∈S1} rel[s][w]
    const std::size_t nw = wcols.size();
    if (nw > 22) throw std::domain_error("verify_inverse_bk: cluster too large for exact ghost integration");
    std::map<std::vector<std::uint64_t>, int> sclass_count;
    for (VertexId s = 0; s < nv; ++s) {
      if (!((k >> s) & 1U)) continue;
      std::vector<std::uint64_t> r(nw);
      bool any = false;
      for (std::size_t j = 0; j < nw; ++j) {
        r[j] = wcols[j][s];
        any |= r[j] != 0;
      }
      if (any) ++sclass_count[r];
    }
    std::vector<std::vector<std::uint64_t>> srows;
    std::vector<int> ssize;
    for (auto& [r, n] : sclass_count) {
      srows.push_back(r);
      ssize.push_back(n);
    }
    const std::size_t ns = srows.size();
    if (ns > 22) throw std::domain_error("verify_inverse_bk: cluster too large for exact ghost integration");
    const double ha = h_[a], hb = h_[b], hc = h_[c3];
    // outer: subsets of s-classes hit by G_a
    std::vector<double> miss_s(ns), hit_s(ns);
    for (std::size_t i = 0; i < ns; ++i) {
      miss_s[i] = std::exp(-ha * ssize[i]);
      hit_s[i] = 1.0 - miss_s[i];
    }
    RowClasses inner;
    inner.sizes = wsize;
    inner.rows.assign(nw, 0);
    double total = 0.0;
    std::vector<std::vector<std::uint64_t>> x(std::size_t{1} << ns, std::vector<std::uint64_t>(nw, 0));
    std::vector<double> prob(std::size_t{1} << ns, 1.0);
    for (std::size_t i = 0; i < ns; ++i) prob[0] *= miss_s[i];
    for (std::size_t s = 0; s < (std::size_t{1} << ns); ++s) {
      if (s) {
        const std::size_t low = static_cast<std::size_t>(std::countr_zero(s));
        const std::size_t rest = s & (s - 1);
        for (std::size_t j = 0; j < nw; ++j) x[s][j] = x[rest][j] | srows[low][j];
        prob[s] = prob[rest] / miss_s[low] * hit_s[low];
      }
      if (prob[s] == 0.0) continue;
      inner.rows = x[s];
      total += prob[s] * sum_over_hits(inner, hb, [&](std::uint64_t u) {
        return -std::expm1(-hc * std::popcount(u));
      });
    }
    return total;
  }

  const Graph& g_;
  const std::vector<double>& h_;
  const std::vector<VertexId>& vs_;
};

double binom(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

std::vector<InverseBkResult> verify_inverse_bk(const Graph& g, const std::vector<double>& ps,
                                               const std::vector<double>& h,
                                               const std::vector<VertexId>& vertices,
                                               unsigned workers) {
  require_cap(g, kInverseBkCap, "verify_inverse_bk");
  const std::size_t l = vertices.size();
  if (l < 2 || l > 3) throw std::invalid_argument("verify_inverse_bk: needs 2 or 3 vertices");
  if (h.size() != l) throw std::invalid_argument("verify_inverse_bk: one h per vertex");
  for (double x : h) {
    if (!(x > 0)) throw std::invalid_argument("verify_inverse_bk: h must be positive");
  }
  for (VertexId v : vertices) {
    if (v >= g.vertex_count()) throw std::invalid_argument("verify_inverse_bk: vertex out of range");
  }
  for (double p : ps) {
    if (!(p > 0 && p < 1)) throw std::invalid_argument("verify_inverse_bk: p must lie in (0,1)");
  }
  const std::size_t nv = g.vertex_count(), ne = g.edge_count();
  // layout: circ[k], distinct[k], mag[(i*nv+v)*(E+1)+k], conn[(u*nv+v)*(E+1)+k]
  const std::size_t o_dist = ne + 1, o_mag = 2 * (ne + 1), o_conn = o_mag + l * nv * (ne + 1);
  const std::size_t size = o_conn + nv * nv * (ne + 1);
  using Acc = std::vector<double>;
  const InverseBkKernel kernel(g, h, vertices);
  const Acc acc = sharded_reduce(
      std::uint64_t{1} << ne, workers, Acc(size, 0.0),
      [&](Acc& a, std::uint64_t b, std::uint64_t end) {
        std::vector<std::uint64_t> cl(l);
        std::vector<std::uint64_t> comp(nv);
        for (std::uint64_t mm = b; mm < end; ++mm) {
          const auto m = static_cast<EdgeMask>(mm);
          const int k = std::popcount(m);
          const auto w = kernel(m, cl);
          a[k] += w.circ;
          a[o_dist + k] += w.distinct;
          for (VertexId u = 0; u < nv; ++u) comp[u] = reach(g, m, u);
          for (VertexId u = 0; u < nv; ++u) {
            const int vol = std::popcount(comp[u]);
            for (std::size_t i = 0; i < l; ++i) a[o_mag + (i * nv + u) * (ne + 1) + k] += -std::expm1(-h[i] * vol);
            for (VertexId v = 0; v < nv; ++v) {
              if ((comp[u] >> v) & 1U) a[o_conn + (u * nv + v) * (ne + 1) + k] += 1.0;
            }
          }
        }
      },
      [](Acc& t, const Acc& part) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += part[i];
      },
      1 << 10);

  auto poly_at = [&](std::size_t offset, double p) {
    ExactPoly poly;
    poly.edges = ne;
    poly.coeff.assign(acc.begin() + static_cast<std::ptrdiff_t>(offset),
                      acc.begin() + static_cast<std::ptrdiff_t>(offset + ne + 1));
    return poly(p);
  };

  std::vector<InverseBkResult> out;
  for (double p : ps) {
    InverseBkResult r;
    r.p = p;
    r.vertices = vertices;
    r.h = h;
    r.max_degree = g.max_degree();
    r.prob_disjoint_occurrence = poly_at(0, p);
    r.prob_distinct_clusters = poly_at(o_dist, p);
    r.prod_inf_magnetization = 1.0;
    r.prod_sup_magnetization = 1.0;
    double prod_sup_pow = 1.0;
    for (std::size_t i = 0; i < l; ++i) {
      double lo = 1.0, hi = 0.0;
      for (VertexId v = 0; v < nv; ++v) {
        const double mv = poly_at(o_mag + (i * nv + v) * (ne + 1), p);
        lo = std::min(lo, mv);
        hi = std::max(hi, mv);
      }
      r.prod_inf_magnetization *= lo;
      r.prod_sup_magnetization *= hi;
      prod_sup_pow *= std::pow(hi, static_cast<double>(l));
    }
    std::vector<double> t(nv * nv);
    for (VertexId u = 0; u < nv; ++u) {
      for (VertexId v = 0; v < nv; ++v) t[u * nv + v] = poly_at(o_conn + (u * nv + v) * (ne + 1), p);
    }
    for (std::size_t i = 0; i < l; ++i) {
      for (std::size_t j = i + 1; j < l; ++j) {
        const VertexId a = vertices[i], b = vertices[j];
        double t2 = 0.0, t3 = 0.0;
        for (VertexId w = 0; w < nv; ++w) t2 += t[a * nv + w] * t[w * nv + b];
        for (VertexId w1 = 0; w1 < nv; ++w1) {
          for (VertexId w2 = 0; w2 < nv; ++w2) t3 += t[a * nv + w1] * t[w1 * nv + w2] * t[w2 * nv + b];
        }
        r.sup_t2 = std::max(r.sup_t2, t2);
        r.sup_t3 = std::max(r.sup_t3, t3);
      }
    }
    const double deg = static_cast<double>(r.max_degree);
    r.inverse_bk_correction = 4 * deg / (p * p) * binom(l, 2) * r.prod_sup_magnetization * r.sup_t2;
    r.inverse_bk_slack =
        r.prob_disjoint_occurrence - (r.prod_inf_magnetization - r.inverse_bk_correction);
    r.inverse_bk_printed_correction =
        4 * deg / (p * p) * binom(l - 1, 2) * r.prod_sup_magnetization * r.sup_t2;
    r.inverse_bk_printed_slack =
        r.prob_disjoint_occurrence - (r.prod_inf_magnetization - r.inverse_bk_printed_correction);
    r.diagrammatic_correction =
        static_cast<double>(l * (l - 1)) * r.prod_sup_magnetization * r.sup_t3;
    r.diagrammatic_slack =
        r.prob_distinct_clusters - (r.prob_disjoint_occurrence - r.diagrammatic_correction);
    r.diagrammatic_printed_correction = 2 * binom(l - 1, 2) * prod_sup_pow * r.sup_t3;
    r.diagrammatic_printed_slack =
        r.prob_distinct_clusters - (r.prob_disjoint_occurrence - r.diagrammatic_printed_correction);
    r.holds = r.inverse_bk_slack >= 0 && r.diagrammatic_slack >= 0;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// trees

double tree_branch_reach(int k, double p, std::uint32_t levels) {
  double t = 1.0;
  for (std::uint32_t r = 0; r < levels; ++r) t = 1.0 - std::pow(1.0 - p * t, k - 1);
  return t;
}

namespace {

template <class F>
double bisect(F&& f, double lo, double hi) {
  // f(lo) and f(hi) have opposite signs
  const bool rising = f(lo) < 0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0) == rising) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TreeRecursion tree_recursion(int k, double p, double h, std::uint32_t n_max, std::uint32_t depth) {
  if (k < 3) throw std::invalid_argument("tree_recursion: k must be >= 3");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("tree_recursion: p outside [0,1]");
  if (!(h >= 0)) throw std::invalid_argument("tree_recursion: h must be >= 0");
  TreeRecursion r;
  r.k = k;
  r.p = p;
  r.h = h;
  r.depth = depth;
  const double pc = 1.0 / (k - 1);

  r.sphere.assign(n_max + 1, 0.0);
  r.ball.assign(n_max + 1, 0.0);
  r.radius_tail.assign(n_max + 1, 0.0);
  for (std::uint32_t n = 0; n <= n_max; ++n) {
    const bool inside = depth == 0 || n <= depth;
    if (n == 0) {
      r.sphere[0] = 1.0;
    } else if (inside) {
      r.sphere[n] = k * std::pow(k - 1.0, n - 1.0) * std::pow(p, static_cast<double>(n));
    }
    r.ball[n] = (n ? r.ball[n - 1] : 0.0) + r.sphere[n];
    r.radius_tail[n] = n == 0 ? 1.0
                       : inside ? 1.0 - std::pow(1.0 - p * tree_branch_reach(k, p, n - 1), k)
                                : 0.0;
  }

  if (depth == 0) {
    r.branch_survival =
        p <= pc ? 0.0
                : bisect([&](double t) { return -std::expm1((k - 1) * std::log1p(-p * t)) - t; }, 1e-12, 1.0);
    r.theta = 1.0 - std::pow(1.0 - p * r.branch_survival, k);
    r.chi = p < pc ? 1.0 + k * p / (1.0 - (k - 1) * p) : std::numeric_limits<double>::infinity();
  } else {
    r.branch_survival = tree_branch_reach(k, p, depth - 1);
    r.theta = 1.0 - std::pow(1.0 - p * r.branch_survival, k);
    double chi = 1.0;
    for (std::uint32_t n = 1; n <= depth; ++n) {
      chi += k * std::pow(k - 1.0, n - 1.0) * std::pow(p, static_cast<double>(n));
    }
    r.chi = chi;
  }

  if (h == 0.0) {
    r.magnetization = 0.0;
  } else {
    const double s = std::exp(-h);
    // g = E[s^{|branch|}] for a branch vertex
    double g;
    if (depth == 0) {
      g = bisect([&](double x) { return x - s * std::pow(1.0 - p + p * x, k - 1); }, 0.0, 1.0);
    } else {
      g = s;
      for (std::uint32_t level = 1; level < depth; ++level) g = s * std::pow(1.0 - p + p * g, k - 1);
    }
    r.magnetization = -std::expm1(-h + k * std::log1p(-p + p * g));
  }
  return r;
}

std::vector<double> tree_volume_distribution(int k, double p, std::uint64_t n_max) {
  if (k < 3) throw std::invalid_argument("tree_volume_distribution: k must be >= 3");
  std::vector<double> out(n_max + 1, 0.0);
  if (n_max >= 1) out[1] = std::pow(1.0 - p, k);
  if (p <= 0.0) return out;
  auto log_binom_pmf = [&](double n, double x) {
    if (x < 0 || x > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(n + 1) - std::lgamma(x + 1) - std::lgamma(n - x + 1) +
           (x > 0 ? x * std::log(p) : 0.0) + (n - x > 0 ? (n - x) * std::log1p(-p) : 0.0);
  };
  for (std::uint64_t n = 2; n <= n_max; ++n) {
    const double m = static_cast<double>(n - 1);
    double total = 0.0;
    for (int j = 1; j <= k; ++j) {
      const double root = std::exp(log_binom_pmf(k, j));
      total += root * (j / m) * std::exp(log_binom_pmf(m * (k - 1), m - j));
    }
    out[n] = total;
  }
  return out;
}

std::string oracle_golden_json(const Graph& g, const std::vector<EntrywiseResult>& entrywise,
                               const std::vector<BkSweep>& bk,
                               const std::vector<InverseBkResult>& inverse_bk) {
  nlohmann::json doc;
  doc["graph"] = {{"family_tag", g.family_tag()},
                  {"vertices", g.vertex_count()},
                  {"edges", g.edge_count()},
                  {"hash", graph_hash(g)},
                  {"serialized", serialize(g)}};
  for (const auto& e : entrywise) {
    doc["entrywise"].push_back({{"p", e.p},
                                {"n", e.n},
                                {"m", e.m},
                                {"extrinsic_min_slack", e.extrinsic_min_slack},
                                {"extrinsic_holds", e.extrinsic_holds},
                                {"intrinsic_min_slack", e.intrinsic_min_slack},
                                {"intrinsic_holds", e.intrinsic_holds}});
  }
  for (const auto& b : bk) {
    doc["bk"].push_back({{"p", b.p},
                         {"checked", b.checked},
                         {"violations", b.violations},
                         {"min_slack", b.min_slack},
                         {"worst", b.worst}});
  }
  for (const auto& r : inverse_bk) {
    doc["inverse_bk"].push_back({{"p", r.p},
                                 {"vertices", r.vertices},
                                 {"h", r.h},
                                 {"prob_disjoint_occurrence", r.prob_disjoint_occurrence},
                                 {"prob_distinct_clusters", r.prob_distinct_clusters},
                                 {"prod_inf_magnetization", r.prod_inf_magnetization},
                                 {"prod_sup_magnetization", r.prod_sup_magnetization},
                                 {"sup_t2", r.sup_t2},
                                 {"sup_t3", r.sup_t3},
                                 {"inverse_bk_slack", r.inverse_bk_slack},
                                 {"inverse_bk_printed_slack", r.inverse_bk_printed_slack},
                                 {"diagrammatic_slack", r.diagrammatic_slack},
                                 {"diagrammatic_printed_slack", r.diagrammatic_printed_slack},
                                 {"holds", r.holds}});
  }
  return doc.dump(2);
}

}  // namespace perclab
