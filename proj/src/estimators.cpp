#include "perclab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "perclab/oracle.hpp"
#include "perclab/parallel.hpp"
#include "perclab/percolation.hpp"

namespace perclab {

namespace {

Seed sample_seed(const MonteCarloSource& source, std::uint64_t i) {
  return Seed{source.master_seed, source.first_stream + i};
}

void require_samples(const MonteCarloSource& source, const char* who) {
  if (source.samples == 0) throw std::invalid_argument(std::string(who) + ": need samples");
}

void require_p(double p, const char* who) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(who) + ": p outside [0,1]");
}

// hist[x] counts samples with min(X, n_max) = x; returns #{X >= n}, n = 1..n_max.
std::vector<std::uint64_t> suffix_hits(const std::vector<std::uint64_t>& hist) {
  const std::size_t n_max = hist.size() - 1;
  std::vector<std::uint64_t> hits(n_max, 0);
  std::uint64_t acc = 0;
  for (std::size_t n = n_max; n >= 1; --n) {
    acc += hist[n];
    hits[n - 1] = acc;
  }
  return hits;
}

void add_into(std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

std::uint32_t clip(std::uint64_t x, std::uint32_t n_max) {
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(x, n_max));
}

std::pair<std::uint32_t, std::uint32_t> default_window(std::uint32_t n_max, std::uint32_t lo,
                                                       std::uint32_t hi) {
  if (lo == 0) lo = std::max<std::uint32_t>(1, n_max / 4);
  if (hi == 0) hi = std::max<std::uint32_t>(lo, 3 * n_max / 4);
  if (hi > n_max) throw std::domain_error("fit window extends beyond n_max");
  return {lo, hi};
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// ---------------------------------------------------------------------------
// Minimax search on edge uniforms: b(v) is the smallest possible maximum
// uniform along a path from the root, so v is connected to the root at p
// exactly when b(v) < p. Vertices come out in nondecreasing b.

class InvasionSearch {
 public:
  InvasionSearch(const Graph& g, VertexId root, std::uint32_t max_radius)
      : g_(&g), root_(root), dist_(bfs_distances(g, root, max_radius)),
        best_(g.vertex_count(), 2.0), seen_(g.vertex_count(), 0), done_(g.vertex_count(), 0) {}

  /// visit(v, b, dist) returns false to stop.
  template <class Visit>
  void run(const EdgeSampler& u, Visit&& visit) {
    if (++generation_ == 0) {
      std::fill(seen_.begin(), seen_.end(), 0);
      std::fill(done_.begin(), done_.end(), 0);
      generation_ = 1;
    }
    using Item = std::pair<double, VertexId>;
    heap_.clear();
    auto push = [&](VertexId v, double b) {
      if (seen_[v] != generation_) {
        seen_[v] = generation_;
      } else if (b >= best_[v]) {
        return;
      }
      best_[v] = b;
      heap_.emplace_back(b, v);
      std::push_heap(heap_.begin(), heap_.end(), std::greater<Item>());
    };
    push(root_, 0.0);
    while (!heap_.empty()) {
      std::pop_heap(heap_.begin(), heap_.end(), std::greater<Item>());
      const auto [b, v] = heap_.back();
      heap_.pop_back();
      if (done_[v] == generation_ || b > best_[v]) continue;
      done_[v] = generation_;
      if (!visit(v, b, dist_[v])) return;
      for (const Incidence& inc : g_->neighbors(v)) {
        if (dist_[inc.to] == kUnreachable || done_[inc.to] == generation_) continue;
        push(inc.to, std::max(b, u.uniform(inc.edge)));
      }
    }
  }

 private:
  const Graph* g_;
  VertexId root_;
  std::vector<std::uint32_t> dist_;
  std::vector<double> best_;
  std::vector<std::uint32_t> seen_, done_;
  std::vector<std::pair<double, VertexId>> heap_;
  std::uint32_t generation_ = 0;
};

// Per batch, per scale: hist[i] counts thresholds t whose first grid point
// above t is p_i (i = grid size: never).
struct CrossingHist {
  std::vector<std::vector<std::vector<std::uint64_t>>> counts;  // [batch][scale][bin]
  void resize(std::size_t batches, std::size_t scales, std::size_t bins) {
    counts.assign(batches, std::vector<std::vector<std::uint64_t>>(
                               scales, std::vector<std::uint64_t>(bins + 1, 0)));
  }
  void merge(const CrossingHist& o) {
    for (std::size_t b = 0; b < counts.size(); ++b)
      for (std::size_t s = 0; s < counts[b].size(); ++s) add_into(counts[b][s], o.counts[b][s]);
  }
};

std::vector<double> make_grid(const PcScan& scan) {
  if (scan.grid < 8) throw std::invalid_argument("p scan: grid needs at least 8 points");
  if (!(scan.p_lo >= 0 && scan.p_hi <= 1 && scan.p_lo < scan.p_hi))
    throw std::invalid_argument("p scan: need 0 <= p_lo < p_hi <= 1");
  std::vector<double> grid(scan.grid);
  const double step = (scan.p_hi - scan.p_lo) / static_cast<double>(scan.grid - 1);
  for (std::size_t i = 0; i < scan.grid; ++i) grid[i] = scan.p_lo + step * static_cast<double>(i);
  return grid;
}

std::size_t grid_bin(const std::vector<double>& grid, double t) {
  return static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), t) - grid.begin());
}

// Crossing of qa (smaller scales) and qb: below it qb < qa, above it qb > qa.
// Split minimizing misclassified grid points; nullopt-like NaN when the best
// split sits at either end.
double ratio_crossing(const std::vector<double>& grid, const std::vector<double>& qa,
                      const std::vector<double>& qb) {
  std::vector<std::size_t> idx;
  std::vector<int> sign;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::isnan(qa[i]) || std::isnan(qb[i])) continue;
    const double d = qb[i] - qa[i];
    if (d == 0.0) continue;
    idx.push_back(i);
    sign.push_back(d > 0 ? 1 : -1);
  }
  const std::size_t L = idx.size();
  if (L < 4) return std::nan("");
  // errors(m) = #positive in [0,m) + #negative in [m,L)
  std::size_t neg_total = 0;
  for (int s : sign) neg_total += s < 0 ? 1 : 0;
  std::size_t pos_before = 0, neg_before = 0;
  std::size_t best = neg_total;
  std::vector<std::size_t> best_m{0};
  for (std::size_t m = 1; m <= L; ++m) {
    if (sign[m - 1] > 0) ++pos_before; else ++neg_before;
    const std::size_t err = pos_before + (neg_total - neg_before);
    if (err < best) {
      best = err;
      best_m.assign(1, m);
    } else if (err == best) {
      best_m.push_back(m);
    }
  }
  double sum = 0.0;
  for (std::size_t m : best_m) {
    if (m == 0 || m == L) return std::nan("");
    sum += 0.5 * (grid[idx[m - 1]] + grid[idx[m]]);
  }
  if (2 * best >= L) return std::nan("");
  return sum / static_cast<double>(best_m.size());
}

// Ratio curves Q_j(p) = P_{j+1}/P_j; NaN where the larger scale has fewer
// than `min_hits` hits.
std::vector<std::vector<double>> ratio_curves(
    const std::vector<std::vector<std::uint64_t>>& hist, const std::vector<double>& weight,
    std::size_t bins, std::vector<std::vector<double>>* prob_out, std::uint64_t min_hits) {
  const std::size_t scales = hist.size();
  std::vector<std::vector<double>> prob(scales, std::vector<double>(bins));
  std::vector<std::vector<std::uint64_t>> cum(scales, std::vector<std::uint64_t>(bins));
  for (std::size_t s = 0; s < scales; ++s) {
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < bins; ++i) {
      acc += hist[s][i];
      cum[s][i] = acc;
      prob[s][i] = static_cast<double>(acc) / weight[s];
    }
  }
  std::vector<std::vector<double>> q(scales - 1, std::vector<double>(bins));
  for (std::size_t s = 0; s + 1 < scales; ++s) {
    for (std::size_t i = 0; i < bins; ++i) {
      q[s][i] = (cum[s + 1][i] >= min_hits && cum[s][i] > 0) ? prob[s + 1][i] / prob[s][i]
                                                             : std::nan("");
    }
  }
  if (prob_out) *prob_out = std::move(prob);
  return q;
}

// Onset rule for curves that merge rather than cross: the first grid point
// from which Q_{j+1} − Q_j is never significantly negative (more than
// `z` batch standard errors below zero). NaN when there is no such point or
// no significantly negative point before it.
double merge_onset(const std::vector<double>& grid, const std::vector<double>& qa,
                   const std::vector<double>& qb,
                   const std::vector<std::vector<std::vector<double>>>& batch_q, std::size_t j,
                   double z) {
  const std::size_t n = grid.size();
  std::vector<std::uint8_t> negative(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(qa[i]) || std::isnan(qb[i])) {
      negative[i] = 1;  // too few hits to resolve: still below the onset
      continue;
    }
    std::vector<double> reps;
    for (const auto& bq : batch_q)
      if (!std::isnan(bq[j][i]) && !std::isnan(bq[j + 1][i])) reps.push_back(bq[j + 1][i] - bq[j][i]);
    const double se = reps.size() >= 2 ? sample_sd(reps) / std::sqrt(static_cast<double>(reps.size()))
                                       : 0.0;
    negative[i] = (qb[i] - qa[i]) < -z * se ? 1 : 0;
  }
  std::size_t onset = n;
  while (onset > 0 && !negative[onset - 1]) --onset;
  if (onset == 0 || onset == n) return std::nan("");
  return 0.5 * (grid[onset - 1] + grid[onset]);
}

PcEstimate crossing_estimate(const CrossingHist& hist, const std::vector<double>& weight_total,
                             const std::vector<double>& grid, const PcScan& scan,
                             std::uint64_t samples, const std::string& method, bool onset_rule) {
  const std::size_t scales = scan.radii.size();
  const std::size_t batches = hist.counts.size();
  std::vector<std::vector<std::uint64_t>> total(scales, std::vector<std::uint64_t>(grid.size() + 1, 0));
  for (std::size_t b = 0; b < batches; ++b)
    for (std::size_t s = 0; s < scales; ++s) add_into(total[s], hist.counts[b][s]);

  PcEstimate est;
  est.method = method;
  est.radii = scan.radii;
  est.p_grid = grid;
  est.samples = samples;
  est.grid_step = grid[1] - grid[0];
  constexpr std::uint64_t kMinHits = 20;
  const auto q = ratio_curves(total, weight_total, grid.size(), &est.arm_prob, kMinHits);
  std::vector<std::vector<std::vector<double>>> batch_q;
  std::vector<double> w(scales);
  for (std::size_t s = 0; s < scales; ++s) w[s] = weight_total[s] / static_cast<double>(batches);
  for (std::size_t b = 0; b < batches && batches > 1; ++b)
    batch_q.push_back(ratio_curves(hist.counts[b], w, grid.size(), nullptr, kMinHits / 4 + 1));

  std::ostringstream why;
  std::size_t last = 0;
  for (std::size_t j = 0; j + 1 < q.size(); ++j) {
    const double c = onset_rule ? merge_onset(grid, q[j], q[j + 1], batch_q, j, 3.0)
                                : ratio_crossing(grid, q[j], q[j + 1]);
    if (std::isnan(c)) {
      why << " ratio curves for radii (" << scan.radii[j] << "," << scan.radii[j + 1] << ","
          << scan.radii[j + 2] << ") do not " << (onset_rule ? "merge" : "cross") << " in ["
          << scan.p_lo << "," << scan.p_hi << "];";
      continue;
    }
    est.crossings.push_back(c);
    last = j;
  }
  if (est.crossings.empty()) {
    throw std::domain_error("critical point scan refused:" + why.str() +
                            " widen the p range, add samples or change radii");
  }
  est.value = est.crossings.back();
  for (double c : est.crossings) est.spread = std::max(est.spread, std::abs(c - est.value));

  if (onset_rule) {
    // sensitivity of the onset to the significance level
    for (double z : {2.0, 4.0}) {
      const double c = merge_onset(grid, q[last], q[last + 1], batch_q, last, z);
      if (!std::isnan(c))
        est.statistical_error = std::max(est.statistical_error, std::abs(c - est.value));
    }
  } else {
    // batch replicas of the last available crossing
    std::vector<double> replicas;
    for (const auto& qb : batch_q) {
      const double c = ratio_crossing(grid, qb[last], qb[last + 1]);
      if (!std::isnan(c)) replicas.push_back(c);
    }
    est.statistical_error = replicas.size() >= 2
                                ? sample_sd(replicas) / std::sqrt(static_cast<double>(replicas.size()))
                                : est.spread;
  }
  est.error = std::hypot(est.spread, est.statistical_error) + 0.5 * est.grid_step;
  return est;
}

void check_scan(const Graph& g, const PcScan& scan, const char* who) {
  if (scan.radii.size() < 3) throw std::invalid_argument(std::string(who) + ": need 3+ radii");
  if (!std::is_sorted(scan.radii.begin(), scan.radii.end()) ||
      std::adjacent_find(scan.radii.begin(), scan.radii.end()) != scan.radii.end() ||
      scan.radii.front() == 0)
    throw std::invalid_argument(std::string(who) + ": radii must be positive and increasing");
  if (scan.root >= g.vertex_count()) throw std::invalid_argument(std::string(who) + ": bad root");
  if (scan.batches == 0) throw std::invalid_argument(std::string(who) + ": need batches");
}

std::size_t batch_of(std::uint64_t i, std::uint64_t n, unsigned batches) {
  return static_cast<std::size_t>((i * batches) / n);
}

}  // namespace

// ---------------------------------------------------------------------------

SurvivalCurve SurvivalCurve::from_hits(std::vector<std::uint64_t> hits, std::uint64_t trials) {
  SurvivalCurve c;
  c.trials = trials;
  c.hits = std::move(hits);
  for (std::size_t i = 0; i < c.hits.size(); ++i) {
    c.n.push_back(static_cast<std::uint32_t>(i + 1));
    c.prob.push_back(trials ? static_cast<double>(c.hits[i]) / static_cast<double>(trials) : 0.0);
    c.band.push_back(trials ? wilson_interval(c.hits[i], trials) : Interval{0.0, 1.0});
  }
  return c;
}

bool SurvivalCurve::nonincreasing() const {
  for (std::size_t i = 1; i < hits.size(); ++i)
    if (hits[i] > hits[i - 1]) return false;
  return true;
}

std::vector<std::uint32_t> log_spaced(std::uint32_t lo, std::uint32_t hi, unsigned per_octave) {
  if (lo == 0 || hi < lo || per_octave == 0) throw std::invalid_argument("log_spaced: bad range");
  std::vector<std::uint32_t> out;
  const double step = std::pow(2.0, 1.0 / per_octave);
  for (double x = lo; x <= hi * (1 + 1e-12); x *= step) {
    const auto n = static_cast<std::uint32_t>(std::lround(x));
    if (out.empty() || out.back() != n) out.push_back(n);
  }
  if (out.back() != hi) out.push_back(hi);
  return out;
}

ExponentFit fit_survival(const SurvivalCurve& curve, std::uint32_t lo, std::uint32_t hi) {
  if (hi > curve.n.size()) throw std::domain_error("fit window extends beyond the survival curve");
  std::vector<double> n, prob;
  for (std::uint32_t x = lo; x <= hi; ++x) {
    n.push_back(x);
    prob.push_back(curve.prob[x - 1]);
  }
  return fit_power_law(n, prob, lo, hi);
}

// --- critical point ----------------------------------------------------------

PcEstimate estimate_pc(const TreeSite& tree) {
  if (tree.k < 3) throw std::invalid_argument("estimate_pc: tree needs k >= 3");
  PcEstimate est;
  est.value = 1.0 / (tree.k - 1);
  est.exact = true;
  est.method = "closed form 1/(k-1)";
  return est;
}

VertexId deepest_vertex(const Graph& g) {
  const std::size_t V = g.vertex_count();
  std::vector<std::uint32_t> depth(V, kUnreachable);
  std::vector<VertexId> queue;
  for (VertexId b : g.boundary_vertices()) {
    depth[b] = 0;
    queue.push_back(b);
  }
  if (queue.empty()) return 0;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    for (const Incidence& inc : g.neighbors(queue[h])) {
      if (depth[inc.to] != kUnreachable) continue;
      depth[inc.to] = depth[queue[h]] + 1;
      queue.push_back(inc.to);
    }
  }
  VertexId best = 0;
  for (VertexId v = 0; v < V; ++v)
    if (depth[v] != kUnreachable && (depth[best] == kUnreachable || depth[v] > depth[best]))
      best = v;
  return best;
}

bool estimates_agree(const PcEstimate& a, const PcEstimate& b, double* joint_error) {
  const double joint = std::hypot(a.error, b.error);
  if (joint_error) *joint_error = joint;
  return std::abs(a.value - b.value) <= joint;
}

PcEstimate estimate_pc(const Graph& g, const PcScan& scan, const MonteCarloSource& source) {
  check_scan(g, scan, "estimate_pc");
  require_samples(source, "estimate_pc");
  const auto grid = make_grid(scan);
  const std::uint32_t r_max = scan.radii.back();
  {
    const auto d = bfs_distances(g, scan.root, r_max);
    if (std::none_of(d.begin(), d.end(), [&](std::uint32_t x) { return x == r_max; }))
      throw std::invalid_argument("estimate_pc: largest radius exceeds the graph around the root");
  }
  CrossingHist init;
  init.resize(scan.batches, scan.radii.size(), grid.size());
  const CrossingHist hist = sharded_reduce(
      source.samples, source.workers, init,
      [&](CrossingHist& acc, std::uint64_t b, std::uint64_t e) {
        InvasionSearch search(g, scan.root, r_max);
        std::vector<double> t(r_max + 1);
        for (std::uint64_t i = b; i < e; ++i) {
          const EdgeSampler u(sample_seed(source, i), 1.0);
          std::fill(t.begin(), t.end(), 2.0);
          search.run(u, [&](VertexId, double bv, std::uint32_t d) {
            if (t[d] > 1.0) t[d] = bv;
            return d < r_max;
          });
          auto& h = acc.counts[batch_of(i, source.samples, scan.batches)];
          for (std::size_t s = 0; s < scan.radii.size(); ++s) ++h[s][grid_bin(grid, t[scan.radii[s]])];
        }
      },
      [](CrossingHist& total, const CrossingHist& part) { total.merge(part); }, 1024);
  const std::vector<double> weight(scan.radii.size(), static_cast<double>(source.samples));
  return crossing_estimate(hist, weight, grid, scan, source.samples,
                           "arm-probability ratio crossing (invasion thresholds)", false);
}

PcEstimate estimate_pu_merge(const Graph& g, const PcScan& scan, const MonteCarloSource& source) {
  check_scan(g, scan, "estimate_pu_merge");
  require_samples(source, "estimate_pu_merge");
  const auto grid = make_grid(scan);
  // Paths may leave B(root, r_max): inside the ball the sphere vertices would
  // hang on their few inward edges and never look merged.
  const auto dist = bfs_distances(g, scan.root, kUnreachable - 1);
  std::uint32_t r_max = 0;
  for (std::uint32_t d : dist)
    if (d != kUnreachable) r_max = std::max(r_max, d);
  if (scan.radii.back() > r_max)
    throw std::invalid_argument("estimate_pu_merge: largest radius exceeds the graph");
  std::vector<int> scale_of(r_max + 1, -1);
  for (std::size_t s = 0; s < scan.radii.size(); ++s) scale_of[scan.radii[s]] = static_cast<int>(s);
  std::vector<double> sphere(scan.radii.size(), 0.0);
  for (std::uint32_t d : dist)
    if (d != kUnreachable && scale_of[d] >= 0) sphere[scale_of[d]] += 1.0;

  CrossingHist init;
  init.resize(scan.batches, scan.radii.size(), grid.size());
  const CrossingHist hist = sharded_reduce(
      source.samples, source.workers, init,
      [&](CrossingHist& acc, std::uint64_t b, std::uint64_t e) {
        InvasionSearch search(g, scan.root, r_max);
        for (std::uint64_t i = b; i < e; ++i) {
          const EdgeSampler u(sample_seed(source, i), 1.0);
          auto& h = acc.counts[batch_of(i, source.samples, scan.batches)];
          search.run(u, [&](VertexId, double bv, std::uint32_t d) {
            if (scale_of[d] >= 0) ++h[scale_of[d]][grid_bin(grid, bv)];
            return true;
          });
        }
      },
      [](CrossingHist& total, const CrossingHist& part) { total.merge(part); }, 256);
  std::vector<double> weight(sphere.size());
  for (std::size_t s = 0; s < sphere.size(); ++s)
    weight[s] = sphere[s] * static_cast<double>(source.samples);
  return crossing_estimate(hist, weight, grid, scan, source.samples,
                           "sphere two-point ratio merge onset", true);
}

DualityResult pu_duality(const DualMap& dual, const PcScan& dual_scan, const Graph& primal,
                         const PcScan& merge_scan, const MonteCarloSource& source,
                         std::uint64_t merge_samples) {
  DualityResult r;
  r.pc_dual = estimate_pc(dual.map.graph(), dual_scan, source);
  r.pu_transported = 1.0 - r.pc_dual.value;
  r.pu_transported_error = r.pc_dual.error;
  if (merge_samples > 0) {
    MonteCarloSource ms = source;
    ms.samples = merge_samples;
    try {
      r.pu_merge = estimate_pu_merge(primal, merge_scan, ms);
      r.merge_available = true;
    } catch (const std::domain_error& e) {
      r.merge_diagnostic = e.what();
    }
  } else {
    r.merge_diagnostic = "merge diagnostic not requested";
  }
  if (r.merge_available) {
    r.discrepancy = std::abs(r.pu_merge.value - r.pu_transported);
    r.joint_error = std::hypot(r.pu_merge.error, r.pu_transported_error);
    r.consistent = r.discrepancy <= r.joint_error;
  }
  return r;
}

// --- tails -----------------------------------------------------------------------

namespace {

struct TailHist {
  std::vector<std::uint64_t> volume, rad_int, rad_ext;
  std::uint64_t boundary = 0, truncated = 0;
  explicit TailHist(std::uint32_t n_max)
      : volume(n_max + 1, 0), rad_int(n_max + 1, 0), rad_ext(n_max + 1, 0) {}
  void merge(const TailHist& o) {
    add_into(volume, o.volume);
    add_into(rad_int, o.rad_int);
    add_into(rad_ext, o.rad_ext);
    boundary += o.boundary;
    truncated += o.truncated;
  }
};

TailResult finish_tails(const TailHist& h, double p, const TailOptions& options,
                        std::uint64_t samples) {
  TailResult r;
  r.p = p;
  r.volume = SurvivalCurve::from_hits(suffix_hits(h.volume), samples);
  r.rad_int = SurvivalCurve::from_hits(suffix_hits(h.rad_int), samples);
  r.rad_ext = SurvivalCurve::from_hits(suffix_hits(h.rad_ext), samples);
  r.boundary_touching = h.boundary;
  r.truncated = h.truncated;
  const auto [lo, hi] = default_window(options.n_max, options.fit_min, options.fit_max);
  if (hi - lo + 1 < 4)
    throw std::domain_error("tail fit window [" + std::to_string(lo) + "," + std::to_string(hi) +
                            "] has fewer than 4 points");
  r.volume_fit = fit_survival(r.volume, lo, hi);
  r.rad_int_fit = fit_survival(r.rad_int, lo, hi);
  r.rad_ext_fit = fit_survival(r.rad_ext, lo, hi);
  if (h.boundary > 0)
    r.warnings.push_back(std::to_string(h.boundary) + " clusters touched the graph boundary");
  if (h.truncated > 0)
    r.warnings.push_back(std::to_string(h.truncated) + " explorations hit the volume cap");
  return r;
}

void check_tail_options(const TailOptions& o) {
  if (o.n_max < 4) throw std::domain_error("tail_exponents: n_max must be at least 4");
  default_window(o.n_max, o.fit_min, o.fit_max);
}

}  // namespace

TailResult tail_exponents(const TreeSite& tree, double p, const TailOptions& options,
                          const MonteCarloSource& source) {
  require_p(p, "tail_exponents");
  require_samples(source, "tail_exponents");
  check_tail_options(options);
  const std::uint32_t n_max = options.n_max;
  const TreeClusterSampler sampler(tree.k, p);
  const TailHist h = sharded_reduce(
      source.samples, source.workers, TailHist(n_max),
      [&](TailHist& acc, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
          // depth n_max decides rad >= n for n <= n_max and, since a cluster
          // reaching depth n_max has more than n_max vertices, |K| >= n too
          const TreeCluster c = sampler.sample(sample_seed(source, i), n_max, options.max_volume);
          const auto rad = static_cast<std::uint32_t>(c.level.size() - 1);
          ++acc.volume[clip(c.volume, n_max)];
          ++acc.rad_int[clip(rad, n_max)];
          ++acc.rad_ext[clip(rad, n_max)];
          if (c.volume > options.max_volume) ++acc.truncated;
        }
      },
      [](TailHist& total, const TailHist& part) { total.merge(part); });
  return finish_tails(h, p, options, source.samples);
}

TailResult tail_exponents(const Graph& g, VertexId v, double p, const TailOptions& options,
                          const MonteCarloSource& source) {
  require_p(p, "tail_exponents");
  require_samples(source, "tail_exponents");
  check_tail_options(options);
  const std::uint32_t n_max = options.n_max;
  const auto ambient = bfs_distances(g, v);
  const TailHist h = sharded_reduce(
      source.samples, source.workers, TailHist(n_max),
      [&](TailHist& acc, std::uint64_t b, std::uint64_t e) {
        ClusterExplorer ex(g);
        ExploreLimits limits;
        limits.max_volume = options.max_volume;
        for (std::uint64_t i = b; i < e; ++i) {
          const EdgeSampler open(sample_seed(source, i), p);
          const ClusterStats st = ex.explore(v, open, ambient.data(), limits);
          ++acc.volume[clip(st.volume, n_max)];
          ++acc.rad_int[clip(st.rad_int, n_max)];
          ++acc.rad_ext[clip(st.rad_ext, n_max)];
          if (st.touches_boundary) ++acc.boundary;
          if (st.truncated) ++acc.truncated;
        }
      },
      [](TailHist& total, const TailHist& part) { total.merge(part); }, 1024);
  return finish_tails(h, p, options, source.samples);
}

// --- ballisticity ------------------------------------------------------------------

BallisticResult ballisticity(const Graph& g, VertexId u, VertexId v, double p,
                             std::uint32_t n_max, const std::vector<double>& lambda_grid,
                             const MonteCarloSource& source, std::uint64_t min_count) {
  require_p(p, "ballisticity");
  require_samples(source, "ballisticity");
  if (u == v) throw std::invalid_argument("ballisticity: u and v must differ");
  const auto ambient = bfs_distances(g, u);
  if (ambient[v] == kUnreachable) throw std::invalid_argument("ballisticity: v unreachable");
  if (n_max <= ambient[v]) throw std::invalid_argument("ballisticity: n_max must exceed d(u,v)");

  struct Acc {
    std::vector<std::uint64_t> dint;   // min(d_int, n_max), connected samples
    std::vector<std::uint64_t> ratio;  // #{max ratio > λ}
    std::uint64_t hits = 0, ratio_samples = 0;
    double max_ratio = 0.0;
  };
  Acc init{std::vector<std::uint64_t>(n_max + 1, 0),
           std::vector<std::uint64_t>(lambda_grid.size(), 0), 0, 0, 0.0};
  const Acc acc = sharded_reduce(
      source.samples, source.workers, init,
      [&](Acc& a, std::uint64_t b, std::uint64_t e) {
        ClusterExplorer ex(g);
        for (std::uint64_t i = b; i < e; ++i) {
          const EdgeSampler open(sample_seed(source, i), p);
          ex.explore(u, open, nullptr);
          if (ex.reached(v)) {
            ++a.hits;
            ++a.dint[clip(ex.depth(v), n_max)];
          }
          const auto& members = ex.members();
          if (members.size() < 2) continue;
          double worst = 0.0;
          for (std::size_t m = 1; m < members.size(); ++m) {
            const VertexId w = members[m];
            worst = std::max(worst, static_cast<double>(ex.depth(w)) / ambient[w]);
          }
          ++a.ratio_samples;
          a.max_ratio = std::max(a.max_ratio, worst);
          for (std::size_t l = 0; l < lambda_grid.size(); ++l)
            if (worst > lambda_grid[l]) ++a.ratio[l];
        }
      },
      [](Acc& t, const Acc& part) {
        add_into(t.dint, part.dint);
        add_into(t.ratio, part.ratio);
        t.hits += part.hits;
        t.ratio_samples += part.ratio_samples;
        t.max_ratio = std::max(t.max_ratio, part.max_ratio);
      },
      1024);

  BallisticResult r;
  r.p = p;
  r.ambient_distance = ambient[v];
  r.hits = acc.hits;
  r.lambda_grid = lambda_grid;
  r.ratio_samples = acc.ratio_samples;
  r.max_ratio = acc.max_ratio;
  for (std::uint64_t c : acc.ratio)
    r.ratio_tail.push_back(acc.ratio_samples ? static_cast<double>(c) / acc.ratio_samples : 0.0);
  if (acc.hits < 100) {
    throw std::domain_error("ballisticity refused: u <-> v occurred in " + std::to_string(acc.hits) +
                            " of " + std::to_string(source.samples) + " samples (< 100)");
  }
  r.conditional_tail = SurvivalCurve::from_hits(suffix_hits(acc.dint), acc.hits);
  r.fit_lo = r.ambient_distance + 1;
  r.fit_hi = r.fit_lo;
  for (std::uint32_t n = r.fit_lo; n <= n_max; ++n) {
    if (r.conditional_tail.hits[n - 1] < min_count) break;
    r.fit_hi = n;
  }
  std::vector<double> xs, ys;
  for (std::uint32_t n = r.fit_lo; n <= r.fit_hi; ++n) {
    if (r.conditional_tail.hits[n - 1] < min_count) break;
    xs.push_back(n);
    ys.push_back(std::log(r.conditional_tail.prob[n - 1]));
  }
  if (xs.size() < 3) {
    // a tail with no mass beyond d(u,v) (trees, p = 1) has nothing to fit
    r.fit_hi = r.fit_lo - 1;
    r.log_fit = LinearFit{};
    r.rate = std::numeric_limits<double>::infinity();
    return r;
  }
  r.log_fit = linear_fit(xs, ys);
  r.rate = -r.log_fit.slope;
  return r;
}

// --- magnetization --------------------------------------------------------------------

namespace {

void finish_magnetization(MagnetizationScaling& r, const std::vector<RunningStats>& stats,
                          const std::vector<double>& h_grid, std::uint64_t samples) {
  std::vector<double> x, y, s, ex, ey;
  for (std::size_t j = 0; j < h_grid.size(); ++j) {
    const Estimate est = stats[j].estimate("rao-blackwellized 1 - exp(-h|K|)");
    if (est.mean * static_cast<double>(samples) < 100.0) {
      r.dropped_h.push_back(h_grid[j]);
      r.warnings.push_back("h = " + std::to_string(h_grid[j]) + " dropped: M*N < 100");
      continue;
    }
    r.h.push_back(h_grid[j]);
    r.estimate.push_back(est);
    x.push_back(std::log(h_grid[j]));
    y.push_back(std::log(est.mean));
    s.push_back(est.std_error / est.mean);
    if (!r.exact.empty()) {
      const double exact = r.exact[j];
      r.z.push_back(est.std_error > 0 ? (est.mean - exact) / est.std_error
                                      : (est.mean == exact ? 0.0 : INFINITY));
      ey.push_back(std::log(exact));
    }
  }
  if (!r.exact.empty()) {
    std::vector<double> kept;
    for (std::size_t j = 0, k = 0; j < h_grid.size(); ++j) {
      if (k < r.h.size() && r.h[k] == h_grid[j]) {
        kept.push_back(r.exact[j]);
        ++k;
      }
    }
    r.exact = kept;
  }
  if (x.size() < 2) throw std::domain_error("magnetization_scaling: fewer than 2 usable h values");
  const bool weighted = std::all_of(s.begin(), s.end(), [](double v) { return v > 0; });
  r.fit = weighted ? weighted_linear_fit(x, y, s) : linear_fit(x, y);
  if (!ey.empty()) r.exact_fit = linear_fit(x, ey);
}

std::vector<double> checked_h(const std::vector<double>& h_grid) {
  if (h_grid.empty()) throw std::invalid_argument("magnetization_scaling: empty h grid");
  for (double h : h_grid)
    if (!(h > 0)) throw std::invalid_argument("magnetization_scaling: h must be positive");
  return h_grid;
}

}  // namespace

MagnetizationScaling magnetization_scaling(const TreeSite& tree, double p,
                                           const std::vector<double>& h_grid,
                                           const MonteCarloSource& source) {
  require_p(p, "magnetization_scaling");
  require_samples(source, "magnetization_scaling");
  checked_h(h_grid);
  const double h_min = *std::min_element(h_grid.begin(), h_grid.end());
  const auto cap = static_cast<std::uint64_t>(std::ceil(40.0 / h_min));
  const TreeClusterSampler sampler(tree.k, p);
  const auto stats = sharded_reduce(
      source.samples, source.workers, std::vector<RunningStats>(h_grid.size()),
      [&](std::vector<RunningStats>& acc, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
          const TreeCluster c = sampler.sample(sample_seed(source, i),
                                               std::numeric_limits<std::uint32_t>::max(), cap);
          for (std::size_t j = 0; j < h_grid.size(); ++j)
            acc[j].add(-std::expm1(-h_grid[j] * static_cast<double>(c.volume)));
        }
      },
      [](std::vector<RunningStats>& t, const std::vector<RunningStats>& part) {
        for (std::size_t j = 0; j < t.size(); ++j) t[j].merge(part[j]);
      });
  MagnetizationScaling r;
  r.p = p;
  for (double h : h_grid) r.exact.push_back(tree_recursion(tree.k, p, h, 1).magnetization);
  finish_magnetization(r, stats, h_grid, source.samples);
  return r;
}

MagnetizationScaling magnetization_scaling(const Graph& g, VertexId v, double p,
                                           const std::vector<double>& h_grid,
                                           const MonteCarloSource& source) {
  require_p(p, "magnetization_scaling");
  require_samples(source, "magnetization_scaling");
  checked_h(h_grid);
  const double h_min = *std::min_element(h_grid.begin(), h_grid.end());
  ExploreLimits limits;
  limits.max_volume = static_cast<std::uint64_t>(std::ceil(40.0 / h_min));
  const auto stats = sharded_reduce(
      source.samples, source.workers, std::vector<RunningStats>(h_grid.size()),
      [&](std::vector<RunningStats>& acc, std::uint64_t b, std::uint64_t e) {
        ClusterExplorer ex(g);
        for (std::uint64_t i = b; i < e; ++i) {
          const EdgeSampler open(sample_seed(source, i), p);
          const auto st = ex.explore(v, open, nullptr, limits);
          for (std::size_t j = 0; j < h_grid.size(); ++j)
            acc[j].add(-std::expm1(-h_grid[j] * static_cast<double>(st.volume)));
        }
      },
      [](std::vector<RunningStats>& t, const std::vector<RunningStats>& part) {
        for (std::size_t j = 0; j < t.size(); ++j) t[j].merge(part[j]);
      },
      1024);
  MagnetizationScaling r;
  r.p = p;
  finish_magnetization(r, stats, h_grid, source.samples);
  return r;
}

// --- multi-arm ----------------------------------------------------------------------

std::string to_string(ArmMode m) {
  switch (m) {
    case ArmMode::volume: return "volume";
    case ArmMode::rad_int: return "rad_int";
    case ArmMode::rad_ext: return "rad_ext";
    case ArmMode::boundary_reach: return "boundary_reach";
  }
  return "?";
}

ArmMode parse_arm_mode(const std::string& text) {
  for (ArmMode m : {ArmMode::volume, ArmMode::rad_int, ArmMode::rad_ext, ArmMode::boundary_reach})
    if (to_string(m) == text) return m;
  throw std::invalid_argument("unknown arm mode '" + text + "'");
}

MultiArmResult multi_arm(const Graph& g, const std::vector<VertexId>& vertices, double p,
                         ArmMode mode, const std::vector<std::uint32_t>& thresholds,
                         const MonteCarloSource& source, std::uint64_t max_volume) {
  require_p(p, "multi_arm");
  require_samples(source, "multi_arm");
  const std::size_t l = vertices.size();
  if (l < 2) throw std::invalid_argument("multi_arm: need at least two vertices");
  for (VertexId v : vertices)
    if (v >= g.vertex_count()) throw std::invalid_argument("multi_arm: vertex out of range");
  std::vector<std::uint32_t> need(l, 0);
  if (mode == ArmMode::volume) {
    if (thresholds.size() != l) throw std::invalid_argument("multi_arm: one volume per vertex");
    need = thresholds;
  } else if (mode != ArmMode::boundary_reach) {
    if (thresholds.size() != 1) throw std::invalid_argument("multi_arm: one radius threshold");
    need.assign(l, thresholds[0]);
  }
  std::vector<std::vector<std::uint32_t>> ambient;
  for (VertexId v : vertices) ambient.push_back(bfs_distances(g, v));

  MultiArmResult r;
  r.mode = mode;
  r.vertices = vertices;
  r.thresholds = thresholds;
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b) r.pairwise_distance.push_back(ambient[a][vertices[b]]);

  struct Acc {
    RunningStats joint;
    std::vector<RunningStats> single;
    std::uint64_t truncated = 0;
  };
  Acc init{RunningStats{}, std::vector<RunningStats>(l), 0};
  const Acc acc = sharded_reduce(
      source.samples, source.workers, init,
      [&](Acc& a, std::uint64_t b, std::uint64_t e) {
        std::vector<ClusterExplorer> ex(l, ClusterExplorer(g));
        ExploreLimits limits;
        limits.max_volume = max_volume;
        for (std::uint64_t i = b; i < e; ++i) {
          const EdgeSampler open(sample_seed(source, i), p);
          bool all = true;
          for (std::size_t j = 0; j < l; ++j) {
            const ClusterStats st = ex[j].explore(vertices[j], open, ambient[j].data(), limits);
            if (st.truncated) ++a.truncated;
            bool arm = false;
            switch (mode) {
              case ArmMode::volume: arm = st.volume >= need[j]; break;
              case ArmMode::rad_int: arm = st.rad_int >= need[j]; break;
              case ArmMode::rad_ext: arm = st.rad_ext >= need[j]; break;
              case ArmMode::boundary_reach: arm = st.touches_boundary; break;
            }
            a.single[j].add(arm ? 1.0 : 0.0);
            all = all && arm;
            for (std::size_t k = 0; k < j && all; ++k)
              if (ex[k].reached(vertices[j])) all = false;
          }
          a.joint.add(all ? 1.0 : 0.0);
        }
      },
      [](Acc& t, const Acc& part) {
        t.joint.merge(part.joint);
        for (std::size_t j = 0; j < t.single.size(); ++j) t.single[j].merge(part.single[j]);
        t.truncated += part.truncated;
      },
      1024);
  r.joint = acc.joint.estimate("disjoint clusters, all arms");
  r.bk_bound = 1.0;
  for (const auto& s : acc.single) {
    r.single.push_back(s.estimate("single arm"));
    r.bk_bound *= r.single.back().mean;
  }
  r.ratio = r.bk_bound > 0 ? r.joint.mean / r.bk_bound : 0.0;
  r.bound_holds = r.joint.mean <= r.bk_bound + 4.0 * r.joint.std_error;
  r.truncated = acc.truncated;
  return r;
}

// --- trifurcations ------------------------------------------------------------------

namespace {

// Deepest level (capped at `horizon`) reached by the branch below an open
// root edge; the branch root sits at level 1.
std::uint32_t branch_depth(CounterRng& rng, int k, double p, std::uint32_t horizon) {
  if (horizon <= 1) return horizon;
  std::uint32_t deepest = 1;
  std::vector<std::uint32_t> stack{1};
  while (!stack.empty()) {
    const std::uint32_t d = stack.back();
    stack.pop_back();
    for (int c = 0; c < k - 1; ++c) {
      if (!rng.bernoulli(p)) continue;
      deepest = std::max(deepest, d + 1);
      if (d + 1 >= horizon) return horizon;
      stack.push_back(d + 1);
    }
  }
  return deepest;
}

struct FurcationAcc {
  RunningStats full, half, branch;
};

void finish_trifurcation(TrifurcationCurve& curve, const std::vector<double>& p_grid,
                         const std::vector<FurcationAcc>& acc, unsigned degree) {
  double lo = INFINITY, hi = 0.0;
  for (std::size_t j = 0; j < p_grid.size(); ++j) {
    TrifurcationPoint& pt = curve.points[j];
    pt.p = p_grid[j];
    pt.estimate = acc[j].full.estimate("trifurcation indicator");
    pt.half_horizon = acc[j].half.estimate("trifurcation indicator, half horizon");
    pt.single_branch = acc[j].branch.estimate("open branch reaching the horizon");
    pt.bk_product = std::pow(pt.single_branch.mean, 3);
    (void)degree;
    const double gap = std::pow(pt.p - curve.p_c, 3);
    pt.ratio = pt.estimate.mean / gap;
    pt.ratio_error = pt.estimate.std_error / gap;
    const double joint = std::hypot(pt.estimate.std_error, pt.half_horizon.std_error);
    pt.horizon_stable = std::abs(pt.estimate.mean - pt.half_horizon.mean) <= 3.0 * joint;
    if (!pt.horizon_stable)
      curve.warnings.push_back("horizon instability at p = " + std::to_string(pt.p));
    lo = std::min(lo, pt.ratio);
    hi = std::max(hi, pt.ratio);
  }
  curve.ratio_band = lo > 0 ? hi / lo : INFINITY;
}

}  // namespace

TrifurcationCurve trifurcation_curve(const TreeSite& tree, const std::vector<double>& p_grid,
                                     std::uint32_t horizon, const MonteCarloSource& source) {
  if (tree.k != 3) throw std::invalid_argument("trifurcation_curve: tree site needs k = 3");
  require_samples(source, "trifurcation_curve");
  if (horizon < 2) throw std::invalid_argument("trifurcation_curve: horizon must be >= 2");
  TrifurcationCurve curve;
  curve.p_c = estimate_pc(tree).value;
  curve.horizon = horizon;
  for (double p : p_grid)
    if (!(p > curve.p_c && p <= 1)) throw std::invalid_argument("trifurcation_curve: p must exceed p_c");
  curve.points.resize(p_grid.size());
  std::vector<FurcationAcc> acc(p_grid.size());
  for (std::size_t j = 0; j < p_grid.size(); ++j) {
    const double p = p_grid[j];
    acc[j] = sharded_reduce(
        source.samples, source.workers, FurcationAcc{},
        [&](FurcationAcc& a, std::uint64_t b, std::uint64_t e) {
          for (std::uint64_t i = b; i < e; ++i) {
            CounterRng rng(sample_seed(source, i), rng::Domain::tree);
            unsigned full = 0, half = 0;
            for (int c = 0; c < tree.k; ++c) {
              if (!rng.bernoulli(p)) continue;
              const std::uint32_t d = branch_depth(rng, tree.k, p, horizon);
              if (d >= horizon) ++full;
              if (d >= horizon / 2) ++half;
            }
            a.full.add(full == 3 ? 1.0 : 0.0);
            a.half.add(half == 3 ? 1.0 : 0.0);
            a.branch.add(full / 3.0);
          }
        },
        [](FurcationAcc& t, const FurcationAcc& part) {
          t.full.merge(part.full);
          t.half.merge(part.half);
          t.branch.merge(part.branch);
        });
    TrifurcationPoint& pt = curve.points[j];
    pt.exact = std::pow(p * tree_branch_reach(tree.k, p, horizon - 1), 3);
    pt.exact_infinite = std::pow(p * tree_recursion(tree.k, p, 0.0, 1).branch_survival, 3);
  }
  finish_trifurcation(curve, p_grid, acc, 3);
  for (auto& pt : curve.points) {
    pt.z = pt.estimate.std_error > 0 ? (pt.estimate.mean - pt.exact) / pt.estimate.std_error
                                     : (pt.estimate.mean == pt.exact ? 0.0 : INFINITY);
  }
  return curve;
}

TrifurcationCurve trifurcation_curve(const Graph& g, VertexId v, double p_c,
                                     const std::vector<double>& p_grid, std::uint32_t horizon,
                                     const MonteCarloSource& source) {
  require_samples(source, "trifurcation_curve");
  if (g.degree(v) != 3) throw std::invalid_argument("trifurcation_curve: vertex must have degree 3");
  if (horizon < 2) throw std::invalid_argument("trifurcation_curve: horizon must be >= 2");
  const auto ambient = bfs_distances(g, v);
  TrifurcationCurve curve;
  curve.p_c = p_c;
  curve.horizon = horizon;
  for (double p : p_grid)
    if (!(p > p_c && p <= 1)) throw std::invalid_argument("trifurcation_curve: p must exceed p_c");
  curve.points.resize(p_grid.size());
  std::vector<FurcationAcc> acc(p_grid.size());
  for (std::size_t j = 0; j < p_grid.size(); ++j) {
    const double p = p_grid[j];
    acc[j] = sharded_reduce(
        source.samples, source.workers, FurcationAcc{},
        [&](FurcationAcc& a, std::uint64_t b, std::uint64_t e) {
          ClusterExplorer ex(g);
          ExploreLimits limits;
          limits.blocked = v;
          for (std::uint64_t i = b; i < e; ++i) {
            const EdgeSampler open(sample_seed(source, i), p);
            unsigned full = 0, half = 0;
            std::vector<VertexId> seen;
            for (const Incidence& inc : g.neighbors(v)) {
              if (!open(inc.edge)) continue;
              if (std::find(seen.begin(), seen.end(), inc.to) != seen.end()) continue;
              const ClusterStats st = ex.explore(inc.to, open, ambient.data(), limits);
              for (const Incidence& other : g.neighbors(v))
                if (ex.reached(other.to)) seen.push_back(other.to);
              if (st.rad_ext >= horizon) ++full;
              if (st.rad_ext >= horizon / 2) ++half;
            }
            a.full.add(full == 3 ? 1.0 : 0.0);
            a.half.add(half == 3 ? 1.0 : 0.0);
            a.branch.add(full / 3.0);
          }
        },
        [](FurcationAcc& t, const FurcationAcc& part) {
          t.full.merge(part.full);
          t.half.merge(part.half);
          t.branch.merge(part.branch);
        },
        1024);
  }
  finish_trifurcation(curve, p_grid, acc, 3);
  return curve;
}

// --- logarithmic density -------------------------------------------------------------

namespace {

// sums[batch][n] = Σ over samples of |K ∩ B(n)|
struct DensityAcc {
  std::vector<std::vector<double>> sums;
  std::vector<std::uint64_t> count;
  void merge(const DensityAcc& o) {
    for (std::size_t b = 0; b < sums.size(); ++b) {
      for (std::size_t n = 0; n < sums[b].size(); ++n) sums[b][n] += o.sums[b][n];
      count[b] += o.count[b];
    }
  }
};

double local_slope(const std::vector<double>& mean, const std::vector<double>& ball, std::size_t n) {
  return (std::log(mean[n]) - std::log(mean[n - 1])) / (std::log(ball[n]) - std::log(ball[n - 1]));
}

DeltaLogPoint finish_density(double p, const DensityAcc& acc, const std::vector<double>& ball) {
  DeltaLogPoint pt;
  pt.p = p;
  pt.ball_size = ball;
  const std::size_t n_max = ball.size() - 1;
  std::vector<double> total(n_max + 1, 0.0);
  std::uint64_t count = 0;
  for (std::size_t b = 0; b < acc.sums.size(); ++b) {
    for (std::size_t n = 0; n <= n_max; ++n) total[n] += acc.sums[b][n];
    count += acc.count[b];
  }
  for (double& t : total) t /= static_cast<double>(count);
  pt.mean_intersection = total;
  pt.delta = local_slope(total, ball, n_max);
  pt.delta_previous = local_slope(total, ball, n_max - 1);
  std::vector<double> replicas;
  for (std::size_t b = 0; b < acc.sums.size(); ++b) {
    if (acc.count[b] == 0) continue;
    std::vector<double> m(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) m[n] = acc.sums[b][n] / acc.count[b];
    replicas.push_back(local_slope(m, ball, n_max));
  }
  pt.std_error = sample_sd(replicas) / std::sqrt(static_cast<double>(std::max<std::size_t>(1, replicas.size())));
  pt.drift = std::abs(pt.delta - pt.delta_previous) > pt.std_error;
  return pt;
}

void finish_delta(DeltaLogResult& r) {
  double sxy = 0.0, sxx = 0.0;
  for (const auto& pt : r.points) {
    const double x = pt.p - r.p_c;
    sxy += x * pt.delta;
    sxx += x * x;
    if (pt.drift)
      r.warnings.push_back("slope not stable across the top two radii at p = " + std::to_string(pt.p));
  }
  r.slope_through_origin = sxx > 0 ? sxy / sxx : 0.0;
}

void check_density_args(std::uint32_t n_max, unsigned batches, const MonteCarloSource& source) {
  require_samples(source, "delta_log");
  if (n_max < 2) throw std::invalid_argument("delta_log: n_max must be at least 2");
  if (batches < 2) throw std::invalid_argument("delta_log: need at least 2 batches");
}

}  // namespace

DeltaLogResult delta_log(const TreeSite& tree, double p_c, const std::vector<double>& p_grid,
                         std::uint32_t n_max, const MonteCarloSource& source, unsigned batches) {
  check_density_args(n_max, batches, source);
  std::vector<double> ball(n_max + 1);
  double sphere = 1.0, acc_ball = 0.0;
  for (std::uint32_t n = 0; n <= n_max; ++n) {
    acc_ball += sphere;
    ball[n] = acc_ball;
    sphere *= (n == 0 ? tree.k : tree.k - 1);
  }
  DeltaLogResult r;
  r.p_c = p_c;
  for (double p : p_grid) {
    require_p(p, "delta_log");
    const TreeClusterSampler sampler(tree.k, p);
    DensityAcc init{std::vector<std::vector<double>>(batches, std::vector<double>(n_max + 1, 0.0)),
                    std::vector<std::uint64_t>(batches, 0)};
    const DensityAcc acc = sharded_reduce(
        source.samples, source.workers, init,
        [&](DensityAcc& a, std::uint64_t b, std::uint64_t e) {
          for (std::uint64_t i = b; i < e; ++i) {
            const TreeCluster c = sampler.sample(sample_seed(source, i), n_max);
            const std::size_t batch = batch_of(i, source.samples, batches);
            double cum = 0.0;
            for (std::uint32_t n = 0; n <= n_max; ++n) {
              if (n < c.level.size()) cum += static_cast<double>(c.level[n]);
              a.sums[batch][n] += cum;
            }
            ++a.count[batch];
          }
        },
        [](DensityAcc& t, const DensityAcc& part) { t.merge(part); });
    r.points.push_back(finish_density(p, acc, ball));
  }
  finish_delta(r);
  return r;
}

DeltaLogResult delta_log(const Graph& g, VertexId v, double p_c, const std::vector<double>& p_grid,
                         std::uint32_t n_max, const MonteCarloSource& source, unsigned batches) {
  check_density_args(n_max, batches, source);
  const auto ambient = bfs_distances(g, v);
  std::vector<double> ball(n_max + 1, 0.0);
  for (std::uint32_t d : ambient)
    if (d <= n_max) ball[d] += 1.0;
  for (std::uint32_t n = 1; n <= n_max; ++n) ball[n] += ball[n - 1];
  DeltaLogResult r;
  r.p_c = p_c;
  for (double p : p_grid) {
    require_p(p, "delta_log");
    DensityAcc init{std::vector<std::vector<double>>(batches, std::vector<double>(n_max + 1, 0.0)),
                    std::vector<std::uint64_t>(batches, 0)};
    const DensityAcc acc = sharded_reduce(
        source.samples, source.workers, init,
        [&](DensityAcc& a, std::uint64_t b, std::uint64_t e) {
          ClusterExplorer ex(g);
          std::vector<double> shell(n_max + 1);
          for (std::uint64_t i = b; i < e; ++i) {
            const EdgeSampler open(sample_seed(source, i), p);
            ex.explore(v, open, nullptr);
            std::fill(shell.begin(), shell.end(), 0.0);
            for (VertexId w : ex.members())
              if (ambient[w] <= n_max) shell[ambient[w]] += 1.0;
            const std::size_t batch = batch_of(i, source.samples, batches);
            double cum = 0.0;
            for (std::uint32_t n = 0; n <= n_max; ++n) {
              cum += shell[n];
              a.sums[batch][n] += cum;
            }
            ++a.count[batch];
          }
        },
        [](DensityAcc& t, const DensityAcc& part) { t.merge(part); }, 1024);
    r.points.push_back(finish_density(p, acc, ball));
  }
  finish_delta(r);
  return r;
}

// --- p_u geometry -------------------------------------------------------------------

PuGeometryResult pu_geometry(const CombinatorialMap& primal, const DualMap& dual, EdgeId e,
                             double p, const PuGeometryOptions& options,
                             const MonteCarloSource& source) {
  require_p(p, "pu_geometry");
  require_samples(source, "pu_geometry");
  const Graph& g = primal.graph();
  const Graph& dg = dual.map.graph();
  if (e >= g.edge_count()) throw std::invalid_argument("pu_geometry: edge out of range");
  const EdgeId e_dual = dual.primal_edge_to_dual[e];
  if (e_dual == kUnreachable) throw std::invalid_argument("pu_geometry: edge has no dual partner");
  const std::uint32_t n_max = options.n_max;
  if (n_max < 4) throw std::invalid_argument("pu_geometry: n_max must be at least 4");
  const VertexId x = g.edges()[e].u, y = g.edges()[e].v;
  const VertexId f1 = dg.edges()[e_dual].u, f2 = dg.edges()[e_dual].v;
  const auto d1 = bfs_distances(dg, f1);
  const auto d2 = bfs_distances(dg, f2);

  struct Acc {
    std::vector<std::uint64_t> dint, conrad;  // min(X, n_max) over connected samples
    std::uint64_t connected = 0, disconnected = 0, unresolved = 0;
    std::uint64_t sandwich = 0, skipped = 0, violations = 0;
    double c_lo = INFINITY, c_hi = 0.0, c_lo_half = INFINITY, c_hi_half = 0.0;
    double r_lo = INFINITY, r_hi = 0.0;
  };
  Acc init;
  init.dint.assign(n_max + 1, 0);
  init.conrad.assign(n_max + 1, 0);
  const std::uint64_t half = source.samples / 2;

  const Acc acc = sharded_reduce(
      source.samples, source.workers, init,
      [&](Acc& a, std::uint64_t b, std::uint64_t end) {
        ClusterExplorer pex(g);
        ClusterExplorer k1(dg), k2(dg);
        ConRadSearch conrad(g, x, y);
        ExploreLimits dual_limits;
        dual_limits.max_volume = options.max_volume;
        for (std::uint64_t i = b; i < end; ++i) {
          const EdgeSampler open(sample_seed(source, i), p);
          if (open(e)) {
            ++a.connected;
            ++a.dint[1];
            ++a.conrad[1];
            continue;
          }
          auto dual_open = [&](EdgeId de) {
            return de != e_dual && !open(dual.edge_to_primal_edge[de]);
          };
          bool capped = false;
          std::uint32_t d = pex.intrinsic_distance(x, y, open, std::numeric_limits<std::uint64_t>::max(),
                                                   &capped, n_max);
          bool duals_done = false;
          ClusterStats s1, s2;
          bool same = false;
          auto explore_duals = [&]() {
            if (duals_done) return;
            duals_done = true;
            s1 = k1.explore(f1, dual_open, d1.data(), dual_limits);
            same = k1.reached(f2);
            if (!same) s2 = k2.explore(f2, dual_open, d2.data(), dual_limits);
          };
          bool connected = d != kUnreachable;
          if (!connected && capped) {
            // d_int > n_max or x, y disconnected
            explore_duals();
            if (same) {
              connected = false;
            } else if ((!s1.truncated && !s1.touches_boundary) ||
                       (!s2.truncated && !s2.touches_boundary)) {
              connected = true;
            } else {
              connected = pex.intrinsic_distance(x, y, open,
                                                 std::numeric_limits<std::uint64_t>::max()) !=
                          kUnreachable;
            }
          }
          if (!connected) {
            ++a.disconnected;
            continue;
          }
          ++a.connected;
          const bool censored = d == kUnreachable;
          ++a.dint[censored ? n_max : clip(d, n_max)];
          const std::uint32_t r = conrad(open, n_max);
          ++a.conrad[r == kUnreachable ? n_max : clip(r, n_max)];
          if (censored) continue;
          // 1 < d_int <= n_max: the sandwich against the flanking dual clusters
          explore_duals();
          if (same) {
            ++a.violations;
            continue;
          }
          if (s1.truncated || s2.truncated || s1.touches_boundary || s2.touches_boundary) {
            ++a.skipped;
            continue;
          }
          ++a.sandwich;
          const double m = static_cast<double>(std::min(s1.volume, s2.volume));
          const double ratio = d / m;
          a.c_lo = std::min(a.c_lo, ratio);
          a.c_hi = std::max(a.c_hi, ratio);
          if (i < half) {
            a.c_lo_half = std::min(a.c_lo_half, ratio);
            a.c_hi_half = std::max(a.c_hi_half, ratio);
          }
          const double rad = 1.0 + std::min(s1.rad_ext, s2.rad_ext);
          a.r_lo = std::min(a.r_lo, r / rad);
          a.r_hi = std::max(a.r_hi, r / rad);
        }
      },
      [](Acc& t, const Acc& part) {
        add_into(t.dint, part.dint);
        add_into(t.conrad, part.conrad);
        t.connected += part.connected;
        t.disconnected += part.disconnected;
        t.unresolved += part.unresolved;
        t.sandwich += part.sandwich;
        t.skipped += part.skipped;
        t.violations += part.violations;
        t.c_lo = std::min(t.c_lo, part.c_lo);
        t.c_hi = std::max(t.c_hi, part.c_hi);
        t.c_lo_half = std::min(t.c_lo_half, part.c_lo_half);
        t.c_hi_half = std::max(t.c_hi_half, part.c_hi_half);
        t.r_lo = std::min(t.r_lo, part.r_lo);
        t.r_hi = std::max(t.r_hi, part.r_hi);
      },
      1024);

  PuGeometryResult r;
  r.p = p;
  r.edge = e;
  r.n_max = n_max;
  r.samples = source.samples;
  r.connected = acc.connected;
  r.disconnected = acc.disconnected;
  r.unresolved = acc.unresolved;
  if (acc.connected < 100) {
    throw std::domain_error("pu_geometry refused: x <-> y in " + std::to_string(acc.connected) +
                            " samples (< 100)");
  }
  r.dint_tail = SurvivalCurve::from_hits(suffix_hits(acc.dint), acc.connected);
  r.conrad_tail = SurvivalCurve::from_hits(suffix_hits(acc.conrad), acc.connected);
  r.sandwich_samples = acc.sandwich;
  r.boundary_skipped = acc.skipped;
  r.distinctness_violations = acc.violations;
  auto finite_or_zero = [](double v) { return std::isfinite(v) ? v : 0.0; };
  r.c_lower = finite_or_zero(acc.c_lo);
  r.c_upper = acc.c_hi;
  r.c_lower_half = finite_or_zero(acc.c_lo_half);
  r.c_upper_half = acc.c_hi_half;
  r.conrad_lower = finite_or_zero(acc.r_lo);
  r.conrad_upper = acc.r_hi;
  try {
    const auto [lo, hi] = default_window(n_max, options.fit_min, options.fit_max);
    r.dint_fit = fit_survival(r.dint_tail, lo, hi);
    r.conrad_fit = fit_survival(r.conrad_tail, lo, hi);
    r.fits_available = true;
  } catch (const std::domain_error& err) {
    r.fit_diagnostic = err.what();
  }
  return r;
}

}  // namespace perclab
