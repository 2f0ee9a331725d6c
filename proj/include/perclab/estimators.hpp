#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "perclab/combinatorial_map.hpp"
#include "perclab/graph.hpp"
#include "perclab/operators.hpp"
#include "perclab/stats.hpp"

namespace perclab {

/// The infinite k-regular tree, sampled level by level without building it.
struct TreeSite {
  int k = 3;
};

/// Survival function P(X >= n) for n = 1..n_max, with Wilson bands.
struct SurvivalCurve {
  std::vector<std::uint32_t> n;
  std::vector<std::uint64_t> hits;
  std::vector<double> prob;
  std::vector<Interval> band;
  std::uint64_t trials = 0;

  /// Builds the curve from hits[n-1] = #{X >= n}.
  static SurvivalCurve from_hits(std::vector<std::uint64_t> hits, std::uint64_t trials);
  bool nonincreasing() const;
};

/// Integers spread evenly in log scale over [lo, hi], `per_octave` per doubling.
std::vector<std::uint32_t> log_spaced(std::uint32_t lo, std::uint32_t hi, unsigned per_octave = 4);

/// Power-law fit of a survival curve over every n in [lo, hi].
ExponentFit fit_survival(const SurvivalCurve& curve, std::uint32_t lo, std::uint32_t hi);

// --- critical point -------------------------------------------------------

/// Scan for P(root <-> ∂B(root, R)) at several radii. Radii should grow
/// geometrically so that the ratio curves below are comparable.
struct PcScan {
  VertexId root = 0;
  std::vector<std::uint32_t> radii;
  double p_lo = 0.0;
  double p_hi = 1.0;
  std::size_t grid = 400;
  unsigned batches = 8;  // independent batches for the statistical error
};

struct PcEstimate {
  double value = 0.0;
  double error = 0.0;
  bool exact = false;
  std::string method;
  std::vector<std::uint32_t> radii;
  /// Crossing of consecutive ratio curves, one per adjacent pair.
  std::vector<double> crossings;
  double spread = 0.0;
  double statistical_error = 0.0;
  double grid_step = 0.0;
  std::vector<double> p_grid;
  std::vector<std::vector<double>> arm_prob;  // [radius index][grid index]
  std::uint64_t samples = 0;
};

/// Exactly 1/(k-1).
PcEstimate estimate_pc(const TreeSite& tree);

/// Finite-size crossing estimate. Each sample yields, through a minimax
/// (invasion) search on the edge uniforms, the smallest p at which the root
/// reaches each radius; the whole p-curve comes from one set of samples.
/// With Q_j(p) = P(R_{j+1})/P(R_j), the estimate is the crossing of Q_j and
/// Q_{j+1} for the largest scales; below p_c the ratios fall with scale and
/// above it they rise. Throws std::domain_error with diagnostics when the
/// curves do not cross inside [p_lo, p_hi].
PcEstimate estimate_pc(const Graph& g, const PcScan& scan, const MonteCarloSource& source);

/// Vertex farthest from the boundary (smallest id among ties).
VertexId deepest_vertex(const Graph& g);

/// |a - b| within the root-sum-square of the two errors.
bool estimates_agree(const PcEstimate& a, const PcEstimate& b, double* joint_error = nullptr);

// --- tails ------------------------------------------------------------------

struct TailResult {
  double p = 0.0;
  SurvivalCurve volume, rad_int, rad_ext;
  ExponentFit volume_fit, rad_int_fit, rad_ext_fit;
  std::uint64_t boundary_touching = 0;
  std::uint64_t truncated = 0;
  std::vector<std::string> warnings;
};

struct TailOptions {
  std::uint32_t n_max = 64;
  /// Fit window; 0 means the default [n_max/4, 3 n_max/4].
  std::uint32_t fit_min = 0;
  std::uint32_t fit_max = 0;
  std::uint64_t max_volume = std::numeric_limits<std::uint64_t>::max();
};

/// Survival curves of |K_root|, rad_int and rad_ext (identical on the tree).
/// A window with fewer than four usable points is refused with
/// std::domain_error.
TailResult tail_exponents(const TreeSite& tree, double p, const TailOptions& options,
                          const MonteCarloSource& source);
TailResult tail_exponents(const Graph& g, VertexId v, double p, const TailOptions& options,
                          const MonteCarloSource& source);

// --- ballisticity -----------------------------------------------------------

struct BallisticResult {
  double p = 0.0;
  std::uint32_t ambient_distance = 0;  // d(u, v)
  std::uint64_t hits = 0;              // samples with u <-> v
  /// P(d_int(u,v) >= n | u <-> v), n = 1..n_max.
  SurvivalCurve conditional_tail;
  LinearFit log_fit;  // log P against n over the estimable range
  double rate = 0.0;  // fitted c_p = −slope
  std::uint32_t fit_lo = 0, fit_hi = 0;
  /// P(max_{w in K_u, w != u} d_int(u,w)/d(u,w) > λ), over samples with |K_u| >= 2.
  std::vector<double> lambda_grid;
  std::vector<double> ratio_tail;
  std::uint64_t ratio_samples = 0;
  double max_ratio = 0.0;
};

/// Refuses (std::domain_error) when fewer than 100 samples connect u and v.
/// The fit uses n from d(u,v)+1 up to the largest n with at least
/// `min_count` conditional hits; fewer than 3 such points are refused too.
BallisticResult ballisticity(const Graph& g, VertexId u, VertexId v, double p,
                             std::uint32_t n_max, const std::vector<double>& lambda_grid,
                             const MonteCarloSource& source, std::uint64_t min_count = 20);

// --- magnetization ------------------------------------------------------------

struct MagnetizationScaling {
  double p = 0.0;
  std::vector<double> h;
  std::vector<Estimate> estimate;
  std::vector<double> exact;  // tree recursion; empty on general graphs
  std::vector<double> z;      // z-scores against `exact`
  std::vector<double> dropped_h;
  LinearFit fit;        // log M̂ against log h, weighted
  LinearFit exact_fit;  // same for the recursion values
  std::vector<std::string> warnings;
};

/// Points with M̂·N < 100 are dropped with a warning. The tree sampler stops
/// a cluster once its volume passes 40/h, where 1 − e^{−h|K|} is within e^{−40} of 1.
MagnetizationScaling magnetization_scaling(const TreeSite& tree, double p,
                                           const std::vector<double>& h_grid,
                                           const MonteCarloSource& source);
MagnetizationScaling magnetization_scaling(const Graph& g, VertexId v, double p,
                                           const std::vector<double>& h_grid,
                                           const MonteCarloSource& source);

// --- multi-arm ------------------------------------------------------------------

enum class ArmMode { volume, rad_int, rad_ext, boundary_reach };
std::string to_string(ArmMode m);
ArmMode parse_arm_mode(const std::string& text);

struct MultiArmResult {
  ArmMode mode = ArmMode::volume;
  std::vector<VertexId> vertices;
  std::vector<std::uint32_t> thresholds;
  std::vector<std::uint32_t> pairwise_distance;  // row-major ℓ×ℓ
  Estimate joint;  // clusters pairwise distinct and each satisfies its arm event
  std::vector<Estimate> single;
  double bk_bound = 0.0;  // product of the single-arm estimates
  double ratio = 0.0;     // joint / bound (0 when the bound is 0)
  bool bound_holds = true;  // joint <= bound + 4σ
  std::uint64_t truncated = 0;
};

/// `thresholds` holds n_i per vertex for volume mode, or a single n for the
/// radius modes; boundary_reach ignores it. Clusters are explored in full
/// up to `max_volume` (truncations are counted).
MultiArmResult multi_arm(const Graph& g, const std::vector<VertexId>& vertices, double p,
                         ArmMode mode, const std::vector<std::uint32_t>& thresholds,
                         const MonteCarloSource& source,
                         std::uint64_t max_volume = std::numeric_limits<std::uint64_t>::max());

// --- trifurcations --------------------------------------------------------------

struct TrifurcationPoint {
  double p = 0.0;
  Estimate estimate;
  Estimate half_horizon;    // same samples at horizon/2
  Estimate single_branch;   // per-branch probability (mean degree / k)
  double bk_product = 0.0;  // single_branch³
  double exact = 0.0;       // tree: (p·reach_{H−1})³ at the sampled horizon
  double exact_infinite = 0.0;  // tree: (p·θ_b)³
  double z = 0.0;
  double ratio = 0.0;  // estimate / (p − p_c)³
  double ratio_error = 0.0;
  bool horizon_stable = true;  // horizons H/2 and H agree within 3σ
};

struct TrifurcationCurve {
  double p_c = 0.0;
  std::uint32_t horizon = 0;
  std::vector<TrifurcationPoint> points;
  double ratio_band = 0.0;  // max ratio / min ratio
  std::vector<std::string> warnings;
};

/// Trifurcation at the root of the 3-regular tree (k = 3 only: a trifurcation
/// needs all branches of a degree-3 vertex). Grid points must exceed p_c.
TrifurcationCurve trifurcation_curve(const TreeSite& tree, const std::vector<double>& p_grid,
                                     std::uint32_t horizon, const MonteCarloSource& source);
/// Same on a graph at a degree-3 vertex, with cluster explorations of G − v.
TrifurcationCurve trifurcation_curve(const Graph& g, VertexId v, double p_c,
                                     const std::vector<double>& p_grid, std::uint32_t horizon,
                                     const MonteCarloSource& source);

// --- logarithmic density ----------------------------------------------------------

struct DeltaLogPoint {
  double p = 0.0;
  std::vector<double> mean_intersection;  // Ê|K ∩ B(n)|, n = 0..n_max
  std::vector<double> ball_size;          // |B(n)|
  double delta = 0.0;         // local slope at n_max
  double delta_previous = 0.0;  // local slope at n_max − 1
  double std_error = 0.0;     // batch-means error of `delta`
  bool drift = false;         // |delta − delta_previous| > std_error
};

struct DeltaLogResult {
  double p_c = 0.0;
  std::vector<DeltaLogPoint> points;
  double slope_through_origin = 0.0;  // δ̂ ≈ a (p − p_c)
  std::vector<std::string> warnings;
};

DeltaLogResult delta_log(const TreeSite& tree, double p_c, const std::vector<double>& p_grid,
                         std::uint32_t n_max, const MonteCarloSource& source,
                         unsigned batches = 16);
DeltaLogResult delta_log(const Graph& g, VertexId v, double p_c,
                         const std::vector<double>& p_grid, std::uint32_t n_max,
                         const MonteCarloSource& source, unsigned batches = 16);

// --- planar duality -------------------------------------------------------------

struct DualityResult {
  PcEstimate pc_dual;
  double pu_transported = 0.0;  // 1 − p̂_c(M†)
  double pu_transported_error = 0.0;
  bool merge_available = false;
  PcEstimate pu_merge;  // primal diagnostic
  std::string merge_diagnostic;
  double discrepancy = 0.0;
  double joint_error = 0.0;
  bool consistent = false;
};

/// p̂_c of the dual through estimate_pc, transported to p̂_u(M) = 1 − p̂_c(M†),
/// and an independent primal diagnostic: target connection probabilities
/// τ(root, ∂B(D)) pooled over the sphere. Their scale ratios fall with D
/// while distant clusters stay apart and flatten once they merge. The
/// diagnostic is only a cross-check; its failure is reported, not thrown.
DualityResult pu_duality(const DualMap& dual, const PcScan& dual_scan, const Graph& primal,
                         const PcScan& merge_scan, const MonteCarloSource& source,
                         std::uint64_t merge_samples);

/// Onset of scale independence of τ(root, ∂B(D)): the first p from which
/// Q_{j+1} − Q_j is never more than 3 batch standard errors below zero.
PcEstimate estimate_pu_merge(const Graph& g, const PcScan& scan, const MonteCarloSource& source);

struct PuGeometryResult {
  double p = 0.0;
  EdgeId edge = 0;
  std::uint32_t n_max = 0;
  std::uint64_t samples = 0;
  std::uint64_t connected = 0;
  std::uint64_t disconnected = 0;
  std::uint64_t unresolved = 0;  // connectivity undecided within the volume cap
  SurvivalCurve dint_tail;       // P(d_int >= n | x <-> y)
  SurvivalCurve conrad_tail;     // P(ConRad >= n | x <-> y)
  ExponentFit dint_fit, conrad_fit;
  bool fits_available = false;
  std::string fit_diagnostic;
  /// Samples with 1 < d_int <= n_max whose two dual clusters were explored in
  /// full without touching the dual boundary.
  std::uint64_t sandwich_samples = 0;
  std::uint64_t boundary_skipped = 0;
  std::uint64_t distinctness_violations = 0;
  double c_lower = 0.0, c_upper = 0.0;  // min / max of d_int / min(|K1|,|K2|)
  double c_lower_half = 0.0, c_upper_half = 0.0;  // same over the first half of samples
  double conrad_lower = 0.0, conrad_upper = 0.0;  // ConRad / min(rad K1, rad K2)
};

struct PuGeometryOptions {
  std::uint32_t n_max = 16;
  std::uint32_t fit_min = 0;  // 0: n_max/4
  std::uint32_t fit_max = 0;  // 0: 3 n_max/4
  std::uint64_t max_volume = 1 << 22;
};

/// Adjacent x, y joined by primal edge `e` (which must have a dual partner).
/// Distances beyond n_max are censored: they count towards every n <= n_max.
/// Connectivity of censored samples is decided through the dual clusters K1,
/// K2 of the faces flanking e (in ω† with e† removed): K1 = K2 separates x
/// from y, while distinct clusters that stay off the dual boundary guarantee
/// a primal path. Remaining samples are resolved by a full primal search.
PuGeometryResult pu_geometry(const CombinatorialMap& primal, const DualMap& dual, EdgeId e,
                             double p, const PuGeometryOptions& options,
                             const MonteCarloSource& source);

}  // namespace perclab
