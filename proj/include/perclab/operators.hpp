#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "perclab/graph.hpp"
#include "perclab/stats.hpp"

namespace perclab {

enum class MatrixKind { T, C, S, Bint, Sint, Aint };

/// Which two-point matrix to build. Entry (u,v) is the probability that u and
/// v are connected and
///   T: always;            C(n): d(u,v) >= n;      S(n): d(u,v) = n;
///   Bint(n): d_int <= n;  Sint(n): d_int = n;     Aint(n,m): n <= d_int <= n+m,
/// with d the ambient and d_int the intrinsic (open-path) distance.
struct MatrixKindSpec {
  MatrixKind kind = MatrixKind::T;
  std::uint32_t n = 0;
  std::uint32_t m = 0;

  bool intrinsic() const noexcept {
    return kind == MatrixKind::Bint || kind == MatrixKind::Sint || kind == MatrixKind::Aint;
  }
  /// Whether a connected pair at ambient distance d and intrinsic distance
  /// d_int contributes.
  bool accepts(std::uint32_t d, std::uint32_t d_int) const noexcept;
  std::string name() const;  // "T", "C(3)", "Aint(1,2)"
  static MatrixKindSpec parse(const std::string& text);
};

struct OperatorMatrix {
  MatrixKindSpec kind;
  double p = 0.0;
  std::vector<VertexId> window;
  Eigen::MatrixXd values;
  std::uint64_t sample_count = 0;  // 0 for exact sources
  std::uint64_t graph_hash = 0;
  std::uint64_t master_seed = 0;
  std::string source;  // "monte-carlo", "oracle-tree", "oracle-enumeration", "given"
  std::vector<std::string> warnings;

  /// Binomial standard error of entry (a,b) for Monte Carlo matrices.
  double std_error(std::size_t a, std::size_t b) const;
};

struct MonteCarloSource {
  std::uint64_t samples = 10000;
  std::uint64_t master_seed = 1;
  /// Sample streams used are [first_stream, first_stream + samples).
  std::uint64_t first_stream = 0;
  unsigned workers = 1;
  /// Warn when a nonzero entry has relative standard error above this (0: off).
  double relative_error_target = 0.0;
};

/// Shared-configuration estimate: every sample updates all window pairs.
OperatorMatrix build_matrix_mc(const Graph& g, double p, const MatrixKindSpec& kind,
                               std::vector<VertexId> window, const MonteCarloSource& source);

/// Exact matrix: closed form p^d on forests, exhaustive enumeration otherwise
/// (subject to the enumeration cap).
OperatorMatrix build_matrix_oracle(const Graph& g, double p, const MatrixKindSpec& kind,
                                   std::vector<VertexId> window);

OperatorMatrix matrix_from_values(Eigen::MatrixXd values, const MatrixKindSpec& kind = {});

/// Vertices at graph distance >= margin from the boundary.
std::vector<VertexId> interior_window(const Graph& g, std::uint32_t margin);
/// Vertices within distance `radius` of `centre`.
std::vector<VertexId> ball_window(const Graph& g, VertexId centre, std::uint32_t radius);
std::vector<VertexId> full_window(const Graph& g);

enum class NormMethod { closed_form_1, closed_form_inf, power_2, nonlinear_power_q };
std::string to_string(NormMethod m);

struct NormResult {
  double q = 2.0;
  double value = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
  NormMethod method = NormMethod::power_2;
  bool converged = true;
};

inline constexpr std::size_t kNormIterationCap = 10000;

/// q→q operator norm of a nonnegative matrix, q in [1, ∞] (use
/// std::numeric_limits<double>::infinity() for ∞).
NormResult operator_norm(const Eigen::MatrixXd& m, double q, double tol = 1e-8,
                         std::size_t cap = kNormIterationCap);

struct TriangleResult {
  double nabla = 0.0;      // max_v M³(v,v)
  std::size_t argmax = 0;  // window index
  double norm2_cubed = 0.0;
  double gap = 0.0;  // ‖M‖₂³ − ∇, nonnegative up to tolerance
};

TriangleResult triangle_diagram(const Eigen::MatrixXd& m);

struct InterpolationResult {
  double q1 = 1.0, q2 = 2.0;
  double lhs = 0.0;  // ‖M‖_{q2}
  double rhs = 0.0;  // ‖M‖_{q1} · s^{(q2-q1)/(q1 q2)}
  std::size_t support = 0;  // s = max number of nonzero entries in a row
  double slack = 0.0;
  bool converged = true;
};

InterpolationResult norm_interpolation_check(const Eigen::MatrixXd& m, double q1, double q2,
                                             double tol = 1e-8);

struct DecayResult {
  double q = 2.0;
  std::vector<double> shell_max;       // n -> max τ over window pairs at distance n
  std::vector<double> c_norms;         // n -> ‖C(n)‖_{q→q}
  std::vector<double> explicit_bound;  // n -> 2‖T‖ e^{−n/(e‖T‖)}
  double norm_t = 0.0;
  double xi = 0.0;  // +inf when no off-diagonal connection was seen
  LinearFit xi_fit;
  double eta = 0.0;
  LinearFit eta_fit;
  bool explicit_bound_holds = true;
  bool eta_diagnostic_holds = true;  // η̂ ≥ 1/(e‖T‖) − 3·stderr
};

/// Decay of the two-point matrix `t` (kind T) with ambient distance on `g`.
/// Fits use shells n in [fit_min, fit_max] with positive values; fewer than
/// four usable shells is refused with std::domain_error.
DecayResult decay_rates(const Graph& g, const OperatorMatrix& t, double q, std::uint32_t n_max,
                        std::uint32_t fit_min = 1, std::uint32_t fit_max = 0);

struct NormVsPPoint {
  double p = 0.0;
  double norm = 0.0;
  double std_error = 0.0;  // spread over independent batches
  double implied_threshold = 0.0;  // p + (1−p)/(‖A‖·‖T̂_p‖)
  bool converged = true;
};

struct NormVsPCurve {
  double q = 2.0;
  double adjacency_norm = 0.0;
  std::vector<NormVsPPoint> points;
  bool monotone = true;  // nondecreasing in p within 3 standard errors
};

NormVsPCurve norm_vs_p_curve(const Graph& g, const std::vector<VertexId>& window, double q,
                             const std::vector<double>& p_grid, const MonteCarloSource& source,
                             unsigned batches = 8);

struct NormVsQPoint {
  double q = 2.0;
  double value = 0.0;
  double scaled = 0.0;  // value·(q−1)
  bool converged = true;
};

struct NormVsQCurve {
  std::vector<NormVsQPoint> points;
  double variation = 0.0;  // (max − min)/min of value·(q−1)
  double band = 0.5;
  bool flat = false;       // variation < band
};

NormVsQCurve norm_vs_q_curve(const Eigen::MatrixXd& m, const std::vector<double>& q_grid,
                             double band = 0.5);

/// E|K_v ∩ B(v,n)| for n = 0..n_max, with the ball sizes |B(v,n)|.
struct BallProfile {
  std::vector<Estimate> mean;
  std::vector<std::uint64_t> ball_size;
};

BallProfile ball_intersection_profile(const Graph& g, VertexId v, double p, std::uint32_t n_max,
                                      const MonteCarloSource& source);

struct LogBoundResult {
  BallProfile profile;
  LinearFit log_fit;    // E|K∩B| against log|B|
  LinearFit power_fit;  // log E|K∩B| against log|B|
  LinearFit ball_fit;   // E|K∩B| against n
  double ball_constant = 0.0;  // max_{n>=1} E|K∩B(n)| / n
  bool logarithmic_preferred = false;  // log fit has the larger R²
};

LogBoundResult log_bound_check(const Graph& g, VertexId v, double p, std::uint32_t n_max,
                               const MonteCarloSource& source);

/// Binary layout: magic "PLMX", u32 version, u32 name length, name bytes,
/// f64 p, u64 sample count, u64 graph hash, u64 window size, u32 window ids,
/// then row-major f64 values.
void write_matrix_binary(std::ostream& os, const OperatorMatrix& m);
OperatorMatrix read_matrix_binary(std::istream& is);
std::string matrix_sidecar_json(const OperatorMatrix& m);
/// Rows "u,v,value" over window vertex ids, upper triangle including diagonal.
void write_matrix_csv(std::ostream& os, const OperatorMatrix& m);

}  // namespace perclab
