#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "perclab/graph.hpp"

namespace perclab {

using BigInt = boost::multiprecision::cpp_int;

/// Edge-count caps for the brute-force routines.
inline constexpr std::size_t kEventCap = 22;
inline constexpr std::size_t kDisjointCap = 18;
inline constexpr std::size_t kInverseBkCap = 14;

class OracleCapExceeded : public std::runtime_error {
 public:
  OracleCapExceeded(const std::string& what, std::size_t edges, std::size_t cap)
      : std::runtime_error(what + ": graph has " + std::to_string(edges) +
                           " edges, oracle cap is " + std::to_string(cap)),
        cap(cap) {}
  std::size_t cap;
};

/// Configurations are edge bitmasks (bit e set = edge e open).
using EdgeMask = std::uint32_t;

struct EventSpec {
  enum class Kind { connection, volume_at_least, radius_at_least, ghost_connection, custom };

  Kind kind = Kind::connection;
  VertexId u = 0;
  VertexId v = 0;
  std::uint64_t n = 0;
  bool intrinsic = true;
  double h = 0.0;
  bool increasing = true;
  std::function<bool(EdgeMask)> predicate;

  static EventSpec connection(VertexId a, VertexId b);
  static EventSpec volume_at_least(VertexId a, std::uint64_t n);
  static EventSpec radius_at_least(VertexId a, std::uint64_t n, bool intrinsic);
  /// v ↔ ghost field of intensity h; the ghost field is integrated out, so
  /// this "event" contributes the weight 1 - exp(-h |K_v|) per configuration.
  static EventSpec ghost_connection(VertexId a, double h);
  static EventSpec custom(std::function<bool(EdgeMask)> pred, bool increasing);

  std::string describe() const;
};

/// p = num/den, exact.
struct Rational {
  BigInt num;
  BigInt den;
  double to_double() const;
};

/// The shortest decimal that round-trips to `p`, as an exact fraction
/// (0.2 -> 1/5).
Rational rational_from_double(double p);

/// Σ_k c_k p^k (1-p)^(E-k): c_k collects configurations with k open edges.
struct ExactPoly {
  std::size_t edges = 0;
  std::vector<double> coeff;
  /// Coefficients are integer configuration counts (boolean events).
  bool integral = true;

  double operator()(double p) const;
  /// Numerator over den^E at p = num/den; requires integral coefficients.
  BigInt scaled(const Rational& p) const;
  Rational exact(const Rational& p) const;
};

struct EventProbability {
  ExactPoly poly;
  double value = 0.0;
};

EventProbability exact_event_prob(const Graph& g, const EventSpec& event, double p,
                                  unsigned workers = 1);

/// P(A∘B). Connection pairs sharing an endpoint (or equal) use an
/// edge-disjoint-paths max-flow test per configuration; other increasing
/// events use witness-subset search. Non-increasing events are refused.
EventProbability disjoint_occurrence_prob(const Graph& g, const EventSpec& a,
                                          const EventSpec& b, double p, unsigned workers = 1);

/// Whether two edge-disjoint open paths join w to u and w to v in `open`
/// (u = v asks for two disjoint w-u paths), by unit-capacity max-flow.
bool disjoint_connections(const Graph& g, EdgeMask open, VertexId w, VertexId u, VertexId v);

struct BkResult {
  std::string description;
  double p = 0.0;
  double prob_a = 0.0;
  double prob_b = 0.0;
  double prob_disjoint = 0.0;
  double slack = 0.0;  // P(A)P(B) - P(A∘B)
  bool holds = true;   // decided exactly
};

/// BK for one pair of increasing events, decided exactly.
BkResult verify_bk(const Graph& g, const EventSpec& a, const EventSpec& b, double p,
                   unsigned workers = 1);

struct BkSweep {
  double p = 0.0;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double min_slack = 0.0;  // min over triples of τ(u,w)τ(w,v) - P({u↔w}∘{w↔v})
  std::string worst;
};

/// BK for {u↔w}∘{w↔v} over every triple of vertices.
BkSweep verify_bk_all_triples(const Graph& g, double p, unsigned workers = 1);

/// Exact two-point data: for each ordered pair (u,v) and intrinsic distance j
/// (j = vertex_count encodes "not connected") the number of configurations
/// with k open edges.
class DistanceTable {
 public:
  DistanceTable(const Graph& g, unsigned workers = 1);

  std::size_t vertices() const noexcept { return nv_; }
  std::size_t edges() const noexcept { return ne_; }
  /// Configurations with d_int(u,v) in [lo, hi] (hi clipped to V-1).
  ExactPoly range(VertexId u, VertexId v, std::uint32_t lo, std::uint32_t hi) const;
  ExactPoly tau(VertexId u, VertexId v) const { return range(u, v, 0, kUnreachable); }
  const std::vector<std::uint32_t>& ambient() const noexcept { return ambient_; }
  std::uint32_t distance(VertexId u, VertexId v) const noexcept { return ambient_[u * nv_ + v]; }

 private:
  std::size_t nv_ = 0;
  std::size_t ne_ = 0;
  std::vector<std::uint64_t> counts_;  // [(u*V + v)*(V+1) + j]*(E+1) + k
  std::vector<std::uint32_t> ambient_;
};

struct EntrywiseResult {
  double p = 0.0;
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  /// min over (u,v) of (C_m S_n)(u,v) - C_{n+m}(u,v)
  double extrinsic_min_slack = 0.0;
  bool extrinsic_holds = true;
  /// min over (u,v) of (B^int_m S^int_n)(u,v) - A^int_{n,n+m}(u,v)
  double intrinsic_min_slack = 0.0;
  bool intrinsic_holds = true;
};

/// Both entrywise submultiplicativity lemmas, decided exactly at rational p.
EntrywiseResult verify_entrywise_inequalities(const DistanceTable& table, double p,
                                              std::uint32_t n, std::uint32_t m);
EntrywiseResult verify_entrywise_inequalities(const Graph& g, double p, std::uint32_t n,
                                              std::uint32_t m);

struct InverseBkResult {
  double p = 0.0;
  std::vector<VertexId> vertices;
  std::vector<double> h;
  double prob_disjoint_occurrence = 0.0;  // P(∘_i {v_i ↔ G_i})
  double prob_distinct_clusters = 0.0;    // P(K_{v_i} disjoint, v_i ↔ G_i)
  double prod_inf_magnetization = 0.0;
  double prod_sup_magnetization = 0.0;
  double sup_t2 = 0.0;  // max_{i<j} T²(v_i, v_j)
  double sup_t3 = 0.0;  // max_{i<j} T³(v_i, v_j)
  std::size_t max_degree = 0;
  /// Inverse-BK lower bound with the constant its proof delivers,
  /// (4M/p²)·binom(ℓ,2); slack = P(∘) - (Π inf M - correction).
  double inverse_bk_correction = 0.0;
  double inverse_bk_slack = 0.0;
  /// Same with the printed constant (4M/p²)·binom(ℓ-1,2), diagnostic only.
  double inverse_bk_printed_correction = 0.0;
  double inverse_bk_printed_slack = 0.0;
  /// Diagrammatic bound with the proof's constant ℓ(ℓ-1)·Π sup M·sup T³;
  /// slack = P(distinct) - (P(∘) - correction).
  double diagrammatic_correction = 0.0;
  double diagrammatic_slack = 0.0;
  /// Printed constant 2·binom(ℓ-1,2)·Π sup M^ℓ·sup T³, diagnostic only.
  double diagrammatic_printed_correction = 0.0;
  double diagrammatic_printed_slack = 0.0;
  bool holds = true;  // both proof-constant slacks >= 0
};

/// Exact evaluation of both sides of the inverse-BK and diagrammatic lemmas
/// for ℓ = |vertices| ∈ {2, 3}. Ghost fields are integrated out per
/// configuration; the per-configuration weights do not depend on p, so one
/// enumeration serves every entry of `ps`.
std::vector<InverseBkResult> verify_inverse_bk(const Graph& g, const std::vector<double>& ps,
                                               const std::vector<double>& h,
                                               const std::vector<VertexId>& vertices,
                                               unsigned workers = 1);

/// Closed forms and level recursions on the k-regular tree. With depth = 0 the
/// values refer to the infinite tree; with depth > 0 to the tree truncated at
/// that depth (the exact expectations for build_tree(k, depth)).
struct TreeRecursion {
  int k = 3;
  double p = 0.0;
  double h = 0.0;
  std::uint32_t depth = 0;
  double branch_survival = 0.0;  // θ_b (infinite tree), or horizon version
  double theta = 0.0;            // P(root cluster infinite / reaches depth)
  double chi = 0.0;              // E|K_root| (infinity when divergent)
  double magnetization = 0.0;    // M_{p,h}(root)
  std::vector<double> sphere;    // E|∂B_int(root, n)|, n = 0..n_max
  std::vector<double> ball;      // E|B_int(root, n)|
  std::vector<double> radius_tail;  // P(rad(K_root) >= n), n = 0..n_max
};

TreeRecursion tree_recursion(int k, double p, double h, std::uint32_t n_max,
                             std::uint32_t depth = 0);

/// Probability that a branch hanging off an open edge of the root reaches
/// `levels` further levels, on the infinite k-regular tree.
double tree_branch_reach(int k, double p, std::uint32_t levels);

/// P(|K_root| = n) on the infinite k-regular tree, n = 1..n_max (index 0
/// unused), by the hitting-time formula for Galton-Watson forests.
std::vector<double> tree_volume_distribution(int k, double p, std::uint64_t n_max);

/// JSON golden document for an oracle run (inputs, results, graph hash).
std::string oracle_golden_json(const Graph& g, const std::vector<EntrywiseResult>& entrywise,
                               const std::vector<BkSweep>& bk,
                               const std::vector<InverseBkResult>& inverse_bk);

}  // namespace perclab
