#include "perclab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "perclab/oracle.hpp"
#include "perclab/parallel.hpp"
#include "perclab/percolation.hpp"

namespace perclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::int64_t> window_positions(const Graph& g, const std::vector<VertexId>& window) {
  std::vector<std::int64_t> pos(g.vertex_count(), -1);
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (window[i] >= g.vertex_count()) throw std::invalid_argument("window vertex out of range");
    if (pos[window[i]] != -1) throw std::invalid_argument("window lists a vertex twice");
    pos[window[i]] = static_cast<std::int64_t>(i);
  }
  return pos;
}

double lp_norm(const Eigen::VectorXd& x, double q) {
  if (std::isinf(q)) return x.cwiseAbs().maxCoeff();
  const double scale = x.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return scale * std::pow((x.cwiseAbs() / scale).array().pow(q).sum(), 1.0 / q);
}

}  // namespace

bool MatrixKindSpec::accepts(std::uint32_t d, std::uint32_t d_int) const noexcept {
  switch (kind) {
    case MatrixKind::T: return true;
    case MatrixKind::C: return d >= n;
    case MatrixKind::S: return d == n;
    case MatrixKind::Bint: return d_int <= n;
    case MatrixKind::Sint: return d_int == n;
    case MatrixKind::Aint: return d_int >= n && d_int - n <= m;
  }
  return false;
}

std::string MatrixKindSpec::name() const {
  switch (kind) {
    case MatrixKind::T: return "T";
    case MatrixKind::C: return "C(" + std::to_string(n) + ")";
    case MatrixKind::S: return "S(" + std::to_string(n) + ")";
    case MatrixKind::Bint: return "Bint(" + std::to_string(n) + ")";
    case MatrixKind::Sint: return "Sint(" + std::to_string(n) + ")";
    case MatrixKind::Aint: return "Aint(" + std::to_string(n) + "," + std::to_string(m) + ")";
  }
  return "?";
}

MatrixKindSpec MatrixKindSpec::parse(const std::string& text) {
  MatrixKindSpec k;
  const auto open = text.find('(');
  const std::string head = text.substr(0, open);
  std::vector<std::uint32_t> args;
  if (open != std::string::npos) {
    const auto close = text.find(')', open);
    if (close == std::string::npos) throw std::invalid_argument("matrix kind: missing ')' in " + text);
    std::string inner = text.substr(open + 1, close - open - 1);
    std::size_t at = 0;
    while (at <= inner.size()) {
      const auto comma = inner.find(',', at);
      const std::string tok = inner.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
      if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("matrix kind: bad argument in " + text);
      }
      args.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
      if (comma == std::string::npos) break;
      at = comma + 1;
    }
  }
  auto want = [&](std::size_t count) {
    if (args.size() != count) throw std::invalid_argument("matrix kind: wrong argument count in " + text);
  };
  if (head == "T") {
    want(0);
    k.kind = MatrixKind::T;
  } else if (head == "C" || head == "S" || head == "Bint" || head == "Sint") {
    want(1);
    k.kind = head == "C" ? MatrixKind::C : head == "S" ? MatrixKind::S
             : head == "Bint" ? MatrixKind::Bint : MatrixKind::Sint;
    k.n = args[0];
  } else if (head == "Aint") {
    want(2);
    k.kind = MatrixKind::Aint;
    k.n = args[0];
    k.m = args[1];
  } else {
    throw std::invalid_argument("matrix kind: unknown kind " + text);
  }
  return k;
}

double OperatorMatrix::std_error(std::size_t a, std::size_t b) const {
  if (sample_count == 0) return 0.0;
  const double t = values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return std::sqrt(std::max(0.0, t * (1 - t)) / static_cast<double>(sample_count));
}

OperatorMatrix build_matrix_mc(const Graph& g, double p, const MatrixKindSpec& kind,
                               std::vector<VertexId> window, const MonteCarloSource& source) {
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("build_matrix: p outside [0,1]");
  if (source.samples == 0) throw std::invalid_argument("build_matrix: need at least one sample");
  const auto pos = window_positions(g, window);
  const std::size_t w = window.size();
  const std::vector<std::uint32_t> dist = window_distances(g, window);
  using Acc = std::vector<std::uint32_t>;
  const Acc counts = sharded_reduce(
      source.samples, source.workers, Acc(w * w, 0),
      [&](Acc& acc, std::uint64_t b, std::uint64_t e) {
        ClusterExplorer ex(g);
        std::vector<std::uint8_t> covered(w, 0);
        std::vector<std::size_t> members;
        for (std::uint64_t i = b; i < e; ++i) {
          const EdgeSampler open(Seed{source.master_seed, source.first_stream + i}, p);
          std::fill(covered.begin(), covered.end(), 0);
          for (std::size_t a = 0; a < w; ++a) {
            if (covered[a]) continue;
            ex.explore(window[a], open, nullptr);
            members.clear();
            for (VertexId x : ex.members()) {
              if (pos[x] >= 0) members.push_back(static_cast<std::size_t>(pos[x]));
            }
            for (std::size_t s : members) covered[s] = 1;
            if (!kind.intrinsic()) {
              for (std::size_t s : members) {
                for (std::size_t t : members) {
                  if (kind.accepts(dist[s * w + t], 0)) ++acc[s * w + t];
                }
              }
            } else {
              // intrinsic distances need one exploration per member
              for (std::size_t s : members) {
                ex.explore(window[s], open, nullptr);
                for (std::size_t t : members) {
                  if (kind.accepts(dist[s * w + t], ex.depth(window[t]))) ++acc[s * w + t];
                }
              }
            }
          }
        }
      },
      [](Acc& total, const Acc& part) {
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i];
      });
  OperatorMatrix out;
  out.kind = kind;
  out.p = p;
  out.window = std::move(window);
  out.sample_count = source.samples;
  out.graph_hash = graph_hash(g);
  out.master_seed = source.master_seed;
  out.source = "monte-carlo";
  out.values.resize(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(w));
  const double inv = 1.0 / static_cast<double>(source.samples);
  for (std::size_t s = 0; s < w; ++s) {
    for (std::size_t t = 0; t < w; ++t) {
      out.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = counts[s * w + t] * inv;
    }
  }
  if (source.relative_error_target > 0) {
    std::size_t loose = 0;
    for (std::size_t s = 0; s < w; ++s) {
      for (std::size_t t = s + 1; t < w; ++t) {
        const double v = out.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
        if (v > 0 && out.std_error(s, t) > source.relative_error_target * v) ++loose;
      }
    }
    if (loose > 0) {
      out.warnings.push_back(std::to_string(loose) +
                             " nonzero entries exceed the relative standard error target; raise N");
    }
  }
  return out;
}

OperatorMatrix build_matrix_oracle(const Graph& g, double p, const MatrixKindSpec& kind,
                                   std::vector<VertexId> window) {
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("build_matrix: p outside [0,1]");
  window_positions(g, window);
  const std::size_t w = window.size();
  const std::vector<std::uint32_t> dist = window_distances(g, window);
  OperatorMatrix out;
  out.kind = kind;
  out.p = p;
  out.graph_hash = graph_hash(g);
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(w));
  if (g.is_forest()) {
    // unique paths: connected iff every edge of the path is open, and then
    // the intrinsic distance equals the ambient one
    out.source = "oracle-tree";
    for (std::size_t s = 0; s < w; ++s) {
      for (std::size_t t = 0; t < w; ++t) {
        const std::uint32_t d = dist[s * w + t];
        if (d == kUnreachable || !kind.accepts(d, d)) continue;
        out.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = std::pow(p, static_cast<double>(d));
      }
    }
  } else {
    out.source = "oracle-enumeration";
    const DistanceTable table(g);
    const std::uint32_t top = static_cast<std::uint32_t>(g.vertex_count());
    for (std::size_t s = 0; s < w; ++s) {
      for (std::size_t t = 0; t < w; ++t) {
        const VertexId a = window[s], b = window[t];
        const std::uint32_t d = dist[s * w + t];
        double v = 0.0;
        switch (kind.kind) {
          case MatrixKind::T: v = table.tau(a, b)(p); break;
          case MatrixKind::C: v = d >= kind.n ? table.tau(a, b)(p) : 0.0; break;
          case MatrixKind::S: v = d == kind.n ? table.tau(a, b)(p) : 0.0; break;
          case MatrixKind::Bint: v = table.range(a, b, 0, kind.n)(p); break;
          case MatrixKind::Sint: v = kind.n < top ? table.range(a, b, kind.n, kind.n)(p) : 0.0; break;
          case MatrixKind::Aint: v = kind.n < top ? table.range(a, b, kind.n, kind.n + kind.m)(p) : 0.0; break;
        }
        out.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = v;
      }
    }
  }
  out.window = std::move(window);
  return out;
}

OperatorMatrix matrix_from_values(Eigen::MatrixXd values, const MatrixKindSpec& kind) {
  if (values.rows() != values.cols()) throw std::invalid_argument("matrix_from_values: not square");
  OperatorMatrix out;
  out.kind = kind;
  out.source = "given";
  out.window.resize(static_cast<std::size_t>(values.rows()));
  for (std::size_t i = 0; i < out.window.size(); ++i) out.window[i] = static_cast<VertexId>(i);
  out.values = std::move(values);
  return out;
}

std::vector<VertexId> interior_window(const Graph& g, std::uint32_t margin) {
  // multi-source BFS from the boundary
  std::vector<std::uint32_t> depth(g.vertex_count(), kUnreachable);
  std::vector<VertexId> queue;
  for (VertexId b : g.boundary_vertices()) {
    depth[b] = 0;
    queue.push_back(b);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexId x = queue[head];
    for (const Incidence& inc : g.neighbors(x)) {
      if (depth[inc.to] != kUnreachable) continue;
      depth[inc.to] = depth[x] + 1;
      queue.push_back(inc.to);
    }
  }
  std::vector<VertexId> out;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (depth[v] >= margin) out.push_back(v);
  }
  return out;
}

std::vector<VertexId> ball_window(const Graph& g, VertexId centre, std::uint32_t radius) {
  const auto d = bfs_distances(g, centre, radius);
  std::vector<VertexId> out;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (d[v] <= radius) out.push_back(v);
  }
  return out;
}

std::vector<VertexId> full_window(const Graph& g) {
  std::vector<VertexId> out(g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) out[v] = v;
  return out;
}

std::string to_string(NormMethod m) {
  switch (m) {
    case NormMethod::closed_form_1: return "closed-form-1";
    case NormMethod::closed_form_inf: return "closed-form-inf";
    case NormMethod::power_2: return "power-2";
    case NormMethod::nonlinear_power_q: return "nonlinear-power-q";
  }
  return "?";
}

NormResult operator_norm(const Eigen::MatrixXd& m, double q, double tol, std::size_t cap) {
  if (!(q >= 1)) throw std::invalid_argument("operator_norm: q must lie in [1, inf]");
  if (!(tol > 0)) throw std::invalid_argument("operator_norm: tol must be positive");
  if (m.rows() != m.cols()) throw std::invalid_argument("operator_norm: matrix must be square");
  if ((m.array() < 0).any()) throw std::invalid_argument("operator_norm: matrix must be nonnegative");
  NormResult r;
  r.q = q;
  if (m.size() == 0) return r;
  if (q == 1.0) {
    r.method = NormMethod::closed_form_1;
    r.value = m.colwise().sum().maxCoeff();
    return r;
  }
  if (std::isinf(q)) {
    r.method = NormMethod::closed_form_inf;
    r.value = m.rowwise().sum().maxCoeff();
    return r;
  }
  const Eigen::Index n = m.rows();
  Eigen::VectorXd f = Eigen::VectorXd::Constant(n, 1.0);
  if (q == 2.0) {
    r.method = NormMethod::power_2;
    const bool symmetric = m.isApprox(m.transpose(), 1e-14);
    f /= f.norm();
    double prev = 0.0;
    r.converged = false;
    for (r.iterations = 1; r.iterations <= cap; ++r.iterations) {
      Eigen::VectorXd y = symmetric ? Eigen::VectorXd(m * f) : Eigen::VectorXd(m.transpose() * (m * f));
      const double ny = y.norm();
      if (ny == 0.0) {
        r.value = 0.0;
        r.converged = true;
        return r;
      }
      const double value = symmetric ? ny : std::sqrt(ny);
      f = y / ny;
      r.residual = std::abs(value - prev) / value;
      r.value = value;
      if (r.residual < tol) {
        r.converged = true;
        break;
      }
      prev = value;
    }
    r.iterations = std::min(r.iterations, cap);
    return r;
  }
  // f ← normalize(Φ_{q'}(Mᵀ Φ_q(M f))), Φ_r(x) = x^{r−1} on nonnegative vectors
  r.method = NormMethod::nonlinear_power_q;
  const double qd = q / (q - 1.0);
  f /= lp_norm(f, q);
  double prev = 0.0;
  r.converged = false;
  for (r.iterations = 1; r.iterations <= cap; ++r.iterations) {
    Eigen::VectorXd y = m * f;
    const double value = lp_norm(y, q);
    if (value == 0.0) {
      r.value = 0.0;
      r.converged = true;
      return r;
    }
    r.residual = std::abs(value - prev) / value;
    r.value = value;
    if (r.residual < tol && r.iterations > 1) {
      r.converged = true;
      break;
    }
    prev = value;
    y /= y.maxCoeff();
    Eigen::VectorXd z = m.transpose() * y.array().pow(q - 1.0).matrix();
    z /= z.maxCoeff();
    f = z.array().pow(qd - 1.0).matrix();
    f /= lp_norm(f, q);
  }
  r.iterations = std::min(r.iterations, cap);
  return r;
}

TriangleResult triangle_diagram(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("triangle_diagram: matrix must be square");
  TriangleResult r;
  if (m.size() == 0) return r;
  const Eigen::MatrixXd m2 = m * m;
  const Eigen::VectorXd diag = (m2.array() * m.transpose().array()).rowwise().sum();
  Eigen::Index arg = 0;
  r.nabla = diag.maxCoeff(&arg);
  r.argmax = static_cast<std::size_t>(arg);
  const double n2 = operator_norm(m, 2.0, 1e-12).value;
  r.norm2_cubed = n2 * n2 * n2;
  r.gap = r.norm2_cubed - r.nabla;
  return r;
}

InterpolationResult norm_interpolation_check(const Eigen::MatrixXd& m, double q1, double q2,
                                             double tol) {
  if (!(q1 >= 1) || !(q2 > q1)) throw std::invalid_argument("norm_interpolation_check: need 1 <= q1 < q2");
  InterpolationResult r;
  r.q1 = q1;
  r.q2 = q2;
  const auto a = operator_norm(m, q1, tol);
  const auto b = operator_norm(m, q2, tol);
  r.converged = a.converged && b.converged;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    r.support = std::max(r.support, static_cast<std::size_t>((m.row(i).array() != 0).count()));
  }
  const double exponent = std::isinf(q2) ? 1.0 / q1 : (q2 - q1) / (q1 * q2);
  r.lhs = b.value;
  r.rhs = a.value * std::pow(static_cast<double>(r.support), exponent);
  r.slack = r.rhs - r.lhs;
  return r;
}

DecayResult decay_rates(const Graph& g, const OperatorMatrix& t, double q, std::uint32_t n_max,
                        std::uint32_t fit_min, std::uint32_t fit_max) {
  if (t.kind.kind != MatrixKind::T) throw std::invalid_argument("decay_rates: needs a T matrix");
  if (fit_max == 0) fit_max = n_max;
  const std::size_t w = t.window.size();
  const auto dist = window_distances(g, t.window);
  DecayResult r;
  r.q = q;
  r.shell_max.assign(n_max + 1, 0.0);
  for (std::size_t s = 0; s < w; ++s) {
    for (std::size_t u = 0; u < w; ++u) {
      const std::uint32_t d = dist[s * w + u];
      if (d <= n_max) {
        r.shell_max[d] = std::max(r.shell_max[d], t.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(u)));
      }
    }
  }
  const auto nt = operator_norm(t.values, q);
  r.norm_t = nt.value;
  r.c_norms.assign(n_max + 1, 0.0);
  r.explicit_bound.assign(n_max + 1, 0.0);
  for (std::uint32_t n = 0; n <= n_max; ++n) {
    Eigen::MatrixXd c = t.values;
    for (std::size_t s = 0; s < w; ++s) {
      for (std::size_t u = 0; u < w; ++u) {
        if (dist[s * w + u] < n) c(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(u)) = 0.0;
      }
    }
    r.c_norms[n] = operator_norm(c, q).value;
    r.explicit_bound[n] = 2 * r.norm_t * std::exp(-n / (std::exp(1.0) * r.norm_t));
    if (r.c_norms[n] > r.explicit_bound[n] * (1 + 1e-9)) r.explicit_bound_holds = false;
  }
  std::vector<double> xs, ys, xc, yc;
  for (std::uint32_t n = std::max(1U, fit_min); n <= std::min(fit_max, n_max); ++n) {
    if (r.shell_max[n] > 0) {
      xs.push_back(n);
      ys.push_back(std::log(r.shell_max[n]));
    }
    if (r.c_norms[n] > 0) {
      xc.push_back(n);
      yc.push_back(std::log(r.c_norms[n]));
    }
  }
  bool any_off_diagonal = false;
  for (std::uint32_t n = 1; n <= n_max; ++n) any_off_diagonal |= r.shell_max[n] > 0;
  if (!any_off_diagonal) {
    // p = 0 convention: no connections beyond the diagonal
    r.xi = kInf;
    r.eta = kInf;
    return r;
  }
  if (xs.size() < 4 || xc.size() < 4) {
    throw std::domain_error("decay_rates: fewer than 4 usable shells in the fit window");
  }
  r.xi_fit = linear_fit(xs, ys);
  r.xi = -r.xi_fit.slope;
  r.eta_fit = linear_fit(xc, yc);
  r.eta = -r.eta_fit.slope;
  r.eta_diagnostic_holds = r.eta >= 1.0 / (std::exp(1.0) * r.norm_t) - 3 * r.eta_fit.slope_stderr;
  return r;
}

NormVsPCurve norm_vs_p_curve(const Graph& g, const std::vector<VertexId>& window, double q,
                             const std::vector<double>& p_grid, const MonteCarloSource& source,
                             unsigned batches) {
  if (batches < 2) throw std::invalid_argument("norm_vs_p_curve: need at least 2 batches");
  NormVsPCurve curve;
  curve.q = q;
  curve.adjacency_norm = static_cast<double>(g.max_degree());
  const std::uint64_t per = std::max<std::uint64_t>(1, source.samples / batches);
  for (double p : p_grid) {
    if (!(p >= 0 && p < 1)) throw std::invalid_argument("norm_vs_p_curve: p grid must lie in [0,1)");
    Eigen::MatrixXd sum;
    RunningStats batch_norms;
    bool converged = true;
    for (unsigned b = 0; b < batches; ++b) {
      MonteCarloSource s = source;
      s.samples = per;
      s.first_stream = source.first_stream + b * per;
      const auto m = build_matrix_mc(g, p, {}, window, s);
      const auto nr = operator_norm(m.values, q);
      converged &= nr.converged;
      batch_norms.add(nr.value);
      if (b == 0) {
        sum = m.values;
      } else {
        sum += m.values;
      }
    }
    sum /= static_cast<double>(batches);
    const auto full = operator_norm(sum, q);
    NormVsPPoint pt;
    pt.p = p;
    pt.norm = full.value;
    pt.std_error = batch_norms.std_error_of_mean();
    pt.converged = converged && full.converged;
    pt.implied_threshold = p + (1 - p) / (curve.adjacency_norm * pt.norm);
    curve.points.push_back(pt);
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    if (b.p >= a.p && b.norm < a.norm - 3 * std::hypot(a.std_error, b.std_error)) curve.monotone = false;
  }
  return curve;
}

NormVsQCurve norm_vs_q_curve(const Eigen::MatrixXd& m, const std::vector<double>& q_grid,
                             double band) {
  NormVsQCurve c;
  c.band = band;
  double lo = kInf, hi = 0.0;
  for (double q : q_grid) {
    if (!(q > 1) || std::isinf(q)) throw std::invalid_argument("norm_vs_q_curve: q must lie in (1, inf)");
    const auto r = operator_norm(m, q);
    NormVsQPoint pt{q, r.value, r.value * (q - 1), r.converged};
    lo = std::min(lo, pt.scaled);
    hi = std::max(hi, pt.scaled);
    c.points.push_back(pt);
  }
  c.variation = c.points.empty() || lo == 0.0 ? kInf : (hi - lo) / lo;
  c.flat = c.variation < band;
  return c;
}

BallProfile ball_intersection_profile(const Graph& g, VertexId v, double p, std::uint32_t n_max,
                                      const MonteCarloSource& source) {
  if (v >= g.vertex_count()) throw std::invalid_argument("ball_intersection_profile: vertex out of range");
  const auto ambient = bfs_distances(g, v);
  BallProfile out;
  out.ball_size.assign(n_max + 1, 0);
  for (std::uint32_t d : ambient) {
    if (d <= n_max) ++out.ball_size[d];
  }
  for (std::uint32_t n = 1; n <= n_max; ++n) out.ball_size[n] += out.ball_size[n - 1];
  using Acc = std::vector<RunningStats>;
  const Acc stats = sharded_reduce(
      source.samples, source.workers, Acc(n_max + 1),
      [&](Acc& acc, std::uint64_t b, std::uint64_t e) {
        ClusterExplorer ex(g);
        std::vector<std::uint64_t> count(n_max + 1);
        for (std::uint64_t i = b; i < e; ++i) {
          const EdgeSampler open(Seed{source.master_seed, source.first_stream + i}, p);
          ex.explore(v, open, nullptr);
          std::fill(count.begin(), count.end(), 0);
          for (VertexId x : ex.members()) {
            if (ambient[x] <= n_max) ++count[ambient[x]];
          }
          std::uint64_t run = 0;
          for (std::uint32_t n = 0; n <= n_max; ++n) {
            run += count[n];
            acc[n].add(static_cast<double>(run));
          }
        }
      },
      [](Acc& total, const Acc& part) {
        for (std::size_t i = 0; i < total.size(); ++i) total[i].merge(part[i]);
      });
  for (const auto& s : stats) out.mean.push_back(s.estimate("cluster exploration, i.i.d. samples"));
  return out;
}

LogBoundResult log_bound_check(const Graph& g, VertexId v, double p, std::uint32_t n_max,
                               const MonteCarloSource& source) {
  LogBoundResult r;
  r.profile = ball_intersection_profile(g, v, p, n_max, source);
  std::vector<double> logb, y, logy, ns;
  for (std::uint32_t n = 1; n <= n_max; ++n) {
    const double mean = r.profile.mean[n].mean;
    logb.push_back(std::log(static_cast<double>(r.profile.ball_size[n])));
    y.push_back(mean);
    logy.push_back(std::log(mean));
    ns.push_back(n);
    r.ball_constant = std::max(r.ball_constant, mean / n);
  }
  if (ns.size() >= 2) {
    r.log_fit = linear_fit(logb, y);
    r.power_fit = linear_fit(logb, logy);
    r.ball_fit = linear_fit(ns, y);
    r.logarithmic_preferred = r.log_fit.r2 >= r.power_fit.r2;
  }
  return r;
}

namespace {

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("read_matrix_binary: truncated input");
  return v;
}

}  // namespace

void write_matrix_binary(std::ostream& os, const OperatorMatrix& m) {
  os.write("PLMX", 4);
  put<std::uint32_t>(os, 1);
  const std::string name = m.kind.name();
  put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<double>(os, m.p);
  put<std::uint64_t>(os, m.sample_count);
  put<std::uint64_t>(os, m.graph_hash);
  put<std::uint64_t>(os, m.window.size());
  for (VertexId v : m.window) put<std::uint32_t>(os, v);
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) put<double>(os, m.values(i, j));
  }
}

OperatorMatrix read_matrix_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "PLMX", 4) != 0) throw std::runtime_error("read_matrix_binary: bad magic");
  if (get<std::uint32_t>(is) != 1) throw std::runtime_error("read_matrix_binary: unsupported version");
  const auto len = get<std::uint32_t>(is);
  std::string name(len, '\0');
  is.read(name.data(), len);
  OperatorMatrix m;
  m.kind = MatrixKindSpec::parse(name);
  m.p = get<double>(is);
  m.sample_count = get<std::uint64_t>(is);
  m.graph_hash = get<std::uint64_t>(is);
  const auto w = get<std::uint64_t>(is);
  m.window.resize(w);
  for (auto& v : m.window) v = get<std::uint32_t>(is);
  m.values.resize(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(w));
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) m.values(i, j) = get<double>(is);
  }
  m.source = "file";
  return m;
}

std::string matrix_sidecar_json(const OperatorMatrix& m) {
  nlohmann::json doc{{"kind", m.kind.name()},
                     {"p", m.p},
                     {"window_size", m.window.size()},
                     {"window", m.window},
                     {"sample_count", m.sample_count},
                     {"graph_hash", m.graph_hash},
                     {"master_seed", m.master_seed},
                     {"source", m.source},
                     {"warnings", m.warnings},
                     {"layout", "PLMX v1, row-major float64"}};
  return doc.dump(2);
}

void write_matrix_csv(std::ostream& os, const OperatorMatrix& m) {
  os << "u,v,value\n";
  for (std::size_t s = 0; s < m.window.size(); ++s) {
    for (std::size_t t = s; t < m.window.size(); ++t) {
      const double v = m.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
      if (v != 0.0) os << m.window[s] << ',' << m.window[t] << ',' << v << '\n';
    }
  }
}

}  // namespace perclab
