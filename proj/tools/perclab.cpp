#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "perclab/combinatorial_map.hpp"
#include "perclab/corpus.hpp"
#include "perclab/estimators.hpp"
#include "perclab/operators.hpp"
#include "perclab/oracle.hpp"
#include "perclab/percolation.hpp"
#include "report.hpp"

using namespace perclab;
namespace fs = std::filesystem;

namespace {

/// Exit codes.
enum Exit : int {
  kOk = 0,
  kInvariantFailed = 1,
  kSchema = 2,
  kOracleCap = 3,
  kUnderpowered = 4,
  kIo = 5,
};

constexpr const char* kOutEnv = "PERCLAB_OUT";

struct SchemaError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Everything that determines a run except where its files go and how many
/// threads compute them.
class Settings {
 public:
  std::map<std::string, std::string> values;
  std::string out_dir = ".";
  std::string format = "json";
  unsigned workers = 1;

  bool has(const std::string& k) const { return values.count(k) != 0; }
  std::string str(const std::string& k, const std::string& fallback) const {
    auto it = values.find(k);
    return it == values.end() ? fallback : it->second;
  }
  std::string need(const std::string& k) const {
    auto it = values.find(k);
    if (it == values.end()) throw SchemaError("missing required setting '" + k + "'");
    return it->second;
  }
  double real(const std::string& k, double fallback) const {
    return has(k) ? parse_real(k, values.at(k)) : fallback;
  }
  std::uint64_t count(const std::string& k, std::uint64_t fallback) const {
    if (!has(k)) return fallback;
    const std::string& s = values.at(k);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || s[0] == '-')
      throw SchemaError("setting '" + k + "': '" + s + "' is not a nonnegative integer");
    return v;
  }
  std::vector<double> reals(const std::string& k, std::vector<double> fallback) const {
    if (!has(k)) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(values.at(k))) out.push_back(parse_real(k, item));
    if (out.empty()) throw SchemaError("setting '" + k + "' is empty");
    return out;
  }
  std::vector<std::uint32_t> counts(const std::string& k, std::vector<std::uint32_t> fallback) const {
    if (!has(k)) return fallback;
    std::vector<std::uint32_t> out;
    for (const auto& item : split_list(values.at(k))) {
      const double x = parse_real(k, item);
      if (x < 0 || x != std::floor(x) || x > 4e9)
        throw SchemaError("setting '" + k + "': '" + item + "' is not a nonnegative integer");
      out.push_back(static_cast<std::uint32_t>(x));
    }
    if (out.empty()) throw SchemaError("setting '" + k + "' is empty");
    return out;
  }

  MonteCarloSource source(std::uint64_t default_samples) const {
    MonteCarloSource s;
    s.samples = count("samples", default_samples);
    s.master_seed = count("seed", 1);
    s.workers = workers;
    if (s.samples == 0) throw SchemaError("samples must be positive");
    return s;
  }

 private:
  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
  static double parse_real(const std::string& k, const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(v))
      throw SchemaError("setting '" + k + "': '" + s + "' is not a number");
    return v;
  }
};

/// key = value lines; '#' starts a comment. Keys use the long flag names
/// without dashes; "workers", "out" and "format" are accepted too.
void apply_config_file(const std::string& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = line.substr(0, line.find('#'));
    const auto eq = line.find('=');
    auto trim = [](std::string t) {
      t.erase(0, t.find_first_not_of(" \t\r"));
      t.erase(t.find_last_not_of(" \t\r") + 1);
      return t;
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos)
      throw SchemaError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw SchemaError(path + ":" + std::to_string(lineno) + ": empty key");
    if (key == "out") {
      s.out_dir = value;
    } else if (key == "format") {
      s.format = value;
    } else if (key == "workers") {
      s.workers = static_cast<unsigned>(std::stoul(value));
    } else {
      s.values[key] = value;
    }
  }
}

void check_keys(const Settings& s, const std::vector<std::string>& allowed) {
  for (const auto& [k, v] : s.values)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw SchemaError("setting '" + k + "' is not understood by this command");
}

struct Output {
  fs::path dir;
  std::string format;

  void write(const std::string& name, const std::string& content) const {
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    out << content;
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
    std::cout << path.string() << "\n";
  }
  void plot(const std::string& stem, const CsvTable& table, const std::string& title, bool log_x,
            bool log_y) const {
    if (format != "csv") return;
    write(stem + ".csv", table.str());
    write(stem + ".gp", gnuplot_script(stem + ".csv", table, title, log_x, log_y));
  }
};

bool is_tree_site(const std::string& spec) { return spec.rfind("bethe:", 0) == 0; }

TreeSite tree_site(const std::string& spec) {
  const int k = std::stoi(spec.substr(6));
  if (k < 3) throw SchemaError("bethe:k needs k >= 3");
  return TreeSite{k};
}

VertexId vertex_setting(const Settings& s, const Graph& g, const std::string& key) {
  if (!s.has(key)) return deepest_vertex(g);
  const auto v = s.count(key, 0);
  if (v >= g.vertex_count()) throw SchemaError(key + " " + std::to_string(v) + " is not a vertex");
  return static_cast<VertexId>(v);
}

/// Explicit fit windows must hold at least four integer points.
void check_window(const Settings& s, std::uint32_t n_max) {
  const std::uint64_t lo = s.count("fit-min", std::max<std::uint32_t>(1, n_max / 4));
  const std::uint64_t hi = s.count("fit-max", std::max<std::uint32_t>(1, 3 * n_max / 4));
  if (hi < lo || hi - lo + 1 < 4)
    throw SchemaError("fit window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "] has fewer than 4 points");
  if (hi > n_max)
    throw SchemaError("fit window ends at " + std::to_string(hi) + " beyond n = " +
                      std::to_string(n_max));
}

CsvTable survival_table(const std::vector<std::pair<std::string, const SurvivalCurve*>>& curves) {
  CsvTable t;
  t.columns.push_back("n");
  std::size_t len = 0;
  for (const auto& [name, c] : curves) {
    t.columns.push_back(name);
    len = std::max(len, c->prob.size());
  }
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> row{static_cast<double>(i + 1)};
    for (const auto& [name, c] : curves) row.push_back(i < c->prob.size() ? c->prob[i] : NAN);
    t.rows.push_back(row);
  }
  return t;
}

// --- commands ------------------------------------------------------------------------

int cmd_gen(const Settings& s, const Output& out, const std::vector<std::string>& positional) {
  check_keys(s, {"graph"});
  std::string spec = s.str("graph", "");
  if (!positional.empty()) {
    spec = positional[0];
    for (std::size_t i = 1; i < positional.size(); ++i) spec += ":" + positional[i];
  }
  if (spec.empty()) throw SchemaError("gen needs a graph family, e.g. 'gen tree 3 12'");
  auto doc_spec = s.values;
  doc_spec["graph"] = spec;
  ResultDocument doc("gen", doc_spec);
  const std::string family = spec.substr(0, spec.find(':'));
  Graph g;
  if (family == "tiling" || family == "dual") {
    std::vector<int> a;
    std::istringstream in(spec.substr(family.size()));
    std::string item;
    while (std::getline(in, item, ':'))
      if (!item.empty()) a.push_back(std::stoi(item));
    if (a.size() != 3) throw SchemaError(family + " needs p q layers");
    const auto m = build_tiling(a[0], a[1], a[2]);
    const CombinatorialMap map = family == "dual" ? dual(m).map : m;
    const std::string problem = map.validate();
    doc.invariant("map is a valid planar rotation system", problem.empty(), problem);
    out.write("map.txt", serialize(map));
    doc.result()["faces"] = map.face_count();
    doc.result()["interior_faces"] = map.interior_face_count();
    g = map.graph();
  } else {
    g = graph_from_spec(spec);
    out.write("graph.txt", serialize(g));
  }
  doc.set_graph_hash(graph_hash(g));
  doc.result()["family"] = g.family_tag();
  doc.result()["vertices"] = g.vertex_count();
  doc.result()["edges"] = g.edge_count();
  doc.result()["boundary_vertices"] = g.boundary_vertices().size();
  doc.result()["max_degree"] = g.max_degree();
  const VertexId centre = deepest_vertex(g);
  const auto dist = bfs_distances(g, centre);
  std::vector<std::uint64_t> sizes;
  for (std::uint32_t d : dist) {
    if (d == kUnreachable) continue;
    if (sizes.size() <= d) sizes.resize(d + 1, 0);
    ++sizes[d];
  }
  for (std::size_t n = 1; n < sizes.size(); ++n) sizes[n] += sizes[n - 1];
  doc.result()["centre"] = centre;
  doc.result()["ball_sizes"] = sizes;
  out.write("gen.json", doc.dump());
  return doc.all_hold() ? kOk : kInvariantFailed;
}

int cmd_sample(const Settings& s, const Output& out) {
  check_keys(s, {"graph", "p", "samples", "seed", "vertex"});
  const Graph g = graph_from_spec(s.need("graph"));
  const double p = s.real("p", 0.5);
  if (p < 0 || p > 1) throw SchemaError("p must lie in [0,1]");
  const VertexId v = vertex_setting(s, g, "vertex");
  const MonteCarloSource src = s.source(1000);
  ResultDocument doc("sample", s.values);
  doc.set_graph_hash(graph_hash(g));
  doc.set_seed(src.master_seed, src.samples);

  std::ostringstream dump;
  write_observables_jsonl(dump, g, p, v, src.samples, src.master_seed);
  out.write("observables.jsonl", dump.str());

  // invariants on every sample: union-find and exploration agree, radii ordered,
  // intrinsic distances dominate ambient ones
  const auto ambient = bfs_distances(g, v);
  RunningStats volume, rad_ext, rad_int;
  std::uint64_t bad_order = 0, bad_cluster = 0, bad_distance = 0, boundary = 0;
  ClusterExplorer ex(g);
  for (std::uint64_t i = 0; i < src.samples; ++i) {
    const Configuration c = sample_config(g, p, Seed{src.master_seed, i});
    const ClusterIndex idx(g, c);
    const ClusterStats st = ex.explore(v, c, ambient.data(), ExploreLimits{});
    volume.add(static_cast<double>(st.volume));
    rad_ext.add(st.rad_ext);
    rad_int.add(st.rad_int);
    if (st.touches_boundary) ++boundary;
    if (st.rad_ext > st.rad_int) ++bad_order;
    if (idx.volume(v) != st.volume) ++bad_cluster;
    for (VertexId w : ex.members())
      if (!idx.same_cluster(v, w) || ex.depth(w) < ambient[w]) ++bad_distance;
  }
  doc.result()["vertex"] = v;
  doc.result()["p"] = p;
  doc.result()["volume"] = volume.estimate();
  doc.result()["rad_ext"] = rad_ext.estimate();
  doc.result()["rad_int"] = rad_int.estimate();
  doc.result()["boundary_touching"] = boundary;
  doc.invariant("rad_ext <= rad_int", bad_order == 0, std::to_string(bad_order) + " violations");
  doc.invariant("union-find volume equals explored volume", bad_cluster == 0,
                std::to_string(bad_cluster) + " violations");
  doc.invariant("explored vertices are in the union-find cluster with d_int >= d",
                bad_distance == 0, std::to_string(bad_distance) + " violations");
  out.write("sample.json", doc.dump());
  return doc.all_hold() ? kOk : kInvariantFailed;
}

std::vector<VertexId> window_setting(const Settings& s, const Graph& g) {
  const std::string w = s.str("window", "full");
  if (w == "full") return full_window(g);
  const auto colon = w.find(':');
  if (colon == std::string::npos) throw SchemaError("window must be full, interior:m or ball:r");
  const std::string kind = w.substr(0, colon);
  const auto k = static_cast<std::uint32_t>(std::stoul(w.substr(colon + 1)));
  if (kind == "interior") return interior_window(g, k);
  if (kind == "ball") return ball_window(g, deepest_vertex(g), k);
  throw SchemaError("window must be full, interior:m or ball:r");
}

int cmd_matrix(const Settings& s, const Output& out) {
  check_keys(s, {"graph", "p", "q", "kind", "source", "window", "samples", "seed"});
  const Graph g = graph_from_spec(s.need("graph"));
  const double p = s.real("p", 0.3);
  if (p < 0 || p > 1) throw SchemaError("p must lie in [0,1]");
  const auto kind = MatrixKindSpec::parse(s.str("kind", "T"));
  const std::string source = s.str("source", "mc");
  auto qs = s.reals("q", {1.0, 2.0, std::numeric_limits<double>::infinity()});
  for (double q : qs)
    if (!(q >= 1)) throw SchemaError("q must be >= 1");
  std::sort(qs.begin(), qs.end());
  const auto window = window_setting(s, g);
  if (window.empty()) throw SchemaError("window is empty");

  ResultDocument doc("matrix", s.values);
  doc.set_graph_hash(graph_hash(g));
  OperatorMatrix m;
  if (source == "oracle") {
    m = build_matrix_oracle(g, p, kind, window);
  } else if (source == "mc") {
    const auto src = s.source(10000);
    doc.set_seed(src.master_seed, src.samples);
    m = build_matrix_mc(g, p, kind, window, src);
  } else {
    throw SchemaError("source must be mc or oracle");
  }
  doc.warn(m.warnings);

  std::ostringstream bin;
  write_matrix_binary(bin, m);
  out.write("matrix.bin", bin.str());
  out.write("matrix.sidecar.json", matrix_sidecar_json(m));
  if (out.format == "csv") {
    std::ostringstream csv;
    write_matrix_csv(csv, m);
    out.write("matrix.csv", csv.str());
  }

  const double tol = 1e-8;
  const Eigen::MatrixXd& a = m.values;
  doc.invariant("symmetric", (a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
  doc.invariant("entries in [0,1]", a.minCoeff() >= 0.0 && a.maxCoeff() <= 1.0);
  if (kind.kind == MatrixKind::T)
    doc.invariant("diagonal of T is 1", (a.diagonal().array() == 1.0).all());

  Json norms = Json::array();
  std::vector<NormResult> results;
  for (double q : qs) {
    results.push_back(operator_norm(a, q, tol));
    norms.push_back(results.back());
    doc.invariant("norm converged at q = " + number(q).dump(), results.back().converged);
  }
  doc.result()["kind"] = kind.name();
  doc.result()["p"] = p;
  doc.result()["window_size"] = window.size();
  doc.result()["source"] = m.source;
  doc.result()["norms"] = norms;

  const auto n1 = operator_norm(a, 1.0, tol).value;
  const auto ninf = operator_norm(a, std::numeric_limits<double>::infinity(), tol).value;
  const auto n2 = operator_norm(a, 2.0, tol).value;
  doc.invariant("norm 1->1 equals norm inf->inf", std::abs(n1 - ninf) <= tol * std::max(1.0, n1));
  doc.invariant("norm 2->2 <= norm 1->1", n2 <= n1 * (1 + tol));

  Json interp = Json::array();
  for (std::size_t i = 0; i + 1 < qs.size(); ++i) {
    if (!std::isfinite(qs[i + 1]) || qs[i] == qs[i + 1]) continue;
    const auto r = norm_interpolation_check(a, qs[i], qs[i + 1], tol);
    interp.push_back({{"q1", r.q1}, {"q2", r.q2}, {"lhs", r.lhs}, {"rhs", r.rhs},
                      {"support", r.support}, {"slack", r.slack}, {"converged", r.converged}});
    doc.invariant("interpolation bound q1 = " + number(r.q1).dump() + ", q2 = " +
                      number(r.q2).dump(),
                  r.slack >= -tol * std::max(1.0, r.rhs));
  }
  doc.result()["interpolation"] = interp;
  const auto tri = triangle_diagram(a);
  doc.result()["triangle"] = {{"nabla", tri.nabla},
                              {"argmax_vertex", window[tri.argmax]},
                              {"norm2_cubed", tri.norm2_cubed},
                              {"gap", tri.gap}};
  doc.invariant("triangle below cubed 2-norm", tri.gap >= -1e-6 * std::max(1.0, tri.norm2_cubed));

  CsvTable t{{"q", "norm"}, {}};
  for (const auto& r : results)
    if (std::isfinite(r.q)) t.rows.push_back({r.q, r.value});
  out.plot("norms", t, "operator norms", false, false);
  out.write("matrix.json", doc.dump());
  return doc.all_hold() ? kOk : kInvariantFailed;
}

std::vector<VertexId> spread_vertices(const Graph& g, std::size_t count) {
  // greedy farthest-point choice starting from vertex 0
  std::vector<VertexId> chosen{0};
  std::vector<std::uint32_t> best = bfs_distances(g, 0);
  while (chosen.size() < count) {
    VertexId far = 0;
    for (VertexId v = 0; v < g.vertex_count(); ++v)
      if (best[v] != kUnreachable && best[v] > best[far]) far = v;
    if (best[far] == 0) break;
    chosen.push_back(far);
    const auto d = bfs_distances(g, far);
    for (VertexId v = 0; v < g.vertex_count(); ++v) best[v] = std::min(best[v], d[v]);
  }
  return chosen;
}

int cmd_oracle(const Settings& s, const Output& out) {
  check_keys(s, {"graph", "p", "n", "field", "max-edges"});
  std::vector<Graph> graphs;
  if (s.has("graph")) {
    graphs.push_back(graph_from_spec(s.need("graph")));
  } else {
    graphs = oracle_corpus(s.count("max-edges", 12));
  }
  const auto ps = s.reals("p", {0.2, 0.5, 0.8});
  const auto n_max = static_cast<std::uint32_t>(s.count("n", 2));
  const auto hs = s.reals("field", {0.3, 0.3, 0.3});
  for (double p : ps)
    if (p <= 0 || p >= 1) throw SchemaError("oracle p values must lie in (0,1)");

  ResultDocument doc("oracle", s.values);
  Json per_graph = Json::array();
  for (const Graph& g : graphs) {
    if (g.edge_count() > kEventCap)
      throw OracleCapExceeded("oracle " + g.family_tag(), g.edge_count(), kEventCap);
    doc.set_graph_hash(graph_hash(g));
    const DistanceTable table(g);
    std::vector<EntrywiseResult> entry;
    std::vector<BkSweep> bk;
    std::vector<InverseBkResult> inv;
    for (double p : ps) {
      if (g.edge_count() <= kDisjointCap) {
        bk.push_back(verify_bk_all_triples(g, p));
        doc.invariant(g.family_tag() + ": BK at p = " + number(p).dump(),
                      bk.back().violations == 0, bk.back().worst);
      }
      for (std::uint32_t n = 0; n <= n_max; ++n) {
        for (std::uint32_t m = 0; m <= n_max; ++m) {
          entry.push_back(verify_entrywise_inequalities(table, p, n, m));
          const auto& e = entry.back();
          doc.invariant(g.family_tag() + ": entrywise lemmas at p = " + number(p).dump() +
                            ", n = " + std::to_string(n) + ", m = " + std::to_string(m),
                        e.extrinsic_holds && e.intrinsic_holds);
        }
      }
    }
    if (g.edge_count() <= kInverseBkCap) {
      for (std::size_t l : {2u, 3u}) {
        const auto vs = spread_vertices(g, l);
        if (vs.size() < l || hs.size() < l) continue;
        const std::vector<double> h(hs.begin(), hs.begin() + static_cast<long>(l));
        for (const auto& r : verify_inverse_bk(g, ps, h, vs)) {
          inv.push_back(r);
          doc.invariant(g.family_tag() + ": inverse BK, l = " + std::to_string(l) +
                            ", p = " + number(r.p).dump(),
                        r.holds);
        }
      }
    }
    per_graph.push_back(Json::parse(oracle_golden_json(g, entry, bk, inv)));
  }
  doc.result()["graphs"] = per_graph;
  out.write("oracle.json", doc.dump());
  return doc.all_hold() ? kOk : kInvariantFailed;
}

int cmd_exponent(const Settings& s, const Output& out) {
  check_keys(s, {"graph", "p", "n", "samples", "seed", "vertex", "fit-min", "fit-max",
                 "max-volume"});
  const std::string spec = s.need("graph");
  const double p = s.real("p", 0.5);
  if (p < 0 || p > 1) throw SchemaError("p must lie in [0,1]");
  TailOptions o;
  o.n_max = static_cast<std::uint32_t>(s.count("n", 64));
  check_window(s, o.n_max);
  o.fit_min = static_cast<std::uint32_t>(s.count("fit-min", 0));
  o.fit_max = static_cast<std::uint32_t>(s.count("fit-max", 0));
  o.max_volume = s.count("max-volume", std::numeric_limits<std::uint64_t>::max());
  const auto src = s.source(100000);
  ResultDocument doc("exponent", s.values);
  doc.set_seed(src.master_seed, src.samples);
  TailResult r;
  if (is_tree_site(spec)) {
    r = tail_exponents(tree_site(spec), p, o, src);
  } else {
    const Graph g = graph_from_spec(spec);
    doc.set_graph_hash(graph_hash(g));
    r = tail_exponents(g, vertex_setting(s, g, "vertex"), p, o, src);
  }
  doc.warn(r.warnings);
  doc.result() = r;
  doc.invariant("survival curves nonincreasing",
                r.volume.nonincreasing() && r.rad_int.nonincreasing() && r.rad_ext.nonincreasing());
  bool ordered = true;
  for (std::size_t i = 0; i < r.rad_ext.hits.size(); ++i)
    ordered = ordered && r.rad_ext.hits[i] <= r.rad_int.hits[i];
  doc.invariant("rad_ext tail below rad_int tail", ordered);
  out.plot("tails",
           survival_table({{"volume", &r.volume}, {"rad_int", &r.rad_int}, {"rad_ext", &r.rad_ext}}),
           "survival functions", true, true);
  out.write("exponent.json", doc.dump());
  return doc.all_hold() ? kOk : kInvariantFailed;
}

PcScan scan_setting(const Settings& s, const Graph& g, const std::string& prefix,
                    std::vector<std::uint32_t> radii) {
  PcScan scan;
  scan.root = deepest_vertex(g);
  scan.radii = s.counts(prefix + "radii", std::move(radii));
  scan.p_lo = s.real(prefix + "p-lo", 0.05);
  scan.p_hi = s.real(prefix + "p-hi", 0.95);
  scan.grid = s.count("grid", 400);
  return scan;
}

int cmd_duality(const Settings& s, const Output& out) {
  check_keys(s, {"graph", "samples", "seed", "radii", "p-lo", "p-hi", "grid", "merge-radii",
                 "merge-p-lo", "merge-p-hi", "merge-samples", "geometry", "n"});
  const std::string spec = s.need("graph");
  if (spec.rfind("tiling:", 0) != 0) throw SchemaError("duality needs a tiling:p:q:layers graph");
  int pg = 0, qd = 0, layers = 0;
  if (std::sscanf(spec.c_str(), "tiling:%d:%d:%d", &pg, &qd, &layers) != 3)
    throw SchemaError("duality needs a tiling:p:q:layers graph");
  const auto primal = build_tiling(pg, qd, layers);
  const auto d = dual(primal);
  const auto src = s.source(50000);
  ResultDocument doc("duality", s.values);
  doc.set_graph_hash(graph_hash(primal.graph()));
  doc.set_graph_hash(graph_hash(d.map.graph()));
  doc.set_seed(src.master_seed, src.samples);
  const PcScan dual_scan = scan_setting(s, d.map.graph(), "", {4, 8, 16});
  // default merge radii double up to the primal's depth around its root
  const Graph& pg_graph = primal.graph();
  std::uint32_t depth = 0;
  for (std::uint32_t x : bfs_distances(pg_graph, deepest_vertex(pg_graph)))
    if (x != kUnreachable) depth = std::max(depth, x);
  const PcScan merge_scan = scan_setting(
      s, pg_graph, "merge-",
      {std::max(1U, depth / 4), std::max(2U, depth / 2), std::max(3U, depth)});
  const auto r = pu_duality(d, dual_scan, primal.graph(), merge_scan, src,
                            s.count("merge-samples", 2000));
  doc.result()["duality"] = r;
  doc.invariant("transported p_u equals 1 - p_c(dual)",
                std::abs(r.pu_transported + r.pc_dual.value - 1.0) < 1e-12);
  if (!r.merge_available) doc.warn("merge diagnostic unavailable: " + r.merge_diagnostic);

  if (s.str("geometry", "false") == "true") {
    const VertexId x = deepest_vertex(primal.graph());
    EdgeId e = primal.graph().neighbors(x)[0].edge;
    PuGeometryOptions go;
    go.n_max = static_cast<std::uint32_t>(s.count("n", 10));
    const auto geo = pu_geometry(primal, d, e, r.pu_transported, go, src);
    doc.result()["geometry"] = geo;
    doc.invariant("dual clusters distinct on every connected sample",
                  geo.distinctness_violations == 0);
    doc.invariant("sandwich constant positive", geo.sandwich_samples == 0 || geo.c_lower > 0);
    out.plot("geometry", survival_table({{"d_int", &geo.dint_tail}, {"conrad", &geo.conrad_tail}}),
             "conditional tails at p_u", true, true);
  }
  CsvTable t;
  t.columns = {"p"};
  for (auto rad : r.pc_dual.radii) t.columns.push_back("R" + std::to_string(rad));
  for (std::size_t i = 0; i < r.pc_dual.p_grid.size(); ++i) {
    std::vector<double> row{r.pc_dual.p_grid[i]};
    for (const auto& curve : r.pc_dual.arm_prob) row.push_back(curve[i]);
    t.rows.push_back(row);
  }
  out.plot("dual_arms", t, "dual arm probabilities", false, true);
  out.write("duality.json", doc.dump());
  return doc.all_hold() ? kOk : kInvariantFailed;
}

int cmd_sweep(const Settings& s, const Output& out) {
  check_keys(s, {"experiment", "graph", "p", "q", "field", "n", "samples", "seed", "vertex",
                 "vertex2", "radii", "p-lo", "p-hi", "grid", "p-c", "horizon", "window",
                 "lambda", "thresholds", "mode"});
  const std::string experiment = s.need("experiment");
  const std::string spec = s.need("graph");
  const bool tree = is_tree_site(spec);
  Graph g;
  if (!tree) g = graph_from_spec(spec);
  const auto src = s.source(10000);
  ResultDocument doc("sweep", s.values);
  if (!tree) doc.set_graph_hash(graph_hash(g));
  doc.set_seed(src.master_seed, src.samples);
  CsvTable t;
  bool log_x = false, log_y = false;
  auto need_graph = [&]() {
    if (tree) throw SchemaError("experiment '" + experiment + "' needs a finite graph");
  };

  if (experiment == "pc") {
    PcEstimate e;
    if (tree) {
      e = estimate_pc(tree_site(spec));
    } else {
      e = estimate_pc(g, scan_setting(s, g, "", {4, 8, 16}), src);
      t.columns = {"p"};
      for (auto rad : e.radii) t.columns.push_back("R" + std::to_string(rad));
      for (std::size_t i = 0; i < e.p_grid.size(); ++i) {
        std::vector<double> row{e.p_grid[i]};
        for (const auto& curve : e.arm_prob) row.push_back(curve[i]);
        t.rows.push_back(row);
      }
    }
    doc.result() = e;
  } else if (experiment == "norm-p") {
    need_graph();
    const auto r = norm_vs_p_curve(g, window_setting(s, g), s.real("q", 2.0),
                                   s.reals("p", {0.1, 0.2, 0.3}), src);
    doc.result() = r;
    doc.invariant("norm nondecreasing in p", r.monotone);
    t.columns = {"p", "norm", "implied_threshold"};
    for (const auto& pt : r.points) t.rows.push_back({pt.p, pt.norm, pt.implied_threshold});
  } else if (experiment == "norm-q") {
    need_graph();
    const double p = s.real("p", 0.5);
    const auto m = build_matrix_mc(g, p, MatrixKindSpec{}, window_setting(s, g), src);
    const auto r = norm_vs_q_curve(m.values, s.reals("q", {1.1, 1.25, 1.5, 1.75, 2.0}));
    doc.result() = r;
    t.columns = {"q", "norm", "scaled"};
    for (const auto& pt : r.points) t.rows.push_back({pt.q, pt.value, pt.scaled});
  } else if (experiment == "decay") {
    need_graph();
    const double p = s.real("p", 0.3);
    const auto n_max = static_cast<std::uint32_t>(s.count("n", 8));
    const auto m = build_matrix_mc(g, p, MatrixKindSpec{}, window_setting(s, g), src);
    const auto r = decay_rates(g, m, s.real("q", 2.0), n_max);
    doc.result() = r;
    doc.invariant("C(n) norms below the explicit bound", r.explicit_bound_holds);
    doc.invariant("eta >= 1/(e |T|) - 3 stderr", r.eta_diagnostic_holds);
    t.columns = {"n", "shell_max", "c_norm", "explicit_bound"};
    for (std::size_t n = 0; n < r.c_norms.size(); ++n)
      t.rows.push_back({static_cast<double>(n), n < r.shell_max.size() ? r.shell_max[n] : NAN,
                        r.c_norms[n], n < r.explicit_bound.size() ? r.explicit_bound[n] : NAN});
    log_y = true;
  } else if (experiment == "magnetization") {
    const double p = s.real("p", 0.5);
    const auto hs = s.reals("field", {1e-3, 3e-3, 1e-2, 3e-2, 1e-1});
    const auto r = tree ? magnetization_scaling(tree_site(spec), p, hs, src)
                        : magnetization_scaling(g, vertex_setting(s, g, "vertex"), p, hs, src);
    doc.result() = r;
    doc.warn(r.warnings);
    t.columns = {"h", "magnetization", "std_error", "exact"};
    for (std::size_t i = 0; i < r.h.size(); ++i)
      t.rows.push_back({r.h[i], r.estimate[i].mean, r.estimate[i].std_error,
                        i < r.exact.size() ? r.exact[i] : NAN});
    log_x = log_y = true;
  } else if (experiment == "trifurcation") {
    const auto ps = s.reals("p", {0.55, 0.6, 0.65, 0.7});
    const auto horizon = static_cast<std::uint32_t>(s.count("horizon", 64));
    const auto r = tree ? trifurcation_curve(tree_site(spec), ps, horizon, src)
                        : trifurcation_curve(g, vertex_setting(s, g, "vertex"),
                                             s.real("p-c", 0.5), ps, horizon, src);
    doc.result() = r;
    doc.warn(r.warnings);
    t.columns = {"p", "estimate", "std_error", "exact", "bk_product"};
    for (const auto& pt : r.points)
      t.rows.push_back({pt.p, pt.estimate.mean, pt.estimate.std_error, pt.exact, pt.bk_product});
  } else if (experiment == "delta-log") {
    const auto ps = s.reals("p", {0.55, 0.6, 0.65, 0.7});
    const auto n_max = static_cast<std::uint32_t>(s.count("n", 20));
    const double pc = s.real("p-c", 0.5);
    const auto r = tree ? delta_log(tree_site(spec), pc, ps, n_max, src)
                        : delta_log(g, vertex_setting(s, g, "vertex"), pc, ps, n_max, src);
    doc.result() = r;
    doc.warn(r.warnings);
    t.columns = {"p", "delta", "std_error"};
    for (const auto& pt : r.points) t.rows.push_back({pt.p, pt.delta, pt.std_error});
  } else if (experiment == "ballistic") {
    need_graph();
    const VertexId u = vertex_setting(s, g, "vertex");
    const VertexId v = s.has("vertex2") ? vertex_setting(s, g, "vertex2")
                                        : g.neighbors(u)[0].to;
    const auto r = ballisticity(g, u, v, s.real("p", 0.5),
                                static_cast<std::uint32_t>(s.count("n", 16)),
                                s.reals("lambda", {1.0, 1.5, 2.0, 3.0}), src);
    doc.result() = r;
    out.plot("ballistic", survival_table({{"conditional_tail", &r.conditional_tail}}),
             "P(d_int >= n | u <-> v)", false, true);
  } else if (experiment == "log-bound") {
    need_graph();
    const auto r = log_bound_check(g, vertex_setting(s, g, "vertex"), s.real("p", 0.5),
                                   static_cast<std::uint32_t>(s.count("n", 10)), src);
    doc.result() = r;
    t.columns = {"n", "mean", "ball_size"};
    for (std::size_t n = 0; n < r.profile.mean.size(); ++n)
      t.rows.push_back({static_cast<double>(n), r.profile.mean[n].mean,
                        static_cast<double>(r.profile.ball_size[n])});
  } else if (experiment == "multi-arm") {
    need_graph();
    std::vector<VertexId> vs;
    for (auto v : s.counts("vertex", {}))
      if (v < g.vertex_count()) vs.push_back(v);
    if (vs.size() < 2) throw SchemaError("multi-arm needs vertex = a,b[,c] inside the graph");
    const auto mode = parse_arm_mode(s.str("mode", "volume"));
    const auto r = multi_arm(g, vs, s.real("p", 0.5), mode, s.counts("thresholds", {4}), src);
    doc.result() = r;
    doc.invariant("joint probability below the BK product", r.bound_holds);
  } else {
    throw SchemaError("unknown experiment '" + experiment +
                      "' (pc, norm-p, norm-q, decay, magnetization, trifurcation, delta-log, "
                      "ballistic, log-bound, multi-arm)");
  }
  if (!t.columns.empty()) out.plot(experiment, t, experiment, log_x, log_y);
  out.write("sweep.json", doc.dump());
  return doc.all_hold() ? kOk : kInvariantFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bernoulli bond percolation experiments on trees, lattices and hyperbolic tilings"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  app.footer(
      "Exit codes: 0 ok, 1 an asserted invariant failed, 2 schema/usage error, "
      "3 oracle cap exceeded, 4 underpowered or refused estimate, 5 I/O error.\n"
      "Output directory: --out, else $PERCLAB_OUT, else the current directory.");

  std::map<std::string, std::string> raw;
  std::string config_file, out_dir, format = "json";
  unsigned workers = 1;
  std::vector<std::string> positional;

  struct Sub {
    CLI::App* app;
    std::vector<std::string> keys;
  };
  std::vector<Sub> subs;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--graph", raw["graph"],
                    "tree:k:depth, path:n, cycle:n, star:n, grid:w:h, complete:n, "
                    "tiling:p:q:layers, dual:p:q:layers, file:PATH, bethe:k");
    sub->add_option("--p", raw["p"], "percolation parameter(s), comma separated");
    sub->add_option("--q", raw["q"], "norm exponent(s), comma separated");
    sub->add_option("--n", raw["n"], "scale: n_max, radius or shell index");
    sub->add_option("--samples", raw["samples"], "Monte Carlo samples");
    sub->add_option("--seed", raw["seed"], "master seed");
    sub->add_option("--workers", workers, "worker threads (never changes results)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "json, or csv for extra CSV and gnuplot files")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--config", config_file, "key = value file; its values override flags");
  };
  auto extra = [&](CLI::App* sub, const std::vector<std::pair<std::string, std::string>>& opts) {
    for (const auto& [name, help] : opts) sub->add_option("--" + name, raw[name], help);
  };

  auto* gen = app.add_subcommand("gen", "generate a graph or map: gen tree 3 12");
  common(gen);
  gen->add_option("family", positional, "family and integer parameters");
  auto* sample = app.add_subcommand("sample", "dump per-sample cluster observables");
  common(sample);
  extra(sample, {{"vertex", "root vertex (default: deepest)"}});
  auto* matrix = app.add_subcommand("matrix", "two-point matrix and its operator norms");
  common(matrix);
  extra(matrix, {{"kind", "T, C(n), S(n), Bint(n), Sint(n), Aint(n,m)"},
                 {"source", "mc or oracle"},
                 {"window", "full, interior:m or ball:r"}});
  auto* oracle = app.add_subcommand("oracle", "exact BK, entrywise and inverse-BK checks");
  common(oracle);
  extra(oracle, {{"field", "ghost field intensities h"}, {"max-edges", "corpus edge cap (default 12)"}});
  auto* exponent = app.add_subcommand("exponent", "cluster tail survival curves and fits");
  common(exponent);
  extra(exponent, {{"vertex", "root vertex"},
                   {"fit-min", "fit window start"},
                   {"fit-max", "fit window end"},
                   {"max-volume", "exploration volume cap"}});
  auto* duality = app.add_subcommand("duality", "p_c of the dual, transported p_u, geometry");
  common(duality);
  extra(duality, {{"radii", "dual scan radii"},
                  {"p-lo", "scan start"},
                  {"p-hi", "scan end"},
                  {"grid", "scan grid points"},
                  {"merge-radii", "merge diagnostic radii"},
                  {"merge-p-lo", "merge scan start"},
                  {"merge-p-hi", "merge scan end"},
                  {"merge-samples", "merge diagnostic samples"},
                  {"geometry", "true: also measure d_int and ConRad at p_u"}});
  auto* sweep = app.add_subcommand("sweep", "run one experiment over a parameter grid");
  common(sweep);
  extra(sweep, {{"experiment", "pc, norm-p, norm-q, decay, magnetization, trifurcation, "
                               "delta-log, ballistic, log-bound, multi-arm"},
                {"field", "ghost field intensities h"},
                {"vertex", "vertex or vertex list"},
                {"vertex2", "second vertex"},
                {"radii", "scan radii"},
                {"p-lo", "scan start"},
                {"p-hi", "scan end"},
                {"grid", "scan grid points"},
                {"p-c", "critical point"},
                {"horizon", "branch horizon"},
                {"window", "full, interior:m or ball:r"},
                {"lambda", "ratio thresholds"},
                {"thresholds", "arm thresholds"},
                {"mode", "volume, rad_int, rad_ext, boundary_reach"}});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kSchema;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Settings s;
  for (const auto& [k, v] : raw) {
    if (v.empty()) continue;
    auto* opt = chosen->get_option_no_throw("--" + k);
    if (opt && opt->count() > 0) s.values[k] = v;
  }
  s.workers = workers;
  s.format = format;
  if (const char* env = std::getenv(kOutEnv); env && *env) s.out_dir = env;
  if (!out_dir.empty()) s.out_dir = out_dir;

  try {
    if (!config_file.empty()) apply_config_file(config_file, s);
    if (s.format != "json" && s.format != "csv") throw SchemaError("format must be json or csv");
    if (s.workers == 0) throw SchemaError("workers must be positive");
    const Output out{s.out_dir, s.format};
    const std::string name = chosen->get_name();
    int code = kOk;
    if (name == "gen") code = cmd_gen(s, out, positional);
    if (name == "sample") code = cmd_sample(s, out);
    if (name == "matrix") code = cmd_matrix(s, out);
    if (name == "oracle") code = cmd_oracle(s, out);
    if (name == "exponent") code = cmd_exponent(s, out);
    if (name == "duality") code = cmd_duality(s, out);
    if (name == "sweep") code = cmd_sweep(s, out);
    if (code == kInvariantFailed) std::cerr << "error: an asserted invariant failed\n";
    return code;
  } catch (const OracleCapExceeded& e) {
    std::cerr << "oracle cap: " << e.what() << "\n";
    return kOracleCap;
  } catch (const std::domain_error& e) {
    std::cerr << "underpowered: " << e.what() << "\n";
    return kUnderpowered;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "schema: " << e.what() << "\n";
    return kSchema;
  } catch (const std::out_of_range& e) {
    std::cerr << "schema: " << e.what() << "\n";
    return kSchema;
  }
}
