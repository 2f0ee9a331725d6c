#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "perclab/graph.hpp"

#ifndef PERCLAB_VERSION
#define PERCLAB_VERSION "unknown"
#endif

namespace perclab {

std::string code_version() { return PERCLAB_VERSION; }

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json numbers(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(number(x));
  return a;
}

ResultDocument::ResultDocument(std::string command, std::map<std::string, std::string> spec)
    : command_(std::move(command)), spec_(std::move(spec)) {}

void ResultDocument::set_seed(std::uint64_t master, std::uint64_t streams) {
  seeds_.push_back({{"master", master}, {"streams", streams}});
}

void ResultDocument::invariant(const std::string& name, bool holds, const std::string& detail) {
  invariants_.push_back({{"name", name}, {"holds", holds}, {"detail", detail}});
  all_hold_ = all_hold_ && holds;
}

void ResultDocument::warn(const std::vector<std::string>& ws) {
  for (const auto& w : ws) warn(w);
}

std::string ResultDocument::spec_hash() const {
  std::string canon = command_ + "\n";
  for (const auto& [k, v] : spec_) canon += k + "=" + v + "\n";
  return hex64(fnv1a(canon));
}

Json ResultDocument::to_json() const {
  Json hashes = Json::array();
  for (auto h : graph_hashes_) hashes.push_back(hex64(h));
  Json j;
  j["command"] = command_;
  j["spec"] = spec_;
  j["provenance"] = {{"spec_hash", spec_hash()},
                     {"graph_hash", hashes},
                     {"seeds", seeds_},
                     {"code_version", code_version()}};
  j["result"] = result_;
  j["invariants"] = invariants_;
  j["all_invariants_hold"] = all_hold_;
  j["warnings"] = warnings_;
  return j;
}

void to_json(Json& j, const Estimate& e) {
  j = {{"mean", number(e.mean)},
       {"std_error", number(e.std_error)},
       {"samples", e.samples},
       {"method", e.method}};
}

void to_json(Json& j, const LinearFit& f) {
  j = {{"slope", number(f.slope)},
       {"intercept", number(f.intercept)},
       {"slope_stderr", number(f.slope_stderr)},
       {"intercept_stderr", number(f.intercept_stderr)},
       {"r2", number(f.r2)},
       {"points", f.points}};
}

void to_json(Json& j, const ExponentFit& f) {
  Json series = Json::array();
  for (const auto& [n, p] : f.series) series.push_back({number(n), number(p)});
  j = {{"fit", f.fit}, {"n_min", f.n_min}, {"n_max", f.n_max}, {"series", series}};
}

void to_json(Json& j, const SurvivalCurve& c) {
  Json lo = Json::array(), hi = Json::array();
  for (const auto& b : c.band) {
    lo.push_back(number(b.lo));
    hi.push_back(number(b.hi));
  }
  j = {{"n", c.n},         {"hits", c.hits},       {"prob", numbers(c.prob)},
       {"band_lo", lo},    {"band_hi", hi},        {"trials", c.trials}};
}

void to_json(Json& j, const NormResult& r) {
  j = {{"q", number(r.q)},
       {"value", number(r.value)},
       {"iterations", r.iterations},
       {"residual", number(r.residual)},
       {"method", to_string(r.method)},
       {"converged", r.converged}};
}

void to_json(Json& j, const PcEstimate& e) {
  Json arm = Json::array();
  for (const auto& row : e.arm_prob) arm.push_back(numbers(row));
  j = {{"value", number(e.value)},
       {"error", number(e.error)},
       {"exact", e.exact},
       {"method", e.method},
       {"radii", e.radii},
       {"crossings", numbers(e.crossings)},
       {"spread", number(e.spread)},
       {"statistical_error", number(e.statistical_error)},
       {"grid_step", number(e.grid_step)},
       {"p_grid", numbers(e.p_grid)},
       {"arm_prob", arm},
       {"samples", e.samples}};
}

void to_json(Json& j, const TailResult& r) {
  j = {{"p", r.p},
       {"volume", r.volume},
       {"rad_int", r.rad_int},
       {"rad_ext", r.rad_ext},
       {"volume_fit", r.volume_fit},
       {"rad_int_fit", r.rad_int_fit},
       {"rad_ext_fit", r.rad_ext_fit},
       {"boundary_touching", r.boundary_touching},
       {"truncated", r.truncated},
       {"warnings", r.warnings}};
}

void to_json(Json& j, const BallisticResult& r) {
  j = {{"p", r.p},
       {"ambient_distance", r.ambient_distance},
       {"hits", r.hits},
       {"conditional_tail", r.conditional_tail},
       {"log_fit", r.log_fit},
       {"rate", number(r.rate)},
       {"fit_lo", r.fit_lo},
       {"fit_hi", r.fit_hi},
       {"lambda_grid", numbers(r.lambda_grid)},
       {"ratio_tail", numbers(r.ratio_tail)},
       {"ratio_samples", r.ratio_samples},
       {"max_ratio", number(r.max_ratio)}};
}

void to_json(Json& j, const MagnetizationScaling& r) {
  j = {{"p", r.p},
       {"h", numbers(r.h)},
       {"estimate", r.estimate},
       {"exact", numbers(r.exact)},
       {"z", numbers(r.z)},
       {"dropped_h", numbers(r.dropped_h)},
       {"fit", r.fit},
       {"exact_fit", r.exact_fit},
       {"warnings", r.warnings}};
}

void to_json(Json& j, const MultiArmResult& r) {
  j = {{"mode", to_string(r.mode)},
       {"vertices", r.vertices},
       {"thresholds", r.thresholds},
       {"pairwise_distance", r.pairwise_distance},
       {"joint", r.joint},
       {"single", r.single},
       {"bk_bound", number(r.bk_bound)},
       {"ratio", number(r.ratio)},
       {"bound_holds", r.bound_holds},
       {"truncated", r.truncated}};
}

void to_json(Json& j, const TrifurcationCurve& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"p", p.p},
                   {"estimate", p.estimate},
                   {"half_horizon", p.half_horizon},
                   {"single_branch", p.single_branch},
                   {"bk_product", number(p.bk_product)},
                   {"exact", number(p.exact)},
                   {"exact_infinite", number(p.exact_infinite)},
                   {"z", number(p.z)},
                   {"ratio", number(p.ratio)},
                   {"ratio_error", number(p.ratio_error)},
                   {"horizon_stable", p.horizon_stable}});
  }
  j = {{"p_c", r.p_c},
       {"horizon", r.horizon},
       {"points", pts},
       {"ratio_band", number(r.ratio_band)},
       {"warnings", r.warnings}};
}

void to_json(Json& j, const DeltaLogResult& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"p", p.p},
                   {"mean_intersection", numbers(p.mean_intersection)},
                   {"ball_size", numbers(p.ball_size)},
                   {"delta", number(p.delta)},
                   {"delta_previous", number(p.delta_previous)},
                   {"std_error", number(p.std_error)},
                   {"drift", p.drift}});
  }
  j = {{"p_c", r.p_c},
       {"points", pts},
       {"slope_through_origin", number(r.slope_through_origin)},
       {"warnings", r.warnings}};
}

void to_json(Json& j, const DualityResult& r) {
  j = {{"pc_dual", r.pc_dual},
       {"pu_transported", number(r.pu_transported)},
       {"pu_transported_error", number(r.pu_transported_error)},
       {"merge_available", r.merge_available},
       {"merge_diagnostic", r.merge_diagnostic},
       {"discrepancy", number(r.discrepancy)},
       {"joint_error", number(r.joint_error)},
       {"consistent", r.consistent}};
  if (r.merge_available) j["pu_merge"] = r.pu_merge;
}

void to_json(Json& j, const PuGeometryResult& r) {
  j = {{"p", r.p},
       {"edge", r.edge},
       {"n_max", r.n_max},
       {"samples", r.samples},
       {"connected", r.connected},
       {"disconnected", r.disconnected},
       {"unresolved", r.unresolved},
       {"dint_tail", r.dint_tail},
       {"conrad_tail", r.conrad_tail},
       {"fits_available", r.fits_available},
       {"fit_diagnostic", r.fit_diagnostic},
       {"sandwich_samples", r.sandwich_samples},
       {"boundary_skipped", r.boundary_skipped},
       {"distinctness_violations", r.distinctness_violations},
       {"c_lower", number(r.c_lower)},
       {"c_upper", number(r.c_upper)},
       {"c_lower_half", number(r.c_lower_half)},
       {"c_upper_half", number(r.c_upper_half)},
       {"conrad_lower", number(r.conrad_lower)},
       {"conrad_upper", number(r.conrad_upper)}};
  if (r.fits_available) {
    j["dint_fit"] = r.dint_fit;
    j["conrad_fit"] = r.conrad_fit;
  }
}

void to_json(Json& j, const DecayResult& r) {
  j = {{"q", number(r.q)},
       {"shell_max", numbers(r.shell_max)},
       {"c_norms", numbers(r.c_norms)},
       {"explicit_bound", numbers(r.explicit_bound)},
       {"norm_t", number(r.norm_t)},
       {"xi", number(r.xi)},
       {"xi_fit", r.xi_fit},
       {"eta", number(r.eta)},
       {"eta_fit", r.eta_fit},
       {"explicit_bound_holds", r.explicit_bound_holds},
       {"eta_diagnostic_holds", r.eta_diagnostic_holds}};
}

void to_json(Json& j, const NormVsPCurve& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"p", p.p},
                   {"norm", number(p.norm)},
                   {"std_error", number(p.std_error)},
                   {"implied_threshold", number(p.implied_threshold)},
                   {"converged", p.converged}});
  }
  j = {{"q", number(r.q)},
       {"adjacency_norm", number(r.adjacency_norm)},
       {"points", pts},
       {"monotone", r.monotone}};
}

void to_json(Json& j, const NormVsQCurve& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"q", number(p.q)},
                   {"value", number(p.value)},
                   {"scaled", number(p.scaled)},
                   {"converged", p.converged}});
  }
  j = {{"points", pts},
       {"variation", number(r.variation)},
       {"band", number(r.band)},
       {"flat", r.flat}};
}

void to_json(Json& j, const LogBoundResult& r) {
  j = {{"mean", r.profile.mean},
       {"ball_size", r.profile.ball_size},
       {"log_fit", r.log_fit},
       {"power_fit", r.power_fit},
       {"ball_fit", r.ball_fit},
       {"ball_constant", number(r.ball_constant)},
       {"logarithmic_preferred", r.logarithmic_preferred}};
}

void to_json(Json& j, const BkSweep& r) {
  j = {{"p", r.p},
       {"checked", r.checked},
       {"violations", r.violations},
       {"min_slack", number(r.min_slack)},
       {"worst", r.worst}};
}

void to_json(Json& j, const EntrywiseResult& r) {
  j = {{"p", r.p},
       {"n", r.n},
       {"m", r.m},
       {"extrinsic_min_slack", number(r.extrinsic_min_slack)},
       {"extrinsic_holds", r.extrinsic_holds},
       {"intrinsic_min_slack", number(r.intrinsic_min_slack)},
       {"intrinsic_holds", r.intrinsic_holds}};
}

void to_json(Json& j, const InverseBkResult& r) {
  j = {{"p", r.p},
       {"vertices", r.vertices},
       {"h", numbers(r.h)},
       {"prob_disjoint_occurrence", number(r.prob_disjoint_occurrence)},
       {"prob_distinct_clusters", number(r.prob_distinct_clusters)},
       {"prod_inf_magnetization", number(r.prod_inf_magnetization)},
       {"prod_sup_magnetization", number(r.prod_sup_magnetization)},
       {"sup_t2", number(r.sup_t2)},
       {"sup_t3", number(r.sup_t3)},
       {"max_degree", r.max_degree},
       {"inverse_bk_correction", number(r.inverse_bk_correction)},
       {"inverse_bk_slack", number(r.inverse_bk_slack)},
       {"inverse_bk_printed_correction", number(r.inverse_bk_printed_correction)},
       {"inverse_bk_printed_slack", number(r.inverse_bk_printed_slack)},
       {"diagrammatic_correction", number(r.diagrammatic_correction)},
       {"diagrammatic_slack", number(r.diagrammatic_slack)},
       {"diagrammatic_printed_correction", number(r.diagrammatic_printed_correction)},
       {"diagrammatic_printed_slack", number(r.diagrammatic_printed_slack)},
       {"holds", r.holds}};
}

std::string CsvTable::str() const {
  std::ostringstream os;
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << "\n";
  char buf[32];
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      os << (c ? "," : "") << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::string gnuplot_script(const std::string& csv_file, const CsvTable& table,
                           const std::string& title, bool log_x, bool log_y) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set title '" << title << "'\n"
     << "set xlabel '" << (table.columns.empty() ? "" : table.columns[0]) << "'\n";
  if (log_x) os << "set logscale x\n";
  if (log_y) os << "set logscale y\n";
  os << "set terminal pngcairo size 900,600\n"
     << "set output '" << csv_file.substr(0, csv_file.rfind('.')) << ".png'\n"
     << "plot ";
  for (std::size_t c = 1; c < table.columns.size(); ++c) {
    os << (c > 1 ? ", \\\n     " : "") << "'" << csv_file << "' using 1:" << c + 1
       << " with linespoints";
  }
  os << "\n";
  return os.str();
}

}  // namespace perclab
