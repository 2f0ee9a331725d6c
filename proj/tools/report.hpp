#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "perclab/estimators.hpp"
#include "perclab/operators.hpp"
#include "perclab/oracle.hpp"

namespace perclab {

using Json = nlohmann::json;

/// Result documents: {command, spec, provenance, result, invariants, warnings}.
/// Keys are sorted and nothing time- or host-dependent is recorded, so equal
/// inputs give byte-equal documents. The worker count is deliberately absent.
class ResultDocument {
 public:
  ResultDocument(std::string command, std::map<std::string, std::string> spec);

  void set_graph_hash(std::uint64_t h) { graph_hashes_.push_back(h); }
  void set_seed(std::uint64_t master, std::uint64_t streams);
  Json& result() { return result_; }
  void invariant(const std::string& name, bool holds, const std::string& detail = "");
  void warn(const std::string& w) { warnings_.push_back(w); }
  void warn(const std::vector<std::string>& ws);
  bool all_hold() const noexcept { return all_hold_; }

  std::string spec_hash() const;
  Json to_json() const;
  std::string dump() const { return to_json().dump(2) + "\n"; }

 private:
  std::string command_;
  std::map<std::string, std::string> spec_;
  std::vector<std::uint64_t> graph_hashes_;
  Json seeds_ = Json::array();
  Json result_ = Json::object();
  Json invariants_ = Json::array();
  std::vector<std::string> warnings_;
  bool all_hold_ = true;
};

std::string code_version();
std::string hex64(std::uint64_t v);

/// Infinite or NaN values become strings ("inf", "-inf", "nan") so the
/// documents stay valid JSON and keep the information.
Json number(double x);
Json numbers(const std::vector<double>& xs);

void to_json(Json& j, const Estimate& e);
void to_json(Json& j, const LinearFit& f);
void to_json(Json& j, const ExponentFit& f);
void to_json(Json& j, const SurvivalCurve& c);
void to_json(Json& j, const NormResult& r);
void to_json(Json& j, const PcEstimate& e);
void to_json(Json& j, const TailResult& r);
void to_json(Json& j, const BallisticResult& r);
void to_json(Json& j, const MagnetizationScaling& r);
void to_json(Json& j, const MultiArmResult& r);
void to_json(Json& j, const TrifurcationCurve& r);
void to_json(Json& j, const DeltaLogResult& r);
void to_json(Json& j, const DualityResult& r);
void to_json(Json& j, const PuGeometryResult& r);
void to_json(Json& j, const DecayResult& r);
void to_json(Json& j, const NormVsPCurve& r);
void to_json(Json& j, const NormVsQCurve& r);
void to_json(Json& j, const LogBoundResult& r);
void to_json(Json& j, const BkSweep& r);
void to_json(Json& j, const EntrywiseResult& r);
void to_json(Json& j, const InverseBkResult& r);

/// CSV table with a header row; cells are formatted with full precision.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string str() const;
};

/// gnuplot script plotting columns of `csv_file` against the first one.
std::string gnuplot_script(const std::string& csv_file, const CsvTable& table,
                           const std::string& title, bool log_x, bool log_y);

}  // namespace perclab
