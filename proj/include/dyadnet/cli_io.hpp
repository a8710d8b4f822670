#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dyadnet/estimator.hpp"
#include "dyadnet/inference.hpp"
#include "dyadnet/network.hpp"
#include "dyadnet/simulation.hpp"
#include "dyadnet/weighted_extension.hpp"
#include "json.hpp"

namespace dyadnet {

using nlohmann::json;

// Plain comma separated table; blank lines and lines starting with '#' are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;  // source line of each row, 1-based
  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& source = "<memory>");

// Pairwise covariates built from node attributes.
enum class Constructor { AbsDiff, Equality };

struct AttributeRule {
  std::string name;
  Constructor ctor = Constructor::AbsDiff;
};

struct InputSchema {
  std::string edges;                  // header i,j,a; absent pairs have a = 0
  std::string covariates;             // pairwise file, header i,j,<names>
  std::string nodes;                  // node attribute file, header i,<names>
  std::vector<AttributeRule> rules;   // node mode
  std::string special_regressor;
  std::vector<std::string> discrete;  // pairwise mode; equality columns are always discrete
  std::optional<int> node_count;      // otherwise the largest id seen
  bool standardize_attributes = true;  // node mode: z-score absdiff attributes first
};

DirectedNetwork load_network(const InputSchema& schema);

// Edge rows with a != 0 and one covariate row per ordered pair, 1-based ids.
void write_network(const DirectedNetwork& net, const std::string& edges_path,
                   const std::string& covariates_path);

struct GofReport {
  VectorXd out_observed, out_fitted;
  VectorXd in_observed, in_fitted;
  double l2_out = 0, l2_in = 0;
};

// Fitted edge: alpha_i + beta_j + s x1 + Z'eta > 0.
GofReport gof_degrees(const ModelFit& fit);

struct RunConfig {
  std::uint64_t seed = 1;
  int draws = 10000;
  double level = 0.05;
  int m_tilde = 0;
  double t = 2.0;
  std::optional<double> bandwidth;
  double m_floor = 1e-3;
  KernelFamily kernel = KernelFamily::Biweight2;
  BandwidthGrid grid;
  std::string output_dir = ".";
  bool heteroskedastic = false;
  bool drop_isolated = false;
  bool standardize = false;
  std::optional<int> sign;
  std::vector<double> levels;  // weighted mode

  void validate() const;
  FitOptions fit_options() const;
  CovarianceModel covariance() const;
};

// Unknown keys are rejected. Keys absent from j keep the base value.
RunConfig run_config_from_json(const json& j, RunConfig base = {});
InputSchema schema_from_json(const json& j, InputSchema base = {});
json read_json(const std::string& path);

KernelFamily parse_kernel(const std::string& name);
// sd scales the normal (variance sd^2) and logistic (scale sd/2) laws; the mixtures are fixed.
NoiseSpec parse_noise(const std::string& name, double sd);
ScheduleKind parse_schedule(const std::string& name);
StudyKind parse_study(const std::string& name);
Which parse_which(const std::string& name);

// 17 significant digits, so values round-trip exactly.
std::string format_number(double v);

// Writes to a temporary sibling and renames it into place.
void write_text_atomic(const std::string& path, const std::string& content);
void write_json(const std::string& path, const json& j);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

json to_json(const ModelFit& fit);
json to_json(const WeightedModelFit& fit);
json to_json(const TestReport& report);
json to_json(const Interval& iv);
json to_json(const BandwidthSelection& sel);
json to_json(const GofReport& gof);
json to_json(const McReport& report);
json to_json(const Truth& truth);

}  // namespace dyadnet
