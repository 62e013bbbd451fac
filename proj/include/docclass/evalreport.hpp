#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docclass/classify.hpp"
#include "docclass/clustermetrics.hpp"
#include "docclass/dataset.hpp"

namespace docclass {

enum class UnparsedPolicy { count_wrong, exclude };
std::string to_string(UnparsedPolicy p);
UnparsedPolicy parse_unparsed_policy(const std::string& s);

// rows = true class in manifest order; cols = predicted class in the same
// order plus a trailing column for unparseable outputs.
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::uint64_t>> counts;  // C x (C+1)

  std::uint64_t total() const;
  std::uint64_t trace() const;  // diagonal only; the unparsed column never counts
};

struct PerClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  bool zero_division = false;  // precision or recall had an empty denominator
};

struct EvaluationReport {
  Method method = Method::embed_vote;
  double accuracy = 0.0;
  std::map<std::string, PerClassStats> per_class;
  double macro_f1 = 0.0;  // unweighted mean over ALL manifest classes
  std::optional<ClusterQualityReport> cluster_quality;
  std::uint64_t unparsed_count = 0;
  std::uint64_t scored = 0;  // denominator after the unparsed policy
  std::uint64_t total = 0;   // predictions received
};

// Scores one method's predictions against the manifest. Unparsed predictions
// count as wrong under count_wrong (default) or leave the denominator under
// exclude; either way they are tallied in unparsed_count.
EvaluationReport evaluate(const std::vector<Prediction>& predictions,
                          const DatasetManifest& manifest,
                          UnparsedPolicy policy = UnparsedPolicy::count_wrong);

ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const DatasetManifest& manifest);

enum class TableFormat { text, csv };

// One table row per embedding model, column order Intra Inter Ratio Silh. DB
// CH F1 Acc., indices at 3 decimals and scores at 2 (display rounding is
// half-up and applies to rendering only).
struct ClusterTableRow {
  std::string model;
  ClusterQualityReport metrics;
  std::optional<double> f1;
  std::optional<double> accuracy;
};
std::string render_table(const std::vector<ClusterTableRow>& rows,
                         TableFormat format = TableFormat::text);

// One row per (model, configuration), column order Accuracy F1 at 2 decimals.
struct EvalTableRow {
  std::string model;
  std::string config;  // prompt/template or run tag
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};
std::string render_table(const std::vector<EvalTableRow>& rows,
                         TableFormat format = TableFormat::text);

// Decimal display rounding, half away from zero.
std::string format_fixed(double value, int decimals);

struct PlotRecord {
  std::string family;  // embedding | vlm | vlm_sft
  std::string model;
  std::string config;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

// CSV with header family,model,config,accuracy,macro_f1; one record per
// (model, configuration). Duplicate keys are rejected.
std::string emit_plot_data(const std::vector<PlotRecord>& records);

// JSON round-trip for run artifacts. Serialized floats keep full precision;
// parsing them back reproduces evaluate's outputs bit-identically.
std::string serialize_prediction(const Prediction& p);
Prediction parse_prediction(const std::string& json_line);
std::string serialize_report(const EvaluationReport& r);
EvaluationReport parse_report(const std::string& json_text);

}  // namespace docclass
