#include "docclass/evalreport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docclass/errors.hpp"

namespace docclass {

std::string to_string(UnparsedPolicy p) {
  return p == UnparsedPolicy::count_wrong ? "count_wrong" : "exclude";
}

UnparsedPolicy parse_unparsed_policy(const std::string& s) {
  if (s == "count_wrong") return UnparsedPolicy::count_wrong;
  if (s == "exclude") return UnparsedPolicy::exclude;
  throw Error(Errc::usage_error, "unknown unparsed policy \"" + s + "\"");
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (std::uint64_t c : row) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) t += counts[i][i];
  return t;
}

namespace {

// Shared tally pass. Validates doc ids and one-prediction-per-doc.
struct Tally {
  std::map<std::string, std::size_t> label_index;  // manifest order
  ConfusionMatrix matrix;
  std::uint64_t correct = 0;
  std::uint64_t unparsed = 0;
  std::uint64_t total = 0;
};

Tally tally(const std::vector<Prediction>& predictions, const DatasetManifest& manifest) {
  Tally t;
  for (std::size_t i = 0; i < manifest.classes.size(); ++i)
    t.label_index[manifest.classes[i].id] = i;

  const std::size_t c = manifest.classes.size();
  t.matrix.labels.reserve(c);
  for (const auto& cl : manifest.classes) t.matrix.labels.push_back(cl.id);
  t.matrix.counts.assign(c, std::vector<std::uint64_t>(c + 1, 0));

  std::map<std::string, std::string> truth;
  for (const auto& d : manifest.documents) truth[d.doc_id] = d.true_label;

  std::set<std::string> seen;
  for (const auto& p : predictions) {
    auto doc = truth.find(p.doc_id);
    if (doc == truth.end())
      throw Error(Errc::unknown_doc, "prediction for unknown document", p.doc_id);
    if (!seen.insert(p.doc_id).second)
      throw Error(Errc::duplicate_prediction, "second prediction for document", p.doc_id);

    std::size_t row = t.label_index.at(doc->second);
    ++t.total;
    if (p.predicted == kUnparsedLabel) {
      ++t.unparsed;
      ++t.matrix.counts[row][c];
      continue;
    }
    auto col = t.label_index.find(p.predicted);
    if (col == t.label_index.end())
      throw Error(Errc::unknown_label,
                  "predicted label \"" + p.predicted + "\" not in manifest", p.doc_id);
    ++t.matrix.counts[row][col->second];
    if (col->second == row) ++t.correct;
  }
  return t;
}

}  // namespace

ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const DatasetManifest& manifest) {
  return tally(predictions, manifest).matrix;
}

EvaluationReport evaluate(const std::vector<Prediction>& predictions,
                          const DatasetManifest& manifest, UnparsedPolicy policy) {
  Tally t = tally(predictions, manifest);
  const std::size_t c = manifest.classes.size();

  EvaluationReport report;
  if (!predictions.empty()) report.method = predictions.front().method;
  report.unparsed_count = t.unparsed;
  report.total = t.total;
  report.scored = policy == UnparsedPolicy::exclude ? t.total - t.unparsed : t.total;
  report.accuracy = report.scored == 0
                        ? 0.0
                        : static_cast<double>(t.correct) / static_cast<double>(report.scored);

  double f1_sum = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    std::uint64_t tp = t.matrix.counts[i][i];
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (std::size_t r = 0; r < c; ++r)
      if (r != i) fp += t.matrix.counts[r][i];
    for (std::size_t j = 0; j < c; ++j)
      if (j != i) fn += t.matrix.counts[i][j];
    // unparsed predictions are misses for the true class unless excluded
    if (policy == UnparsedPolicy::count_wrong) fn += t.matrix.counts[i][c];

    PerClassStats s;
    s.support = tp + fn;

    std::uint64_t p_den = tp + fp;
    std::uint64_t r_den = tp + fn;
    s.zero_division = p_den == 0 || r_den == 0;
    s.precision = p_den == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(p_den);
    s.recall = r_den == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(r_den);
    s.f1 = (s.precision + s.recall) == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    f1_sum += s.f1;
    report.per_class.emplace(manifest.classes[i].id, s);
  }
  report.macro_f1 = c == 0 ? 0.0 : f1_sum / static_cast<double>(c);
  return report;
}

std::string format_fixed(double value, int decimals) {
  double scale = std::pow(10.0, decimals);
  double scaled = value * scale;
  long long rounded = static_cast<long long>(
      scaled >= 0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5));
  bool negative = rounded < 0;
  unsigned long long mag = negative ? -rounded : rounded;

  std::string digits = std::to_string(mag);
  if (static_cast<int>(digits.size()) <= decimals)
    digits.insert(0, decimals + 1 - digits.size(), '0');
  std::string out = digits.substr(0, digits.size() - decimals);
  if (decimals > 0) out += "." + digits.substr(digits.size() - decimals);
  return negative ? "-" + out : out;
}

namespace {

std::string format_metric(double v, int decimals) {
  if (std::isinf(v)) return "inf";
  return format_fixed(v, decimals);
}

std::string layout_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& cells,
                         TableFormat format) {
  std::ostringstream out;
  if (format == TableFormat::csv) {
    for (std::size_t i = 0; i < header.size(); ++i)
      out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : cells) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << "\n";
    }
    return out.str();
  }

  std::vector<std::size_t> widths(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) widths[i] = header[i].size();
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i)
      widths[i] = std::max(widths[i], row[i].size());

  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      if (i == 0)
        out << row[i] << std::string(widths[i] - row[i].size(), ' ');
      else
        out << std::string(widths[i] - row[i].size(), ' ') << row[i];
    }
    out << "\n";
  };
  emit(header);
  for (const auto& row : cells) emit(row);
  return out.str();
}

}  // namespace

std::string render_table(const std::vector<ClusterTableRow>& rows, TableFormat format) {
  if (rows.empty()) throw Error(Errc::empty_input, "no table rows");
  std::vector<std::string> header{"Model", "Intra", "Inter", "Ratio",
                                  "Silh.", "DB",    "CH",    "F1",
                                  "Acc."};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    std::vector<std::string> row;
    row.push_back(r.model);
    row.push_back(format_metric(r.metrics.intra, 3));
    row.push_back(format_metric(r.metrics.inter, 3));
    row.push_back(format_metric(r.metrics.ratio, 3));
    row.push_back(format_metric(r.metrics.silhouette, 3));
    row.push_back(format_metric(r.metrics.davies_bouldin, 3));
    row.push_back(format_metric(r.metrics.calinski_harabasz, 3));
    row.push_back(r.f1 ? format_metric(*r.f1, 2) : "-");
    row.push_back(r.accuracy ? format_metric(*r.accuracy, 2) : "-");
    cells.push_back(std::move(row));
  }
  return layout_table(header, cells, format);
}

std::string render_table(const std::vector<EvalTableRow>& rows, TableFormat format) {
  if (rows.empty()) throw Error(Errc::empty_input, "no table rows");
  std::vector<std::string> header{"Model", "Config", "Accuracy", "F1"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.model, r.config, format_metric(r.accuracy, 2),
                     format_metric(r.macro_f1, 2)});
  }
  return layout_table(header, cells, format);
}

std::string emit_plot_data(const std::vector<PlotRecord>& records) {
  if (records.empty()) throw Error(Errc::empty_input, "no plot records");
  std::set<std::pair<std::string, std::string>> keys;
  std::ostringstream out;
  out << "family,model,config,accuracy,macro_f1\n";
  for (const auto& r : records) {
    if (!keys.emplace(r.model, r.config).second)
      throw Error(Errc::duplicate_key, "duplicate plot record", r.model + "/" + r.config);
    nlohmann::json acc = r.accuracy;   // shortest round-trip float text
    nlohmann::json f1 = r.macro_f1;
    out << r.family << "," << r.model << "," << r.config << "," << acc.dump()
        << "," << f1.dump() << "\n";
  }
  return out.str();
}

std::string serialize_prediction(const Prediction& p) {
  nlohmann::json j;
  j["doc_id"] = p.doc_id;
  j["method"] = to_string(p.method);
  j["predicted"] = p.predicted;
  j["tie_broken"] = p.tie_broken;
  if (!p.scores.empty()) j["scores"] = p.scores;
  if (!p.raw_output.empty()) j["raw_output"] = p.raw_output;
  if (p.excluded) j["excluded"] = true;
  return j.dump();
}

Prediction parse_prediction(const std::string& json_line) {
  nlohmann::json j = nlohmann::json::parse(json_line);
  Prediction p;
  p.doc_id = j.at("doc_id").get<std::string>();
  p.method = parse_method(j.at("method").get<std::string>());
  p.predicted = j.at("predicted").get<std::string>();
  p.tie_broken = j.value("tie_broken", false);
  if (j.contains("scores"))
    p.scores = j["scores"].get<std::map<std::string, double>>();
  p.raw_output = j.value("raw_output", "");
  p.excluded = j.value("excluded", false);
  return p;
}

std::string serialize_report(const EvaluationReport& r) {
  nlohmann::json j;
  j["method"] = to_string(r.method);
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["unparsed_count"] = r.unparsed_count;
  j["scored"] = r.scored;
  j["total"] = r.total;
  nlohmann::json pc = nlohmann::json::object();
  for (const auto& [label, s] : r.per_class) {
    pc[label] = {{"precision", s.precision},
                 {"recall", s.recall},
                 {"f1", s.f1},
                 {"support", s.support},
                 {"zero_division", s.zero_division}};
  }
  j["per_class"] = pc;
  if (r.cluster_quality) {
    j["cluster_quality"] =
        nlohmann::json::parse(serialize_cluster_report(*r.cluster_quality));
  }
  return j.dump(2) + "\n";
}

EvaluationReport parse_report(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  EvaluationReport r;
  r.method = parse_method(j.at("method").get<std::string>());
  r.accuracy = j.at("accuracy").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.unparsed_count = j.at("unparsed_count").get<std::uint64_t>();
  r.scored = j.at("scored").get<std::uint64_t>();
  r.total = j.at("total").get<std::uint64_t>();
  for (auto& [label, s] : j.at("per_class").items()) {
    PerClassStats stats;
    stats.precision = s.at("precision").get<double>();
    stats.recall = s.at("recall").get<double>();
    stats.f1 = s.at("f1").get<double>();
    stats.support = s.at("support").get<std::uint64_t>();
    stats.zero_division = s.value("zero_division", false);
    r.per_class.emplace(label, stats);
  }
  if (j.contains("cluster_quality"))
    r.cluster_quality = parse_cluster_report(j["cluster_quality"].dump());
  return r;
}

}  // namespace docclass
