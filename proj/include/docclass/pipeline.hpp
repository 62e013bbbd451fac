#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docclass/classify.hpp"
#include "docclass/dataset.hpp"
#include "docclass/evalreport.hpp"
#include "docclass/providers.hpp"

namespace docclass {

// Toolkit configuration: provider registry plus pipeline defaults.
struct AppConfig {
  ProviderRegistry registry;
  RasterConfig raster;
  std::string image_instruction = "generate a vector representation of the document";
  std::string templates_dir;
  double temperature = 0.0;
  std::string embedding_provider;  // default provider ids; flags override
  std::string chat_provider;
  std::string config_digest;       // sha256 of the config file bytes
};

AppConfig load_app_config(const std::string& path);

enum class ReportFormat { text, csv, json };
ReportFormat parse_report_format(const std::string& s);

// Stage artifacts inside one run directory.
struct RunPaths {
  std::filesystem::path out;

  std::filesystem::path manifest() const { return out / "manifest.jsonl"; }
  std::filesystem::path pages_dir() const { return out / "pages"; }
  std::filesystem::path pages_index() const { return out / "pages.jsonl"; }
  std::filesystem::path embeddings() const { return out / "embeddings.jsonl"; }
  std::filesystem::path class_embeddings() const { return out / "class_embeddings.json"; }
  std::filesystem::path predictions() const { return out / "predictions.jsonl"; }
  std::filesystem::path cluster_metrics() const { return out / "cluster_metrics.json"; }
  std::filesystem::path report() const { return out / "report.json"; }
  std::filesystem::path meta() const { return out / "meta.json"; }
  std::filesystem::path table(ReportFormat f) const {
    switch (f) {
      case ReportFormat::csv: return out / "table.csv";
      case ReportFormat::json: return out / "table.json";
      default: return out / "table.txt";
    }
  }
  std::filesystem::path plot() const { return out / "plot.csv"; }
};

struct StageSummary {
  std::size_t processed = 0;
  std::size_t fresh = 0;   // provider calls made
  std::size_t cached = 0;  // resumed from persisted progress
  std::string note;
};

StageSummary stage_ingest(const AppConfig& cfg, const std::string& manifest_path,
                          const RunPaths& run, unsigned workers,
                          std::optional<std::uint32_t> max_dim = std::nullopt);

StageSummary stage_embed(const AppConfig& cfg, const RunPaths& run,
                         const std::string& provider_id, unsigned workers);

StageSummary stage_classify_embed(const AppConfig& cfg, const RunPaths& run,
                                  const std::string& provider_id);

StageSummary stage_classify_vlm(const AppConfig& cfg, const RunPaths& run,
                                const std::string& provider_id,
                                const std::string& template_name, unsigned workers);

StageSummary stage_cluster_metrics(const AppConfig& cfg, const RunPaths& run);

StageSummary stage_evaluate(const AppConfig& cfg, const RunPaths& run,
                            UnparsedPolicy policy);

// Renders table.{txt,csv,json} and plot.csv from one or more evaluated runs.
StageSummary stage_report(const AppConfig& cfg, const std::vector<RunPaths>& runs,
                          const RunPaths& dest, ReportFormat format);

// Renders a table from externally supplied rows:
//   {"type": "cluster"|"eval", "rows": [...]}
std::string render_rows_file(const std::string& rows_path, ReportFormat format);

// Artifact helpers shared by stages and tests.
DatasetManifest load_run_manifest(const RunPaths& run);
std::map<std::string, PageImage> load_pages(const RunPaths& run);
std::map<std::string, EmbeddingVector> load_embeddings(const RunPaths& run);
std::vector<Prediction> load_predictions(const RunPaths& run);

}  // namespace docclass
