#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "docclass/errors.hpp"
#include "docclass/pipeline.hpp"

using namespace docclass;

namespace {

void print_error(const std::string& stage, const std::string& code,
                 const std::string& message, const std::string& context) {
  nlohmann::json err;
  err["error"]["code"] = code;
  err["error"]["message"] = message;
  if (!context.empty()) err["error"]["context"] = context;
  if (!stage.empty()) err["error"]["stage"] = stage;
  std::cerr << err.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"docclass: benchmark embedding-vote and VLM document classification"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "toolkit config file (JSON)")->required();

  std::string manifest_path, provider_id, template_name = "plus", out_dir = "run";
  std::string unparsed = "count_wrong", format = "table", rows_file;
  std::vector<std::string> run_dirs;
  unsigned workers = 4;
  std::optional<std::uint32_t> max_dim;
  std::uint32_t max_dim_value = 0;

  auto* ingest = app.add_subcommand("ingest", "load a manifest and rasterize first pages");
  ingest->add_option("--manifest", manifest_path, "dataset manifest (JSONL)")->required();
  ingest->add_option("--out", out_dir, "run directory");
  ingest->add_option("--workers", workers, "rasterization worker bound");
  ingest->add_option("--max-dim", max_dim_value, "override the image size cap");

  auto* embed = app.add_subcommand("embed", "embed rasterized pages");
  embed->add_option("--out", out_dir, "run directory");
  embed->add_option("--provider", provider_id, "embedding provider id");
  embed->add_option("--workers", workers, "embedding worker bound");

  auto* cls_embed = app.add_subcommand("classify-embed",
                                       "similarity-vote against class definitions");
  cls_embed->add_option("--out", out_dir, "run directory");
  cls_embed->add_option("--provider", provider_id, "embedding provider id");

  auto* cls_vlm = app.add_subcommand("classify-vlm", "generative classification");
  cls_vlm->add_option("--out", out_dir, "run directory");
  cls_vlm->add_option("--provider", provider_id, "vision-chat provider id");
  cls_vlm->add_option("--template", template_name, "prompt template name (base|plus)");
  cls_vlm->add_option("--workers", workers, "request worker bound");

  auto* cluster = app.add_subcommand("cluster-metrics",
                                     "cluster-validity metrics over document embeddings");
  cluster->add_option("--out", out_dir, "run directory");

  auto* evaluate = app.add_subcommand("evaluate", "score predictions against the manifest");
  evaluate->add_option("--out", out_dir, "run directory");
  evaluate->add_option("--unparsed-policy", unparsed, "count_wrong|exclude");

  auto* report = app.add_subcommand("report", "render tables and plot data");
  report->add_option("--out", out_dir, "run directory (reported on and written to)");
  report->add_option("--runs", run_dirs, "additional run directories to merge");
  report->add_option("--format", format, "table|csv|json");
  report->add_option("--rows", rows_file, "render a table from a rows JSON file");

  std::string stage_name;
  try {
    app.parse(argc, argv);
    stage_name = app.get_subcommands().front()->get_name();

    AppConfig cfg = load_app_config(config_path);
    RunPaths run{std::filesystem::path(out_dir)};
    std::filesystem::create_directories(run.out);

    StageSummary summary;
    if (*ingest) {
      if (ingest->count("--max-dim")) max_dim = max_dim_value;
      summary = stage_ingest(cfg, manifest_path, run, workers, max_dim);
    } else if (*embed) {
      summary = stage_embed(cfg, run, provider_id, workers);
    } else if (*cls_embed) {
      summary = stage_classify_embed(cfg, run, provider_id);
    } else if (*cls_vlm) {
      summary = stage_classify_vlm(cfg, run, provider_id, template_name, workers);
    } else if (*cluster) {
      summary = stage_cluster_metrics(cfg, run);
    } else if (*evaluate) {
      summary = stage_evaluate(cfg, run, parse_unparsed_policy(unparsed));
    } else if (*report) {
      ReportFormat fmt = parse_report_format(format);
      if (!rows_file.empty()) {
        std::string table = render_rows_file(rows_file, fmt);
        write_file_text(run.table(fmt).string(), table);
        std::cout << table;
        return 0;
      }
      std::vector<RunPaths> runs{run};
      for (const auto& extra : run_dirs)
        runs.push_back(RunPaths{std::filesystem::path(extra)});
      summary = stage_report(cfg, runs, run, fmt);
      std::cout << summary.note;
      return 0;
    }
    std::cout << stage_name << ": " << summary.note << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    print_error(stage_name, "UsageError", e.what(), "");
    return 2;
  } catch (const Error& e) {
    print_error(stage_name, std::string(to_string(e.code())), e.message(), e.context());
    return e.code() == Errc::usage_error ? 2 : 1;
  } catch (const std::exception& e) {
    print_error(stage_name, "InternalError", e.what(), "");
    return 1;
  }
}
