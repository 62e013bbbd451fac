#include "docclass/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docclass/digest.hpp"
#include "docclass/errors.hpp"
#include "docclass/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace docclass {

namespace {

[[noreturn]] void stage_fail(const std::string& stage, const std::string& message) {
  throw Error(Errc::stage_error, message, stage);
}

json parse_json_file(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path)) stage_fail(stage, "missing artifact " + path.string());
  try {
    return json::parse(read_file_text(path.string()));
  } catch (const json::exception& e) {
    stage_fail(stage, "cannot parse " + path.string() + ": " + e.what());
  }
}

// Progress files are append-only, so a crash can tear the final line; that
// line is dropped on reload and the document is simply redone. Corruption
// anywhere else is a hard error.
std::vector<json> parse_jsonl_file(const fs::path& path) {
  std::vector<json> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t bad_line = 0;
  std::string bad_what;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (bad_line != 0)
      throw Error(Errc::io_error, path.string() + " line " +
                                      std::to_string(bad_line) + ": " + bad_what);
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      bad_line = line_no;
      bad_what = e.what();
    }
  }
  return out;
}

// Opens an append stream that always starts on a fresh line, even after a
// torn final line.
std::ofstream open_progress(const fs::path& path) {
  bool needs_newline = false;
  {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (in && in.tellg() > 0) {
      in.seekg(-1, std::ios::end);
      needs_newline = in.get() != '\n';
    }
  }
  std::ofstream out(path, std::ios::app);
  if (needs_newline) out << "\n";
  return out;
}

std::string safe_file_stem(const std::string& doc_id) {
  std::string s;
  bool changed = false;
  for (unsigned char c : doc_id) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.')
      s.push_back(static_cast<char>(c));
    else
      changed = true;
  }
  if (s.empty()) changed = true;
  if (changed) s += (s.empty() ? "" : "-") + sha256_hex(doc_id).substr(0, 8);
  return s;
}

// Run timestamp: DOCCLASS_RUN_TIMESTAMP (unix seconds) pins it for
// reproducible artifacts; otherwise the current time.
std::time_t run_timestamp() {
  if (const char* env = std::getenv("DOCCLASS_RUN_TIMESTAMP"); env && *env) {
    char* end = nullptr;
    long long v = std::strtoll(env, &end, 10);
    if (end && *end == '\0') return static_cast<std::time_t>(v);
    throw Error(Errc::config_error, "DOCCLASS_RUN_TIMESTAMP must be unix seconds");
  }
  return std::time(nullptr);
}

std::string iso8601_utc(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string compact_stamp(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

// meta.json: created once, then stages merge their records deterministically.
json load_meta(const RunPaths& run) {
  if (!fs::exists(run.meta())) return json::object();
  return json::parse(read_file_text(run.meta().string()));
}

void update_meta(const RunPaths& run, const AppConfig& cfg, const std::string& stage,
                 json stage_record) {
  json meta = load_meta(run);
  if (!meta.contains("created_at")) {
    std::time_t t = run_timestamp();
    meta["created_at"] = iso8601_utc(t);
    meta["run_id"] = compact_stamp(t) + "-" + cfg.config_digest.substr(0, 8);
  }
  meta["config_digest"] = cfg.config_digest;
  meta["stages"][stage] = std::move(stage_record);
  write_file_text(run.meta().string(), meta.dump(2) + "\n");
}

const ProviderConfig& pick_provider(const AppConfig& cfg, const std::string& flag_id,
                                    const std::string& default_id,
                                    const std::string& stage) {
  std::string id = !flag_id.empty() ? flag_id : default_id;
  if (id.empty()) stage_fail(stage, "no provider configured; pass --provider");
  return cfg.registry.require(id);
}

}  // namespace

ReportFormat parse_report_format(const std::string& s) {
  if (s == "table" || s == "text") return ReportFormat::text;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw Error(Errc::usage_error, "unknown format \"" + s + "\"");
}

AppConfig load_app_config(const std::string& path) {
  if (!fs::exists(path))
    throw Error(Errc::missing_file, "config not found: " + path);
  std::string text = read_file_text(path);

  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, "cannot parse config: " + std::string(e.what()));
  }

  AppConfig cfg;
  cfg.config_digest = sha256_hex(text);
  const fs::path base = fs::path(path).parent_path();

  cfg.raster.rasterizer_cmd = j.value("rasterizer_cmd", "");
  cfg.raster.dpi = j.value("dpi", 150);
  cfg.raster.max_dim = j.value("max_dim", 8192u);
  cfg.image_instruction = j.value("image_instruction", cfg.image_instruction);
  cfg.temperature = j.value("temperature", 0.0);
  cfg.embedding_provider = j.value("embedding_provider", "");
  cfg.chat_provider = j.value("chat_provider", "");

  std::string templates = j.value("templates_dir", "templates");
  fs::path tp(templates);
  cfg.templates_dir = tp.is_relative() ? (base / tp).string() : tp.string();

  if (j.contains("providers")) {
    for (const auto& p : j.at("providers")) {
      ProviderConfig pc;
      pc.provider_id = p.value("provider_id", "");
      pc.kind = parse_provider_kind(p.value("kind", "embedding"));
      pc.base_url = p.value("base_url", "");
      pc.model_name = p.value("model_name", "");
      pc.timeout_seconds = p.value("timeout", 30.0);
      pc.max_retries = p.value("max_retries", 2);
      pc.auth_token = p.value("auth_token", "");
      pc.family = p.value("family", "");
      pc.mock_dim = p.value("dim", std::size_t{64});
      pc.mock_scale = p.value("scale", 1.0);
      if (p.contains("rules")) {
        for (const auto& r : p.at("rules")) {
          MockRule rule;
          rule.match = r.value("match", "");
          rule.seed = r.value("seed", "");
          rule.spread = r.value("spread", 0.0);
          if (r.contains("dim")) rule.dim = r.at("dim").get<std::size_t>();
          rule.text = r.value("text", "");
          pc.rules.push_back(std::move(rule));
        }
      }
      validate_provider_config(pc);
      if (cfg.registry.providers.count(pc.provider_id))
        throw Error(Errc::config_error, "duplicate provider_id", pc.provider_id);
      cfg.registry.providers.emplace(pc.provider_id, std::move(pc));
    }
  }
  return cfg;
}

DatasetManifest load_run_manifest(const RunPaths& run) {
  if (!fs::exists(run.manifest()))
    throw Error(Errc::stage_error, "no ingested manifest found; run ingest first",
                "manifest");
  return load_manifest(run.manifest().string());
}

std::map<std::string, PageImage> load_pages(const RunPaths& run) {
  std::map<std::string, PageImage> pages;
  if (!fs::exists(run.pages_index()))
    throw Error(Errc::stage_error, "no rasterized pages found; run ingest first",
                "pages");
  for (const auto& rec : parse_jsonl_file(run.pages_index())) {
    std::string doc_id = rec.at("doc_id").get<std::string>();
    fs::path rel = rec.at("page_path").get<std::string>();
    auto bytes = read_file_bytes((run.out / rel).string());
    pages.emplace(std::move(doc_id), decode_png(bytes));
  }
  return pages;
}

std::map<std::string, EmbeddingVector> load_embeddings(const RunPaths& run) {
  std::map<std::string, EmbeddingVector> out;
  for (const auto& rec : parse_jsonl_file(run.embeddings()))
    out[rec.at("doc_id").get<std::string>()] = rec.at("vector").get<EmbeddingVector>();
  return out;
}

std::vector<Prediction> load_predictions(const RunPaths& run) {
  std::vector<Prediction> out;
  for (const auto& rec : parse_jsonl_file(run.predictions()))
    out.push_back(parse_prediction(rec.dump()));
  return out;
}

namespace {

void write_predictions_canonical(const RunPaths& run, std::vector<Prediction> preds,
                                 const DatasetManifest& manifest) {
  std::map<std::string, std::size_t> doc_order;
  for (std::size_t i = 0; i < manifest.documents.size(); ++i)
    doc_order[manifest.documents[i].doc_id] = i;
  std::stable_sort(preds.begin(), preds.end(),
                   [&](const Prediction& a, const Prediction& b) {
                     if (a.method != b.method) return a.method < b.method;
                     return doc_order.at(a.doc_id) < doc_order.at(b.doc_id);
                   });
  std::ostringstream out;
  for (const auto& p : preds) out << serialize_prediction(p) << "\n";
  write_file_text(run.predictions().string(), out.str());
}

}  // namespace

StageSummary stage_ingest(const AppConfig& cfg, const std::string& manifest_path,
                          const RunPaths& run, unsigned workers,
                          std::optional<std::uint32_t> max_dim) {
  DatasetManifest manifest = load_manifest(manifest_path);
  RasterConfig raster = cfg.raster;
  if (max_dim) raster.max_dim = *max_dim;

  rasterize_all(manifest, raster, workers);

  fs::create_directories(run.pages_dir());
  std::ostringstream index;
  for (const auto& doc : manifest.documents) {
    std::string rel = "pages/" + safe_file_stem(doc.doc_id) + ".png";
    auto png = encode_png(*doc.page);
    write_file_bytes((run.out / rel).string(), png);
    json rec;
    rec["doc_id"] = doc.doc_id;
    rec["page_path"] = rel;
    rec["width"] = doc.page->width;
    rec["height"] = doc.page->height;
    index << rec.dump() << "\n";
  }
  write_file_text(run.pages_index().string(), index.str());

  DatasetManifest stripped = manifest;  // persisted copy has no pixel payloads
  for (auto& d : stripped.documents) d.page.reset();
  save_manifest(stripped, run.manifest().string());

  update_meta(run, cfg, "ingest",
              json{{"manifest", fs::absolute(manifest_path).lexically_normal().string()},
                   {"documents", manifest.documents.size()},
                   {"classes", manifest.classes.size()},
                   {"max_dim", raster.max_dim},
                   {"dpi", raster.dpi}});

  StageSummary s;
  s.processed = manifest.documents.size();
  s.fresh = manifest.documents.size();
  s.note = "rasterized " + std::to_string(s.processed) + " first pages";
  return s;
}

StageSummary stage_embed(const AppConfig& cfg, const RunPaths& run,
                         const std::string& provider_id, unsigned workers) {
  DatasetManifest manifest = load_run_manifest(run);
  auto pages = load_pages(run);
  const ProviderConfig& pc =
      pick_provider(cfg, provider_id, cfg.embedding_provider, "embed");
  auto provider = make_embedding_provider(pc);

  auto done = load_embeddings(run);

  std::vector<const DocumentRecord*> todo;
  for (const auto& doc : manifest.documents) {
    if (done.count(doc.doc_id)) continue;
    if (!pages.count(doc.doc_id))
      stage_fail("embed", "no rasterized page for document " + doc.doc_id);
    todo.push_back(&doc);
  }

  // progress appends survive a mid-batch failure; the canonical rewrite at
  // the end restores manifest order
  std::ofstream progress = open_progress(run.embeddings());
  std::mutex progress_mutex;

  parallel_map_ordered<int>(todo.size(), workers, [&](std::size_t i) {
    const DocumentRecord& doc = *todo[i];
    EmbeddingVector v;
    try {
      v = provider->embed_image(pages.at(doc.doc_id), cfg.image_instruction);
    } catch (const Error& e) {
      throw Error(e.code(), e.message(), doc.doc_id);
    }
    json rec;
    rec["doc_id"] = doc.doc_id;
    rec["vector"] = v;
    std::lock_guard lock(progress_mutex);
    progress << rec.dump() << "\n";
    progress.flush();
    done[doc.doc_id] = std::move(v);
    return 0;
  });
  progress.close();

  std::size_t dim = manifest.documents.empty()
                        ? 0
                        : done.at(manifest.documents.front().doc_id).size();
  std::ostringstream out;
  for (const auto& doc : manifest.documents) {
    auto it = done.find(doc.doc_id);
    if (it == done.end()) stage_fail("embed", "missing embedding for " + doc.doc_id);
    if (it->second.size() != dim)
      throw Error(Errc::dimension_mismatch, "embedding dim drifted across documents",
                  doc.doc_id);
    json rec;
    rec["doc_id"] = doc.doc_id;
    rec["vector"] = it->second;
    out << rec.dump() << "\n";
  }
  write_file_text(run.embeddings().string(), out.str());

  update_meta(run, cfg, "embed",
              json{{"provider_id", pc.provider_id},
                   {"model", pc.model_name},
                   {"dim", dim}});

  StageSummary s;
  s.processed = manifest.documents.size();
  s.fresh = todo.size();
  s.cached = manifest.documents.size() - todo.size();
  s.note = "embedded " + std::to_string(s.processed) + " documents (" +
           std::to_string(s.fresh) + " new, " + std::to_string(s.cached) + " cached)";
  return s;
}

StageSummary stage_classify_embed(const AppConfig& cfg, const RunPaths& run,
                                  const std::string& provider_id) {
  DatasetManifest manifest = load_run_manifest(run);
  auto embeddings = load_embeddings(run);
  if (embeddings.empty())
    stage_fail("classify-embed", "no document embeddings found; run embed first");

  const ProviderConfig& pc =
      pick_provider(cfg, provider_id, cfg.embedding_provider, "classify-embed");
  auto provider = make_embedding_provider(pc);

  EmbeddingCache cache;
  cache.load(run.class_embeddings().string());
  std::uint64_t calls_before = provider->telemetry().calls.load();

  std::vector<ClassDefinition> defs;
  for (const auto& c : manifest.classes)
    defs.push_back({c.id, manifest.definitions.at(c.id), std::nullopt});
  defs = embed_class_definitions(std::move(defs), *provider, cache);
  cache.save(run.class_embeddings().string());

  std::vector<Prediction> fresh;
  for (const auto& doc : manifest.documents) {
    auto it = embeddings.find(doc.doc_id);
    if (it == embeddings.end())
      stage_fail("classify-embed", "no embedding for document " + doc.doc_id);
    Prediction p = similarity_vote(it->second, defs);
    p.doc_id = doc.doc_id;
    fresh.push_back(std::move(p));
  }

  auto preds = load_predictions(run);
  std::erase_if(preds, [](const Prediction& p) { return p.method == Method::embed_vote; });
  preds.insert(preds.end(), fresh.begin(), fresh.end());
  write_predictions_canonical(run, std::move(preds), manifest);

  update_meta(run, cfg, "classify-embed",
              json{{"provider_id", pc.provider_id}, {"model", pc.model_name}});

  StageSummary s;
  s.processed = fresh.size();
  s.fresh = provider->telemetry().calls.load() - calls_before;
  s.cached = manifest.classes.size() - s.fresh;
  s.note = "voted " + std::to_string(s.processed) + " documents (" +
           std::to_string(s.fresh) + " definition embeddings fetched, " +
           std::to_string(s.cached) + " cached)";
  return s;
}

StageSummary stage_classify_vlm(const AppConfig& cfg, const RunPaths& run,
                                const std::string& provider_id,
                                const std::string& template_name, unsigned workers) {
  DatasetManifest manifest = load_run_manifest(run);
  auto pages = load_pages(run);

  const ProviderConfig& pc =
      pick_provider(cfg, provider_id, cfg.chat_provider, "classify-vlm");
  auto provider = make_chat_provider(pc, cfg.temperature);

  fs::path template_path = fs::path(cfg.templates_dir) / (template_name + ".txt");
  PromptTemplate tmpl = load_prompt_template(template_path.string());
  RenderedPrompt prompt = render_prompt(tmpl, manifest);
  Method method = tmpl.name == "plus" ? Method::vlm_plus : Method::vlm_base;

  auto preds = load_predictions(run);
  std::set<std::string> already;
  for (const auto& p : preds)
    if (p.method == method) already.insert(p.doc_id);

  std::vector<const DocumentRecord*> todo;
  for (const auto& doc : manifest.documents)
    if (!already.count(doc.doc_id)) todo.push_back(&doc);

  std::ofstream progress = open_progress(run.predictions());
  std::mutex progress_mutex;
  std::vector<Prediction> fresh(todo.size());

  parallel_map_ordered<int>(todo.size(), workers, [&](std::size_t i) {
    DocumentRecord doc = *todo[i];
    doc.page = pages.at(doc.doc_id);
    Prediction p = classify_generative(doc, tmpl, prompt, manifest.classes, *provider);
    std::lock_guard lock(progress_mutex);
    progress << serialize_prediction(p) << "\n";
    progress.flush();
    fresh[i] = std::move(p);
    return 0;
  });
  progress.close();

  preds = load_predictions(run);  // includes the appended progress lines
  // canonical rewrite dedupes and orders
  std::set<std::pair<int, std::string>> seen;
  std::vector<Prediction> unique;
  for (auto& p : preds)
    if (seen.emplace(static_cast<int>(p.method), p.doc_id).second)
      unique.push_back(std::move(p));
  write_predictions_canonical(run, std::move(unique), manifest);

  std::uint64_t unparsed = 0;
  for (const auto& p : fresh)
    if (p.excluded) ++unparsed;

  update_meta(run, cfg, "classify-vlm",
              json{{"provider_id", pc.provider_id},
                   {"model", pc.model_name},
                   {"template", tmpl.name},
                   {"method", to_string(method)}});

  StageSummary s;
  s.processed = manifest.documents.size();
  s.fresh = todo.size();
  s.cached = manifest.documents.size() - todo.size();
  s.note = "classified " + std::to_string(s.processed) + " documents (" +
           std::to_string(s.fresh) + " new, " + std::to_string(s.cached) +
           " cached, " + std::to_string(unparsed) + " unparsed)";
  return s;
}

StageSummary stage_cluster_metrics(const AppConfig& cfg, const RunPaths& run) {
  DatasetManifest manifest = load_run_manifest(run);
  auto embeddings = load_embeddings(run);
  if (embeddings.empty())
    stage_fail("cluster-metrics", "no document embeddings found; run embed first");

  std::vector<LabeledEmbeddingSet::Item> items;
  for (const auto& doc : manifest.documents) {
    auto it = embeddings.find(doc.doc_id);
    if (it == embeddings.end())
      stage_fail("cluster-metrics", "no embedding for document " + doc.doc_id);
    items.push_back({doc.doc_id, doc.true_label, it->second});
  }

  ClusterQualityReport report = cluster_report(LabeledEmbeddingSet(std::move(items)));
  write_file_text(run.cluster_metrics().string(), serialize_cluster_report(report));

  update_meta(run, cfg, "cluster-metrics", json{{"documents", manifest.documents.size()}});

  StageSummary s;
  s.processed = manifest.documents.size();
  s.note = "cluster metrics over " + std::to_string(s.processed) + " embeddings";
  return s;
}

StageSummary stage_evaluate(const AppConfig& cfg, const RunPaths& run,
                            UnparsedPolicy policy) {
  DatasetManifest manifest = load_run_manifest(run);
  auto preds = load_predictions(run);
  if (preds.empty()) stage_fail("evaluate", "no predictions found");

  std::optional<ClusterQualityReport> cluster;
  if (fs::exists(run.cluster_metrics()))
    cluster = parse_cluster_report(read_file_text(run.cluster_metrics().string()));

  std::map<Method, std::vector<Prediction>> by_method;
  for (auto& p : preds) by_method[p.method].push_back(std::move(p));

  json out = json::object();
  for (const auto& [method, group] : by_method) {
    EvaluationReport report = evaluate(group, manifest, policy);
    if (method == Method::embed_vote && cluster) report.cluster_quality = cluster;
    ConfusionMatrix cm = confusion(group, manifest);

    json jr = json::parse(serialize_report(report));
    json jc;
    jc["labels"] = cm.labels;
    jc["counts"] = cm.counts;
    jc["unparsed_column"] = true;
    jr["confusion"] = jc;
    out[to_string(method)] = jr;
  }
  write_file_text(run.report().string(), out.dump(2) + "\n");

  update_meta(run, cfg, "evaluate",
              json{{"unparsed_policy", to_string(policy)},
                   {"methods", by_method.size()}});

  StageSummary s;
  s.processed = preds.size();
  s.note = "evaluated " + std::to_string(by_method.size()) + " method(s) over " +
           std::to_string(s.processed) + " predictions";
  return s;
}

namespace {

struct RunReportBundle {
  json meta;
  json report;
  std::optional<ClusterQualityReport> cluster;
};

RunReportBundle load_bundle(const RunPaths& run) {
  RunReportBundle b;
  b.meta = parse_json_file(run.meta(), "report");
  b.report = parse_json_file(run.report(), "report");
  if (fs::exists(run.cluster_metrics()))
    b.cluster = parse_cluster_report(read_file_text(run.cluster_metrics().string()));
  return b;
}

std::string stage_model(const json& meta, const char* stage, const char* fallback) {
  if (meta.contains("stages") && meta["stages"].contains(stage)) {
    std::string model = meta["stages"][stage].value("model", "");
    if (!model.empty()) return model;
    return meta["stages"][stage].value("provider_id", fallback);
  }
  return fallback;
}

json metric_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

json cluster_rows_json(const std::vector<ClusterTableRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json jr;
    jr["model"] = r.model;
    jr["intra"] = metric_or_inf(r.metrics.intra);
    jr["inter"] = metric_or_inf(r.metrics.inter);
    jr["ratio"] = metric_or_inf(r.metrics.ratio);
    jr["silhouette"] = metric_or_inf(r.metrics.silhouette);
    jr["davies_bouldin"] = metric_or_inf(r.metrics.davies_bouldin);
    jr["calinski_harabasz"] = metric_or_inf(r.metrics.calinski_harabasz);
    if (r.f1) jr["f1"] = *r.f1;
    if (r.accuracy) jr["accuracy"] = *r.accuracy;
    out.push_back(std::move(jr));
  }
  return out;
}

json eval_rows_json(const std::vector<EvalTableRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back(json{{"model", r.model},
                       {"config", r.config},
                       {"accuracy", r.accuracy},
                       {"macro_f1", r.macro_f1}});
  }
  return out;
}

}  // namespace

StageSummary stage_report(const AppConfig& cfg, const std::vector<RunPaths>& runs,
                          const RunPaths& dest, ReportFormat format) {
  if (runs.empty()) stage_fail("report", "no runs to report on");

  std::vector<ClusterTableRow> cluster_rows;
  std::vector<EvalTableRow> eval_rows;
  std::vector<PlotRecord> plot_records;

  for (const auto& run : runs) {
    RunReportBundle b = load_bundle(run);
    for (const auto& [method_name, jr] : b.report.items()) {
      Method method = parse_method(method_name);
      EvaluationReport report = parse_report(jr.dump());

      std::string model = method == Method::embed_vote
                              ? stage_model(b.meta, "embed", "embedding")
                              : stage_model(b.meta, "classify-vlm", "vlm");
      std::string family = method == Method::embed_vote ? "embedding" : "vlm";
      if (method != Method::embed_vote) {
        // fine-tuned endpoints may override their family in the registry
        std::string provider_id =
            b.meta.contains("stages") && b.meta["stages"].contains("classify-vlm")
                ? b.meta["stages"]["classify-vlm"].value("provider_id", "")
                : "";
        auto it = cfg.registry.providers.find(provider_id);
        if (it != cfg.registry.providers.end() && !it->second.family.empty())
          family = it->second.family;
      }

      eval_rows.push_back({model, method_name, report.accuracy, report.macro_f1});
      plot_records.push_back({family, model, method_name, report.accuracy,
                              report.macro_f1});
      if (method == Method::embed_vote && report.cluster_quality) {
        cluster_rows.push_back({model, *report.cluster_quality, report.macro_f1,
                                report.accuracy});
      }
    }
  }

  std::string table;
  if (format == ReportFormat::json) {
    json out;
    out["cluster"] = cluster_rows_json(cluster_rows);
    out["eval"] = eval_rows_json(eval_rows);
    table = out.dump(2) + "\n";
  } else {
    TableFormat tf = format == ReportFormat::csv ? TableFormat::csv : TableFormat::text;
    if (!cluster_rows.empty()) table += render_table(cluster_rows, tf);
    if (!eval_rows.empty()) {
      if (!table.empty()) table += "\n";
      table += render_table(eval_rows, tf);
    }
  }
  fs::create_directories(dest.out);
  write_file_text(dest.table(format).string(), table);
  write_file_text(dest.plot().string(), emit_plot_data(plot_records));

  StageSummary s;
  s.processed = eval_rows.size();
  s.note = table;
  return s;
}

std::string render_rows_file(const std::string& rows_path, ReportFormat format) {
  json j = parse_json_file(rows_path, "report");
  std::string type = j.value("type", "");
  if (!j.contains("rows") || !j["rows"].is_array())
    throw Error(Errc::usage_error, "rows file needs a \"rows\" array");

  if (type == "cluster") {
    std::vector<ClusterTableRow> rows;
    for (const auto& r : j["rows"]) {
      ClusterTableRow row;
      row.model = r.value("model", "");
      row.metrics.intra = r.value("intra", 0.0);
      row.metrics.inter = r.value("inter", 0.0);
      row.metrics.ratio = r.value("ratio", 0.0);
      row.metrics.silhouette = r.value("silhouette", 0.0);
      row.metrics.davies_bouldin = r.value("davies_bouldin", 0.0);
      row.metrics.calinski_harabasz = r.value("calinski_harabasz", 0.0);
      if (r.contains("f1")) row.f1 = r.at("f1").get<double>();
      if (r.contains("accuracy")) row.accuracy = r.at("accuracy").get<double>();
      rows.push_back(std::move(row));
    }
    if (format == ReportFormat::json)
      return json{{"cluster", cluster_rows_json(rows)}}.dump(2) + "\n";
    return render_table(rows, format == ReportFormat::csv ? TableFormat::csv
                                                          : TableFormat::text);
  }
  if (type == "eval") {
    std::vector<EvalTableRow> rows;
    for (const auto& r : j["rows"]) {
      rows.push_back({r.value("model", ""), r.value("config", ""),
                      r.value("accuracy", 0.0), r.value("macro_f1", 0.0)});
    }
    if (format == ReportFormat::json)
      return json{{"eval", eval_rows_json(rows)}}.dump(2) + "\n";
    return render_table(rows, format == ReportFormat::csv ? TableFormat::csv
                                                          : TableFormat::text);
  }
  throw Error(Errc::usage_error, "rows file \"type\" must be cluster or eval");
}

}  // namespace docclass
