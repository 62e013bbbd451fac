#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docclass/image.hpp"

namespace docclass {

enum class DocFormat { pdf, tiff, png, jpg };

std::string to_string(DocFormat f);
DocFormat parse_doc_format(const std::string& s);

struct ClassLabel {
  std::string id;            // short stable identifier, unique, case-sensitive
  std::string display_name;  // human-readable name
  bool operator==(const ClassLabel&) const = default;
};

struct DocumentRecord {
  std::string doc_id;
  std::string source_path;
  DocFormat format = DocFormat::png;
  std::string true_label;
  std::optional<PageImage> page;  // populated after rasterization
};

struct DatasetManifest {
  std::vector<ClassLabel> classes;
  std::vector<DocumentRecord> documents;
  std::map<std::string, std::string> definitions;  // class id -> definition

  bool has_class(const std::string& id) const;
  const ClassLabel* find_class(const std::string& id) const;
};

struct RasterConfig {
  std::string rasterizer_cmd;  // external PDF rasterizer, {input} {page} {dpi} [{output}]
  int dpi = 150;
  std::uint32_t max_dim = 8192;
};

// Manifest file format: UTF-8 line-delimited JSON. The first record is a
// header object {"classes": [{"id","display_name","definition"}, ...]};
// each following line is {"doc_id","path","format","label"}. A class whose
// definition is omitted or empty falls back to its display_name. Relative
// document paths resolve against the manifest's directory.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// First page only: PDFs go through the configured external rasterizer
// (page 1 at config.dpi), raster formats decode in-process, multi-frame
// TIFFs use frame 0. The size cap is applied separately via cap_resize.
PageImage rasterize_first_page(const DocumentRecord& record, const RasterConfig& config);

// Rasterizes and caps every document with a bounded worker pool; pages are
// stored back in manifest order.
void rasterize_all(DatasetManifest& manifest, const RasterConfig& config, unsigned workers);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::string& path, const std::string& text);
std::string read_file_text(const std::string& path);

}  // namespace docclass
