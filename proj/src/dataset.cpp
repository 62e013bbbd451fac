#include "docclass/dataset.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docclass/digest.hpp"
#include "docclass/errors.hpp"
#include "docclass/parallel.hpp"

namespace fs = std::filesystem;

namespace docclass {

std::string to_string(DocFormat f) {
  switch (f) {
    case DocFormat::pdf: return "pdf";
    case DocFormat::tiff: return "tiff";
    case DocFormat::png: return "png";
    case DocFormat::jpg: return "jpg";
  }
  return "png";
}

DocFormat parse_doc_format(const std::string& s) {
  if (s == "pdf") return DocFormat::pdf;
  if (s == "tiff" || s == "tif") return DocFormat::tiff;
  if (s == "png") return DocFormat::png;
  if (s == "jpg" || s == "jpeg") return DocFormat::jpg;
  throw Error(Errc::unsupported_format, "unknown document format \"" + s + "\"");
}

bool DatasetManifest::has_class(const std::string& id) const {
  return find_class(id) != nullptr;
}

const ClassLabel* DatasetManifest::find_class(const std::string& id) const {
  for (const auto& c : classes)
    if (c.id == id) return &c;
  return nullptr;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_error, "short write to " + path);
}

void write_file_text(const std::string& path, const std::string& text) {
  write_file_bytes(path, std::span<const std::uint8_t>(
                             reinterpret_cast<const std::uint8_t*>(text.data()),
                             text.size()));
}

std::string read_file_text(const std::string& path) {
  auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(Errc::malformed_manifest, "line " + std::to_string(line) + ": " + what);
}

std::string require_string(const nlohmann::json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string() || it->get<std::string>().empty())
    malformed(line, std::string("missing or empty field \"") + field + "\"");
  return it->get<std::string>();
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  if (!fs::exists(path))
    throw Error(Errc::missing_file, "manifest not found: " + path);
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "cannot open manifest: " + path);

  const fs::path base = fs::path(path).parent_path();
  DatasetManifest m;
  bool saw_header = false;
  std::set<std::string> doc_ids;
  std::string raw;
  std::size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      malformed(line_no, e.what());
    }
    if (!obj.is_object()) malformed(line_no, "record is not an object");

    if (!saw_header) {
      if (!obj.contains("classes") || !obj["classes"].is_array())
        malformed(line_no, "header must carry a \"classes\" array");
      for (const auto& c : obj["classes"]) {
        ClassLabel label;
        label.id = require_string(c, "id", line_no);
        label.display_name = c.value("display_name", label.id);
        if (m.has_class(label.id))
          malformed(line_no, "duplicate class id \"" + label.id + "\"");
        std::string definition = c.value("definition", "");
        if (definition.empty()) definition = label.display_name;
        m.definitions[label.id] = definition;
        m.classes.push_back(std::move(label));
      }
      if (m.classes.empty()) malformed(line_no, "header lists no classes");
      saw_header = true;
      continue;
    }

    DocumentRecord rec;
    rec.doc_id = require_string(obj, "doc_id", line_no);
    rec.source_path = require_string(obj, "path", line_no);
    try {
      rec.format = parse_doc_format(require_string(obj, "format", line_no));
    } catch (const Error&) {
      malformed(line_no, "bad \"format\" value");
    }
    rec.true_label = require_string(obj, "label", line_no);

    if (!doc_ids.insert(rec.doc_id).second)
      throw Error(Errc::duplicate_doc_id, "document id appears twice", rec.doc_id);
    if (!m.has_class(rec.true_label))
      throw Error(Errc::unknown_label,
                  "label \"" + rec.true_label + "\" not in manifest classes",
                  rec.doc_id);

    fs::path p(rec.source_path);
    if (p.is_relative()) rec.source_path = (base / p).lexically_normal().string();
    m.documents.push_back(std::move(rec));
  }

  if (!saw_header)
    throw Error(Errc::malformed_manifest, "manifest has no header record");
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ostringstream out;
  nlohmann::json header;
  header["classes"] = nlohmann::json::array();
  for (const auto& c : manifest.classes) {
    nlohmann::json jc;
    jc["id"] = c.id;
    jc["display_name"] = c.display_name;
    jc["definition"] = manifest.definitions.count(c.id)
                           ? manifest.definitions.at(c.id)
                           : c.display_name;
    header["classes"].push_back(jc);
  }
  out << header.dump() << "\n";
  for (const auto& d : manifest.documents) {
    nlohmann::json jd;
    jd["doc_id"] = d.doc_id;
    jd["path"] = d.source_path;
    jd["format"] = to_string(d.format);
    jd["label"] = d.true_label;
    out << jd.dump() << "\n";
  }
  write_file_text(path, out.str());
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out.push_back(c);
  }
  out += "'";
  return out;
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
  std::size_t pos;
  while ((pos = tmpl.find(key)) != std::string::npos)
    tmpl.replace(pos, key.size(), value);
  return tmpl;
}

std::string temp_png_path() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  std::ostringstream name;
  name << "docclass-raster-" << std::hex << rd() << "-" << counter.fetch_add(1)
       << ".png";
  return (fs::temp_directory_path() / name.str()).string();
}

// Runs the external rasterizer. With an {output} placeholder the PNG is read
// from a temp file; otherwise it is read from the command's stdout.
std::vector<std::uint8_t> run_rasterizer(const RasterConfig& config,
                                         const std::string& input, int page) {
  if (config.rasterizer_cmd.empty())
    throw Error(Errc::rasterizer_unavailable,
                "no rasterizer_cmd configured for PDF input");

  std::string cmd = config.rasterizer_cmd;
  const bool to_file = cmd.find("{output}") != std::string::npos;
  std::string out_path;
  if (to_file) {
    out_path = temp_png_path();
    cmd = substitute(cmd, "{output}", shell_quote(out_path));
  }
  cmd = substitute(cmd, "{input}", shell_quote(input));
  cmd = substitute(cmd, "{page}", std::to_string(page));
  cmd = substitute(cmd, "{dpi}", std::to_string(config.dpi));

  std::vector<std::uint8_t> png;
  int status;
  if (to_file) {
    status = std::system(cmd.c_str());
  } else {
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
      throw Error(Errc::rasterizer_unavailable, "cannot spawn rasterizer: " + cmd);
    std::uint8_t buf[16384];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
      png.insert(png.end(), buf, buf + n);
    status = pclose(pipe);
  }

  int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (exit_code == 127) {
    if (to_file) std::remove(out_path.c_str());
    throw Error(Errc::rasterizer_unavailable, "rasterizer command not found: " + cmd);
  }
  if (exit_code != 0) {
    if (to_file) std::remove(out_path.c_str());
    throw Error(Errc::corrupt_document,
                "rasterizer exited " + std::to_string(exit_code) + " for " + input);
  }
  if (to_file) {
    png = read_file_bytes(out_path);
    std::remove(out_path.c_str());
  }
  if (png.empty())
    throw Error(Errc::corrupt_document, "rasterizer produced no output for " + input);
  return png;
}

}  // namespace

PageImage rasterize_first_page(const DocumentRecord& record, const RasterConfig& config) {
  switch (record.format) {
    case DocFormat::pdf: {
      auto png = run_rasterizer(config, record.source_path, 1);
      return decode_png(png);
    }
    case DocFormat::png:
      return decode_png(read_file_bytes(record.source_path));
    case DocFormat::jpg:
      return decode_jpeg(read_file_bytes(record.source_path));
    case DocFormat::tiff:
      return decode_tiff(read_file_bytes(record.source_path));
  }
  throw Error(Errc::unsupported_format, "unhandled document format");
}

void rasterize_all(DatasetManifest& manifest, const RasterConfig& config, unsigned workers) {
  auto pages = parallel_map_ordered<PageImage>(
      manifest.documents.size(), workers, [&](std::size_t i) {
        const auto& rec = manifest.documents[i];
        try {
          return cap_resize(rasterize_first_page(rec, config), config.max_dim);
        } catch (const Error& e) {
          throw Error(e.code(), e.message(), rec.doc_id);
        }
      });
  for (std::size_t i = 0; i < pages.size(); ++i)
    manifest.documents[i].page = std::move(pages[i]);
}

}  // namespace docclass
