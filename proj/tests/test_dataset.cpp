#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "docclass/dataset.hpp"
#include "docclass/errors.hpp"

using namespace docclass;
namespace fs = std::filesystem;

namespace {

std::string root() {
  const char* r = std::getenv("DOCCLASS_ROOT");
  REQUIRE(r != nullptr);
  return r;
}

fs::path scratch_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("docclass-dataset-" + std::to_string(::getpid()) + "-" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string header_two_classes() {
  return R"({"classes":[{"id":"geology","display_name":"Geology","definition":"rocks and strata"},{"id":"petrophysics","display_name":"Petrophysics"}]})"
         "\n";
}

fs::path write_manifest(const fs::path& dir, const std::string& content) {
  fs::path p = dir / "manifest.jsonl";
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST_CASE("load_manifest happy path preserves order and applies fallbacks") {
  auto dir = scratch_dir();
  auto path = write_manifest(
      dir, header_two_classes() +
               R"({"doc_id":"d1","path":"docs/a.png","format":"png","label":"geology"})" "\n" +
               R"({"doc_id":"d2","path":"docs/b.tiff","format":"tiff","label":"petrophysics"})" "\n" +
               R"({"doc_id":"d3","path":"/abs/c.pdf","format":"pdf","label":"geology"})" "\n");

  DatasetManifest m = load_manifest(path.string());
  CHECK(m.classes.size() == 2);
  CHECK(m.documents.size() == 3);
  CHECK(m.documents[0].doc_id == "d1");
  CHECK(m.documents[2].doc_id == "d3");
  CHECK(m.documents[1].format == DocFormat::tiff);
  // relative paths resolve against the manifest directory
  CHECK(m.documents[0].source_path == (dir / "docs/a.png").lexically_normal().string());
  CHECK(m.documents[2].source_path == "/abs/c.pdf");
  CHECK(m.definitions.at("geology") == "rocks and strata");
  CHECK(m.definitions.at("petrophysics") == "Petrophysics");  // display_name fallback
}

TEST_CASE("load_manifest error paths") {
  auto dir = scratch_dir();

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_manifest((dir / "nope.jsonl").string()), Error);
    try {
      load_manifest((dir / "nope.jsonl").string());
    } catch (const Error& e) {
      CHECK(e.code() == Errc::missing_file);
    }
  }

  SUBCASE("unknown label reports the document") {
    auto path = write_manifest(
        dir, header_two_classes() +
                 R"({"doc_id":"d7","path":"x.png","format":"png","label":"geoph"})" "\n");
    try {
      load_manifest(path.string());
      FAIL("expected UnknownLabel");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unknown_label);
      CHECK(e.context() == "d7");
    }
  }

  SUBCASE("duplicate doc id reports the document") {
    auto path = write_manifest(
        dir, header_two_classes() +
                 R"({"doc_id":"d1","path":"x.png","format":"png","label":"geology"})" "\n" +
                 R"({"doc_id":"d1","path":"y.png","format":"png","label":"geology"})" "\n");
    try {
      load_manifest(path.string());
      FAIL("expected DuplicateDocId");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::duplicate_doc_id);
      CHECK(e.context() == "d1");
    }
  }

  SUBCASE("malformed JSON reports the line") {
    auto path = write_manifest(dir, header_two_classes() + "{not json\n");
    try {
      load_manifest(path.string());
      FAIL("expected MalformedManifest");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::malformed_manifest);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }

  SUBCASE("bad format value reports the field") {
    auto path = write_manifest(
        dir, header_two_classes() +
                 R"({"doc_id":"d1","path":"x.bmp","format":"bmp","label":"geology"})" "\n");
    CHECK_THROWS_AS(load_manifest(path.string()), Error);
  }

  SUBCASE("missing required field") {
    auto path = write_manifest(
        dir, header_two_classes() + R"({"doc_id":"d1","format":"png","label":"geology"})" "\n");
    try {
      load_manifest(path.string());
      FAIL("expected MalformedManifest");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::malformed_manifest);
      CHECK(std::string(e.what()).find("path") != std::string::npos);
    }
  }

  SUBCASE("duplicate class id") {
    auto path = write_manifest(
        dir,
        R"({"classes":[{"id":"geology"},{"id":"geology"}]})" "\n");
    CHECK_THROWS_AS(load_manifest(path.string()), Error);
  }

  SUBCASE("no header") {
    auto path = write_manifest(
        dir, R"({"doc_id":"d1","path":"x.png","format":"png","label":"geology"})" "\n");
    CHECK_THROWS_AS(load_manifest(path.string()), Error);
  }
}

TEST_CASE("save then load is the identity on the data model") {
  auto dir = scratch_dir();
  auto path = write_manifest(
      dir, header_two_classes() +
               R"({"doc_id":"d1","path":"docs/a.png","format":"png","label":"geology"})" "\n" +
               R"({"doc_id":"d2","path":"/abs/b.jpg","format":"jpg","label":"petrophysics"})" "\n");
  DatasetManifest m1 = load_manifest(path.string());

  fs::path saved = dir / "saved.jsonl";
  save_manifest(m1, saved.string());
  DatasetManifest m2 = load_manifest(saved.string());

  REQUIRE(m2.documents.size() == m1.documents.size());
  CHECK(m2.classes == m1.classes);
  CHECK(m2.definitions == m1.definitions);
  for (std::size_t i = 0; i < m1.documents.size(); ++i) {
    CHECK(m2.documents[i].doc_id == m1.documents[i].doc_id);
    CHECK(m2.documents[i].source_path == m1.documents[i].source_path);
    CHECK(m2.documents[i].format == m1.documents[i].format);
    CHECK(m2.documents[i].true_label == m1.documents[i].true_label);
  }

  // a second round trip is byte-stable
  fs::path saved2 = dir / "saved2.jsonl";
  save_manifest(m2, saved2.string());
  CHECK(read_file_text(saved.string()) == read_file_text(saved2.string()));
}

TEST_CASE("rasterize_first_page decodes raster formats in-process") {
  RasterConfig cfg;
  std::string fx = root() + "/tests/fixtures/";

  DocumentRecord png{"p1", fx + "rgb_800x600.png", DocFormat::png, "geology", {}};
  PageImage page = rasterize_first_page(png, cfg);
  CHECK(page.width == 800);
  CHECK(page.height == 600);

  DocumentRecord jpg{"j1", fx + "rgb_96x64.jpg", DocFormat::jpg, "geology", {}};
  CHECK(rasterize_first_page(jpg, cfg).width == 96);

  DocumentRecord tif{"t1", fx + "multi_40x30.tiff", DocFormat::tiff, "geology", {}};
  PageImage frame0 = rasterize_first_page(tif, cfg);
  CHECK(frame0.width == 40);   // frame 0, not the larger later frames
  CHECK(frame0.pixels[2] == 255);

  DocumentRecord bad{"b1", fx + "corrupt.bin", DocFormat::png, "geology", {}};
  CHECK_THROWS_AS(rasterize_first_page(bad, cfg), Error);

  DocumentRecord missing{"m1", fx + "absent.png", DocFormat::png, "geology", {}};
  try {
    rasterize_first_page(missing, cfg);
    FAIL("expected MissingFile");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_file);
  }
}

TEST_CASE("pdf rasterization goes through the external command") {
  auto dir = scratch_dir();
  std::string fake = root() + "/tests/fixtures/fake_rasterizer.sh";
  fs::path log = dir / "raster.log";
  setenv("FAKE_RASTER_LOG", log.string().c_str(), 1);
  unsetenv("FAKE_RASTER_FAIL");

  DocumentRecord pdf{"doc9", "/data/report.pdf", DocFormat::pdf, "geology", {}};

  SUBCASE("stdout mode") {
    RasterConfig cfg;
    cfg.rasterizer_cmd = "sh " + fake + " {input} {page} {dpi}";
    cfg.dpi = 200;
    PageImage page = rasterize_first_page(pdf, cfg);
    CHECK(page.width == 800);
    std::string logged = read_file_text(log.string());
    CHECK(logged.find("input=/data/report.pdf") != std::string::npos);
    CHECK(logged.find("page=1") != std::string::npos);  // first page only
    CHECK(logged.find("dpi=200") != std::string::npos);
  }

  SUBCASE("output-file mode") {
    RasterConfig cfg;
    cfg.rasterizer_cmd = "sh " + fake + " {input} {page} {dpi} {output}";
    PageImage page = rasterize_first_page(pdf, cfg);
    CHECK(page.height == 600);
    CHECK(read_file_text(log.string()).find("output=/") != std::string::npos);
  }

  SUBCASE("no rasterizer configured") {
    RasterConfig cfg;  // empty rasterizer_cmd
    try {
      rasterize_first_page(pdf, cfg);
      FAIL("expected RasterizerUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::rasterizer_unavailable);
    }
  }

  SUBCASE("rasterizer exits nonzero") {
    setenv("FAKE_RASTER_FAIL", "1", 1);
    RasterConfig cfg;
    cfg.rasterizer_cmd = "sh " + fake + " {input} {page} {dpi}";
    try {
      rasterize_first_page(pdf, cfg);
      FAIL("expected CorruptDocument");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::corrupt_document);
    }
    unsetenv("FAKE_RASTER_FAIL");
  }

  SUBCASE("rasterizer binary not found") {
    RasterConfig cfg;
    cfg.rasterizer_cmd = "no-such-rasterizer-binary {input} {page} {dpi}";
    try {
      rasterize_first_page(pdf, cfg);
      FAIL("expected RasterizerUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::rasterizer_unavailable);
    }
  }

  unsetenv("FAKE_RASTER_LOG");
}

TEST_CASE("rasterize_all runs in parallel, caps sizes, and keeps order") {
  auto dir = scratch_dir();
  std::string fx = root() + "/tests/fixtures/";
  std::string content = header_two_classes();
  for (int i = 0; i < 6; ++i) {
    content += R"({"doc_id":"doc)" + std::to_string(i) + R"(","path":")" + fx +
               R"(rgb_800x600.png","format":"png","label":"geology"})" "\n";
  }
  DatasetManifest m = load_manifest(write_manifest(dir, content).string());

  RasterConfig cfg;
  cfg.max_dim = 100;  // forces 800x600 -> 100x75
  rasterize_all(m, cfg, 4);

  for (int i = 0; i < 6; ++i) {
    REQUIRE(m.documents[i].page.has_value());
    CHECK(m.documents[i].doc_id == "doc" + std::to_string(i));
    CHECK(m.documents[i].page->width == 100);
    CHECK(m.documents[i].page->height == 75);
  }

  // a failing document surfaces with its doc_id attached
  m.documents[3].source_path = fx + "corrupt.bin";
  try {
    rasterize_all(m, cfg, 4);
    FAIL("expected CorruptDocument");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::corrupt_document);
    CHECK(e.context() == "doc3");
  }
}
