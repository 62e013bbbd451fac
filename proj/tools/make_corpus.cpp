// Regenerates the bundled synthetic corpus: 8 classes x 3 solid-pattern
// documents in mixed raster formats, plus the matching manifest. The class
// colors sit at the centers of the mock providers' avgq buckets so lossy
// JPEG round-trips cannot move a document across rules.
#include <array>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docclass/dataset.hpp"
#include "docclass/image.hpp"

using namespace docclass;
namespace fs = std::filesystem;

namespace {

struct ClassSpec {
  const char* id;
  const char* display;
  const char* definition;
  std::array<std::uint8_t, 3> color;
};

const ClassSpec kClasses[] = {
    {"drilling", "Drilling Engineering",
     "Drilling Engineering: documents on well planning, bit programs, mud systems, "
     "casing design, daily drilling reports, stuck-pipe incidents, and rig operations "
     "summaries.",
     {176, 16, 176}},
    {"geochemistry", "Geochemistry",
     "Geochemistry: documents covering chemical analysis of rocks and fluids, "
     "source-rock richness, kerogen typing, vitrinite reflectance, isotope studies, "
     "and laboratory assay reports.",
     {16, 176, 16}},
    {"geology", "Geology",
     "Geology: documents about rock formations, stratigraphy, lithology, structural "
     "interpretation, core descriptions, depositional environments, and regional "
     "studies, including maps and cross-sections.",
     {176, 16, 16}},
    {"geophysics", "Geophysics",
     "Geophysics: documents about seismic acquisition and processing, velocity "
     "models, gravity and magnetic surveys, seismic interpretation and attribute "
     "analysis, including survey planning reports.",
     {16, 16, 176}},
    {"petrophysics", "Petrophysics",
     "Petrophysics: documents centered on well log analysis, porosity and "
     "permeability estimation, water saturation, shale volume, log quality control, "
     "and integrated formation evaluation plots.",
     {176, 176, 16}},
    {"production", "Production Engineering",
     "Production Engineering: documents about artificial lift, well performance, "
     "production allocation, flow assurance, surface facilities, and monthly "
     "production reports.",
     {112, 112, 112}},
    {"reservoir", "Reservoir Engineering",
     "Reservoir Engineering: documents about material balance, reserves estimation, "
     "decline curve analysis, simulation models, pressure transient tests, and field "
     "development plans.",
     {16, 176, 176}},
    {"welllog", "Well Logging",
     "Well Logging: documents that are primarily raw or composite wireline and LWD "
     "log displays, including header sheets, curve tracks, and acquisition parameter "
     "listings.",
     {240, 144, 16}},
};

PageImage make_page(std::uint32_t w, std::uint32_t h, std::array<std::uint8_t, 3> color,
                    unsigned variant) {
  PageImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(std::size_t(w) * h * 3);
  for (std::uint32_t y = 0; y < h; ++y) {
    bool stripe = (y % 16) == (variant * 5) % 16;
    for (std::uint32_t x = 0; x < w; ++x) {
      std::uint8_t* px = img.pixels.data() + (std::size_t(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) {
        unsigned v = color[c];
        if (stripe) v = v * 23 / 25;
        px[c] = static_cast<std::uint8_t>(v);
      }
    }
  }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = argc > 1 ? argv[1] : "assets/corpus";
  fs::create_directories(out / "docs");

  nlohmann::json header;
  header["classes"] = nlohmann::json::array();
  for (const auto& cls : kClasses) {
    header["classes"].push_back({{"id", cls.id},
                                 {"display_name", cls.display},
                                 {"definition", cls.definition}});
  }

  std::string manifest = header.dump() + "\n";
  for (const auto& cls : kClasses) {
    struct Variant {
      std::uint32_t w, h;
      const char* ext;
      const char* format;
    };
    const Variant variants[] = {
        {220, 160, "png", "png"}, {320, 240, "tiff", "tiff"}, {256, 256, "jpg", "jpg"}};
    for (unsigned v = 0; v < 3; ++v) {
      PageImage page = make_page(variants[v].w, variants[v].h, cls.color, v);
      std::string file = std::string(cls.id) + "-0" + std::to_string(v + 1) + "." +
                         variants[v].ext;
      std::vector<std::uint8_t> bytes;
      if (v == 0)
        bytes = encode_png(page);
      else if (v == 1)
        bytes = encode_tiff(page);
      else
        bytes = encode_jpeg(page, 90);
      write_file_bytes((out / "docs" / file).string(), bytes);

      nlohmann::json rec;
      rec["doc_id"] = std::string(cls.id) + "-0" + std::to_string(v + 1);
      rec["path"] = "docs/" + file;
      rec["format"] = variants[v].format;
      rec["label"] = cls.id;
      manifest += rec.dump() + "\n";
    }
  }
  write_file_text((out / "manifest.jsonl").string(), manifest);
  std::cout << "wrote " << (sizeof kClasses / sizeof kClasses[0]) * 3
            << " documents under " << out << "\n";
  return 0;
}
