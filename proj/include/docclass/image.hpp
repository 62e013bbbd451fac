#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace docclass {

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct PageImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;

  bool empty() const { return width == 0 || height == 0; }
  std::size_t byte_size() const { return pixels.size(); }
};

struct Dims {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  bool operator==(const Dims&) const = default;
};

// The resize law, on dimensions alone: unchanged when max(w,h) <= max_dim;
// otherwise the long side becomes max_dim and the short side is
// round-half-up(side * max_dim / max_side), clamped to >= 1.
Dims capped_dims(std::uint32_t width, std::uint32_t height, std::uint32_t max_dim);

// Applies the law to pixels. Below-cap images are returned unchanged with no
// resampling; oversized ones are downscaled with an area-average filter.
PageImage cap_resize(const PageImage& image, std::uint32_t max_dim = 8192);

// Area-average resample to explicit target dims (downscale only in practice).
PageImage resize_area(const PageImage& image, std::uint32_t out_w, std::uint32_t out_h);

// Codecs. Grayscale and paletted inputs are expanded to RGB; alpha is
// composited over white. TIFF decoding reads frame 0 of multi-frame files.
PageImage decode_png(std::span<const std::uint8_t> bytes);
PageImage decode_jpeg(std::span<const std::uint8_t> bytes);
PageImage decode_tiff(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const PageImage& image);
std::vector<std::uint8_t> encode_jpeg(const PageImage& image, int quality = 90);
std::vector<std::uint8_t> encode_tiff(const PageImage& image);

// Mean channel values, rounded half up.
struct RgbMean {
  std::uint8_t r = 0, g = 0, b = 0;
};
RgbMean mean_color(const PageImage& image);

// Stable text key the mock providers match rules against:
//   "image <w>x<h> avgq=<r>.<g>.<b> sha256=<first 16 hex>"
// avgq buckets each mean channel into eight levels so lossy codecs cannot
// perturb the key.
std::string image_key(const PageImage& image, const std::string& instruction);

}  // namespace docclass
