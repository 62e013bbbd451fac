#include "docclass/image.hpp"

#include <algorithm>
#include <cmath>

#include "docclass/digest.hpp"
#include "docclass/errors.hpp"

namespace docclass {

Dims capped_dims(std::uint32_t width, std::uint32_t height, std::uint32_t max_dim) {
  if (width == 0 || height == 0)
    throw Error(Errc::corrupt_document, "image with zero dimension");
  std::uint32_t max_side = std::max(width, height);
  if (max_side <= max_dim) return {width, height};

  auto scale_side = [&](std::uint32_t side) -> std::uint32_t {
    // round-half-up(side * max_dim / max_side) in exact integer arithmetic
    std::uint64_t num = 2ULL * side * max_dim + max_side;
    std::uint64_t den = 2ULL * max_side;
    std::uint64_t scaled = num / den;
    return static_cast<std::uint32_t>(std::max<std::uint64_t>(scaled, 1));
  };

  if (width >= height) return {max_dim, scale_side(height)};
  return {scale_side(width), max_dim};
}

PageImage resize_area(const PageImage& image, std::uint32_t out_w, std::uint32_t out_h) {
  if (image.empty())
    throw Error(Errc::corrupt_document, "resize of empty image");
  PageImage out;
  out.width = out_w;
  out.height = out_h;
  out.pixels.resize(std::size_t(out_w) * out_h * 3);

  const double sx = static_cast<double>(image.width) / out_w;
  const double sy = static_cast<double>(image.height) / out_h;

  for (std::uint32_t oy = 0; oy < out_h; ++oy) {
    const double y0 = oy * sy;
    const double y1 = (oy + 1) * sy;
    const std::uint32_t iy0 = static_cast<std::uint32_t>(y0);
    const std::uint32_t iy1 = std::min<std::uint32_t>(
        image.height - 1, static_cast<std::uint32_t>(std::ceil(y1)) - 1);
    for (std::uint32_t ox = 0; ox < out_w; ++ox) {
      const double x0 = ox * sx;
      const double x1 = (ox + 1) * sx;
      const std::uint32_t ix0 = static_cast<std::uint32_t>(x0);
      const std::uint32_t ix1 = std::min<std::uint32_t>(
          image.width - 1, static_cast<std::uint32_t>(std::ceil(x1)) - 1);

      double acc[3] = {0.0, 0.0, 0.0};
      double area = 0.0;
      for (std::uint32_t iy = iy0; iy <= iy1; ++iy) {
        const double wy = std::min<double>(y1, iy + 1.0) - std::max<double>(y0, iy);
        if (wy <= 0.0) continue;
        const std::uint8_t* row = image.pixels.data() + std::size_t(iy) * image.width * 3;
        for (std::uint32_t ix = ix0; ix <= ix1; ++ix) {
          const double wx = std::min<double>(x1, ix + 1.0) - std::max<double>(x0, ix);
          if (wx <= 0.0) continue;
          const double w = wx * wy;
          const std::uint8_t* px = row + std::size_t(ix) * 3;
          acc[0] += w * px[0];
          acc[1] += w * px[1];
          acc[2] += w * px[2];
          area += w;
        }
      }
      std::uint8_t* dst = out.pixels.data() + (std::size_t(oy) * out_w + ox) * 3;
      for (int c = 0; c < 3; ++c) {
        double v = acc[c] / area;
        dst[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

PageImage cap_resize(const PageImage& image, std::uint32_t max_dim) {
  Dims target = capped_dims(image.width, image.height, max_dim);
  if (target.width == image.width && target.height == image.height) return image;
  return resize_area(image, target.width, target.height);
}

RgbMean mean_color(const PageImage& image) {
  if (image.empty()) return {};
  std::uint64_t acc[3] = {0, 0, 0};
  const std::size_t n = std::size_t(image.width) * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    acc[0] += image.pixels[3 * i];
    acc[1] += image.pixels[3 * i + 1];
    acc[2] += image.pixels[3 * i + 2];
  }
  auto mean = [n](std::uint64_t a) {
    return static_cast<std::uint8_t>((2 * a + n) / (2 * n));
  };
  return {mean(acc[0]), mean(acc[1]), mean(acc[2])};
}

std::string image_key(const PageImage& image, const std::string& instruction) {
  RgbMean m = mean_color(image);
  std::string digest = sha256_hex(std::span<const std::uint8_t>(
      image.pixels.data(), image.pixels.size()));
  std::string key = "image " + std::to_string(image.width) + "x" +
                    std::to_string(image.height) + " avgq=" +
                    std::to_string(m.r >> 5) + "." + std::to_string(m.g >> 5) +
                    "." + std::to_string(m.b >> 5) +
                    " sha256=" + digest.substr(0, 16);
  if (!instruction.empty()) key += " " + instruction;
  return key;
}

}  // namespace docclass
