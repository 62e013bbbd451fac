#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>
#include <tiffio.h>

#include "docclass/errors.hpp"
#include "docclass/image.hpp"

namespace docclass {

namespace {

PageImage rgba_to_rgb_over_white(std::uint32_t w, std::uint32_t h,
                                 const std::uint8_t* rgba) {
  PageImage out;
  out.width = w;
  out.height = h;
  out.pixels.resize(std::size_t(w) * h * 3);
  const std::size_t n = std::size_t(w) * h;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* src = rgba + 4 * i;
    std::uint8_t* dst = out.pixels.data() + 3 * i;
    const unsigned a = src[3];
    for (int c = 0; c < 3; ++c)
      dst[c] = static_cast<std::uint8_t>((src[c] * a + 255 * (255 - a) + 127) / 255);
  }
  return out;
}

struct MemReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t len) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->pos + len > r->size) png_error(png, "read past end of PNG buffer");
  std::memcpy(out, r->data + r->pos, len);
  r->pos += len;
}

void png_mem_write(png_structp png, png_bytep data, png_size_t len) {
  auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  v->insert(v->end(), data, data + len);
}

void png_mem_flush(png_structp) {}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  longjmp(err->jump, 1);
}

// libtiff in-memory stream
struct TiffStream {
  std::vector<std::uint8_t>* buf;
  const std::uint8_t* ro_data;
  toff_t ro_size;
  toff_t pos;
};

tmsize_t tiff_read(thandle_t h, void* out, tmsize_t n) {
  auto* s = static_cast<TiffStream*>(h);
  const std::uint8_t* data = s->buf ? s->buf->data() : s->ro_data;
  toff_t size = s->buf ? s->buf->size() : s->ro_size;
  if (s->pos >= size) return 0;
  tmsize_t avail = static_cast<tmsize_t>(size - s->pos);
  tmsize_t take = std::min(n, avail);
  std::memcpy(out, data + s->pos, take);
  s->pos += take;
  return take;
}

tmsize_t tiff_write(thandle_t h, void* in, tmsize_t n) {
  auto* s = static_cast<TiffStream*>(h);
  if (!s->buf) return 0;
  if (s->pos + n > s->buf->size()) s->buf->resize(s->pos + n);
  std::memcpy(s->buf->data() + s->pos, in, n);
  s->pos += n;
  return n;
}

toff_t tiff_seek(thandle_t h, toff_t off, int whence) {
  auto* s = static_cast<TiffStream*>(h);
  toff_t size = s->buf ? s->buf->size() : s->ro_size;
  switch (whence) {
    case SEEK_SET: s->pos = off; break;
    case SEEK_CUR: s->pos += off; break;
    case SEEK_END: s->pos = size + off; break;
  }
  return s->pos;
}

int tiff_close(thandle_t) { return 0; }

toff_t tiff_size(thandle_t h) {
  auto* s = static_cast<TiffStream*>(h);
  return s->buf ? s->buf->size() : s->ro_size;
}

void tiff_quiet_handler(const char*, const char*, va_list) {}

}  // namespace

PageImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw Error(Errc::corrupt_document, "not a PNG stream");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(Errc::corrupt_document, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::corrupt_document, "libpng init failed");
  }

  MemReader reader{bytes.data(), bytes.size(), 0};
  std::vector<std::uint8_t> rgba;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::corrupt_document, "invalid PNG data");
  }

  png_set_read_fn(png, &reader, png_mem_read);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  rgba.resize(std::size_t(w) * h * 4);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = rgba.data() + std::size_t(y) * w * 4;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  return rgba_to_rgb_over_white(w, h, rgba.data());
}

std::vector<std::uint8_t> encode_png(const PageImage& image) {
  if (image.empty()) throw Error(Errc::empty_input, "encode of empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(Errc::io_error, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::io_error, "libpng init failed");
  }

  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(image.height);
  for (std::uint32_t y = 0; y < image.height; ++y)
    rows[y] = const_cast<png_bytep>(image.pixels.data() + std::size_t(y) * image.width * 3);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io_error, "PNG encode failed");
  }

  png_set_write_fn(png, &out, png_mem_write, png_mem_flush);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

PageImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;

  PageImage out;
  std::vector<std::uint8_t> row;

  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(Errc::corrupt_document, std::string("invalid JPEG data: ") + err.message);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), bytes.size());
  jpeg_read_header(&cinfo, TRUE);

  const bool cmyk = cinfo.jpeg_color_space == JCS_CMYK ||
                    cinfo.jpeg_color_space == JCS_YCCK;
  cinfo.out_color_space = cmyk ? JCS_CMYK : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  out.width = cinfo.output_width;
  out.height = cinfo.output_height;
  out.pixels.resize(std::size_t(out.width) * out.height * 3);
  row.resize(std::size_t(out.width) * cinfo.output_components);

  while (cinfo.output_scanline < cinfo.output_height) {
    std::uint8_t* rowp = row.data();
    std::uint32_t y = cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &rowp, 1);
    std::uint8_t* dst = out.pixels.data() + std::size_t(y) * out.width * 3;
    if (cmyk) {
      // Adobe-style inverted CMYK
      for (std::uint32_t x = 0; x < out.width; ++x) {
        const std::uint8_t* s = row.data() + 4 * x;
        const unsigned k = s[3];
        dst[3 * x] = static_cast<std::uint8_t>(s[0] * k / 255);
        dst[3 * x + 1] = static_cast<std::uint8_t>(s[1] * k / 255);
        dst[3 * x + 2] = static_cast<std::uint8_t>(s[2] * k / 255);
      }
    } else {
      std::memcpy(dst, row.data(), std::size_t(out.width) * 3);
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const PageImage& image, int quality) {
  if (image.empty()) throw Error(Errc::empty_input, "encode of empty image");
  jpeg_compress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;

  unsigned char* mem = nullptr;
  unsigned long mem_size = 0;

  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (mem) free(mem);
    throw Error(Errc::io_error, std::string("JPEG encode failed: ") + err.message);
  }

  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &mem, &mem_size);
  cinfo.image_width = image.width;
  cinfo.image_height = image.height;
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  for (std::uint32_t y = 0; y < image.height; ++y) {
    JSAMPROW rowp = const_cast<JSAMPROW>(image.pixels.data() + std::size_t(y) * image.width * 3);
    jpeg_write_scanlines(&cinfo, &rowp, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);

  std::vector<std::uint8_t> out(mem, mem + mem_size);
  free(mem);
  return out;
}

PageImage decode_tiff(std::span<const std::uint8_t> bytes) {
  TIFFSetErrorHandler(tiff_quiet_handler);
  TIFFSetWarningHandler(tiff_quiet_handler);

  TiffStream stream{nullptr, bytes.data(), bytes.size(), 0};
  TIFF* tif = TIFFClientOpen("mem", "rm", &stream, tiff_read, tiff_write,
                             tiff_seek, tiff_close, tiff_size, nullptr, nullptr);
  if (!tif) throw Error(Errc::corrupt_document, "not a TIFF stream");

  // frame 0: the directory TIFFClientOpen lands on
  std::uint32_t w = 0, h = 0;
  if (!TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &w) ||
      !TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &h) || w == 0 || h == 0) {
    TIFFClose(tif);
    throw Error(Errc::corrupt_document, "TIFF missing dimensions");
  }

  std::vector<std::uint32_t> rgba(std::size_t(w) * h);
  int ok = TIFFReadRGBAImageOriented(tif, w, h, rgba.data(), ORIENTATION_TOPLEFT, 0);
  TIFFClose(tif);
  if (!ok) throw Error(Errc::corrupt_document, "TIFF decode failed");

  std::vector<std::uint8_t> rgba8(std::size_t(w) * h * 4);
  for (std::size_t i = 0; i < rgba.size(); ++i) {
    std::uint32_t px = rgba[i];
    rgba8[4 * i] = TIFFGetR(px);
    rgba8[4 * i + 1] = TIFFGetG(px);
    rgba8[4 * i + 2] = TIFFGetB(px);
    rgba8[4 * i + 3] = TIFFGetA(px);
  }
  return rgba_to_rgb_over_white(w, h, rgba8.data());
}

std::vector<std::uint8_t> encode_tiff(const PageImage& image) {
  if (image.empty()) throw Error(Errc::empty_input, "encode of empty image");
  TIFFSetErrorHandler(tiff_quiet_handler);
  TIFFSetWarningHandler(tiff_quiet_handler);

  std::vector<std::uint8_t> out;
  TiffStream stream{&out, nullptr, 0, 0};
  TIFF* tif = TIFFClientOpen("mem", "wm", &stream, tiff_read, tiff_write,
                             tiff_seek, tiff_close, tiff_size, nullptr, nullptr);
  if (!tif) throw Error(Errc::io_error, "TIFF writer init failed");

  TIFFSetField(tif, TIFFTAG_IMAGEWIDTH, image.width);
  TIFFSetField(tif, TIFFTAG_IMAGELENGTH, image.height);
  TIFFSetField(tif, TIFFTAG_SAMPLESPERPIXEL, 3);
  TIFFSetField(tif, TIFFTAG_BITSPERSAMPLE, 8);
  TIFFSetField(tif, TIFFTAG_ORIENTATION, ORIENTATION_TOPLEFT);
  TIFFSetField(tif, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_RGB);
  TIFFSetField(tif, TIFFTAG_COMPRESSION, COMPRESSION_NONE);
  TIFFSetField(tif, TIFFTAG_ROWSPERSTRIP, 1);

  for (std::uint32_t y = 0; y < image.height; ++y) {
    void* row = const_cast<std::uint8_t*>(image.pixels.data() + std::size_t(y) * image.width * 3);
    if (TIFFWriteScanline(tif, row, y, 0) < 0) {
      TIFFClose(tif);
      throw Error(Errc::io_error, "TIFF encode failed");
    }
  }
  TIFFClose(tif);
  return out;
}

}  // namespace docclass
