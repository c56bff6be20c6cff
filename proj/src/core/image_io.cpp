#include "core/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

#include "core/errors.hpp"

namespace spatialref {

namespace {

constexpr unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngRead {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngRead() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWrite {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWrite() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

struct GrayImage {
  int width = 0, height = 0, bit_depth = 0;
  std::vector<uint16_t> pixels;  // widened to 16 bits
};

GrayImage read_gray_png(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ValidationError("cannot open image file: " + path);
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || std::memcmp(sig, kPngMagic, 8) != 0)
    throw ValidationError("not a PNG file: " + path);

  PngRead ctx;
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw InternalError("png_create_read_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw InternalError("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(ctx.png)))
    throw ValidationError("corrupt PNG file: " + path);

  png_init_io(ctx.png, f.get());
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);

  int color = png_get_color_type(ctx.png, ctx.info);
  int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
  if (color != PNG_COLOR_TYPE_GRAY)
    throw ValidationError("expected single-channel grayscale PNG: " + path);
  if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  GrayImage img;
  img.width = int(png_get_image_width(ctx.png, ctx.info));
  img.height = int(png_get_image_height(ctx.png, ctx.info));
  img.bit_depth = bit_depth;
  int out_depth = png_get_bit_depth(ctx.png, ctx.info);
  size_t row_bytes = png_get_rowbytes(ctx.png, ctx.info);
  std::vector<unsigned char> raster(row_bytes * img.height);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) rows[y] = raster.data() + row_bytes * y;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  img.pixels.resize(size_t(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    const unsigned char* row = rows[y];
    for (int x = 0; x < img.width; ++x) {
      uint16_t v;
      if (out_depth == 16) {
        v = uint16_t((row[2 * x] << 8) | row[2 * x + 1]);  // PNG is big-endian
      } else {
        v = row[x];
      }
      img.pixels[size_t(y) * img.width + x] = v;
    }
  }
  return img;
}

void write_gray_png(const std::string& path, int width, int height,
                    int bit_depth, const std::vector<uint16_t>& pixels) {
  std::string tmp = path + ".tmp";
  {
    FilePtr f(std::fopen(tmp.c_str(), "wb"));
    if (!f) throw ValidationError("cannot write image file: " + tmp);
    PngWrite ctx;
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw InternalError("png_create_write_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw InternalError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png)))
      throw InternalError("PNG write failed: " + tmp);
    png_init_io(ctx.png, f.get());
    png_set_IHDR(ctx.png, ctx.info, width, height, bit_depth,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    size_t row_bytes = bit_depth == 16 ? size_t(width) * 2 : size_t(width);
    std::vector<unsigned char> row(row_bytes);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        uint16_t v = pixels[size_t(y) * width + x];
        if (bit_depth == 16) {
          row[2 * x] = (unsigned char)(v >> 8);
          row[2 * x + 1] = (unsigned char)(v & 0xFF);
        } else {
          row[x] = (unsigned char)(v & 0xFF);
        }
      }
      png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
  }
  std::filesystem::rename(tmp, path);
}

uint32_t read_u32le(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

DepthMap read_depth_raw_bytes(const std::string& bytes, const std::string& path) {
  if (bytes.size() < 8)
    throw ValidationError("depth file too short: " + path);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  uint32_t w = read_u32le(p), h = read_u32le(p + 4);
  if (w == 0 || h == 0 || w > 1 << 20 || h > 1 << 20)
    throw ValidationError("implausible depth dimensions in " + path);
  size_t need = 8 + size_t(w) * h * 4;
  if (bytes.size() != need)
    throw ValidationError("depth payload size mismatch in " + path);
  DepthMap d;
  d.width = int(w);
  d.height = int(h);
  d.meters.resize(size_t(w) * h);
  static_assert(sizeof(float) == 4);
  std::memcpy(d.meters.data(), bytes.data() + 8, d.meters.size() * 4);
  return d;
}

}  // namespace

DepthMap read_depth(const std::string& path) {
  std::string bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0) {
    GrayImage img = read_gray_png(path);
    if (img.bit_depth != 16)
      throw ValidationError("depth PNG must be 16-bit grayscale: " + path);
    DepthMap d;
    d.width = img.width;
    d.height = img.height;
    d.meters.resize(img.pixels.size());
    for (size_t i = 0; i < img.pixels.size(); ++i)
      d.meters[i] = img.pixels[i] == 0 ? 0.0f : float(img.pixels[i]) / 1000.0f;
    return d;
  }
  return read_depth_raw_bytes(bytes, path);
}

void write_depth_png16(const std::string& path, const DepthMap& depth) {
  std::vector<uint16_t> px(depth.meters.size());
  for (size_t i = 0; i < depth.meters.size(); ++i) {
    float m = depth.meters[i];
    if (!std::isfinite(m) || m <= 0) {
      px[i] = 0;
    } else {
      double mm = std::floor(double(m) * 1000.0 + 0.5);
      px[i] = uint16_t(std::min(mm, 65535.0));
    }
  }
  write_gray_png(path, depth.width, depth.height, 16, px);
}

void write_depth_raw(const std::string& path, const DepthMap& depth) {
  std::string out;
  out.resize(8 + depth.meters.size() * 4);
  uint32_t w = uint32_t(depth.width), h = uint32_t(depth.height);
  unsigned char* p = reinterpret_cast<unsigned char*>(out.data());
  for (int i = 0; i < 4; ++i) p[i] = (w >> (8 * i)) & 0xFF;
  for (int i = 0; i < 4; ++i) p[4 + i] = (h >> (8 * i)) & 0xFF;
  std::memcpy(out.data() + 8, depth.meters.data(), depth.meters.size() * 4);
  atomic_write_file(path, out);
}

Mask read_mask_png(const std::string& path) {
  GrayImage img = read_gray_png(path);
  Mask m;
  m.width = img.width;
  m.height = img.height;
  m.on.resize(img.pixels.size());
  for (size_t i = 0; i < img.pixels.size(); ++i)
    m.on[i] = img.pixels[i] != 0 ? 1 : 0;
  return m;
}

void write_mask_png(const std::string& path, const Mask& mask) {
  std::vector<uint16_t> px(mask.on.size());
  for (size_t i = 0; i < mask.on.size(); ++i) px[i] = mask.on[i] ? 255 : 0;
  write_gray_png(path, mask.width, mask.height, 8, px);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

void atomic_write_file(const std::string& path, std::string_view content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + tmp);
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) throw InternalError("short write: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace spatialref
