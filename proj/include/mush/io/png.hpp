#pragma once

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <png.h>

#include "mush/errors.hpp"
#include "mush/image.hpp"
#include "mush/localization.hpp"

namespace mush {

namespace detail {

struct FileCloser {
  std::FILE* fp = nullptr;
  ~FileCloser() {
    if (fp) std::fclose(fp);
  }
};

}  // namespace detail

/// 8-bit RGB PNG. Palette, grayscale, <8-bit and alpha inputs are converted.
inline ImageRgb read_png_rgb(const std::string& path) {
  detail::FileCloser f{std::fopen(path.c_str(), "rb")};
  if (!f.fp) throw IoError("read_png_rgb: cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("read_png_rgb: libpng init failed");
  }
  ImageRgb img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("read_png_rgb: failed to decode " + path);
  }
  png_init_io(png, f.fp);
  png_read_info(png, info);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  img = ImageRgb(w, h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = reinterpret_cast<png_bytep>(img.data[static_cast<std::size_t>(y) * w].data());
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png_rgb(const std::string& path, const ImageRgb& img) {
  if (img.width <= 0 || img.height <= 0) throw IoError("write_png_rgb: empty image");
  detail::FileCloser f{std::fopen(path.c_str(), "wb")};
  if (!f.fp) throw IoError("write_png_rgb: cannot open " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("write_png_rgb: libpng init failed");
  }
  std::vector<png_bytep> rows(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("write_png_rgb: failed to encode " + path);
  }
  png_init_io(png, f.fp);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(
        reinterpret_cast<const png_byte*>(img.data[static_cast<std::size_t>(y) * img.width].data()));
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// 16-bit grayscale PNG carrying raw depth units; round-trips bit for bit.
inline DepthImage read_png_depth(const std::string& path) {
  detail::FileCloser f{std::fopen(path.c_str(), "rb")};
  if (!f.fp) throw IoError("read_png_depth: cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("read_png_depth: libpng init failed");
  }
  DepthImage img;
  std::vector<std::uint8_t> rowbuf;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("read_png_depth: failed to decode " + path);
  }
  png_init_io(png, f.fp);
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(png, info) != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("read_png_depth: " + path + " is not 16-bit grayscale");
  }
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  img = DepthImage(w, h);
  rowbuf.resize(static_cast<std::size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, rowbuf.data(), nullptr);
    for (int x = 0; x < w; ++x)  // PNG 16-bit samples are big-endian
      img.at(x, y) = static_cast<std::uint16_t>((rowbuf[2 * x] << 8) | rowbuf[2 * x + 1]);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png_depth(const std::string& path, const DepthImage& img) {
  if (img.width <= 0 || img.height <= 0) throw IoError("write_png_depth: empty image");
  detail::FileCloser f{std::fopen(path.c_str(), "wb")};
  if (!f.fp) throw IoError("write_png_depth: cannot open " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("write_png_depth: libpng init failed");
  }
  std::vector<std::uint8_t> rowbuf;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("write_png_depth: failed to encode " + path);
  }
  png_init_io(png, f.fp);
  png_set_IHDR(png, info, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  rowbuf.resize(static_cast<std::size_t>(img.width) * 2);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint16_t v = img.at(x, y);
      rowbuf[2 * x] = static_cast<std::uint8_t>(v >> 8);
      rowbuf[2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    png_write_row(png, rowbuf.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace mush
