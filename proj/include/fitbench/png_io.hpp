#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "fitbench/core.hpp"

namespace fitbench {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

/// Writes an 8-bit single-channel grayscale PNG.
inline void write_gray_png(const std::string& path, const Image<std::uint8_t>& image) {
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::IoError, "cannot open for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoError, "png write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(&image.pixels()[static_cast<std::size_t>(y) *
                                                             image.width()]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Writes an 8-bit indexed (palette) PNG; pixel values are palette indices.
/// The palette colors are presentation-only; readers use the raw indices.
inline void write_indexed_png(const std::string& path, const Image<std::uint8_t>& image,
                              const std::vector<std::array<std::uint8_t, 3>>& palette) {
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::IoError, "cannot open for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoError, "png write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_PALETTE,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> colors(palette.size());
  for (std::size_t i = 0; i < palette.size(); ++i)
    colors[i] = {palette[i][0], palette[i][1], palette[i][2]};
  png_set_PLTE(png, info, colors.data(), static_cast<int>(colors.size()));
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(&image.pixels()[static_cast<std::size_t>(y) *
                                                             image.width()]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads an 8-bit grayscale or indexed PNG as raw label values (gray level
/// or palette index respectively).
inline Image<std::uint8_t> read_label_png(const std::string& path) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorKind::IoError, "cannot open for reading: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::IoError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::ParseError, "png read failed: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_PALETTE) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::ParseError, "label png must be grayscale or indexed: " + path);
  }
  if (bit_depth < 8) png_set_packing(png);  // expand 1/2/4-bit rows to one byte per pixel
  if (bit_depth == 16) png_set_strip_16(png);
  png_read_update_info(png, info);

  Image<std::uint8_t> image(static_cast<int>(width), static_cast<int>(height), 0);
  for (png_uint_32 y = 0; y < height; ++y)
    png_read_row(png, &image.pixels()[static_cast<std::size_t>(y) * width], nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

/// Palette for dense pose labels 0-5 (background, torso, arms, legs).
inline std::vector<std::array<std::uint8_t, 3>> densepose_palette() {
  return {{{0, 0, 0}},
          {{200, 60, 60}},
          {{60, 160, 220}},
          {{60, 100, 220}},
          {{90, 200, 90}},
          {{40, 160, 60}}};
}

/// Palette for layout labels 0-2 (background, body, garment).
inline std::vector<std::array<std::uint8_t, 3>> layout_palette() {
  return {{{0, 0, 0}}, {{170, 120, 90}}, {{230, 220, 60}}};
}

}  // namespace fitbench
