// Copyright 2026 The histaug Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "histaug/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "histaug/error.hpp"

namespace histaug {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

struct Raw {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved
};

Raw read_raw(const std::filesystem::path& path) {
  File fp(std::fopen(path.c_str(), "rb"));
  require(fp != nullptr, ErrorKind::Io, "cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorKind::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorKind::Io, "png_create_info_struct failed");
  }
  Raw raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Io, "failed to decode " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  const auto stride = png_get_rowbytes(png, info);
  raw.rgb.resize(stride * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = raw.rgb.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  require(stride == static_cast<std::size_t>(raw.width) * 3, ErrorKind::Io,
          "unexpected row layout in " + path.string());
  return raw;
}

void write_raw(const std::filesystem::path& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& data) {
  File fp(std::fopen(path.c_str(), "wb"));
  require(fp != nullptr, ErrorKind::Io, "cannot create " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, ErrorKind::Io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorKind::Io, "png_create_info_struct failed");
  }
  std::vector<png_const_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "failed to encode " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) rows[y] = data.data() + static_cast<std::size_t>(y) * width * channels;
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
  const Raw raw = read_raw(path);
  RgbImage image = make_rgb(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      for (int c = 0; c < 3; ++c)
        image.at(0, c, y, x) = raw.rgb[(static_cast<std::size_t>(y) * raw.width + x) * 3 + c] / 255.0f;
  return image;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  require(image.shape.n == 1 && image.shape.c == 3, ErrorKind::Shape, "write_png expects {1,3,h,w}");
  const int h = image.shape.h, w = image.shape.w;
  std::vector<std::uint8_t> data(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        data[(static_cast<std::size_t>(y) * w + x) * 3 + c] = to_byte(image.at(0, c, y, x));
  write_raw(path, w, h, 3, data);
}

Mask read_mask_png(const std::filesystem::path& path) {
  const Raw raw = read_raw(path);
  Mask mask(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x) {
      const auto* p = raw.rgb.data() + (static_cast<std::size_t>(y) * raw.width + x) * 3;
      mask(y, x) = (p[0] | p[1] | p[2]) != 0 ? 1 : 0;
    }
  return mask;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> data(static_cast<std::size_t>(mask.size()));
  for (Eigen::Index i = 0; i < mask.size(); ++i) data[i] = mask.data()[i] != 0 ? 255 : 0;
  write_raw(path, static_cast<int>(mask.cols()), static_cast<int>(mask.rows()), 1, data);
}

RgbImage quantize8(const RgbImage& image) {
  RgbImage out = image;
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data[i] = to_byte(out.data[i]) / 255.0f;
  return out;
}

}  // namespace histaug
