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

#include "histaug/tiling.hpp"

#include <cmath>

#include "histaug/color.hpp"
#include "histaug/error.hpp"

namespace histaug::tiling {
namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Little-endian 64-bit limbs, just wide enough for the Otsu score comparison.
struct U256 {
  std::array<u64, 4> limb{};
};

U256 multiply(const U256& a, u128 b) {
  const u64 b_lo = static_cast<u64>(b), b_hi = static_cast<u64>(b >> 64);
  U256 out;
  for (int i = 0; i < 4; ++i) {
    u128 carry = 0;
    for (int j = 0; j < 2 && i + j < 4; ++j) {
      const u128 cur = static_cast<u128>(a.limb[i]) * (j == 0 ? b_lo : b_hi) + out.limb[i + j] + carry;
      out.limb[i + j] = static_cast<u64>(cur);
      carry = cur >> 64;
    }
    for (int k = i + 2; k < 4 && carry != 0; ++k) {
      const u128 cur = static_cast<u128>(out.limb[k]) + carry;
      out.limb[k] = static_cast<u64>(cur);
      carry = cur >> 64;
    }
  }
  return out;
}

U256 from(u128 v) {
  U256 out;
  out.limb[0] = static_cast<u64>(v);
  out.limb[1] = static_cast<u64>(v >> 64);
  return out;
}

int compare(const U256& a, const U256& b) {
  for (int i = 3; i >= 0; --i)
    if (a.limb[i] != b.limb[i]) return a.limb[i] < b.limb[i] ? -1 : 1;
  return 0;
}

u128 absolute_difference(u128 a, u128 b) { return a > b ? a - b : b - a; }

}  // namespace

int otsu_threshold(const Histogram& h) {
  u64 total = 0;
  u128 weighted = 0;
  int occupied = 0;
  for (int i = 0; i < 256; ++i) {
    total += h[i];
    weighted += static_cast<u128>(h[i]) * static_cast<u64>(i);
    occupied += h[i] > 0 ? 1 : 0;
  }
  require(total > 0, ErrorKind::DegenerateHistogram, "histogram is empty");
  require(occupied >= 2, ErrorKind::DegenerateHistogram, "histogram has a single occupied bin");
  require(total < (u64{1} << 36), ErrorKind::Range, "histogram total exceeds 2^36 pixels");

  // Between-class variance times N^4 is (N0*S - N*S0)^2 / (N0*N1) with N0, S0 the
  // count and level sum below t; compare candidates by cross-multiplication.
  int best_t = -1;
  U256 best_num;
  u128 best_den = 1;
  u64 n0 = 0;
  u128 s0 = 0;
  for (int t = 1; t < 256; ++t) {
    n0 += h[t - 1];
    s0 += static_cast<u128>(h[t - 1]) * static_cast<u64>(t - 1);
    const u64 n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const u128 diff = absolute_difference(static_cast<u128>(n0) * weighted, static_cast<u128>(total) * s0);
    const U256 num = multiply(from(diff), diff);
    const u128 den = static_cast<u128>(n0) * n1;
    if (best_t < 0 || compare(multiply(num, best_den), multiply(best_num, den)) > 0) {
      best_t = t;
      best_num = num;
      best_den = den;
    }
  }
  return best_t;
}

Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> gray_levels(const RgbImage& image) {
  validate_rgb(image);
  const int h = image.shape.h, w = image.shape.w;
  Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double g = color::rgb_to_gray({image.at(0, 0, y, x), image.at(0, 1, y, x), image.at(0, 2, y, x)});
      out(y, x) = static_cast<std::uint8_t>(std::lround(std::clamp(g, 0.0, 1.0) * 255.0));
    }
  return out;
}

Histogram histogram(const RgbImage& image) {
  Histogram h{};
  const auto levels = gray_levels(image);
  for (Eigen::Index i = 0; i < levels.size(); ++i) ++h[levels.data()[i]];
  return h;
}

TissueMask tissue_mask(const RgbImage& image, const TissueMaskOptions& options) {
  const auto levels = gray_levels(image);
  Histogram h{};
  for (Eigen::Index i = 0; i < levels.size(); ++i) ++h[levels.data()[i]];
  TissueMask out;
  try {
    out.otsu_threshold = otsu_threshold(h);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateHistogram) throw;
    out.rgb_rule_only = true;
  }
  const int hgt = image.shape.h, wid = image.shape.w;
  out.mask = Mask::Zero(hgt, wid);
  const auto white = static_cast<float>(options.white_level);
  std::int64_t count = 0;
  for (int y = 0; y < hgt; ++y)
    for (int x = 0; x < wid; ++x) {
      const float m = std::min({image.at(0, 0, y, x), image.at(0, 1, y, x), image.at(0, 2, y, x)});
      const bool tissue = !(m > white) && (!out.otsu_threshold || levels(y, x) < *out.otsu_threshold);
      out.mask(y, x) = tissue ? 1 : 0;
      count += tissue ? 1 : 0;
    }
  out.fraction = hgt * wid > 0 ? static_cast<double>(count) / (double(hgt) * wid) : 0.0;
  return out;
}

void TileOptions::validate() const {
  require(tile_size >= 1, ErrorKind::Parameter, "tile size must be >= 1");
  require(min_tissue >= 0 && min_tissue <= 1, ErrorKind::Parameter, "min_tissue must lie in [0, 1]");
  require(!source_id.empty(), ErrorKind::Parameter, "source id must not be empty");
}

std::vector<Tile> tile_grid(const RgbImage& image, const Mask& annotation, const TileOptions& options) {
  options.validate();
  validate_rgb(image);
  require(annotation.rows() == image.shape.h && annotation.cols() == image.shape.w, ErrorKind::Alignment,
          "annotation is " + std::to_string(annotation.rows()) + "x" + std::to_string(annotation.cols()) +
              " but image is " + std::to_string(image.shape.h) + "x" + std::to_string(image.shape.w));
  const auto tissue = tissue_mask(image, options.tissue);
  const int ts = options.tile_size;
  const std::int64_t area = std::int64_t(ts) * ts;
  std::vector<Tile> out;
  for (int gy = 0; gy < image.shape.h / ts; ++gy)
    for (int gx = 0; gx < image.shape.w / ts; ++gx) {
      const int top = gy * ts, left = gx * ts;
      const std::int64_t tissue_px = tissue.mask.block(top, left, ts, ts).cast<std::int64_t>().sum();
      const double fraction = static_cast<double>(tissue_px) / static_cast<double>(area);
      if (fraction < options.min_tissue) continue;
      Tile t;
      t.annotation = (annotation.block(top, left, ts, ts) != 0).cast<std::uint8_t>();
      const std::int64_t tumor_px = t.annotation.cast<std::int64_t>().sum();
      t.image.pixels = crop(image, top, left, ts, ts);
      t.image.domain_id = options.domain_id;
      t.record.source_id = options.source_id;
      t.record.grid_x = gx;
      t.record.grid_y = gy;
      t.record.file = "tiles/" + options.source_id + "_" + std::to_string(gx) + "_" + std::to_string(gy) + ".png";
      t.record.tumor_pixel_ratio = static_cast<double>(tumor_px) / static_cast<double>(area);
      t.record.label = label_for_counts(tumor_px, area);
      t.record.tissue_fraction = fraction;
      t.record.domain_id = options.domain_id;
      t.image.label = t.record.label;
      out.push_back(std::move(t));
    }
  return out;
}

std::map<std::string, double> tumor_fraction_by_source(const std::vector<TileRecord>& records) {
  std::map<std::string, std::pair<int, int>> counts;
  for (const auto& r : records) {
    auto& [tumor, total] = counts[r.source_id];
    tumor += r.label == TissueClass::Tumor ? 1 : 0;
    ++total;
  }
  std::map<std::string, double> out;
  for (const auto& [source, c] : counts) out[source] = static_cast<double>(c.first) / c.second;
  return out;
}

}  // namespace histaug::tiling
