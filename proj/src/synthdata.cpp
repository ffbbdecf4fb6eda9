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

#include "histaug/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "histaug/color.hpp"
#include "histaug/error.hpp"
#include "histaug/png_io.hpp"
#include "histaug/seeding.hpp"

namespace histaug::synth {
namespace {

enum Stream : std::uint64_t { kStructure = 1, kRender = 2, kStyle = 3, kLabels = 4 };

constexpr double kNucleiPer64 = 14.0;
constexpr double kTumorDensity = 5.0;

struct Ellipse {
  double cx, cy, a, b, cos_t, sin_t;

  double radius(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double u = dx * cos_t + dy * sin_t;
    const double v = -dx * sin_t + dy * cos_t;
    return std::sqrt((u / a) * (u / a) + (v / b) * (v / b));
  }
};

Ellipse random_ellipse(std::mt19937_64& rng, double cx, double cy, double a_lo, double a_hi, double aspect_lo) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = a_lo + (a_hi - a_lo) * u(rng);
  const double b = a * (aspect_lo + (1.0 - aspect_lo) * u(rng));
  const double t = std::numbers::pi * u(rng);
  return {cx, cy, a, b, std::cos(t), std::sin(t)};
}

void stamp_nucleus(Structure& s, const Ellipse& e, double intensity) {
  const int size = static_cast<int>(s.hematoxylin.rows());
  const int r = static_cast<int>(std::ceil(e.a)) + 2;
  for (int y = std::max(0, static_cast<int>(e.cy) - r); y <= std::min(size - 1, static_cast<int>(e.cy) + r); ++y)
    for (int x = std::max(0, static_cast<int>(e.cx) - r); x <= std::min(size - 1, static_cast<int>(e.cx) + r); ++x) {
      const double w = std::clamp((1.0 - e.radius(x + 0.5, y + 0.5)) * 3.0, 0.0, 1.0);
      if (w <= 0.0) continue;
      s.hematoxylin(y, x) = std::max<float>(s.hematoxylin(y, x), static_cast<float>(intensity * w));
      s.eosin(y, x) *= static_cast<float>(1.0 - 0.6 * w);
    }
}

int poisson(std::mt19937_64& rng, double mean) {
  std::poisson_distribution<int> p(mean);
  return p(rng);
}

}  // namespace

Structure make_structure(int size, bool tumor, std::uint64_t seed) {
  require(size >= 8, ErrorKind::Parameter, "synthetic tiles must be at least 8 px");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double scale = size / 64.0;

  Structure s;
  s.hematoxylin = Plane::Constant(size, size, 0.05f);
  s.eosin = Plane(size, size);
  s.tumor = Mask::Zero(size, size);

  // Smooth stroma texture from a handful of low-frequency waves.
  std::array<double, 4> amp{}, fx{}, fy{}, phase{};
  for (int k = 0; k < 4; ++k) {
    amp[k] = 0.5 + u(rng);
    fx[k] = (u(rng) * 2 - 1) * 3.0;
    fy[k] = (u(rng) * 2 - 1) * 3.0;
    phase[k] = 2 * std::numbers::pi * u(rng);
  }
  const double amp_total = amp[0] + amp[1] + amp[2] + amp[3];
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double t = 0;
      for (int k = 0; k < 4; ++k)
        t += amp[k] * std::cos(2 * std::numbers::pi * (fx[k] * x + fy[k] * y) / size + phase[k]);
      s.eosin(y, x) = static_cast<float>(0.38 + 0.14 * t / amp_total);
    }

  // Occasional empty lumen.
  const int lumens = static_cast<int>(u(rng) * 2.2);
  for (int l = 0; l < lumens; ++l) {
    const auto e = random_ellipse(rng, u(rng) * size, u(rng) * size, 3 * scale, 8 * scale, 0.5);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        if (e.radius(x + 0.5, y + 0.5) < 1.0) s.eosin(y, x) *= 0.15f;
  }

  if (tumor) {
    // Irregular region: union of a few overlapping ellipses.
    const double cx = size * (0.25 + 0.5 * u(rng)), cy = size * (0.25 + 0.5 * u(rng));
    const double reach = size * (0.18 + 0.2 * u(rng));
    const int lobes = 2 + static_cast<int>(u(rng) * 2);
    std::vector<Ellipse> region;
    for (int k = 0; k < lobes; ++k)
      region.push_back(random_ellipse(rng, cx + (u(rng) - 0.5) * reach, cy + (u(rng) - 0.5) * reach, 0.5 * reach,
                                      reach, 0.5));
    int inside = 0;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        for (const auto& e : region)
          if (e.radius(x + 0.5, y + 0.5) < 1.0) {
            s.tumor(y, x) = 1;
            // Crowded epithelium stains more basophilic than the stroma.
            s.hematoxylin(y, x) += 0.22f;
            s.eosin(y, x) *= 0.8f;
            ++inside;
            break;
          }
    const double area_fraction = static_cast<double>(inside) / (size * size);
    const int count = poisson(rng, kNucleiPer64 * scale * scale * kTumorDensity * area_fraction) + 1;
    for (int n = 0, tries = 0; n < count && tries < 50 * count; ++tries) {
      const double x = u(rng) * size, y = u(rng) * size;
      if (!s.tumor(static_cast<int>(y), static_cast<int>(x))) continue;
      stamp_nucleus(s, random_ellipse(rng, x, y, 2.6 * scale, 4.2 * scale, 0.55), 1.0 + 0.4 * u(rng));
      ++n;
      ++s.nuclei;
    }
  }

  const int normal = poisson(rng, kNucleiPer64 * scale * scale);
  for (int n = 0; n < normal; ++n) {
    stamp_nucleus(s, random_ellipse(rng, u(rng) * size, u(rng) * size, 1.6 * scale, 2.8 * scale, 0.6),
                  0.7 + 0.3 * u(rng));
    ++s.nuclei;
  }
  return s;
}

DomainStyle make_style(int domain, int domains, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, {kStyle, static_cast<std::uint64_t>(domain)}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DomainStyle st;
  st.hue_shift = ((domain + 0.5) / domains - 0.5) * 0.4 + (u(rng) - 0.5) * 0.02;
  st.stain_scale = 0.75 + 0.55 * u(rng);
  st.saturation_scale = 0.7 + 0.6 * u(rng);
  st.value_scale = 0.85 + 0.15 * u(rng);
  st.noise_sigma = 0.005 + 0.025 * u(rng);
  const double blur = u(rng) * 0.9;
  st.blur_sigma = blur < 0.3 ? 0.0 : blur;
  // Mostly a contrast/brightness change; the per-channel part stays small so hue order is kept.
  const double gain = 0.88 + 0.1 * u(rng);
  const double lift = 0.05 * u(rng);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) st.color_matrix(r, c) = (r == c ? gain : 0.0) + 0.02 * (u(rng) - 0.5);
    st.color_offset[r] = lift + 0.01 * (u(rng) - 0.5);
  }
  return st;
}

RgbImage render(const Structure& structure, const DomainStyle& style, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double stain = 1.6 * style.stain_scale * (0.9 + 0.2 * u(rng));
  const double hue = style.hue_shift + 0.006 * normal(rng);

  static const Eigen::Vector3d hvec = Eigen::Vector3d(0.65, 0.70, 0.29).normalized();
  static const Eigen::Vector3d evec = Eigen::Vector3d(0.07, 0.99, 0.11).normalized();

  const int h = static_cast<int>(structure.hematoxylin.rows()), w = static_cast<int>(structure.hematoxylin.cols());
  std::array<Plane, 3> planes{Plane(h, w), Plane(h, w), Plane(h, w)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector3d od = structure.hematoxylin(y, x) * hvec + structure.eosin(y, x) * evec;
      const Eigen::Vector3d rgb = (-stain * od).array().exp();
      Eigen::Vector3d hsv = color::rgb_to_hsv(rgb);
      hsv[0] += hue;
      hsv[1] = std::clamp(hsv[1] * style.saturation_scale, 0.0, 1.0);
      hsv[2] = std::clamp(hsv[2] * style.value_scale, 0.0, 1.0);
      const Eigen::Vector3d out = style.color_matrix * color::hsv_to_rgb(hsv) + style.color_offset;
      for (int c = 0; c < 3; ++c) planes[c](y, x) = static_cast<float>(out[c]);
    }
  if (style.blur_sigma > 0)
    for (auto& p : planes) p = gaussian_blur(p, style.blur_sigma);

  RgbImage img = make_rgb(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.at(0, c, y, x) = static_cast<float>(planes[c](y, x) + style.noise_sigma * normal(rng));
  return quantize8(clamp01(std::move(img)));
}

SynthData generate(const SynthConfig& config) {
  require(config.domains >= 2, ErrorKind::Parameter, "synthetic data needs at least two domains");
  require(config.tiles_per_domain >= 1, ErrorKind::Parameter, "tiles_per_domain must be >= 1");
  require(config.tumor_prevalence >= 0.0 && config.tumor_prevalence <= 1.0, ErrorKind::Parameter,
          "tumor prevalence must lie in [0, 1]");
  SynthData out;
  for (int d = 0; d < config.domains; ++d) {
    out.dataset.domain_names.push_back("center" + std::to_string(d));
    out.styles.push_back(make_style(d, config.domains, config.seed));
  }
  const int n = config.tiles_per_domain;
  const int tumors = static_cast<int>(std::lround(config.tumor_prevalence * n));
  for (int d = 0; d < config.domains; ++d) {
    const auto ud = static_cast<std::uint64_t>(d);
    std::vector<char> is_tumor(n, 0);
    std::fill(is_tumor.begin(), is_tumor.begin() + tumors, 1);
    std::mt19937_64 label_rng(config.shared_structures ? derive_seed(config.seed, {kLabels})
                                                       : derive_seed(config.seed, {kLabels, ud}));
    std::shuffle(is_tumor.begin(), is_tumor.end(), label_rng);
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::uint64_t>(i);
      const auto structure_seed = config.shared_structures ? derive_seed(config.seed, {kStructure, ui})
                                                           : derive_seed(config.seed, {kStructure, ud, ui});
      const Structure s = make_structure(config.size, is_tumor[i] != 0, structure_seed);
      ImageTile tile;
      tile.pixels = render(s, out.styles[d], derive_seed(config.seed, {kRender, ud, ui}));
      tile.domain_id = d;

      TileRecord r;
      r.source_id = out.dataset.domain_names[d] + "_" + std::to_string(i);
      r.file = "tiles/" + r.source_id + ".png";
      r.grid_x = i;
      r.grid_y = 0;
      r.tumor_pixel_ratio = s.tumor.cast<double>().mean();
      r.label = label_for_ratio(r.tumor_pixel_ratio);
      int tissue = 0;
      for (int y = 0; y < config.size; ++y)
        for (int x = 0; x < config.size; ++x) {
          const float m = std::min({tile.pixels.at(0, 0, y, x), tile.pixels.at(0, 1, y, x), tile.pixels.at(0, 2, y, x)});
          tissue += m <= 0.8f ? 1 : 0;
        }
      r.tissue_fraction = static_cast<double>(tissue) / (config.size * config.size);
      r.domain_id = d;
      tile.label = r.label;

      out.dataset.tiles.push_back(std::move(tile));
      out.dataset.records.push_back(std::move(r));
      out.masks.push_back(s.tumor);
    }
  }
  return out;
}

void save(const std::filesystem::path& dir, const SynthData& data) {
  save_dataset(dir, data.dataset);
  std::filesystem::create_directories(dir / "masks");
  for (std::size_t i = 0; i < data.masks.size(); ++i)
    write_mask_png(dir / "masks" / (data.dataset.records[i].source_id + ".png"), data.masks[i]);
}

}  // namespace histaug::synth
