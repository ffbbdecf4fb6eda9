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

#include "histaug/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>

#include "histaug/error.hpp"
#include "histaug/png_io.hpp"

namespace histaug::plot {
namespace {

const std::map<char, std::array<std::uint8_t, 7>>& glyphs() {
  static const std::map<char, std::array<std::uint8_t, 7>> table{
    {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
    {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
    {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
    {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
    {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
    {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
    {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
    {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
    {'A', {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
    {'B', {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e}},
    {'C', {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}},
    {'D', {0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c}},
    {'E', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f}},
    {'F', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10}},
    {'G', {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f}},
    {'H', {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
    {'I', {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f}},
    {'M', {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
    {'P', {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10}},
    {'Q', {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d}},
    {'R', {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11}},
    {'S', {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}},
    {'T', {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a}},
    {'X', {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0a, 0x04, 0x04, 0x04}},
    {'Z', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
    {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f}},
    {'=', {0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00}},
    {':', {0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
  };
  return table;
}

constexpr Color kBlack{0.1f, 0.1f, 0.1f};
constexpr Color kGrid{0.85f, 0.85f, 0.85f};

}  // namespace

Color palette(int i) {
  static const Color colors[] = {{0.12f, 0.47f, 0.71f}, {1.00f, 0.50f, 0.05f}, {0.17f, 0.63f, 0.17f},
                                 {0.84f, 0.15f, 0.16f}, {0.58f, 0.40f, 0.74f}, {0.55f, 0.34f, 0.29f},
                                 {0.89f, 0.47f, 0.76f}, {0.50f, 0.50f, 0.50f}, {0.74f, 0.74f, 0.13f},
                                 {0.09f, 0.75f, 0.81f}};
  constexpr int n = sizeof(colors) / sizeof(colors[0]);
  return colors[((i % n) + n) % n];
}

Canvas::Canvas(int width, int height) : image_(make_rgb(height, width, 1.0f)) {
  require(width > 0 && height > 0, ErrorKind::Parameter, "canvas size must be positive");
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Color c) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, width());
  y1 = std::min(y1, height());
  for (int ch = 0; ch < 3; ++ch)
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) image_.at(0, ch, y, x) = c[ch];
}

void Canvas::disk(double cx, double cy, double r, Color c) {
  const int x0 = static_cast<int>(std::floor(cx - r)), x1 = static_cast<int>(std::ceil(cx + r));
  const int y0 = static_cast<int>(std::floor(cy - r)), y1 = static_cast<int>(std::ceil(cy + r));
  for (int y = std::max(y0, 0); y <= std::min(y1, height() - 1); ++y)
    for (int x = std::max(x0, 0); x <= std::min(x1, width() - 1); ++x)
      if ((x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy) <= r * r)
        for (int ch = 0; ch < 3; ++ch) image_.at(0, ch, y, x) = c[ch];
}

void Canvas::hline(int x0, int x1, int y, Color c) { fill_rect(x0, y, x1 + 1, y + 1, c); }
void Canvas::vline(int x, int y0, int y1, Color c) { fill_rect(x, y0, x + 1, y1 + 1, c); }

int Canvas::text_width(const std::string& s, int scale) { return static_cast<int>(s.size()) * 6 * scale; }

void Canvas::text(int x, int y, const std::string& s, int scale, Color c) {
  const auto& table = glyphs();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto it = table.find(static_cast<char>(std::toupper(static_cast<unsigned char>(s[i]))));
    if (it == table.end()) continue;
    const int gx = x + static_cast<int>(i) * 6 * scale;
    for (int row = 0; row < 7; ++row)
      for (int col = 0; col < 5; ++col)
        if (it->second[row] & (1 << (4 - col)))
          fill_rect(gx + col * scale, y + row * scale, gx + (col + 1) * scale, y + (row + 1) * scale, c);
  }
}

void Canvas::save(const std::filesystem::path& path) const { write_png(path, image_); }

void scatter_png(const std::filesystem::path& path, const Eigen::MatrixX2d& xy, const std::vector<int>& groups,
                 const std::vector<std::string>& group_names, const std::string& title) {
  require(static_cast<std::size_t>(xy.rows()) == groups.size(), ErrorKind::Shape, "one group per point is required");
  constexpr int kW = 720, kH = 560, kLeft = 40, kTop = 40, kPlot = 480;
  Canvas c(kW, kH);
  c.text(kLeft, 14, title, 2, kBlack);
  c.hline(kLeft, kLeft + kPlot, kTop, kBlack);
  c.hline(kLeft, kLeft + kPlot, kTop + kPlot, kBlack);
  c.vline(kLeft, kTop, kTop + kPlot, kBlack);
  c.vline(kLeft + kPlot, kTop, kTop + kPlot, kBlack);
  if (xy.rows() > 0) {
    const Eigen::RowVector2d lo = xy.colwise().minCoeff(), hi = xy.colwise().maxCoeff();
    const double span = std::max({hi[0] - lo[0], hi[1] - lo[1], 1e-12});
    const Eigen::RowVector2d mid = (lo + hi) / 2;
    const double scale = (kPlot - 20) / span;
    for (Eigen::Index i = 0; i < xy.rows(); ++i)
      c.disk(kLeft + kPlot / 2.0 + (xy(i, 0) - mid[0]) * scale, kTop + kPlot / 2.0 - (xy(i, 1) - mid[1]) * scale, 2.2,
             palette(groups[static_cast<std::size_t>(i)]));
  }
  for (std::size_t g = 0; g < group_names.size(); ++g) {
    const int y = kTop + 10 + static_cast<int>(g) * 22;
    c.fill_rect(kLeft + kPlot + 16, y, kLeft + kPlot + 30, y + 14, palette(static_cast<int>(g)));
    c.text(kLeft + kPlot + 36, y + 1, group_names[g], 2, kBlack);
  }
  c.save(path);
}

void bar_chart_png(const std::filesystem::path& path, const std::vector<BarGroup>& groups,
                   const std::vector<std::string>& series, const std::string& title, double y_max) {
  require(y_max > 0, ErrorKind::Parameter, "bar chart axis maximum must be positive");
  for (const auto& g : groups)
    require(g.values.size() == series.size() && (g.errors.empty() || g.errors.size() == series.size()),
            ErrorKind::Shape, "bar group " + g.label + " does not have one value per series");
  constexpr int kLeft = 60, kTop = 50, kPlotH = 360, kGroupGap = 24, kBar = 18;
  int group_w = static_cast<int>(series.size()) * kBar + kGroupGap;
  for (const auto& g : groups) group_w = std::max(group_w, Canvas::text_width(g.label, 2) + kGroupGap);
  const int plot_w = std::max(200, static_cast<int>(groups.size()) * group_w + kGroupGap);
  int legend_w = 0;
  for (const auto& name : series) legend_w = std::max(legend_w, Canvas::text_width(name, 2));
  Canvas c(kLeft + plot_w + legend_w + 56, kTop + kPlotH + 60);
  c.text(kLeft, 16, title, 2, kBlack);
  for (int t = 0; t <= 4; ++t) {
    const int y = kTop + kPlotH - t * kPlotH / 4;
    c.hline(kLeft, kLeft + plot_w, y, t == 0 ? kBlack : kGrid);
    char label[32];
    std::snprintf(label, sizeof label, "%.2f", y_max * t / 4);
    c.text(4, y - 7, label, 2, kBlack);
  }
  c.vline(kLeft, kTop, kTop + kPlotH, kBlack);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const int gx = kLeft + kGroupGap + static_cast<int>(g) * group_w;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = groups[g].values[s];
      if (!std::isfinite(v)) continue;
      const int x = gx + static_cast<int>(s) * kBar;
      const int top = kTop + kPlotH - static_cast<int>(std::lround(std::clamp(v / y_max, 0.0, 1.0) * kPlotH));
      c.fill_rect(x, top, x + kBar - 2, kTop + kPlotH, palette(static_cast<int>(s)));
      if (!groups[g].errors.empty() && groups[g].errors[s] > 0) {
        const int e = static_cast<int>(std::lround(groups[g].errors[s] / y_max * kPlotH));
        c.vline(x + kBar / 2 - 1, std::max(kTop, top - e), std::min(kTop + kPlotH, top + e), kBlack);
      }
    }
    c.text(gx, kTop + kPlotH + 10, groups[g].label, 2, kBlack);
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const int y = kTop + static_cast<int>(s) * 22;
    c.fill_rect(kLeft + plot_w + 16, y, kLeft + plot_w + 30, y + 14, palette(static_cast<int>(s)));
    c.text(kLeft + plot_w + 36, y + 1, series[s], 2, kBlack);
  }
  c.save(path);
}

}  // namespace histaug::plot
