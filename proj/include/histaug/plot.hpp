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

#pragma once

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "histaug/image.hpp"

namespace histaug::plot {

using Color = std::array<float, 3>;

/// Qualitative palette; index modulo its size.
Color palette(int i);

class Canvas {
 public:
  Canvas(int width, int height);

  int width() const { return image_.shape.w; }
  int height() const { return image_.shape.h; }
  const RgbImage& image() const { return image_; }

  void fill_rect(int x0, int y0, int x1, int y1, Color c);
  void disk(double cx, double cy, double r, Color c);
  void hline(int x0, int x1, int y, Color c);
  void vline(int x, int y0, int y1, Color c);
  /// 5x7 bitmap glyphs, upper-cased; unknown characters render as blanks.
  void text(int x, int y, const std::string& s, int scale, Color c);
  static int text_width(const std::string& s, int scale);

  void save(const std::filesystem::path& path) const;

 private:
  RgbImage image_;
};

/// Scatter plot of 2-D points coloured by group, with a legend.
void scatter_png(const std::filesystem::path& path, const Eigen::MatrixX2d& xy, const std::vector<int>& groups,
                 const std::vector<std::string>& group_names, const std::string& title);

struct BarGroup {
  std::string label;
  /// One value per series; NaN leaves a gap.
  std::vector<double> values;
  /// Optional error half-widths, same length as values.
  std::vector<double> errors;
};

/// Grouped bar chart on a [0, y_max] axis.
void bar_chart_png(const std::filesystem::path& path, const std::vector<BarGroup>& groups,
                   const std::vector<std::string>& series, const std::string& title, double y_max = 1.0);

}  // namespace histaug::plot
