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

#include "histaug/color.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace histaug::color {

Vec3 rgb_to_hsv(const Vec3& rgb) {
  const double v = rgb.maxCoeff();
  const double delta = v - rgb.minCoeff();
  if (delta == 0.0) return {0.0, 0.0, v};
  const double s = delta / v;
  double h;
  if (rgb[2] == v)
    h = 4.0 + (rgb[0] - rgb[1]) / delta;
  else if (rgb[1] == v)
    h = 2.0 + (rgb[2] - rgb[0]) / delta;
  else
    h = (rgb[1] - rgb[2]) / delta;
  h /= 6.0;
  h -= std::floor(h);
  return {h, s, v};
}

Vec3 hsv_to_rgb(const Vec3& hsv) {
  const double h = hsv[0] - std::floor(hsv[0]);
  const double s = hsv[1], v = hsv[2];
  const double scaled = h * 6.0;
  const int sector = static_cast<int>(std::floor(scaled)) % 6;
  const double f = scaled - std::floor(scaled);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - f * s);
  const double t = v * (1.0 - (1.0 - f) * s);
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Vec3 rgb_to_xyz(const Vec3& rgb) {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.412453, 0.357580, 0.180423,  //
                                    0.212671, 0.715160, 0.072169,                        //
                                    0.019334, 0.119193, 0.950227)
                                       .finished();
  Vec3 lin;
  for (int i = 0; i < 3; ++i)
    lin[i] = rgb[i] > 0.04045 ? std::pow((rgb[i] + 0.055) / 1.055, 2.4) : rgb[i] / 12.92;
  return m * lin;
}

Vec3 xyz_to_lab(const Vec3& xyz) {
  const Vec3 white(0.95047, 1.0, 1.08883);
  Vec3 f;
  for (int i = 0; i < 3; ++i) {
    const double r = xyz[i] / white[i];
    f[i] = r > 0.008856 ? std::cbrt(r) : 7.787 * r + 16.0 / 116.0;
  }
  return {116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])};
}

const Eigen::Matrix3d& rgb_from_hed() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.65, 0.70, 0.29,  //
                                    0.07, 0.99, 0.11,                        //
                                    0.27, 0.57, 0.78)
                                       .finished();
  return m;
}

const Eigen::Matrix3d& hed_from_rgb() {
  static const Eigen::Matrix3d m = rgb_from_hed().inverse();
  return m;
}

Vec3 rgb_to_hed(const Vec3& rgb) {
  static const double log_adjust = std::log(1e-6);
  Eigen::RowVector3d od;
  for (int i = 0; i < 3; ++i) od[i] = std::log(std::max(rgb[i], 1e-6)) / log_adjust;
  const Eigen::RowVector3d stains = od * hed_from_rgb();
  return stains.transpose().cwiseMax(0.0);
}

}  // namespace histaug::color
