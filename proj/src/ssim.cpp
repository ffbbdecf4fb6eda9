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

#include "histaug/ssim.hpp"

#include <cmath>
#include <vector>

#include "histaug/error.hpp"

namespace histaug {
namespace {

using PlaneD = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Half-sample symmetric reflection: d c b a | a b c d | d c b a.
int reflect(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

PlaneD filter(const PlaneD& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const auto h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  PlaneD tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int j = -r; j <= r; ++j) s += k[j + r] * in(y, reflect(x + j, w));
      tmp(y, x) = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int j = -r; j <= r; ++j) s += k[j + r] * tmp(reflect(y + j, h), x);
      out(y, x) = s;
    }
  return out;
}

}  // namespace

double ssim(const Plane& a, const Plane& b, const SsimOptions& o) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Shape, "SSIM inputs differ in size");
  require(o.sigma > 0 && o.data_range > 0, ErrorKind::Parameter, "SSIM sigma and data range must be positive");
  const int radius = static_cast<int>(o.truncate * o.sigma + 0.5);
  require(a.rows() > 2 * radius && a.cols() > 2 * radius, ErrorKind::Shape,
          "SSIM needs images larger than the " + std::to_string(2 * radius + 1) + " px window");
  std::vector<double> k(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (o.sigma * o.sigma));
  for (auto& v : k) v /= total;

  const PlaneD x = a.cast<double>(), y = b.cast<double>();
  const PlaneD mx = filter(x, k), my = filter(y, k);
  const PlaneD vx = filter(x * x, k) - mx * mx;
  const PlaneD vy = filter(y * y, k) - my * my;
  const PlaneD cxy = filter(x * y, k) - mx * my;
  const double c1 = std::pow(o.k1 * o.data_range, 2), c2 = std::pow(o.k2 * o.data_range, 2);
  const PlaneD s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  return s.block(radius, radius, s.rows() - 2 * radius, s.cols() - 2 * radius).mean();
}

double luminance_ssim(const RgbImage& a, const RgbImage& b, const SsimOptions& options) {
  return ssim(luminance(a), luminance(b), options);
}

}  // namespace histaug
