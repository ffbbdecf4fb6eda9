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

#include "histaug/image.hpp"

namespace histaug {

struct SsimOptions {
  double sigma = 1.5;
  /// Window radius is int(truncate * sigma + 0.5).
  double truncate = 3.5;
  double data_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean structural similarity of two planes with a Gaussian window and
/// population statistics; borders of the window radius are excluded from the
/// mean and the filter reflects at the edges.
double ssim(const Plane& a, const Plane& b, const SsimOptions& options = {});

/// SSIM of the luminance channels.
double luminance_ssim(const RgbImage& a, const RgbImage& b, const SsimOptions& options = {});

}  // namespace histaug
