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

// Per-pixel color space conversions. Conventions follow the widely used
// scientific-imaging definitions: HSV with hue in [0, 1), CIE L*a*b* from
// sRGB under D65 / 2-degree observer, and H&E-DAB optical-density
// deconvolution with the Ruifrok-Johnston stain matrix.

#include <Eigen/Core>

namespace histaug::color {

using Vec3 = Eigen::Vector3d;

Vec3 rgb_to_hsv(const Vec3& rgb);
Vec3 hsv_to_rgb(const Vec3& hsv);

Vec3 rgb_to_xyz(const Vec3& rgb);
Vec3 xyz_to_lab(const Vec3& xyz);
inline Vec3 rgb_to_lab(const Vec3& rgb) { return xyz_to_lab(rgb_to_xyz(rgb)); }

/// Stain concentrations (hematoxylin, eosin, DAB), clipped at zero.
Vec3 rgb_to_hed(const Vec3& rgb);

/// Rows are the H, E and DAB optical-density vectors.
const Eigen::Matrix3d& rgb_from_hed();
const Eigen::Matrix3d& hed_from_rgb();

inline double rgb_to_gray(const Vec3& rgb) { return 0.2125 * rgb[0] + 0.7154 * rgb[1] + 0.0721 * rgb[2]; }

}  // namespace histaug::color
