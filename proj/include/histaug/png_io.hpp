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

#include <filesystem>

#include "histaug/image.hpp"

namespace histaug {

/// Reads any PNG as 8-bit RGB scaled to [0, 1]. Gray and alpha are expanded or dropped.
RgbImage read_png(const std::filesystem::path& path);

/// Writes an RGB raster, quantizing with round(v * 255) after clamping.
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Reads a PNG as a binary mask: any nonzero luminance is foreground.
Mask read_mask_png(const std::filesystem::path& path);

void write_mask_png(const std::filesystem::path& path, const Mask& mask);

/// Quantizes to the 8-bit grid write_png would produce.
RgbImage quantize8(const RgbImage& image);

}  // namespace histaug
