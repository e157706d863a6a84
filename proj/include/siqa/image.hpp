// Copyright 2026 The siqa Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>

#include "siqa/matrix.hpp"

namespace siqa {

/// Luminance image with values in [0, 1].
struct GrayImage {
  Matrix pix;

  int width() const { return pix.cols(); }
  int height() const { return pix.rows(); }

  /// Clamp to [0, 1], reject non-finite entries.
  static GrayImage from_matrix(Matrix m);
};

/// Load a PGM/PPM (P2/P3/P5/P6) image, 8- or 16-bit. RGB input is reduced
/// to luminance with BT.601 weights (0.299, 0.587, 0.114).
GrayImage load_image(const std::filesystem::path& path);

/// Write an 8- or 16-bit binary PGM (P5). bits must be 8 or 16.
void save_pgm(const GrayImage& img, const std::filesystem::path& path,
              int bits = 16);

/// Min-max normalize an arbitrary matrix and write it as an 8-bit PGM.
/// Intended for quick visual inspection of fused/phase maps.
void save_preview(const Matrix& m, const std::filesystem::path& path);

/// Synthesized image pair produced by binocular fusion.
struct FusedImages {
  Matrix contrast;  // m' >= 0
  Matrix phase;     // theta' in (-pi, pi]
};

/// Binary container for a FusedImages pair: magic "SIQF", then
/// little-endian u32 version, u32 height, u32 width, followed by two
/// row-major float32 planes (contrast, then phase).
void save_fused(const FusedImages& f, const std::filesystem::path& path);
FusedImages load_fused(const std::filesystem::path& path);

}  // namespace siqa
