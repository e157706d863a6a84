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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "siqa/image.hpp"

namespace siqa::dataset {

enum class Distortion {
  kPristine,
  kWhiteNoise,
  kBlur,
  kBlock,
  kJp2k,
  kJpeg,
  kFastFading,
  kOther,
};

std::string to_string(Distortion d);
std::optional<Distortion> distortion_from_string(const std::string& s);

enum class Eye { kBoth, kLeft, kRight };

std::string to_string(Eye e);

/// One stereo pair of a corpus.
struct StereoRecord {
  std::string id;
  std::string reference_id;
  std::filesystem::path left_path;
  std::filesystem::path right_path;
  double dmos = 0.0;
  Distortion distortion = Distortion::kPristine;
  bool symmetric = true;
};

struct Corpus {
  std::string name;
  double dmos_lo = 0.0;
  double dmos_hi = 0.0;
  std::vector<StereoRecord> records;
};

/// Load a tab-separated manifest. Relative image paths resolve against the
/// manifest's directory, or against $SIQA_CORPUS_ROOT when it is set.
/// Duplicate ids, unreadable files, out-of-range dmos and malformed rows
/// are rejected with row-numbered diagnostics.
Corpus load_manifest(const std::filesystem::path& path);

/// Write a corpus back out in the manifest format load_manifest reads.
void save_manifest(const Corpus& corpus, const std::filesystem::path& path);

/// Additive white Gaussian noise with the given std, clamped to [0, 1].
GrayImage distort_wn(const GrayImage& img, double sigma, std::uint64_t seed);

/// Separable Gaussian blur, kernel radius ceil(3*sigma), reflected borders.
GrayImage distort_blur(const GrayImage& img, double sigma_px);

/// JPEG-like blockiness: per 8x8 block DCT, uniform quantization with step
/// 0.02 * (q_scale - 1), inverse DCT, clamp. q_scale = 1 is the plain
/// transform round-trip.
GrayImage distort_block(const GrayImage& img, double q_scale);

struct DistortionSpec {
  Distortion kind = Distortion::kWhiteNoise;  // wn, blur or block
  double level = 0.0;
  Eye eye = Eye::kBoth;
};

struct PristinePair {
  std::string scene_id;
  GrayImage left;
  GrayImage right;
};

/// Surrogate subjective score: strictly monotone in level, saturating
/// below 100; asymmetric (one-eye) distortion scores 0.6x its symmetric
/// counterpart. Not a human DMOS.
double pseudo_dmos(Distortion kind, double level, Eye eye);

/// Write distorted image files plus a manifest into out_dir. Each scene
/// contributes one pristine record and one record per spec. Returns the
/// manifest path.
std::filesystem::path make_synthetic_corpus(
    const std::vector<PristinePair>& pristine_pairs,
    const std::vector<DistortionSpec>& specs,
    const std::filesystem::path& out_dir, std::uint64_t seed);

/// Procedural stereo scene for desk-scale testing: a band-limited random
/// cosine field with per-component horizontal disparity between the eyes.
PristinePair render_demo_scene(const std::string& scene_id, int width,
                               int height, std::uint64_t seed);

}  // namespace siqa::dataset
