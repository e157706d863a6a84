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

#include <array>
#include <span>
#include <string>
#include <vector>

#include "siqa/matrix.hpp"

namespace siqa::nss {

/// Mean-subtracted contrast-normalized coefficients of one scale.
struct MscnField {
  Matrix values;
  int scale = 1;  // 1 or 2
};

/// Symmetric generalized Gaussian fit.
struct GgdParams {
  double alpha;   // shape, in [0.2, 10]
  double sigma2;  // variance (second moment)
};

/// Asymmetric generalized Gaussian fit. eta is determined by the other
/// three parameters: eta = (beta_l - beta_r) * Gamma(2/nu) / Gamma(1/nu).
struct AggdParams {
  double nu;        // shape, in [0.2, 10]
  double sigma_l2;  // left variance
  double sigma_r2;  // right variance
  double eta;       // mean parameter
};

enum class FeatureKind { kPhase, kContrast };

/// Ordered feature vector: 40 entries for phase, 36 for contrast.
/// Slot layout is scale-major; per scale the base MSCN fit comes first
/// (AGGD nu/sigma_l2/sigma_r2/eta for phase, GGD alpha/sigma2 for
/// contrast), then AGGD blocks for the H, V, D1, D2 paired products.
struct FeatureVector {
  FeatureKind kind;
  std::vector<double> values;
};

inline constexpr int kPhaseFeatureCount = 40;
inline constexpr int kContrastFeatureCount = 36;

/// Names of every slot, in order, for feature-file headers.
std::vector<std::string> phase_slot_names();
std::vector<std::string> contrast_slot_names();

/// MSCN transform. The input is first normalized by its global maximum
/// absolute value so the stabilizer c acts on a fixed dynamic range; mu
/// and delta are Gaussian-weighted local mean and standard deviation over
/// a (2*radius+1)^2 window with symmetric reflection at the borders.
MscnField mscn(const Matrix& img, int window_radius = 3,
               double gaussian_sigma = 7.0 / 6.0, double c = 0.01);

/// Products of horizontally, vertically, and diagonally adjacent MSCN
/// coefficients, in the order H, V, D1, D2. Outputs shrink by one
/// row/column as needed.
std::array<Matrix, 4> paired_products(const MscnField& m);

/// 2x2 box average followed by decimation by 2. Requires both dimensions
/// to be at least 4.
Matrix downsample2(const Matrix& img);

/// Moment-matching GGD fit: invert rho(alpha) = G(1/a)G(3/a)/G(2/a)^2 on a
/// dense grid. Requires >= 100 samples, not all zero.
GgdParams fit_ggd(std::span<const double> samples);

/// Moment-matching AGGD fit via left/right RMS and the generalized
/// Gaussian ratio. Requires >= 100 samples with at least one nonzero.
AggdParams fit_aggd(std::span<const double> samples);

/// rho(alpha) = Gamma(1/alpha) * Gamma(3/alpha) / Gamma(2/alpha)^2.
double ggd_ratio(double alpha);

/// 40 features of a synthesized phase image (2 scales).
FeatureVector extract_phase_features(const Matrix& phase);

/// 36 features of a synthesized contrast image (2 scales).
FeatureVector extract_contrast_features(const Matrix& contrast);

}  // namespace siqa::nss
