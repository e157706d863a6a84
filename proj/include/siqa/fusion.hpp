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

#include "siqa/image.hpp"
#include "siqa/matrix.hpp"

namespace siqa::fusion {

enum class DisparityMethod { kPhase, kBlockMatch };

/// Knobs of the binocular combination model.
struct FusionParams {
  double g = 0.053;              // fusion threshold
  double f_s = 0.68;             // spatial frequency, cycles/degree
  double pixels_per_degree = 32.0;
  double mu_sigma = 7.0 / 6.0 * 3.0;  // local-mean Gaussian std, pixels
  double c1 = 1e-3;              // contrast normalization stabilizer
  DisparityMethod disparity = DisparityMethod::kPhase;

  void validate() const;
};

/// Per-pixel modulation contrast and local phase of one eye's image.
struct AnalyticDecomposition {
  Matrix m;      // modulation contrast, >= 0
  Matrix theta;  // local phase, (-pi, pi]
};

/// Per-pixel gain and the disparity field that produced it.
struct GainField {
  Matrix alpha;      // in [0, 1]; exactly 1 where disparity is 0
  Matrix disparity;  // degrees of visual angle, >= 0
};

/// Horizontal sine grating: I(x, y) = i0 + m*cos(2*pi*f_s*(x/ppd) + theta).
/// Requires 0 <= i0 <= 1, 0 <= m <= min(i0, 1 - i0), f_s > 0, ppd > 0.
GrayImage grating_image(double i0, double m, double f_s, double theta,
                        double ppd, int width, int height);

/// Quadrature decomposition into local contrast and phase: the mean-removed
/// image and its per-row discrete Hilbert transform form the analytic
/// signal z; m = |z| / (local mean + c1), theta = arg(z), arg(0) = 0.
AnalyticDecomposition analytic_decompose(const GrayImage& img,
                                         const FusionParams& p);

/// Gain control: alpha = 1 - d / (g^2 + d). Requires d >= 0, g > 0.
double gain_control(double d, double g);

/// Combination before sensory/motor fusion. Returns (m_hat, theta_hat):
/// m_hat   = sqrt(mL^2 + mR^2 + 2 mL mR cos(thetaR - thetaL))
/// theta_hat = atan2(mL sin thetaL + mR sin thetaR,
///                   mL cos thetaL + mR cos thetaR)
/// Both-zero contrast yields (0, 0).
struct PrefusionResult {
  double m_hat;
  double theta_hat;
};
PrefusionResult prefusion_sum(double m_l, double m_r, double theta_l,
                              double theta_r);

/// Post-fusion contrast with the phase difference scaled by alpha. The
/// difference thetaR - thetaL is wrapped to (-pi, pi] before scaling.
double fuse_contrast(double m_l, double m_r, double theta_l, double theta_r,
                     double alpha);

/// Post-fusion phase; result in (-pi, pi], 0 when both eyes contribute
/// nothing.
double fuse_phase(double m_l, double m_r, double theta_l, double theta_r,
                  double alpha);

/// Disparity from local phase: |wrap(thetaR - thetaL)| mapped to [0, pi],
/// divided by 2*pi*f_s, giving degrees of visual angle.
Matrix phase_disparity(const AnalyticDecomposition& dec_l,
                       const AnalyticDecomposition& dec_r,
                       const FusionParams& p);

/// Disparity from 8x8 block matching (SAD, horizontal search +-16 px),
/// converted to degrees via pixels_per_degree.
Matrix block_disparity(const GrayImage& left, const GrayImage& right,
                       const FusionParams& p);

GainField gain_field(const Matrix& disparity, const FusionParams& p);

/// Full pipeline: decompose both eyes, compute disparity and per-pixel
/// gain, then fuse into the synthesized contrast and phase images.
FusedImages synthesize_pair(const GrayImage& left, const GrayImage& right,
                            const FusionParams& p = {});

}  // namespace siqa::fusion
