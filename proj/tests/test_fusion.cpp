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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "siqa/common.hpp"
#include "siqa/fusion.hpp"

using namespace siqa;
using namespace siqa::fusion;

namespace {

// Grating whose period (8 px) is short against the local-mean window, so
// the mean removal leaves the full oscillation.
constexpr double kTestFs = 4.0;   // cycles/degree
constexpr double kTestPpd = 32.0; // -> 8 px period

double central_mean(const Matrix& m, int margin) {
  double acc = 0.0;
  int count = 0;
  for (int r = margin; r < m.rows() - margin; ++r) {
    for (int c = margin; c < m.cols() - margin; ++c) {
      acc += m(r, c);
      ++count;
    }
  }
  REQUIRE(count > 0);
  return acc / count;
}

}  // namespace

TEST_CASE("grating_image basics") {
  GrayImage flat = grating_image(0.4, 0.0, 0.68, 1.0, 32, 40, 24);
  for (double v : flat.pix.values()) CHECK(v == doctest::Approx(0.4));

  GrayImage g = grating_image(0.5, 0.25, 0.68, 0.0, 32, 64, 16);
  CHECK(g.pix(0, 0) == doctest::Approx(0.75));
  CHECK(g.pix(7, 0) == doctest::Approx(g.pix(0, 0)));  // constant columns

  // one period at f_s=0.68 cpd, 32 ppd is ~47.06 px; x=47 nearly repeats x=0
  GrayImage p = grating_image(0.5, 0.2, 0.68, 0.0, 32, 64, 16);
  CHECK(std::fabs(p.pix(0, 47) - p.pix(0, 0)) < 0.01);
}

TEST_CASE("grating_image rejects out-of-range parameters") {
  CHECK_THROWS_AS(grating_image(1.2, 0.0, 1, 0, 32, 8, 8),
                  std::invalid_argument);
  CHECK_THROWS_AS(grating_image(0.5, 0.6, 1, 0, 32, 8, 8),
                  std::invalid_argument);  // m > min(i0, 1-i0)
  CHECK_THROWS_AS(grating_image(0.5, -0.1, 1, 0, 32, 8, 8),
                  std::invalid_argument);
  CHECK_THROWS_AS(grating_image(0.5, 0.1, 0.0, 0, 32, 8, 8),
                  std::invalid_argument);
}

TEST_CASE("analytic_decompose of a constant image is zero") {
  GrayImage img = GrayImage::from_matrix(Matrix(32, 48, 0.37));
  AnalyticDecomposition dec = analytic_decompose(img, FusionParams{});
  for (double v : dec.m.values()) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
  for (double v : dec.theta.values()) CHECK(v == 0.0);
}

TEST_CASE("analytic_decompose recovers grating contrast and phase") {
  FusionParams p;
  p.f_s = kTestFs;
  p.pixels_per_degree = kTestPpd;
  GrayImage img = grating_image(0.5, 0.2, kTestFs, 0.3, kTestPpd, 128, 48);
  AnalyticDecomposition dec = analytic_decompose(img, p);

  const int margin = 16;  // >= 2 periods
  const double expected = 0.2 / 0.5;
  for (int r = margin; r < 48 - margin; ++r) {
    for (int c = margin; c < 128 - margin; ++c) {
      CHECK(dec.m(r, c) == doctest::Approx(expected).epsilon(0.10));
    }
  }

  // quarter period = 2 px -> phase difference pi/2
  const int r0 = 24;
  for (int c = margin; c < 128 - margin - 2; ++c) {
    double diff = std::fabs(wrap_phase(dec.theta(r0, c + 2) - dec.theta(r0, c)));
    CHECK(diff == doctest::Approx(kPi / 2).epsilon(0.05 / (kPi / 2)));
  }
}

TEST_CASE("gain_control values and monotonicity") {
  CHECK(gain_control(0.0, 0.053) == doctest::Approx(1.0).epsilon(1e-12));
  const double g = 0.053;
  CHECK(gain_control(g * g, g) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gain_control(0.01, 0.053) == doctest::Approx(0.21929894).epsilon(1e-5 / 0.22));
  CHECK_THROWS_AS(gain_control(-1e-9, 0.053), std::invalid_argument);
  CHECK_THROWS_AS(gain_control(0.1, 0.0), std::invalid_argument);

  // strictly decreasing, range (0, 1]
  double prev = gain_control(0.0, g);
  CHECK(prev == 1.0);
  for (double d = 1e-4; d < 2.0; d += 1e-2) {
    double a = gain_control(d, g);
    CHECK(a < prev);
    CHECK(a > 0.0);
    prev = a;
  }
}

TEST_CASE("prefusion_sum closed-form cases") {
  auto [m1, t1] = prefusion_sum(0.3, 0.3, 0.7, 0.7);
  CHECK(m1 == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(t1 == doctest::Approx(0.7).epsilon(1e-12));

  auto [m2, t2] = prefusion_sum(0.4, 0.0, 1.1, -2.0);
  CHECK(m2 == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(t2 == doctest::Approx(1.1).epsilon(1e-12));

  auto [m3, t3] = prefusion_sum(0.5, 0.5, 0.0, kPi);
  CHECK(m3 == doctest::Approx(0.0).epsilon(1e-9));

  auto [m4, t4] = prefusion_sum(0.0, 0.0, 1.0, 2.0);
  CHECK(m4 == 0.0);
  CHECK(t4 == 0.0);
}

TEST_CASE("fuse_contrast trivial identities") {
  CHECK(fuse_contrast(0.25, 0.0, 0.4, -1.0, 0.3) == doctest::Approx(0.25));
  CHECK(fuse_contrast(0.3, 0.3, 0.9, 0.9, 0.77) == doctest::Approx(0.6));
  // alpha*(thetaR-thetaL) = pi cancels equal contrasts
  CHECK(fuse_contrast(0.5, 0.5, 0.0, kPi, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fuse_phase trivial identities") {
  CHECK(fuse_phase(0.3, 0.0, 0.8, 2.2, 0.5) == doctest::Approx(0.4));
  CHECK(fuse_phase(0.2, 0.7, -1.1, -1.1, 0.6) == doctest::Approx(-0.66));
  CHECK(fuse_phase(0.4, 0.4, 0.9, -0.9, 0.8) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fuse_phase(0.0, 0.0, 1.0, 2.0, 0.5) == 0.0);
}

TEST_CASE("fuse_contrast at alpha=1 equals prefusion exactly") {
  std::mt19937_64 rng(7);
  auto u = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  for (int i = 0; i < 200; ++i) {
    double ml = u(0, 1), mr = u(0, 1), tl = u(-kPi, kPi), tr = u(-kPi, kPi);
    CHECK(fuse_contrast(ml, mr, tl, tr, 1.0) ==
          prefusion_sum(ml, mr, tl, tr).m_hat);
  }
}

TEST_CASE("triangle bounds hold for randomized inputs") {
  std::mt19937_64 rng(11);
  auto u = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  for (int i = 0; i < 100; ++i) {
    double ml = u(0, 2), mr = u(0, 2);
    double tl = u(-4, 4), tr = u(-4, 4), alpha = u(0, 1);
    double fused = fuse_contrast(ml, mr, tl, tr, alpha);
    CHECK(fused <= ml + mr + 1e-9);
    CHECK(fused >= std::fabs(ml - mr) - 1e-9);
  }
}

TEST_CASE("fused contrast is continuous in alpha") {
  std::mt19937_64 rng(13);
  auto u = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  for (int i = 0; i < 20; ++i) {
    double ml = u(0, 1), mr = u(0, 1), tl = u(-kPi, kPi), tr = u(-kPi, kPi);
    double prev = fuse_contrast(ml, mr, tl, tr, 0.0);
    double max_jump = 0.0;
    for (double a = 1e-4; a <= 1.0 + 1e-12; a += 1e-4) {
      double cur = fuse_contrast(ml, mr, tl, tr, a);
      max_jump = std::max(max_jump, std::fabs(cur - prev));
      prev = cur;
    }
    CHECK(max_jump < 1e-3);
  }
}

TEST_CASE("phase_disparity mapping and symmetry") {
  FusionParams p;  // f_s = 0.68
  AnalyticDecomposition a, b;
  a.m = Matrix(4, 4, 0.5);
  a.theta = Matrix(4, 4, 0.3);
  b.m = Matrix(4, 4, 0.5);
  b.theta = Matrix(4, 4, 0.3);

  Matrix zero = phase_disparity(a, b, p);
  for (double v : zero.values()) CHECK(v == 0.0);

  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) b.theta(r, c) = a.theta(r, c) + kPi;
  }
  Matrix half = phase_disparity(a, b, p);
  for (double v : half.values()) {
    CHECK(v == doctest::Approx(0.5 / 0.68).epsilon(1e-4));
  }

  Matrix swapped = phase_disparity(b, a, p);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) CHECK(swapped(r, c) == half(r, c));
  }

  AnalyticDecomposition small;
  small.m = Matrix(3, 3, 0.1);
  small.theta = Matrix(3, 3, 0.0);
  CHECK_THROWS_AS(phase_disparity(a, small, p), std::invalid_argument);
}

TEST_CASE("synthesize_pair with identical eyes doubles contrast") {
  FusionParams p;
  p.f_s = kTestFs;
  p.pixels_per_degree = kTestPpd;
  GrayImage img = grating_image(0.5, 0.15, kTestFs, 0.0, kTestPpd, 96, 48);
  AnalyticDecomposition dec = analytic_decompose(img, p);
  FusedImages fused = synthesize_pair(img, img, p);

  for (int r = 0; r < 48; ++r) {
    for (int c = 0; c < 96; ++c) {
      CHECK(fused.contrast(r, c) ==
            doctest::Approx(2.0 * dec.m(r, c)).epsilon(1e-12));
      CHECK(fused.phase(r, c) == doctest::Approx(dec.theta(r, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("synthesize_pair is symmetric under eye swap") {
  FusionParams p;
  p.f_s = kTestFs;
  p.pixels_per_degree = kTestPpd;
  GrayImage left = grating_image(0.5, 0.2, kTestFs, 0.0, kTestPpd, 96, 48);
  GrayImage right = grating_image(0.5, 0.1, kTestFs, 0.9, kTestPpd, 96, 48);

  FusedImages lr = synthesize_pair(left, right, p);
  FusedImages rl = synthesize_pair(right, left, p);
  for (int r = 0; r < 48; ++r) {
    for (int c = 0; c < 96; ++c) {
      CHECK(std::fabs(lr.contrast(r, c) - rl.contrast(r, c)) <= 1e-12);
      CHECK(std::fabs(lr.phase(r, c) - rl.phase(r, c)) <= 1e-12);
    }
  }
}

TEST_CASE("synthesize_pair matches the closed-form grating model") {
  FusionParams p;
  p.f_s = kTestFs;
  p.pixels_per_degree = kTestPpd;

  const double i0 = 0.5, m_l = 0.18, m_r = 0.10;
  const double theta_l = 0.2, theta_r = 0.85;
  GrayImage left = grating_image(i0, m_l, kTestFs, theta_l, kTestPpd, 160, 64);
  GrayImage right = grating_image(i0, m_r, kTestFs, theta_r, kTestPpd, 160, 64);
  FusedImages fused = synthesize_pair(left, right, p);

  // ground truth from the grating parameters
  const double c_l = m_l / i0, c_r = m_r / i0;
  const double dtheta = wrap_phase(theta_r - theta_l);
  const double disparity = std::fabs(dtheta) / (2.0 * kPi * p.f_s);
  const double alpha = gain_control(disparity, p.g);
  const double expected = fuse_contrast(c_l, c_r, theta_l, theta_r, alpha);

  const int margin = 16;
  Matrix rel_err(64 - 2 * margin, 160 - 2 * margin);
  for (int r = margin; r < 64 - margin; ++r) {
    for (int c = margin; c < 160 - margin; ++c) {
      rel_err(r - margin, c - margin) =
          std::fabs(fused.contrast(r, c) - expected) / expected;
    }
  }
  CHECK(central_mean(rel_err, 0) < 0.10);

  // phase: compare against Eq. 8 evaluated with the per-pixel grating phase
  double max_phase_err = 0.0;
  for (int r = margin; r < 64 - margin; ++r) {
    for (int c = margin; c < 160 - margin; ++c) {
      double base = 2.0 * kPi * kTestFs * (c / kTestPpd);
      double tl = wrap_phase(base + theta_l);
      double tr = wrap_phase(base + theta_r);
      double want = fuse_phase(c_l, c_r, tl, tr, alpha);
      double err = std::fabs(wrap_phase(fused.phase(r, c) - want));
      max_phase_err = std::max(max_phase_err, err);
    }
  }
  CHECK(max_phase_err < 0.10 * kPi);
}

TEST_CASE("synthesize_pair validates inputs") {
  GrayImage small = GrayImage::from_matrix(Matrix(8, 8, 0.5));
  CHECK_THROWS_AS(synthesize_pair(small, small, FusionParams{}),
                  std::invalid_argument);
  GrayImage a = GrayImage::from_matrix(Matrix(32, 32, 0.5));
  GrayImage b = GrayImage::from_matrix(Matrix(32, 48, 0.5));
  CHECK_THROWS_AS(synthesize_pair(a, b, FusionParams{}),
                  std::invalid_argument);
}

TEST_CASE("block disparity is zero for identical eyes") {
  FusionParams p;
  p.disparity = DisparityMethod::kBlockMatch;
  GrayImage img = grating_image(0.5, 0.2, kTestFs, 0.0, kTestPpd, 64, 32);
  Matrix d = block_disparity(img, img, p);
  for (double v : d.values()) CHECK(v == 0.0);
  FusedImages fused = synthesize_pair(img, img, p);
  CHECK(fused.contrast.rows() == 32);
}

TEST_CASE("gain_field pins alpha to 1 at zero disparity") {
  FusionParams p;
  Matrix d(4, 4, 0.0);
  d(1, 2) = 0.02;
  GainField gf = gain_field(d, p);
  CHECK(gf.alpha(0, 0) == 1.0);
  CHECK(gf.alpha(1, 2) == doctest::Approx(1.0 - 0.02 / (0.053 * 0.053 + 0.02)));
  for (double v : gf.alpha.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
