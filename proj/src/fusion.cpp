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

#include "siqa/fusion.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "siqa/common.hpp"

namespace siqa::fusion {

namespace {

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex g_fftw_mutex;

/// Analytic signal of each row: zero out negative frequencies, double the
/// positive ones, keep DC and (for even N) Nyquist as-is.
void analytic_rows(const Matrix& src, Matrix& real_out, Matrix& imag_out) {
  const int rows = src.rows(), n = src.cols();
  real_out = Matrix(rows, n);
  imag_out = Matrix(rows, n);

  std::vector<std::complex<double>> buf_in(n), buf_out(n);
  fftw_plan fwd, inv;
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fwd = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf_in.data()),
                           reinterpret_cast<fftw_complex*>(buf_out.data()),
                           FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    inv = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf_out.data()),
                           reinterpret_cast<fftw_complex*>(buf_in.data()),
                           FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  const int half = n / 2;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < n; ++c) buf_in[c] = src(r, c);
    fftw_execute_dft(fwd, reinterpret_cast<fftw_complex*>(buf_in.data()),
                     reinterpret_cast<fftw_complex*>(buf_out.data()));
    for (int k = 1; k < half + (n % 2 ? 1 : 0); ++k) buf_out[k] *= 2.0;
    for (int k = half + 1; k < n; ++k) buf_out[k] = 0.0;
    fftw_execute_dft(inv, reinterpret_cast<fftw_complex*>(buf_out.data()),
                     reinterpret_cast<fftw_complex*>(buf_in.data()));
    for (int c = 0; c < n; ++c) {
      real_out(r, c) = buf_in[c].real() / n;
      imag_out(r, c) = buf_in[c].imag() / n;
    }
  }

  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
}

void require_pipeline_entry(const GrayImage& img, const char* who) {
  if (img.width() < 16 || img.height() < 16) {
    throw std::invalid_argument(std::string(who) +
                                ": image must be at least 16x16");
  }
}

}  // namespace

void FusionParams::validate() const {
  if (g <= 0.0 || f_s <= 0.0 || pixels_per_degree <= 0.0 || c1 <= 0.0 ||
      mu_sigma <= 0.0) {
    throw std::invalid_argument("FusionParams: g, f_s, pixels_per_degree, "
                                "mu_sigma and c1 must all be positive");
  }
}

GrayImage grating_image(double i0, double m, double f_s, double theta,
                        double ppd, int width, int height) {
  if (i0 < 0.0 || i0 > 1.0) {
    throw std::invalid_argument("grating_image: i0 must be in [0, 1]");
  }
  if (m < 0.0 || m > std::min(i0, 1.0 - i0)) {
    throw std::invalid_argument(
        "grating_image: need 0 <= m <= min(i0, 1 - i0)");
  }
  if (f_s <= 0.0 || ppd <= 0.0) {
    throw std::invalid_argument("grating_image: f_s and ppd must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("grating_image: empty dimensions");
  }
  Matrix pix(height, width);
  for (int x = 0; x < width; ++x) {
    double v = i0 + m * std::cos(2.0 * kPi * f_s * (x / ppd) + theta);
    for (int y = 0; y < height; ++y) pix(y, x) = v;
  }
  return GrayImage::from_matrix(std::move(pix));
}

AnalyticDecomposition analytic_decompose(const GrayImage& img,
                                         const FusionParams& p) {
  p.validate();
  const int radius = static_cast<int>(std::ceil(3.0 * p.mu_sigma));
  Matrix mu = gaussian_smooth(img.pix, p.mu_sigma, radius);

  Matrix detrended(img.height(), img.width());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      detrended(r, c) = img.pix(r, c) - mu(r, c);
    }
  }

  Matrix re, im;
  analytic_rows(detrended, re, im);

  AnalyticDecomposition dec;
  dec.m = Matrix(img.height(), img.width());
  dec.theta = Matrix(img.height(), img.width());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      double x = re(r, c), y = im(r, c);
      dec.m(r, c) = std::hypot(x, y) / (mu(r, c) + p.c1);
      dec.theta(r, c) = (x == 0.0 && y == 0.0) ? 0.0 : std::atan2(y, x);
    }
  }
  return dec;
}

double gain_control(double d, double g) {
  if (d < 0.0) throw std::invalid_argument("gain_control: disparity < 0");
  if (g <= 0.0) throw std::invalid_argument("gain_control: threshold g <= 0");
  return 1.0 - d / (g * g + d);
}

PrefusionResult prefusion_sum(double m_l, double m_r, double theta_l,
                              double theta_r) {
  // Shares the fuse_* expressions at alpha = 1 so the pre/post forms agree
  // bit-for-bit.
  return {fuse_contrast(m_l, m_r, theta_l, theta_r, 1.0),
          fuse_phase(m_l, m_r, theta_l, theta_r, 1.0)};
}

double fuse_contrast(double m_l, double m_r, double theta_l, double theta_r,
                     double alpha) {
  const double dtheta = wrap_phase(theta_r - theta_l);
  double s = m_l * m_l + m_r * m_r +
             2.0 * m_l * m_r * std::cos(alpha * dtheta);
  return std::sqrt(std::max(s, 0.0));
}

double fuse_phase(double m_l, double m_r, double theta_l, double theta_r,
                  double alpha) {
  const double num =
      m_l * std::sin(alpha * theta_l) + m_r * std::sin(alpha * theta_r);
  const double den =
      m_l * std::cos(alpha * theta_l) + m_r * std::cos(alpha * theta_r);
  if (num == 0.0 && den == 0.0) return 0.0;
  return wrap_phase(std::atan2(num, den));
}

Matrix phase_disparity(const AnalyticDecomposition& dec_l,
                       const AnalyticDecomposition& dec_r,
                       const FusionParams& p) {
  p.validate();
  if (!dec_l.theta.same_shape(dec_r.theta)) {
    throw std::invalid_argument("phase_disparity: dimension mismatch");
  }
  Matrix d(dec_l.theta.rows(), dec_l.theta.cols());
  const double scale = 1.0 / (2.0 * kPi * p.f_s);
  for (int r = 0; r < d.rows(); ++r) {
    for (int c = 0; c < d.cols(); ++c) {
      double dt = std::fabs(wrap_phase(dec_r.theta(r, c) - dec_l.theta(r, c)));
      d(r, c) = dt * scale;
    }
  }
  return d;
}

Matrix block_disparity(const GrayImage& left, const GrayImage& right,
                       const FusionParams& p) {
  p.validate();
  if (!left.pix.same_shape(right.pix)) {
    throw std::invalid_argument("block_disparity: dimension mismatch");
  }
  constexpr int kBlock = 8;
  constexpr int kSearch = 16;
  const int rows = left.height(), cols = left.width();
  Matrix d(rows, cols);
  for (int br = 0; br < rows; br += kBlock) {
    const int bh = std::min(kBlock, rows - br);
    for (int bc = 0; bc < cols; bc += kBlock) {
      const int bw = std::min(kBlock, cols - bc);
      int best_off = 0;
      double best_sad = std::numeric_limits<double>::infinity();
      for (int off = -kSearch; off <= kSearch; ++off) {
        if (bc + off < 0 || bc + off + bw > cols) continue;
        double sad = 0.0;
        for (int r = 0; r < bh; ++r) {
          for (int c = 0; c < bw; ++c) {
            sad += std::fabs(left.pix(br + r, bc + c) -
                             right.pix(br + r, bc + off + c));
          }
        }
        if (sad < best_sad) {
          best_sad = sad;
          best_off = off;
        }
      }
      const double deg = std::fabs(best_off) / p.pixels_per_degree;
      for (int r = 0; r < bh; ++r) {
        for (int c = 0; c < bw; ++c) d(br + r, bc + c) = deg;
      }
    }
  }
  return d;
}

GainField gain_field(const Matrix& disparity, const FusionParams& p) {
  p.validate();
  GainField gf;
  gf.disparity = disparity;
  gf.alpha = Matrix(disparity.rows(), disparity.cols());
  for (int r = 0; r < disparity.rows(); ++r) {
    for (int c = 0; c < disparity.cols(); ++c) {
      gf.alpha(r, c) = gain_control(disparity(r, c), p.g);
    }
  }
  return gf;
}

FusedImages synthesize_pair(const GrayImage& left, const GrayImage& right,
                            const FusionParams& p) {
  p.validate();
  require_pipeline_entry(left, "synthesize_pair");
  if (!left.pix.same_shape(right.pix)) {
    throw std::invalid_argument("synthesize_pair: dimension mismatch");
  }

  const AnalyticDecomposition dec_l = analytic_decompose(left, p);
  const AnalyticDecomposition dec_r = analytic_decompose(right, p);

  const Matrix disparity = p.disparity == DisparityMethod::kPhase
                               ? phase_disparity(dec_l, dec_r, p)
                               : block_disparity(left, right, p);
  const GainField gf = gain_field(disparity, p);

  FusedImages out;
  out.contrast = Matrix(left.height(), left.width());
  out.phase = Matrix(left.height(), left.width());
  for (int r = 0; r < left.height(); ++r) {
    for (int c = 0; c < left.width(); ++c) {
      const double ml = dec_l.m(r, c), mr = dec_r.m(r, c);
      const double tl = dec_l.theta(r, c), tr = dec_r.theta(r, c);
      const double a = gf.alpha(r, c);
      out.contrast(r, c) = fuse_contrast(ml, mr, tl, tr, a);
      out.phase(r, c) = fuse_phase(ml, mr, tl, tr, a);
    }
  }
  return out;
}

}  // namespace siqa::fusion
