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

#include "siqa/nss.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "siqa/common.hpp"

namespace siqa::nss {

namespace {

constexpr double kShapeGridLo = 0.2;
constexpr double kShapeGridHi = 10.0;
constexpr double kShapeGridStep = 1e-3;

/// Immutable rho(alpha) lookup over the shape grid, built once.
const std::vector<double>& rho_grid() {
  static const std::vector<double> grid = [] {
    const int n =
        static_cast<int>(std::llround((kShapeGridHi - kShapeGridLo) /
                                      kShapeGridStep)) + 1;
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
      g[i] = ggd_ratio(kShapeGridLo + i * kShapeGridStep);
    }
    return g;
  }();
  return grid;
}

/// Grid point whose rho is nearest to target; ties break toward the
/// smaller shape because the scan replaces only on strict improvement.
double invert_ratio(double target) {
  const std::vector<double>& grid = rho_grid();
  int best = 0;
  double best_diff = std::fabs(grid[0] - target);
  for (int i = 1; i < static_cast<int>(grid.size()); ++i) {
    double diff = std::fabs(grid[i] - target);
    if (diff < best_diff) {
      best_diff = diff;
      best = i;
    }
  }
  return kShapeGridLo + best * kShapeGridStep;
}

void append_aggd(std::vector<double>& out, const AggdParams& p) {
  out.push_back(p.nu);
  out.push_back(p.sigma_l2);
  out.push_back(p.sigma_r2);
  out.push_back(p.eta);
}

std::vector<double> flatten(const Matrix& m) {
  return m.values();
}

}  // namespace

double ggd_ratio(double alpha) {
  return std::tgamma(1.0 / alpha) * std::tgamma(3.0 / alpha) /
         (std::tgamma(2.0 / alpha) * std::tgamma(2.0 / alpha));
}

std::vector<std::string> phase_slot_names() {
  std::vector<std::string> names;
  const char* dirs[] = {"h", "v", "d1", "d2"};
  for (int s = 1; s <= 2; ++s) {
    std::string pre = "s" + std::to_string(s) + "_";
    for (const char* suffix : {"nu", "sigma_l2", "sigma_r2", "eta"}) {
      names.push_back(pre + "mscn_" + suffix);
    }
    for (const char* d : dirs) {
      for (const char* suffix : {"nu", "sigma_l2", "sigma_r2", "eta"}) {
        names.push_back(pre + d + "_" + suffix);
      }
    }
  }
  return names;
}

std::vector<std::string> contrast_slot_names() {
  std::vector<std::string> names;
  const char* dirs[] = {"h", "v", "d1", "d2"};
  for (int s = 1; s <= 2; ++s) {
    std::string pre = "s" + std::to_string(s) + "_";
    names.push_back(pre + "mscn_alpha");
    names.push_back(pre + "mscn_sigma2");
    for (const char* d : dirs) {
      for (const char* suffix : {"nu", "sigma_l2", "sigma_r2", "eta"}) {
        names.push_back(pre + d + "_" + suffix);
      }
    }
  }
  return names;
}

MscnField mscn(const Matrix& img, int window_radius, double gaussian_sigma,
               double c) {
  if (c <= 0.0) throw std::invalid_argument("mscn: stabilizer c must be > 0");
  const int rows = img.rows(), cols = img.cols();

  // Normalize so c is proportionate regardless of the source's dynamic
  // range (phase lives in (-pi, pi], contrast in [0, ~2]).
  const double scale = max_abs(img);
  Matrix norm(rows, cols);
  if (scale > 0.0) {
    for (int r = 0; r < rows; ++r) {
      for (int col = 0; col < cols; ++col) norm(r, col) = img(r, col) / scale;
    }
  }

  Matrix mu = gaussian_smooth(norm, gaussian_sigma, window_radius);
  Matrix sq(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int col = 0; col < cols; ++col) sq(r, col) = norm(r, col) * norm(r, col);
  }
  Matrix musq = gaussian_smooth(sq, gaussian_sigma, window_radius);

  MscnField out;
  out.values = Matrix(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int col = 0; col < cols; ++col) {
      double var = musq(r, col) - mu(r, col) * mu(r, col);
      double delta = std::sqrt(std::max(var, 0.0));
      out.values(r, col) = (norm(r, col) - mu(r, col)) / (delta + c);
    }
  }
  return out;
}

std::array<Matrix, 4> paired_products(const MscnField& field) {
  const Matrix& m = field.values;
  const int rows = m.rows(), cols = m.cols();
  Matrix h(rows, cols - 1), v(rows - 1, cols);
  Matrix d1(rows - 1, cols - 1), d2(rows - 1, cols - 1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) h(r, c) = m(r, c) * m(r, c + 1);
  }
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c < cols; ++c) v(r, c) = m(r, c) * m(r + 1, c);
  }
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) d1(r, c) = m(r, c) * m(r + 1, c + 1);
  }
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 1; c < cols; ++c) d2(r, c - 1) = m(r, c) * m(r + 1, c - 1);
  }
  return {std::move(h), std::move(v), std::move(d1), std::move(d2)};
}

Matrix downsample2(const Matrix& img) {
  if (img.rows() < 2 || img.cols() < 2) {
    throw std::invalid_argument("downsample2: input must be at least 2x2");
  }
  const int rows = img.rows() / 2, cols = img.cols() / 2;
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out(r, c) = 0.25 * (img(2 * r, 2 * c) + img(2 * r, 2 * c + 1) +
                          img(2 * r + 1, 2 * c) + img(2 * r + 1, 2 * c + 1));
    }
  }
  return out;
}

GgdParams fit_ggd(std::span<const double> samples) {
  if (samples.size() < 100) {
    throw DegenerateInputError("fit_ggd: need at least 100 samples");
  }
  double abs_sum = 0.0, sq_sum = 0.0;
  for (double x : samples) {
    abs_sum += std::fabs(x);
    sq_sum += x * x;
  }
  if (sq_sum == 0.0) {
    throw DegenerateInputError("fit_ggd: all samples are zero");
  }
  const double n = static_cast<double>(samples.size());
  const double mean_abs = abs_sum / n;
  const double second_moment = sq_sum / n;
  const double r_hat = (mean_abs * mean_abs) / second_moment;
  GgdParams p;
  p.alpha = invert_ratio(1.0 / r_hat);
  p.sigma2 = second_moment;
  return p;
}

AggdParams fit_aggd(std::span<const double> samples) {
  if (samples.size() < 100) {
    throw DegenerateInputError("fit_aggd: need at least 100 samples");
  }
  double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0;
  std::size_t left_n = 0, right_n = 0;
  for (double x : samples) {
    if (x < 0.0) {
      left_sq += x * x;
      ++left_n;
    } else if (x > 0.0) {
      right_sq += x * x;
      ++right_n;
    }
    abs_sum += std::fabs(x);
  }
  if (left_sq + right_sq == 0.0) {
    throw DegenerateInputError("fit_aggd: all samples are zero");
  }

  // Left/right RMS; a tiny floor keeps the variances positive when one
  // side has no mass.
  constexpr double kVarFloor = 1e-12;
  const double sigma_l =
      left_n ? std::sqrt(left_sq / static_cast<double>(left_n)) : 0.0;
  const double sigma_r =
      right_n ? std::sqrt(right_sq / static_cast<double>(right_n)) : 0.0;

  const double n = static_cast<double>(samples.size());
  const double gamma_hat = sigma_r > 0.0
                               ? sigma_l / sigma_r
                               : std::numeric_limits<double>::infinity();
  const double r_hat =
      (abs_sum / n) * (abs_sum / n) / ((left_sq + right_sq) / n);
  double r_norm;
  if (std::isinf(gamma_hat)) {
    r_norm = r_hat;  // (g^3+1)(g+1)/(g^2+1)^2 -> 1 as g -> inf
  } else {
    r_norm = r_hat * (gamma_hat * gamma_hat * gamma_hat + 1.0) *
             (gamma_hat + 1.0) /
             ((gamma_hat * gamma_hat + 1.0) * (gamma_hat * gamma_hat + 1.0));
  }

  AggdParams p;
  p.nu = invert_ratio(1.0 / r_norm);
  p.sigma_l2 = std::max(sigma_l * sigma_l, kVarFloor);
  p.sigma_r2 = std::max(sigma_r * sigma_r, kVarFloor);
  const double gr = std::tgamma(1.0 / p.nu) / std::tgamma(3.0 / p.nu);
  const double beta_l = sigma_l * std::sqrt(gr);
  const double beta_r = sigma_r * std::sqrt(gr);
  p.eta = (beta_l - beta_r) * std::tgamma(2.0 / p.nu) /
          std::tgamma(1.0 / p.nu);
  return p;
}

FeatureVector extract_phase_features(const Matrix& phase) {
  FeatureVector fv{FeatureKind::kPhase, {}};
  fv.values.reserve(kPhaseFeatureCount);
  Matrix scaled = phase;
  for (int scale = 1; scale <= 2; ++scale) {
    if (scale == 2) scaled = downsample2(scaled);
    MscnField field = mscn(scaled);
    field.scale = scale;
    append_aggd(fv.values, fit_aggd(flatten(field.values)));
    for (const Matrix& prod : paired_products(field)) {
      append_aggd(fv.values, fit_aggd(flatten(prod)));
    }
  }
  return fv;
}

FeatureVector extract_contrast_features(const Matrix& contrast) {
  FeatureVector fv{FeatureKind::kContrast, {}};
  fv.values.reserve(kContrastFeatureCount);
  Matrix scaled = contrast;
  for (int scale = 1; scale <= 2; ++scale) {
    if (scale == 2) scaled = downsample2(scaled);
    MscnField field = mscn(scaled);
    field.scale = scale;
    GgdParams g = fit_ggd(flatten(field.values));
    fv.values.push_back(g.alpha);
    fv.values.push_back(g.sigma2);
    for (const Matrix& prod : paired_products(field)) {
      append_aggd(fv.values, fit_aggd(flatten(prod)));
    }
  }
  return fv;
}

}  // namespace siqa::nss
