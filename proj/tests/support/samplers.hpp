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

// Test-only distribution samplers, independent of the fitting code they
// are used to check.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace siqa::testing {

inline double unit(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double gauss(std::mt19937_64& rng) {
  double u1 = unit(rng), u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline std::vector<double> sample_normal(std::size_t n, std::uint64_t seed,
                                         double mean = 0.0,
                                         double std_dev = 1.0) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (double& v : out) v = mean + std_dev * gauss(rng);
  return out;
}

inline std::vector<double> sample_laplace(std::size_t n, std::uint64_t seed,
                                          double b = 1.0) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (double& v : out) {
    double u = unit(rng) - 0.5;
    v = -b * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::fabs(u));
  }
  return out;
}

/// Marsaglia-Tsang gamma sampler (shape k > 0, scale 1).
inline double gamma_draw(std::mt19937_64& rng, double k) {
  if (k < 1.0) {
    // boost to shape k+1, then scale back
    double u = unit(rng);
    return gamma_draw(rng, k + 1.0) * std::pow(u, 1.0 / k);
  }
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = gauss(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = unit(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// GGD with shape alpha and variance sigma2: |X|^alpha / beta^alpha is
/// Gamma(1/alpha, 1), sign is a fair coin.
inline std::vector<double> sample_ggd(std::size_t n, double alpha,
                                      double sigma2, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double beta = std::sqrt(sigma2) *
                      std::sqrt(std::tgamma(1.0 / alpha) /
                                std::tgamma(3.0 / alpha));
  std::vector<double> out(n);
  for (double& v : out) {
    double mag = beta * std::pow(gamma_draw(rng, 1.0 / alpha), 1.0 / alpha);
    v = (rng() & 1) ? mag : -mag;
  }
  return out;
}

/// AGGD with shape nu and per-side scales; side probability is
/// beta_l / (beta_l + beta_r), magnitude drawn like the GGD.
inline std::vector<double> sample_aggd(std::size_t n, double nu,
                                       double sigma_l, double sigma_r,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double scale =
      std::sqrt(std::tgamma(1.0 / nu) / std::tgamma(3.0 / nu));
  const double beta_l = sigma_l * scale;
  const double beta_r = sigma_r * scale;
  const double p_left = beta_l / (beta_l + beta_r);
  std::vector<double> out(n);
  for (double& v : out) {
    double beta = unit(rng) < p_left ? -beta_l : beta_r;
    double mag = std::pow(gamma_draw(rng, 1.0 / nu), 1.0 / nu);
    v = beta * mag;
  }
  return out;
}

}  // namespace siqa::testing
