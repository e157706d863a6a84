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

#include "siqa/matrix.hpp"

#include <cmath>
#include <cstdlib>

namespace siqa {

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.values()) best = std::max(best, std::fabs(v));
  return best;
}

std::vector<double> gaussian_taps(double sigma, int radius) {
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    double w = std::exp(-0.5 * (k * k) / (sigma * sigma));
    taps[k + radius] = w;
    sum += w;
  }
  for (double& w : taps) w /= sum;
  return taps;
}

int reflect_index(int i, int n) {
  // MATLAB-style 'symmetric' padding: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
  if (n == 1) return 0;
  int period = 2 * n;
  i = ((i % period) + period) % period;
  return i < n ? i : period - 1 - i;
}

Matrix gaussian_smooth(const Matrix& m, double sigma, int radius) {
  if (radius < 1 || sigma <= 0.0 || m.empty()) return m;
  const std::vector<double> taps = gaussian_taps(sigma, radius);
  const int rows = m.rows(), cols = m.cols();

  Matrix tmp(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[k + radius] * m(r, reflect_index(c + k, cols));
      }
      tmp(r, c) = acc;
    }
  }
  Matrix out(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[k + radius] * tmp(reflect_index(r + k, rows), c);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace siqa
