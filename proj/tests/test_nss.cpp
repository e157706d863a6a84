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
#include <vector>

#include "siqa/common.hpp"
#include "siqa/nss.hpp"
#include "support/samplers.hpp"

using namespace siqa;
using namespace siqa::nss;

// ---------------------------------------------------------------------------
// Straight-line reference implementation, independent of the library path.
// Direct 2-D window convolution, its own grid search, its own assembly.
namespace ref {

int mirror(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

Matrix mscn_ref(const Matrix& img, int radius = 3, double sigma = 7.0 / 6.0,
                double c = 0.01) {
  const int size = 2 * radius + 1;
  std::vector<double> w(size * size);
  double wsum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      w[(dy + radius) * size + (dx + radius)] = v;
      wsum += v;
    }
  }
  for (double& v : w) v /= wsum;

  double scale = 0.0;
  for (double v : img.values()) scale = std::max(scale, std::fabs(v));
  Matrix j(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r) {
    for (int col = 0; col < img.cols(); ++col) {
      j(r, col) = scale > 0.0 ? img(r, col) / scale : 0.0;
    }
  }

  Matrix out(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r) {
    for (int col = 0; col < img.cols(); ++col) {
      double mu = 0.0, e2 = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          double wv = w[(dy + radius) * size + (dx + radius)];
          double pix =
              j(mirror(r + dy, img.rows()), mirror(col + dx, img.cols()));
          mu += wv * pix;
          e2 += wv * pix * pix;
        }
      }
      double delta = std::sqrt(std::max(e2 - mu * mu, 0.0));
      out(r, col) = (j(r, col) - mu) / (delta + c);
    }
  }
  return out;
}

double invert_rho(double target) {
  double best_a = 0.2, best_d = 1e300;
  for (int i = 0; i <= 9800; ++i) {
    double a = 0.2 + i * 1e-3;
    double rho = std::tgamma(1.0 / a) * std::tgamma(3.0 / a) /
                 (std::tgamma(2.0 / a) * std::tgamma(2.0 / a));
    double d = std::fabs(rho - target);
    if (d < best_d) {
      best_d = d;
      best_a = a;
    }
  }
  return best_a;
}

void ggd_ref(const std::vector<double>& xs, double& alpha, double& sigma2) {
  double sabs = 0.0, ssq = 0.0;
  for (double x : xs) {
    sabs += std::fabs(x);
    ssq += x * x;
  }
  const double n = static_cast<double>(xs.size());
  alpha = invert_rho(ssq / n / ((sabs / n) * (sabs / n)));
  sigma2 = ssq / n;
}

void aggd_ref(const std::vector<double>& xs, double& nu, double& sl2,
              double& sr2, double& eta) {
  double lsq = 0.0, rsq = 0.0, sabs = 0.0;
  std::size_t ln = 0, rn = 0;
  for (double x : xs) {
    if (x < 0) {
      lsq += x * x;
      ++ln;
    } else if (x > 0) {
      rsq += x * x;
      ++rn;
    }
    sabs += std::fabs(x);
  }
  double sl = ln ? std::sqrt(lsq / ln) : 0.0;
  double sr = rn ? std::sqrt(rsq / rn) : 0.0;
  double g = sl / sr;
  const double n = static_cast<double>(xs.size());
  double rhat = (sabs / n) * (sabs / n) / ((lsq + rsq) / n);
  double rnorm =
      rhat * (g * g * g + 1) * (g + 1) / ((g * g + 1) * (g * g + 1));
  nu = invert_rho(1.0 / rnorm);
  sl2 = std::max(sl * sl, 1e-12);
  sr2 = std::max(sr * sr, 1e-12);
  double ratio = std::sqrt(std::tgamma(1.0 / nu) / std::tgamma(3.0 / nu));
  eta = (sl * ratio - sr * ratio) * std::tgamma(2.0 / nu) /
        std::tgamma(1.0 / nu);
}

Matrix down_ref(const Matrix& m) {
  Matrix out(m.rows() / 2, m.cols() / 2);
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) {
      out(r, c) = (m(2 * r, 2 * c) + m(2 * r, 2 * c + 1) +
                   m(2 * r + 1, 2 * c) + m(2 * r + 1, 2 * c + 1)) /
                  4.0;
    }
  }
  return out;
}

void products_ref(const Matrix& m, std::vector<Matrix>& out) {
  Matrix h(m.rows(), m.cols() - 1), v(m.rows() - 1, m.cols());
  Matrix d1(m.rows() - 1, m.cols() - 1), d2(m.rows() - 1, m.cols() - 1);
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols() - 1; ++c) h(r, c) = m(r, c) * m(r, c + 1);
  }
  for (int r = 0; r < m.rows() - 1; ++r) {
    for (int c = 0; c < m.cols(); ++c) v(r, c) = m(r, c) * m(r + 1, c);
  }
  for (int r = 0; r < m.rows() - 1; ++r) {
    for (int c = 0; c < m.cols() - 1; ++c) {
      d1(r, c) = m(r, c) * m(r + 1, c + 1);
    }
  }
  for (int r = 0; r < m.rows() - 1; ++r) {
    for (int c = 1; c < m.cols(); ++c) d2(r, c - 1) = m(r, c) * m(r + 1, c - 1);
  }
  out = {h, v, d1, d2};
}

std::vector<double> phase_features_ref(const Matrix& img) {
  std::vector<double> fv;
  Matrix cur = img;
  for (int s = 1; s <= 2; ++s) {
    if (s == 2) cur = down_ref(cur);
    Matrix m = mscn_ref(cur);
    double nu, sl2, sr2, eta;
    aggd_ref(m.values(), nu, sl2, sr2, eta);
    fv.insert(fv.end(), {nu, sl2, sr2, eta});
    std::vector<Matrix> prods;
    products_ref(m, prods);
    for (const Matrix& p : prods) {
      aggd_ref(p.values(), nu, sl2, sr2, eta);
      fv.insert(fv.end(), {nu, sl2, sr2, eta});
    }
  }
  return fv;
}

std::vector<double> contrast_features_ref(const Matrix& img) {
  std::vector<double> fv;
  Matrix cur = img;
  for (int s = 1; s <= 2; ++s) {
    if (s == 2) cur = down_ref(cur);
    Matrix m = mscn_ref(cur);
    double alpha, sigma2;
    ggd_ref(m.values(), alpha, sigma2);
    fv.insert(fv.end(), {alpha, sigma2});
    std::vector<Matrix> prods;
    products_ref(m, prods);
    for (const Matrix& p : prods) {
      double nu, sl2, sr2, eta;
      aggd_ref(p.values(), nu, sl2, sr2, eta);
      fv.insert(fv.end(), {nu, sl2, sr2, eta});
    }
  }
  return fv;
}

}  // namespace ref

namespace {

Matrix random_matrix(int rows, int cols, std::uint64_t seed, double lo,
                     double hi) {
  std::mt19937_64 rng(seed);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) =
          lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("mscn of a constant image is zero") {
  for (double value : {0.0, 0.5}) {
    MscnField f = mscn(Matrix(24, 24, value));
    for (double v : f.values.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("mscn of an iid normal field has near-unit variance") {
  std::mt19937_64 rng(123);
  Matrix img(256, 256);
  for (int r = 0; r < 256; ++r) {
    for (int c = 0; c < 256; ++c) img(r, c) = siqa::testing::gauss(rng);
  }
  MscnField f = mscn(img);
  double mean = 0.0;
  for (double v : f.values.values()) mean += v;
  mean /= static_cast<double>(f.values.size());
  double var = 0.0;
  for (double v : f.values.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(f.values.size());
  CHECK(var > 0.7);
  CHECK(var < 1.3);
}

TEST_CASE("mscn of a checkerboard is near +-1/(1+c) in the interior") {
  Matrix img(32, 32);
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) img(r, c) = ((r + c) % 2 == 0) ? 1.0 : -1.0;
  }
  MscnField f = mscn(img);
  const double expected = 1.0 / 1.01;
  for (int r = 4; r < 28; ++r) {
    for (int c = 4; c < 28; ++c) {
      CHECK(std::fabs(std::fabs(f.values(r, c)) - expected) < 0.05);
    }
  }
}

TEST_CASE("mscn is scale invariant") {
  Matrix img = random_matrix(64, 64, 22, -1.0, 1.0);
  Matrix doubled(64, 64);
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) doubled(r, c) = 2.0 * img(r, c);
  }
  MscnField a = mscn(img, 3, 7.0 / 6.0, 1e-6);
  MscnField b = mscn(doubled, 3, 7.0 / 6.0, 1e-6);
  double worst = 0.0;
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      worst = std::max(worst, std::fabs(a.values(r, c) - b.values(r, c)));
    }
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("paired products on simple fields") {
  MscnField ones{Matrix(5, 5, 1.0), 1};
  for (const Matrix& p : paired_products(ones)) {
    for (double v : p.values()) CHECK(v == 1.0);
  }

  MscnField sparse{Matrix(5, 5, 0.0), 1};
  sparse.values(2, 2) = 3.0;
  for (const Matrix& p : paired_products(sparse)) {
    int nonzero = 0;
    for (double v : p.values()) nonzero += v != 0.0;
    CHECK(nonzero == 0);  // one nonzero pixel always multiplies a zero
  }

  MscnField tiny{Matrix(3, 3, 0.0), 1};
  double vals[3][3] = {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) tiny.values(r, c) = vals[r][c];
  }
  auto [h, v, d1, d2] = paired_products(tiny);
  CHECK(h.rows() == 3);
  CHECK(h.cols() == 2);
  CHECK(h(0, 0) == 2.0);    // 1*2
  CHECK(h(2, 1) == 72.0);   // 8*9
  CHECK(v(0, 0) == 4.0);    // 1*4
  CHECK(v(1, 2) == 54.0);   // 6*9
  CHECK(d1(0, 0) == 5.0);   // 1*5
  CHECK(d1(1, 1) == 45.0);  // 5*9
  CHECK(d2(0, 0) == 8.0);   // 2*4
  CHECK(d2(1, 1) == 48.0);  // 6*8
}

TEST_CASE("downsample2 dimensions and averaging") {
  Matrix constant(10, 6, 0.3);
  Matrix down = downsample2(constant);
  CHECK(down.rows() == 5);
  CHECK(down.cols() == 3);
  for (double v : down.values()) CHECK(v == doctest::Approx(0.3));

  Matrix two(2, 2);
  two(0, 0) = 1.0;
  two(0, 1) = 2.0;
  two(1, 0) = 3.0;
  two(1, 1) = 4.0;
  Matrix one = downsample2(two);
  CHECK(one.rows() == 1);
  CHECK(one.cols() == 1);
  CHECK(one(0, 0) == doctest::Approx(2.5));

  Matrix cur(64, 64, 1.0);
  for (int i = 0; i < 4; ++i) cur = downsample2(cur);
  CHECK(cur.rows() == 4);
  CHECK(cur.cols() == 4);

  CHECK_THROWS_AS(downsample2(Matrix(1, 10, 0.0)), std::invalid_argument);
}

TEST_CASE("ggd ratio identity at alpha=2") {
  CHECK(ggd_ratio(2.0) == doctest::Approx(kPi / 2).epsilon(1e-6 / (kPi / 2)));
}

TEST_CASE("fit_ggd recovers normal and laplacian shapes") {
  std::vector<double> normal = siqa::testing::sample_normal(1000000, 42);
  GgdParams gn = fit_ggd(normal);
  CHECK(gn.alpha == doctest::Approx(2.0).epsilon(0.05));
  CHECK(gn.sigma2 == doctest::Approx(1.0).epsilon(0.05));

  std::vector<double> laplace = siqa::testing::sample_laplace(1000000, 43);
  GgdParams gl = fit_ggd(laplace);
  CHECK(gl.alpha == doctest::Approx(1.0).epsilon(0.1));
  CHECK(gl.sigma2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("fit_ggd rejects degenerate input") {
  std::vector<double> few(50, 1.0);
  CHECK_THROWS_AS(fit_ggd(few), DegenerateInputError);
  std::vector<double> zeros(500, 0.0);
  CHECK_THROWS_AS(fit_ggd(zeros), DegenerateInputError);
}

TEST_CASE("fit_aggd on symmetric data is symmetric") {
  std::vector<double> normal = siqa::testing::sample_normal(1000000, 44);
  AggdParams a = fit_aggd(normal);
  CHECK(a.nu == doctest::Approx(2.0).epsilon(0.075));
  CHECK(std::sqrt(a.sigma_l2) ==
        doctest::Approx(std::sqrt(a.sigma_r2)).epsilon(0.05));
  CHECK(std::fabs(a.eta) < 0.02);
}

TEST_CASE("fit_aggd mirror property is exact") {
  std::vector<double> xs =
      siqa::testing::sample_aggd(20000, 1.4, 0.8, 1.7, 45);
  std::vector<double> neg(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) neg[i] = -xs[i];
  AggdParams a = fit_aggd(xs);
  AggdParams b = fit_aggd(neg);
  CHECK(a.nu == b.nu);
  CHECK(a.sigma_l2 == b.sigma_r2);
  CHECK(a.sigma_r2 == b.sigma_l2);
  CHECK(a.eta == -b.eta);
}

TEST_CASE("fit_aggd recovers sampler parameters") {
  std::vector<double> xs =
      siqa::testing::sample_aggd(1000000, 1.0, 0.5, 2.0, 46);
  AggdParams a = fit_aggd(xs);
  CHECK(a.nu == doctest::Approx(1.0).epsilon(0.10));
  CHECK(std::sqrt(a.sigma_l2) == doctest::Approx(0.5).epsilon(0.10));
  CHECK(std::sqrt(a.sigma_r2) == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("fit_aggd eta is recomputable and sign-consistent") {
  std::vector<double> xs =
      siqa::testing::sample_aggd(200000, 2.0, 1.5, 0.6, 47);
  AggdParams a = fit_aggd(xs);
  const double gr = std::tgamma(1.0 / a.nu) / std::tgamma(3.0 / a.nu);
  const double beta_l = std::sqrt(a.sigma_l2) * std::sqrt(gr);
  const double beta_r = std::sqrt(a.sigma_r2) * std::sqrt(gr);
  const double eta =
      (beta_l - beta_r) * std::tgamma(2.0 / a.nu) / std::tgamma(1.0 / a.nu);
  CHECK(a.eta == doctest::Approx(eta).epsilon(1e-9));
  CHECK((a.eta > 0) == (beta_l > beta_r));
  CHECK(a.eta > 0.0);  // sigma_l > sigma_r here

  CHECK_THROWS_AS(fit_aggd(std::vector<double>(500, 0.0)),
                  DegenerateInputError);
}

TEST_CASE("feature vectors have the contracted shape and are deterministic") {
  Matrix phase = random_matrix(64, 64, 7, -kPi, kPi);
  Matrix contrast = random_matrix(64, 64, 8, 0.0, 1.2);

  FeatureVector p1 = extract_phase_features(phase);
  FeatureVector p2 = extract_phase_features(phase);
  CHECK(p1.kind == FeatureKind::kPhase);
  CHECK(p1.values.size() == 40);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(std::isfinite(p1.values[i]));
    CHECK(p1.values[i] == p2.values[i]);  // bit-identical rerun
  }

  FeatureVector c1 = extract_contrast_features(contrast);
  FeatureVector c2 = extract_contrast_features(contrast);
  CHECK(c1.kind == FeatureKind::kContrast);
  CHECK(c1.values.size() == 36);
  for (std::size_t i = 0; i < 36; ++i) {
    CHECK(std::isfinite(c1.values[i]));
    CHECK(c1.values[i] == c2.values[i]);
  }

  CHECK(phase_slot_names().size() == 40);
  CHECK(contrast_slot_names().size() == 36);
}

TEST_CASE("feature extraction matches the reference implementation") {
  Matrix phase = random_matrix(64, 64, 99, -kPi, kPi);
  Matrix contrast = random_matrix(64, 64, 100, 0.0, 1.3);

  std::vector<double> want_p = ref::phase_features_ref(phase);
  FeatureVector got_p = extract_phase_features(phase);
  REQUIRE(want_p.size() == got_p.values.size());
  for (std::size_t i = 0; i < want_p.size(); ++i) {
    CHECK(got_p.values[i] == doctest::Approx(want_p[i]).epsilon(1e-6));
  }

  std::vector<double> want_c = ref::contrast_features_ref(contrast);
  FeatureVector got_c = extract_contrast_features(contrast);
  REQUIRE(want_c.size() == got_c.values.size());
  for (std::size_t i = 0; i < want_c.size(); ++i) {
    CHECK(got_c.values[i] == doctest::Approx(want_c[i]).epsilon(1e-6));
  }
}

TEST_CASE("mscn agrees with the direct 2-D reference") {
  Matrix img = random_matrix(48, 40, 55, -2.0, 3.0);
  Matrix want = ref::mscn_ref(img);
  MscnField got = mscn(img);
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) {
      CHECK(got.values(r, c) == doctest::Approx(want(r, c)).epsilon(1e-9));
    }
  }
}

TEST_CASE("ggd round-trip over a parameter grid") {
  // the full 5x5 grid at 1e6 draws runs in the acceptance suite
  int cell = 0;
  for (double alpha : {0.5, 1.0, 2.0}) {
    for (double sigma2 : {0.25, 1.0, 4.0}) {
      std::vector<double> xs =
          siqa::testing::sample_ggd(200000, alpha, sigma2, 1000 + cell++);
      GgdParams fit = fit_ggd(xs);
      CHECK(fit.alpha == doctest::Approx(alpha).epsilon(0.10));
      CHECK(fit.sigma2 == doctest::Approx(sigma2).epsilon(0.10));
    }
  }
}
