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

#include "siqa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "siqa/common.hpp"
#include "siqa/matrix.hpp"

namespace siqa::dataset {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double gauss_draw(std::mt19937_64& rng) {
  // Box-Muller; avoids implementation-defined std::normal_distribution.
  double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

const char* kManifestHeader =
    "id\treference_id\tleft_path\tright_path\tdmos\tdistortion\tsymmetric";

// 8x8 orthonormal DCT-II basis.
struct DctBasis {
  double t[8][8];
  DctBasis() {
    for (int k = 0; k < 8; ++k) {
      double c = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        t[k][x] = c * std::cos((2 * x + 1) * k * kPi / 16.0);
      }
    }
  }
};

}  // namespace

std::string to_string(Distortion d) {
  switch (d) {
    case Distortion::kPristine: return "pristine";
    case Distortion::kWhiteNoise: return "wn";
    case Distortion::kBlur: return "blur";
    case Distortion::kBlock: return "block";
    case Distortion::kJp2k: return "jp2k";
    case Distortion::kJpeg: return "jpeg";
    case Distortion::kFastFading: return "ff";
    case Distortion::kOther: return "other";
  }
  return "other";
}

std::optional<Distortion> distortion_from_string(const std::string& s) {
  if (s == "pristine") return Distortion::kPristine;
  if (s == "wn") return Distortion::kWhiteNoise;
  if (s == "blur") return Distortion::kBlur;
  if (s == "block") return Distortion::kBlock;
  if (s == "jp2k") return Distortion::kJp2k;
  if (s == "jpeg") return Distortion::kJpeg;
  if (s == "ff") return Distortion::kFastFading;
  if (s == "other") return Distortion::kOther;
  return std::nullopt;
}

std::string to_string(Eye e) {
  switch (e) {
    case Eye::kBoth: return "both";
    case Eye::kLeft: return "left";
    case Eye::kRight: return "right";
  }
  return "both";
}

Corpus load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open manifest");

  std::filesystem::path root = path.parent_path();
  if (const char* env = std::getenv("SIQA_CORPUS_ROOT"); env && *env) {
    root = env;
  }

  Corpus corpus;
  corpus.name = path.stem().string();
  bool have_range = false;
  bool have_header = false;
  std::set<std::string> seen_ids;

  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " +
                     msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string key;
      meta >> key;
      if (key == "name") {
        std::string v;
        meta >> v;
        if (!v.empty()) corpus.name = v;
      } else if (key == "dmos_range") {
        if (!(meta >> corpus.dmos_lo >> corpus.dmos_hi) ||
            corpus.dmos_lo > corpus.dmos_hi) {
          fail("malformed dmos_range metadata");
        }
        have_range = true;
      }
      continue;
    }
    if (!have_header) {
      if (line != kManifestHeader) {
        fail("unexpected header; want '" + std::string(kManifestHeader) + "'");
      }
      have_header = true;
      continue;
    }

    std::vector<std::string> cols = split_tabs(line);
    if (cols.size() != 7) {
      fail("expected 7 tab-separated columns, found " +
           std::to_string(cols.size()));
    }
    StereoRecord rec;
    rec.id = cols[0];
    rec.reference_id = cols[1];
    if (rec.id.empty()) fail("empty id");
    if (rec.reference_id.empty()) fail("empty reference_id");
    if (!seen_ids.insert(rec.id).second) fail("duplicate id '" + rec.id + "'");

    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      if (fp.is_relative()) fp = root / fp;
      return fp;
    };
    rec.left_path = resolve(cols[2]);
    rec.right_path = resolve(cols[3]);
    for (const auto& fp : {rec.left_path, rec.right_path}) {
      if (!std::filesystem::exists(fp)) {
        fail("image file not found: " + fp.string());
      }
    }
    try {
      std::size_t pos = 0;
      rec.dmos = std::stod(cols[4], &pos);
      if (pos != cols[4].size()) throw std::invalid_argument(cols[4]);
    } catch (const std::exception&) {
      fail("malformed dmos '" + cols[4] + "'");
    }
    if (have_range && (rec.dmos < corpus.dmos_lo || rec.dmos > corpus.dmos_hi)) {
      fail("dmos " + cols[4] + " outside declared range [" +
           std::to_string(corpus.dmos_lo) + ", " +
           std::to_string(corpus.dmos_hi) + "]");
    }
    std::optional<Distortion> dist = distortion_from_string(cols[5]);
    if (!dist) fail("unknown distortion '" + cols[5] + "'");
    rec.distortion = *dist;
    if (cols[6] == "1") {
      rec.symmetric = true;
    } else if (cols[6] == "0") {
      rec.symmetric = false;
    } else {
      fail("symmetric column must be 0 or 1, found '" + cols[6] + "'");
    }
    corpus.records.push_back(std::move(rec));
  }
  if (!have_header) {
    line_no = 0;
    fail("manifest has no header row");
  }
  if (!have_range && !corpus.records.empty()) {
    corpus.dmos_lo = corpus.dmos_hi = corpus.records[0].dmos;
    for (const StereoRecord& rec : corpus.records) {
      corpus.dmos_lo = std::min(corpus.dmos_lo, rec.dmos);
      corpus.dmos_hi = std::max(corpus.dmos_hi, rec.dmos);
    }
  }
  return corpus;
}

void save_manifest(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write manifest");
  out << "# siqa-manifest v1\n";
  out << "# name " << corpus.name << '\n';
  out << "# dmos_range " << fmt_sig9(corpus.dmos_lo) << ' '
      << fmt_sig9(corpus.dmos_hi) << '\n';
  out << kManifestHeader << '\n';
  for (const StereoRecord& rec : corpus.records) {
    out << rec.id << '\t' << rec.reference_id << '\t'
        << rec.left_path.generic_string() << '\t'
        << rec.right_path.generic_string() << '\t' << fmt_sig9(rec.dmos)
        << '\t' << to_string(rec.distortion) << '\t'
        << (rec.symmetric ? '1' : '0') << '\n';
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

GrayImage distort_wn(const GrayImage& img, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("distort_wn: sigma < 0");
  if (sigma == 0.0) return img;
  std::mt19937_64 rng(seed);
  Matrix out = img.pix;
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) {
      out(r, c) = std::clamp(out(r, c) + sigma * gauss_draw(rng), 0.0, 1.0);
    }
  }
  return GrayImage{std::move(out)};
}

GrayImage distort_blur(const GrayImage& img, double sigma_px) {
  if (sigma_px < 0.0) throw std::invalid_argument("distort_blur: sigma < 0");
  if (sigma_px == 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_px));
  Matrix out = gaussian_smooth(img.pix, sigma_px, radius);
  return GrayImage::from_matrix(std::move(out));
}

GrayImage distort_block(const GrayImage& img, double q_scale) {
  if (q_scale < 1.0) throw std::invalid_argument("distort_block: q_scale < 1");
  static const DctBasis basis;
  const double step = 0.02 * (q_scale - 1.0);

  const int rows = img.height(), cols = img.width();
  const int prows = (rows + 7) / 8 * 8, pcols = (cols + 7) / 8 * 8;
  // Edge-replicated padding up to a multiple of 8.
  Matrix padded(prows, pcols);
  for (int r = 0; r < prows; ++r) {
    for (int c = 0; c < pcols; ++c) {
      padded(r, c) = img.pix(std::min(r, rows - 1), std::min(c, cols - 1));
    }
  }

  double blk[8][8], tmp[8][8];
  for (int br = 0; br < prows; br += 8) {
    for (int bc = 0; bc < pcols; bc += 8) {
      // forward: T * B * T'
      for (int k = 0; k < 8; ++k) {
        for (int c = 0; c < 8; ++c) {
          double acc = 0.0;
          for (int x = 0; x < 8; ++x) {
            acc += basis.t[k][x] * padded(br + x, bc + c);
          }
          tmp[k][c] = acc;
        }
      }
      for (int k = 0; k < 8; ++k) {
        for (int l = 0; l < 8; ++l) {
          double acc = 0.0;
          for (int x = 0; x < 8; ++x) acc += tmp[k][x] * basis.t[l][x];
          blk[k][l] = step > 1e-12 ? std::round(acc / step) * step : acc;
        }
      }
      // inverse: T' * Q * T
      for (int x = 0; x < 8; ++x) {
        for (int l = 0; l < 8; ++l) {
          double acc = 0.0;
          for (int k = 0; k < 8; ++k) acc += basis.t[k][x] * blk[k][l];
          tmp[x][l] = acc;
        }
      }
      for (int x = 0; x < 8; ++x) {
        for (int y = 0; y < 8; ++y) {
          double acc = 0.0;
          for (int l = 0; l < 8; ++l) acc += tmp[x][l] * basis.t[l][y];
          padded(br + x, bc + y) = std::clamp(acc, 0.0, 1.0);
        }
      }
    }
  }

  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = padded(r, c);
  }
  return GrayImage{std::move(out)};
}

double pseudo_dmos(Distortion kind, double level, Eye eye) {
  double ref;
  switch (kind) {
    case Distortion::kWhiteNoise: ref = 0.2; break;
    case Distortion::kBlur: ref = 3.0; break;
    case Distortion::kBlock: ref = 16.0; break;
    default:
      throw std::invalid_argument("pseudo_dmos: unsupported distortion kind");
  }
  const double x = level / ref;
  double score = 10.0 + 80.0 * x / (x + 1.0);
  if (eye != Eye::kBoth) score *= 0.6;
  return score;
}

namespace {

GrayImage apply_distortion(const GrayImage& img, const DistortionSpec& spec,
                           std::uint64_t seed) {
  switch (spec.kind) {
    case Distortion::kWhiteNoise: return distort_wn(img, spec.level, seed);
    case Distortion::kBlur: return distort_blur(img, spec.level);
    case Distortion::kBlock: return distort_block(img, spec.level);
    default:
      throw std::invalid_argument(
          "make_synthetic_corpus: unsupported distortion kind '" +
          to_string(spec.kind) + "'");
  }
}

std::string level_tag(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", level);
  std::string s(buf);
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return s;
}

}  // namespace

std::filesystem::path make_synthetic_corpus(
    const std::vector<PristinePair>& pristine_pairs,
    const std::vector<DistortionSpec>& specs,
    const std::filesystem::path& out_dir, std::uint64_t seed) {
  if (pristine_pairs.empty()) {
    throw std::invalid_argument(
        "make_synthetic_corpus: need at least one pristine pair");
  }
  const std::filesystem::path images = out_dir / "images";
  std::filesystem::create_directories(images);

  Corpus corpus;
  corpus.name = "synthetic";
  corpus.dmos_lo = 0.0;
  corpus.dmos_hi = 100.0;

  auto rel = [](const std::filesystem::path& p) {
    return std::filesystem::path("images") / p.filename();
  };

  for (const PristinePair& scene : pristine_pairs) {
    StereoRecord pris;
    pris.id = scene.scene_id + "_pristine";
    pris.reference_id = scene.scene_id;
    pris.distortion = Distortion::kPristine;
    pris.symmetric = true;
    pris.dmos = 0.0;
    std::filesystem::path lp = images / (pris.id + "_l.pgm");
    std::filesystem::path rp = images / (pris.id + "_r.pgm");
    save_pgm(scene.left, lp);
    save_pgm(scene.right, rp);
    pris.left_path = rel(lp);
    pris.right_path = rel(rp);
    corpus.records.push_back(pris);

    for (const DistortionSpec& spec : specs) {
      StereoRecord rec;
      rec.id = scene.scene_id + "_" + to_string(spec.kind) + "_" +
               to_string(spec.eye) + "_" + level_tag(spec.level);
      rec.reference_id = scene.scene_id;
      rec.distortion = spec.kind;
      rec.symmetric = spec.eye == Eye::kBoth;
      rec.dmos = pseudo_dmos(spec.kind, spec.level, spec.eye);

      const std::uint64_t rec_seed = mix_seed(seed, fnv1a(rec.id));
      GrayImage left = spec.eye == Eye::kRight
                           ? scene.left
                           : apply_distortion(scene.left, spec,
                                              mix_seed(rec_seed, 1));
      GrayImage right = spec.eye == Eye::kLeft
                            ? scene.right
                            : apply_distortion(scene.right, spec,
                                               mix_seed(rec_seed, 2));
      std::filesystem::path lpath = images / (rec.id + "_l.pgm");
      std::filesystem::path rpath = images / (rec.id + "_r.pgm");
      save_pgm(left, lpath);
      save_pgm(right, rpath);
      rec.left_path = rel(lpath);
      rec.right_path = rel(rpath);
      corpus.records.push_back(std::move(rec));
    }
  }

  const std::filesystem::path manifest = out_dir / "manifest.tsv";
  save_manifest(corpus, manifest);
  return manifest;
}

PristinePair render_demo_scene(const std::string& scene_id, int width,
                               int height, std::uint64_t seed) {
  if (width < 16 || height < 16) {
    throw std::invalid_argument("render_demo_scene: scene must be >= 16x16");
  }
  std::mt19937_64 rng(mix_seed(seed, fnv1a(scene_id)));

  constexpr int kComponents = 160;
  struct Component {
    double fx, fy, phase, amp, disparity_px;
  };
  std::vector<Component> comps(kComponents);
  for (Component& c : comps) {
    // log-uniform frequency magnitude, 1/f amplitude envelope
    double f = 0.01 * std::pow(0.35 / 0.01, unit_draw(rng));
    double angle = unit_draw(rng) * kPi;
    c.fx = f * std::cos(angle);
    c.fy = f * std::sin(angle);
    c.phase = unit_draw(rng) * 2.0 * kPi;
    c.amp = 1.0 / (f * kComponents);
    c.disparity_px = unit_draw(rng) * 4.0;
  }

  Matrix left(height, width), right(height, width);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double vl = 0.0, vr = 0.0;
      for (const Component& c : comps) {
        double base = 2.0 * kPi * (c.fx * x + c.fy * y) + c.phase;
        vl += c.amp * std::cos(base);
        vr += c.amp * std::cos(base + 2.0 * kPi * c.fx * c.disparity_px);
      }
      left(y, x) = vl;
      right(y, x) = vr;
      lo = std::min({lo, vl, vr});
      hi = std::max({hi, vl, vr});
    }
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      left(y, x) = 0.1 + 0.8 * (left(y, x) - lo) / span;
      right(y, x) = 0.1 + 0.8 * (right(y, x) - lo) / span;
    }
  }
  return PristinePair{scene_id, GrayImage{std::move(left)},
                      GrayImage{std::move(right)}};
}

}  // namespace siqa::dataset
