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

#include "siqa/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "siqa/common.hpp"

namespace siqa {

namespace {

// Skips PNM whitespace and '#' comments, then reads one unsigned integer.
int next_pnm_int(std::istream& in, const std::string& path) {
  int ch;
  for (;;) {
    ch = in.get();
    if (ch == '#') {
      while (ch != '\n' && ch != EOF) ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
  }
  if (ch == EOF) throw ParseError(path + ": truncated PNM header");
  int v = 0;
  bool any = false;
  while (std::isdigit(ch)) {
    v = v * 10 + (ch - '0');
    any = true;
    ch = in.get();
  }
  if (!any) throw ParseError(path + ": malformed PNM header token");
  return v;
}

double read_sample(std::istream& in, bool binary, int maxval,
                   const std::string& path) {
  if (!binary) {
    return next_pnm_int(in, path) / static_cast<double>(maxval);
  }
  if (maxval > 255) {
    int hi = in.get(), lo = in.get();
    if (lo == EOF) throw ParseError(path + ": truncated PNM payload");
    return ((hi << 8) | lo) / static_cast<double>(maxval);
  }
  int b = in.get();
  if (b == EOF) throw ParseError(path + ": truncated PNM payload");
  return b / static_cast<double>(maxval);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw ParseError(path + ": truncated container");
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_plane(std::ostream& out, const Matrix& m) {
  for (double v : m.values()) {
    float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(out, u);
  }
}

Matrix read_plane(std::istream& in, int rows, int cols,
                  const std::string& path) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::uint32_t u = get_u32(in, path);
      float f;
      std::memcpy(&f, &u, 4);
      m(r, c) = f;
    }
  }
  return m;
}

constexpr std::uint32_t kFusedVersion = 1;

}  // namespace

GrayImage GrayImage::from_matrix(Matrix m) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      if (!std::isfinite(v)) {
        throw std::invalid_argument("GrayImage: non-finite pixel value");
      }
      m(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return GrayImage{std::move(m)};
}

GrayImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open image");
  char p = 0, kind = 0;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6')) {
    throw ParseError(path.string() + ": unsupported raster format (want PGM/PPM)");
  }
  const bool rgb = (kind == '3' || kind == '6');
  const bool binary = (kind == '5' || kind == '6');
  const int width = next_pnm_int(in, path.string());
  const int height = next_pnm_int(in, path.string());
  const int maxval = next_pnm_int(in, path.string());
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw ParseError(path.string() + ": bad PNM dimensions/maxval");
  }
  // header ends with exactly one whitespace byte before a binary payload;
  // next_pnm_int already consumed it.
  Matrix m(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (rgb) {
        double red = read_sample(in, binary, maxval, path.string());
        double green = read_sample(in, binary, maxval, path.string());
        double blue = read_sample(in, binary, maxval, path.string());
        m(r, c) = 0.299 * red + 0.587 * green + 0.114 * blue;
      } else {
        m(r, c) = read_sample(in, binary, maxval, path.string());
      }
    }
  }
  return GrayImage::from_matrix(std::move(m));
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path,
              int bits) {
  if (bits != 8 && bits != 16) {
    throw std::invalid_argument("save_pgm: bits must be 8 or 16");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write image");
  const int maxval = bits == 8 ? 255 : 65535;
  out << "P5\n" << img.width() << " " << img.height() << "\n" << maxval << "\n";
  for (double v : img.pix.values()) {
    long q = std::lround(std::clamp(v, 0.0, 1.0) * maxval);
    if (bits == 16) out.put(static_cast<char>((q >> 8) & 0xFF));
    out.put(static_cast<char>(q & 0xFF));
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

void save_preview(const Matrix& m, const std::filesystem::path& path) {
  double lo = m.values().empty() ? 0.0 : m.values()[0];
  double hi = lo;
  for (double v : m.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  Matrix norm(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      norm(r, c) = (m(r, c) - lo) / span;
    }
  }
  save_pgm(GrayImage{std::move(norm)}, path, 8);
}

void save_fused(const FusedImages& f, const std::filesystem::path& path) {
  if (!f.contrast.same_shape(f.phase)) {
    throw std::invalid_argument("save_fused: plane shape mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write container");
  out.write("SIQF", 4);
  put_u32(out, kFusedVersion);
  put_u32(out, static_cast<std::uint32_t>(f.contrast.rows()));
  put_u32(out, static_cast<std::uint32_t>(f.contrast.cols()));
  write_plane(out, f.contrast);
  write_plane(out, f.phase);
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

FusedImages load_fused(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open container");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SIQF", 4) != 0) {
    throw ParseError(path.string() + ": bad magic (want SIQF)");
  }
  std::uint32_t version = get_u32(in, path.string());
  if (version != kFusedVersion) {
    throw ParseError(path.string() + ": unsupported container version " +
                     std::to_string(version));
  }
  int rows = static_cast<int>(get_u32(in, path.string()));
  int cols = static_cast<int>(get_u32(in, path.string()));
  if (rows <= 0 || cols <= 0 || rows > (1 << 20) || cols > (1 << 20)) {
    throw ParseError(path.string() + ": implausible container dimensions");
  }
  FusedImages f;
  f.contrast = read_plane(in, rows, cols, path.string());
  f.phase = read_plane(in, rows, cols, path.string());
  return f;
}

}  // namespace siqa
