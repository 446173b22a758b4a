#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "edgegrasp/geometry.hpp"

namespace edgegrasp {

// Calibrated per-pixel range map in meters, row-major. Pixels where the
// sensor returned no measurement carry valid = 0 and must be excluded or
// repaired (fill_shadows) before gradient processing.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth;   // meters
  std::vector<uint8_t> valid;  // 0/1

  DepthImage() = default;
  DepthImage(int w, int h, double fill = 0.0, uint8_t v = 1)
      : width(w), height(h), depth(static_cast<size_t>(w) * h, fill), valid(static_cast<size_t>(w) * h, v) {}

  size_t idx(int r, int c) const { return static_cast<size_t>(r) * width + c; }
  bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
  double at(int r, int c) const { return depth[idx(r, c)]; }
  double& at(int r, int c) { return depth[idx(r, c)]; }
  bool is_valid(int r, int c) const { return valid[idx(r, c)] != 0; }
  size_t size() const { return depth.size(); }
  size_t invalid_count() const { return static_cast<size_t>(std::count(valid.begin(), valid.end(), uint8_t{0})); }
};

// Per-pixel partial derivatives of the depth image (meters/pixel), their
// magnitude, and the direction of steepest depth increase in (-pi, pi].
// valid = 0 where the stencil touched an invalid depth pixel.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> gx, gy;
  std::vector<double> magnitude;
  std::vector<double> direction;
  std::vector<uint8_t> valid;

  size_t idx(int r, int c) const { return static_cast<size_t>(r) * width + c; }
};

namespace detail {

inline void skip_pnm_whitespace(std::istream& in) {
  int ch = in.peek();
  while (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '#') {
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      in.get();
    }
    ch = in.peek();
  }
}

inline long read_pnm_int(std::istream& in) {
  skip_pnm_whitespace(in);
  long v = 0;
  if (!(in >> v)) throw input_error("raster: malformed header field");
  return v;
}

}  // namespace detail

// Reads a 16-bit (or 8-bit) single-channel portable graymap (P2 or P5) and
// converts raw units to meters with the given scale. Raw value 0 is the
// sensor non-return code and becomes an invalid pixel.
inline DepthImage load_depth(std::istream& in, double raw_to_meters) {
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") throw input_error("raster: expected P2/P5 graymap, got '" + magic + "'");
  const long w = detail::read_pnm_int(in);
  const long h = detail::read_pnm_int(in);
  const long maxval = detail::read_pnm_int(in);
  if (w <= 0 || h <= 0) throw input_error("raster: zero or negative dimensions");
  if (maxval <= 0 || maxval > 65535) throw input_error("raster: unsupported maxval");

  DepthImage img(static_cast<int>(w), static_cast<int>(h));
  const size_t n = img.size();
  if (magic == "P2") {
    for (size_t i = 0; i < n; ++i) {
      long v = 0;
      if (!(in >> v)) throw input_error("raster: truncated ASCII data");
      if (v < 0 || v > maxval) throw input_error("raster: sample out of range");
      img.depth[i] = v * raw_to_meters;
      img.valid[i] = v != 0;
    }
  } else {
    in.get();  // single whitespace after maxval
    const bool two_byte = maxval > 255;
    std::vector<unsigned char> buf(n * (two_byte ? 2 : 1));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(in.gcount()) != buf.size()) throw input_error("raster: truncated binary data");
    for (size_t i = 0; i < n; ++i) {
      const long v = two_byte ? (buf[2 * i] << 8 | buf[2 * i + 1]) : buf[i];  // big-endian
      img.depth[i] = v * raw_to_meters;
      img.valid[i] = v != 0;
    }
  }
  return img;
}

inline DepthImage load_depth_file(const std::string& path, double raw_to_meters) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw input_error("cannot open depth raster: " + path);
  return load_depth(f, raw_to_meters);
}

// Writes a 16-bit binary graymap; invalid pixels are stored as 0.
inline void save_depth_pgm16(const DepthImage& img, std::ostream& out, double meters_to_raw) {
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  for (size_t i = 0; i < img.size(); ++i) {
    long v = 0;
    if (img.valid[i]) {
      v = std::lround(img.depth[i] * meters_to_raw);
      v = std::clamp(v, 1L, 65535L);
    }
    const unsigned char hi = static_cast<unsigned char>((v >> 8) & 0xff);
    const unsigned char lo = static_cast<unsigned char>(v & 0xff);
    out.put(static_cast<char>(hi));
    out.put(static_cast<char>(lo));
  }
}

inline void save_depth_pgm16_file(const DepthImage& img, const std::string& path, double meters_to_raw) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw input_error("cannot write depth raster: " + path);
  save_depth_pgm16(img, f, meters_to_raw);
}

// Repairs sensor shadows: every invalid pixel that has at least one valid
// neighbor inside the window is assigned the median of those neighbors.
// Passes repeat until nothing is invalid or max_passes is reached; pixels
// still invalid afterwards stay flagged. Valid pixels are never touched.
inline DepthImage fill_shadows(const DepthImage& img, int window = 5, int max_passes = 16) {
  if (window < 3 || window % 2 == 0) throw input_error("fill_shadows: window must be odd and >= 3");
  DepthImage cur = img;
  const int radius = window / 2;
  std::vector<double> neigh;
  for (int pass = 0; pass < max_passes; ++pass) {
    if (cur.invalid_count() == 0) break;
    DepthImage next = cur;
    bool changed = false;
    for (int r = 0; r < cur.height; ++r) {
      for (int c = 0; c < cur.width; ++c) {
        if (cur.is_valid(r, c)) continue;
        neigh.clear();
        for (int dr = -radius; dr <= radius; ++dr) {
          for (int dc = -radius; dc <= radius; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int rr = r + dr, cc = c + dc;
            if (cur.in_bounds(rr, cc) && cur.is_valid(rr, cc)) neigh.push_back(cur.at(rr, cc));
          }
        }
        if (neigh.empty()) continue;
        std::sort(neigh.begin(), neigh.end());
        const size_t m = neigh.size() / 2;
        const double med = (neigh.size() % 2 == 1) ? neigh[m] : 0.5 * (neigh[m - 1] + neigh[m]);
        next.at(r, c) = med;
        next.valid[next.idx(r, c)] = 1;
        changed = true;
      }
    }
    cur = std::move(next);
    if (!changed) break;
  }
  return cur;
}

// Central differences in the interior, one-sided at the borders. A pixel's
// gradient is flagged invalid when any stencil pixel is invalid.
inline GradientField compute_gradients(const DepthImage& img) {
  if (img.width < 2 || img.height < 2) throw input_error("compute_gradients: image smaller than 2x2");
  GradientField g;
  g.width = img.width;
  g.height = img.height;
  const size_t n = img.size();
  g.gx.assign(n, 0.0);
  g.gy.assign(n, 0.0);
  g.magnitude.assign(n, 0.0);
  g.direction.assign(n, 0.0);
  g.valid.assign(n, 0);

  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const int c0 = std::max(c - 1, 0), c1 = std::min(c + 1, img.width - 1);
      const int r0 = std::max(r - 1, 0), r1 = std::min(r + 1, img.height - 1);
      if (!img.is_valid(r, c0) || !img.is_valid(r, c1) || !img.is_valid(r0, c) || !img.is_valid(r1, c)) continue;
      const double dx = (img.at(r, c1) - img.at(r, c0)) / (c1 - c0);
      const double dy = (img.at(r1, c) - img.at(r0, c)) / (r1 - r0);
      const size_t i = g.idx(r, c);
      g.gx[i] = dx;
      g.gy[i] = dy;
      g.magnitude[i] = std::hypot(dx, dy);
      double dir = std::atan2(dy, dx);
      if (dir <= -kPi) dir = kPi;
      g.direction[i] = dir;
      g.valid[i] = 1;
    }
  }
  return g;
}

// Separable Gaussian smoothing of the valid depth values; sigma in pixels,
// sigma <= 0 is a no-op. Invalid pixels stay invalid and do not contribute.
inline DepthImage gaussian_smooth(const DepthImage& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));

  auto pass = [&](const DepthImage& src, bool horizontal) {
    DepthImage dst = src;
    for (int r = 0; r < src.height; ++r) {
      for (int c = 0; c < src.width; ++c) {
        if (!src.is_valid(r, c)) continue;
        double acc = 0.0, wsum = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int rr = horizontal ? r : r + k;
          const int cc = horizontal ? c + k : c;
          if (!src.in_bounds(rr, cc) || !src.is_valid(rr, cc)) continue;
          const double w = kernel[k + radius];
          acc += w * src.at(rr, cc);
          wsum += w;
        }
        dst.at(r, c) = acc / wsum;
      }
    }
    return dst;
  };
  return pass(pass(img, true), false);
}

}  // namespace edgegrasp
