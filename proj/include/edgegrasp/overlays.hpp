#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "edgegrasp/binary_image.hpp"
#include "edgegrasp/depth_image.hpp"
#include "edgegrasp/features.hpp"
#include "edgegrasp/pairing.hpp"

namespace edgegrasp {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // rgb interleaved

  RgbImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}

  void set(int r, int c, uint8_t red, uint8_t green, uint8_t blue) {
    if (r < 0 || r >= height || c < 0 || c >= width) return;
    const size_t i = (static_cast<size_t>(r) * width + c) * 3;
    data[i] = red;
    data[i + 1] = green;
    data[i + 2] = blue;
  }
};

inline void save_ppm_file(const RgbImage& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw input_error("cannot write image: " + path);
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
}

// grayscale backdrop from the depth range
inline RgbImage depth_backdrop(const DepthImage& depth) {
  RgbImage img(depth.width, depth.height);
  double lo = 1e30, hi = -1e30;
  for (size_t i = 0; i < depth.size(); ++i)
    if (depth.valid[i]) {
      lo = std::min(lo, depth.depth[i]);
      hi = std::max(hi, depth.depth[i]);
    }
  const double span = hi > lo ? hi - lo : 1.0;
  for (int r = 0; r < depth.height; ++r)
    for (int c = 0; c < depth.width; ++c) {
      uint8_t v = 0;
      if (depth.is_valid(r, c)) v = static_cast<uint8_t>(40 + 200 * (1.0 - (depth.at(r, c) - lo) / span));
      img.set(r, c, v, v, v);
    }
  return img;
}

namespace detail {

inline void draw_line(RgbImage& img, const Vec2& a, const Vec2& b, uint8_t red, uint8_t green, uint8_t blue) {
  const int n = std::max(2, static_cast<int>(std::ceil((b - a).norm())) + 1);
  for (int i = 0; i < n; ++i) {
    const Vec2 p = a + (static_cast<double>(i) / (n - 1)) * (b - a);
    img.set(static_cast<int>(std::lround(p.y())), static_cast<int>(std::lround(p.x())), red, green, blue);
  }
}

inline std::array<uint8_t, 3> palette_color(uint32_t i) {
  // deterministic pseudo-random palette
  uint32_t h = i * 2654435761u;
  const uint8_t r = static_cast<uint8_t>(64 + (h & 0xbf));
  const uint8_t g = static_cast<uint8_t>(64 + ((h >> 8) & 0xbf));
  const uint8_t b = static_cast<uint8_t>(64 + ((h >> 16) & 0xbf));
  return {r, g, b};
}

}  // namespace detail

// detected line segments in per-segment colors over the depth image
inline RgbImage segments_overlay(const DepthImage& depth, const std::vector<FeaturedSegment>& segments) {
  RgbImage img = depth_backdrop(depth);
  for (const FeaturedSegment& f : segments) {
    const auto [r, g, b] = detail::palette_color(static_cast<uint32_t>(f.id) + 1);
    for (const Pixel& p : f.segment.member_pixels) img.set(p.r, p.c, r, g, b);
    detail::draw_line(img, f.segment.p_start, f.segment.p_end, r, g, b);
  }
  return img;
}

// projection areas and contact regions for each candidate pair
inline RgbImage pairs_overlay(const DepthImage& depth, const std::vector<CandidatePair>& pairs) {
  RgbImage img = depth_backdrop(depth);
  for (size_t i = 0; i < pairs.size(); ++i) {
    const CandidatePair& pr = pairs[i];
    const auto [r, g, b] = detail::palette_color(static_cast<uint32_t>(i) + 11);
    for (const Pixel& p : pr.overlap_pixels) img.set(p.r, p.c, r / 2, g / 2, b / 2);
    detail::draw_line(img, pr.a.sub_segment.p_start, pr.a.sub_segment.p_end, 255, 220, 0);
    detail::draw_line(img, pr.b.sub_segment.p_start, pr.b.sub_segment.p_end, 255, 220, 0);
    img.set(static_cast<int>(std::lround(pr.p_f.y())), static_cast<int>(std::lround(pr.p_f.x())), 255, 0, 0);
  }
  return img;
}

// merged edge pixels in white
inline RgbImage edges_overlay(const DepthImage& depth, const BinaryImage& edges) {
  RgbImage img = depth_backdrop(depth);
  for (int r = 0; r < edges.height; ++r)
    for (int c = 0; c < edges.width; ++c)
      if (edges.get(r, c)) img.set(r, c, 255, 255, 255);
  return img;
}

}  // namespace edgegrasp
