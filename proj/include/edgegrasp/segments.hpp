#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "edgegrasp/binary_image.hpp"
#include "edgegrasp/geometry.hpp"

namespace edgegrasp {

// Ordered run of 8-connected marked pixels; simple path, no repeats.
struct PixelChain {
  std::vector<Pixel> pixels;

  size_t size() const { return pixels.size(); }
};

// Straight stretch of a chain. Endpoints may be sub-pixel; member_pixels is
// the contiguous chain slice the segment summarizes.
struct LineSegment {
  Vec2 p_start = Vec2::Zero();
  Vec2 p_end = Vec2::Zero();
  std::vector<Pixel> member_pixels;

  double length() const { return (p_end - p_start).norm(); }
  Vec2 direction() const { return (p_end - p_start).normalized(); }
  Vec2 midpoint() const { return 0.5 * (p_start + p_end); }
};

inline double segment_length(const LineSegment& L) { return L.length(); }

// Angle between the segment's line and the positive horizontal axis,
// counter-clockwise positive, folded into [0, 180) degrees.
inline double segment_angle(const LineSegment& L) {
  const Vec2 d = L.p_end - L.p_start;
  if (d.norm() < 1e-12) throw input_error("segment_angle: zero-length segment");
  double a = rad2deg(std::atan2(d.y(), d.x()));
  a = std::fmod(a + 360.0, 180.0);
  if (a >= 180.0 - 1e-12) a = 0.0;
  return a;
}

// Folded difference between two segment angles in degrees, in [0, 90].
inline double angle_difference_deg(double a_deg, double b_deg) {
  const double d = std::abs(a_deg - b_deg);
  return std::min(d, 180.0 - d);
}

// Groups marked pixels into 8-connected chains. Chains are split at junction
// pixels (more than two marked neighbors); each junction pixel is appended to
// exactly one adjacent chain so the chains partition the marked set. Output
// is ordered by first-pixel raster index.
inline std::vector<PixelChain> connect_components(const BinaryImage& edges) {
  const int w = edges.width, h = edges.height;
  auto idx = [w](const Pixel& p) { return static_cast<size_t>(p.r) * w + p.c; };

  std::vector<uint8_t> degree(static_cast<size_t>(w) * h, 0);
  std::vector<uint8_t> branches(static_cast<size_t>(w) * h, 0);
  // ring order around a pixel, for the crossing-number computation
  static const int ring[8][2] = {{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}};
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!edges.get(r, c)) continue;
      int d = 0, t = 0;
      int prev = edges.in_bounds(r + ring[7][0], c + ring[7][1]) && edges.get(r + ring[7][0], c + ring[7][1]);
      for (const auto& rc : ring) {
        const int cur = edges.in_bounds(r + rc[0], c + rc[1]) && edges.get(r + rc[0], c + rc[1]);
        d += cur;
        t += (prev == 0 && cur == 1);
        prev = cur;
      }
      degree[idx({r, c})] = static_cast<uint8_t>(d);
      branches[idx({r, c})] = static_cast<uint8_t>(t);
    }

  // a pixel is a junction when three or more distinct branches leave it;
  // plain degree over-counts at staircase corners left by thinning
  auto is_junction = [&](const Pixel& p) { return branches[idx(p)] >= 3; };

  std::vector<uint8_t> used(static_cast<size_t>(w) * h, 0);
  std::vector<uint8_t> junction_taken(static_cast<size_t>(w) * h, 0);
  std::vector<PixelChain> chains;

  auto neighbors = [&](const Pixel& p, auto&& fn) {
    // 4-adjacent first so walks do not skip staircase corner pixels
    static const int order[8][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    for (const auto& rc : order) {
      const int rr = p.r + rc[0], cc = p.c + rc[1];
      if (edges.in_bounds(rr, cc) && edges.get(rr, cc)) fn(Pixel{rr, cc});
    }
  };

  const Pixel none{-1, -1};

  // walk from `start` away from `prev` through degree<=2 pixels; an adjacent
  // junction terminates the walk and is claimed by the first chain reaching it
  auto trace = [&](Pixel start, Pixel prev) {
    PixelChain chain;
    Pixel cur = start;
    while (true) {
      chain.pixels.push_back(cur);
      used[idx(cur)] = 1;
      Pixel follow = none, junc = none;
      neighbors(cur, [&](Pixel q) {
        if (q == prev) return;
        if (is_junction(q)) {
          if (junc.r < 0) junc = q;
          return;
        }
        if (!used[idx(q)] && follow.r < 0) follow = q;
      });
      // an adjacent junction always terminates the chain; following a
      // neighbor that flanks the junction would silently walk around it
      if (junc.r < 0 && follow.r >= 0) {
        prev = cur;
        cur = follow;
        continue;
      }
      if (junc.r >= 0 && !junction_taken[idx(junc)]) {
        junction_taken[idx(junc)] = 1;
        used[idx(junc)] = 1;
        chain.pixels.push_back(junc);
      }
      break;
    }
    return chain;
  };

  // open paths: start at endpoints and isolated pixels
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Pixel p{r, c};
      if (!edges.get(r, c) || used[idx(p)] || is_junction(p)) continue;
      if (degree[idx(p)] <= 1) chains.push_back(trace(p, none));
    }

  // branches hanging off junctions with no free endpoint of their own
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Pixel p{r, c};
      if (!edges.get(r, c) || !is_junction(p)) continue;
      neighbors(p, [&](Pixel q) {
        if (used[idx(q)] || is_junction(q)) return;
        chains.push_back(trace(q, p));
      });
      // junction pixel untouched by any branch (clustered junctions): attach
      // it to an adjacent chain end, else let it stand alone
      if (!used[idx(p)]) {
        used[idx(p)] = 1;
        junction_taken[idx(p)] = 1;
        auto adjacent = [&](const Pixel& q) { return std::abs(q.r - p.r) <= 1 && std::abs(q.c - p.c) <= 1; };
        bool attached = false;
        for (auto it = chains.rbegin(); it != chains.rend() && !attached; ++it) {
          if (adjacent(it->pixels.back())) {
            it->pixels.push_back(p);
            attached = true;
          } else if (adjacent(it->pixels.front())) {
            it->pixels.insert(it->pixels.begin(), p);
            attached = true;
          }
        }
        if (!attached) {
          PixelChain solo;
          solo.pixels.push_back(p);
          chains.push_back(std::move(solo));
        }
      }
    }

  // leftovers are pure cycles of degree-2 pixels
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Pixel p{r, c};
      if (!edges.get(r, c) || used[idx(p)]) continue;
      chains.push_back(trace(p, none));
    }

  std::sort(chains.begin(), chains.end(),
            [&](const PixelChain& a, const PixelChain& b) { return idx(a.pixels.front()) < idx(b.pixels.front()); });
  return chains;
}

namespace detail {

inline void split_recursive(const std::vector<Pixel>& pts, size_t lo, size_t hi, double dev_tol,
                            std::vector<size_t>& breaks) {
  const Vec2 a = to_point(pts[lo]), b = to_point(pts[hi]);
  double max_dev = 0.0;
  size_t split = lo;
  for (size_t i = lo + 1; i < hi; ++i) {
    const double dev = line_point_distance(a, b, to_point(pts[i]));
    if (dev > max_dev) {
      max_dev = dev;
      split = i;
    }
  }
  if (max_dev >= dev_tol && split > lo && split < hi) {
    split_recursive(pts, lo, split, dev_tol, breaks);
    breaks.push_back(split);
    split_recursive(pts, split, hi, dev_tol, breaks);
  }
}

}  // namespace detail

// Recursive split-at-maximum-deviation fit of an ordered chain. Every member
// pixel of an output segment lies within dev_tol of the line through the
// segment endpoints; adjacent segments share the split pixel.
inline std::vector<LineSegment> fit_line_segments(const PixelChain& chain, double dev_tol) {
  if (chain.size() < 2) throw input_error("fit_line_segments: chain shorter than 2 pixels");
  if (!(dev_tol > 0.0)) throw input_error("fit_line_segments: dev_tol must be positive");

  std::vector<size_t> breaks;
  breaks.push_back(0);
  detail::split_recursive(chain.pixels, 0, chain.size() - 1, dev_tol, breaks);
  breaks.push_back(chain.size() - 1);

  std::vector<LineSegment> out;
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    const size_t lo = breaks[k], hi = breaks[k + 1];
    LineSegment seg;
    seg.p_start = to_point(chain.pixels[lo]);
    seg.p_end = to_point(chain.pixels[hi]);
    seg.member_pixels.assign(chain.pixels.begin() + lo, chain.pixels.begin() + hi + 1);
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace edgegrasp
