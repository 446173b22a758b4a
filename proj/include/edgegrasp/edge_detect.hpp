#pragma once

#include <cmath>
#include <deque>
#include <vector>

#include "edgegrasp/binary_image.hpp"
#include "edgegrasp/depth_image.hpp"
#include "edgegrasp/geometry.hpp"

namespace edgegrasp {

namespace detail {

// Non-maximum suppression + hysteresis on an edge-strength field.
// `strength` must already be in threshold units; `dirx/diry` give the local
// discontinuity normal used for the suppression neighbors.
inline BinaryImage canny_core(int width, int height, const std::vector<double>& strength,
                              const std::vector<double>& dirx, const std::vector<double>& diry,
                              const std::vector<uint8_t>& valid, double low, double high,
                              const std::vector<double>* cap = nullptr) {
  auto idx = [width](int r, int c) { return static_cast<size_t>(r) * width + c; };
  // octant-rounded forward step of the discontinuity normal; (dc, dr)
  static const int step[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};

  BinaryImage weak(width, height), strong(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const size_t i = idx(r, c);
      if (!valid[i]) continue;
      const double s = strength[i];
      const double gate = cap ? std::min(s, (*cap)[i]) : s;
      if (gate <= low) continue;
      const double a = std::atan2(diry[i], dirx[i]);
      int oct = static_cast<int>(std::lround(a / (kPi / 4.0)));
      oct = ((oct % 8) + 8) % 8;
      auto at = [&](int rr, int cc) {
        return (rr >= 0 && rr < height && cc >= 0 && cc < width && valid[idx(rr, cc)]) ? strength[idx(rr, cc)] : 0.0;
      };
      const double fwd = at(r + step[oct][1], c + step[oct][0]);
      const double bwd = at(r - step[oct][1], c - step[oct][0]);
      const double fwd2 = at(r + 2 * step[oct][1], c + 2 * step[oct][0]);
      // keep genuine peaks only: a symmetric two-pixel ridge keeps its first
      // pixel, while the onset of a constant-strength plateau (a slope step,
      // not a discontinuity) is suppressed
      if (!(s > bwd && s >= fwd && (s > fwd || s > fwd2))) continue;
      weak.set(r, c);
      if (gate > high) strong.set(r, c);
    }
  }

  // grow strong pixels through 8-connected weak ones; growth requires the
  // discontinuity normals to stay roughly aligned so one edge cannot creep
  // around a corner onto a different feature
  constexpr double kGrowAngleTol = 1.05;  // ~60 degrees, folded
  auto normals_aligned = [&](size_t a, size_t b) {
    const double na = std::hypot(dirx[a], diry[a]), nb = std::hypot(dirx[b], diry[b]);
    if (na < 1e-15 || nb < 1e-15) return true;
    const double cosd = std::abs(dirx[a] * dirx[b] + diry[a] * diry[b]) / (na * nb);
    return std::acos(std::clamp(cosd, 0.0, 1.0)) <= kGrowAngleTol;
  };
  BinaryImage out(width, height);
  std::deque<Pixel> queue;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (strong.get(r, c)) {
        out.set(r, c);
        queue.push_back({r, c});
      }
  while (!queue.empty()) {
    const Pixel p = queue.front();
    queue.pop_front();
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = p.r + dr, cc = p.c + dc;
        if (!out.in_bounds(rr, cc) || out.get(rr, cc) || !weak.get(rr, cc)) continue;
        if (!normals_aligned(idx(p.r, p.c), idx(rr, cc))) continue;
        out.set(rr, cc);
        queue.push_back({rr, cc});
      }
  }
  return out;
}

}  // namespace detail

// Depth-discontinuity edges: Canny scheme on the depth image. Thresholds are
// step heights in meters; the central-difference magnitude of an ideal step
// is half its height, so strengths are scaled by 2 before comparison. A
// steep surface produces gradient-magnitude peaks without any depth step, so
// marks are additionally gated on the largest one-pixel depth increment
// across the edge actually reaching the thresholds.
inline BinaryImage detect_dd_edges(const DepthImage& img, const GradientField& grad, double low, double high) {
  if (!(low < high)) throw input_error("detect_dd_edges: low must be < high");
  static const int step[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  const size_t n = grad.magnitude.size();
  std::vector<double> strength(n), cap(n, 0.0);
  for (size_t i = 0; i < n; ++i) strength[i] = 2.0 * grad.magnitude[i];
  for (int r = 0; r < grad.height; ++r)
    for (int c = 0; c < grad.width; ++c) {
      const size_t i = grad.idx(r, c);
      if (!grad.valid[i] || strength[i] <= low) continue;
      const double a = std::atan2(grad.gy[i], grad.gx[i]);
      int oct = static_cast<int>(std::lround(a / (kPi / 4.0)));
      oct = ((oct % 8) + 8) % 8;
      const int dc = step[oct][0], dr = step[oct][1];
      double max_inc = 0.0;
      for (int t = -3; t < 3; ++t) {
        const int r0 = r + t * dr, c0 = c + t * dc, r1 = r0 + dr, c1 = c0 + dc;
        if (!img.in_bounds(r0, c0) || !img.in_bounds(r1, c1)) continue;
        if (!img.is_valid(r0, c0) || !img.is_valid(r1, c1)) continue;
        max_inc = std::max(max_inc, std::abs(img.at(r1, c1) - img.at(r0, c0)));
      }
      cap[i] = 2.0 * max_inc;
    }
  return detail::canny_core(grad.width, grad.height, strength, grad.gx, grad.gy, grad.valid, low, high, &cap);
}

// Curvature-discontinuity edges: Canny scheme on the gradient-direction
// image. Angular differences wrap at +-pi; thresholds are direction jumps in
// radians, scaled like detect_dd_edges.
inline BinaryImage detect_cd_edges(const GradientField& grad, double low, double high) {
  if (!(low < high)) throw input_error("detect_cd_edges: low must be < high");
  const int w = grad.width, h = grad.height;
  const size_t n = grad.direction.size();
  std::vector<double> ddx(n, 0.0), ddy(n, 0.0), strength(n, 0.0);
  std::vector<uint8_t> ok(n, 0);
  auto idx = [w](int r, int c) { return static_cast<size_t>(r) * w + c; };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int c0 = std::max(c - 1, 0), c1 = std::min(c + 1, w - 1);
      const int r0 = std::max(r - 1, 0), r1 = std::min(r + 1, h - 1);
      if (!grad.valid[idx(r, c0)] || !grad.valid[idx(r, c1)] || !grad.valid[idx(r0, c)] || !grad.valid[idx(r1, c)])
        continue;
      const size_t i = idx(r, c);
      ddx[i] = wrap_angle(grad.direction[idx(r, c1)] - grad.direction[idx(r, c0)]) / (c1 - c0);
      ddy[i] = wrap_angle(grad.direction[idx(r1, c)] - grad.direction[idx(r0, c)]) / (r1 - r0);
      strength[i] = 2.0 * std::hypot(ddx[i], ddy[i]);
      ok[i] = 1;
    }
  }
  return detail::canny_core(w, h, strength, ddx, ddy, ok, low, high);
}

inline BinaryImage dilate3x3(const BinaryImage& b) {
  BinaryImage out(b.width, b.height);
  for (int r = 0; r < b.height; ++r)
    for (int c = 0; c < b.width; ++c) {
      bool v = false;
      for (int dr = -1; dr <= 1 && !v; ++dr)
        for (int dc = -1; dc <= 1 && !v; ++dc)
          if (b.in_bounds(r + dr, c + dc) && b.get(r + dr, c + dc)) v = true;
      out.set(r, c, v);
    }
  return out;
}

inline BinaryImage erode3x3(const BinaryImage& b) {
  BinaryImage out(b.width, b.height);
  for (int r = 0; r < b.height; ++r)
    for (int c = 0; c < b.width; ++c) {
      bool v = true;
      for (int dr = -1; dr <= 1 && v; ++dr)
        for (int dc = -1; dc <= 1 && v; ++dc)
          if (!b.in_bounds(r + dr, c + dc) || !b.get(r + dr, c + dc)) v = false;
      out.set(r, c, v);
    }
  return out;
}

// Zhang-Suen thinning; preserves 8-connectivity while reducing strokes
// toward one-pixel width.
inline BinaryImage zhang_suen_thin(const BinaryImage& b) {
  BinaryImage img = b;
  auto get = [&img](int r, int c) -> int { return img.in_bounds(r, c) && img.get(r, c) ? 1 : 0; };
  bool changed = true;
  std::vector<Pixel> kill;
  while (changed) {
    changed = false;
    for (int phase = 0; phase < 2; ++phase) {
      kill.clear();
      for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
          if (!img.get(r, c)) continue;
          const int p2 = get(r - 1, c), p3 = get(r - 1, c + 1), p4 = get(r, c + 1), p5 = get(r + 1, c + 1);
          const int p6 = get(r + 1, c), p7 = get(r + 1, c - 1), p8 = get(r, c - 1), p9 = get(r - 1, c - 1);
          const int bsum = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
          if (bsum < 2 || bsum > 6) continue;
          const int a = (p2 == 0 && p3 == 1) + (p3 == 0 && p4 == 1) + (p4 == 0 && p5 == 1) + (p5 == 0 && p6 == 1) +
                        (p6 == 0 && p7 == 1) + (p7 == 0 && p8 == 1) + (p8 == 0 && p9 == 1) + (p9 == 0 && p2 == 1);
          if (a != 1) continue;
          if (phase == 0) {
            if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
          } else {
            if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
          }
          kill.push_back({r, c});
        }
      }
      for (const Pixel& p : kill) img.set(p.r, p.c, false);
      if (!kill.empty()) changed = true;
    }
  }
  return img;
}

// Deletes dead-end branches of up to max_len pixels hanging off junctions;
// open chain ends that never reach a junction stay intact.
inline BinaryImage prune_spurs(const BinaryImage& b, int max_len = 4) {
  BinaryImage img = b;
  auto degree = [&img](int r, int c) {
    int d = 0;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        if (img.in_bounds(r + dr, c + dc) && img.get(r + dr, c + dc)) ++d;
      }
    return d;
  };
  // distinct branches leaving a pixel (crossing number); staircase corners
  // have degree 3 but only two branches
  auto branch_count = [&img](int r, int c) {
    static const int ring[8][2] = {{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}};
    int t = 0;
    int prev = img.in_bounds(r + ring[7][0], c + ring[7][1]) && img.get(r + ring[7][0], c + ring[7][1]);
    for (const auto& rc : ring) {
      const int cur = img.in_bounds(r + rc[0], c + rc[1]) && img.get(r + rc[0], c + rc[1]);
      t += (prev == 0 && cur == 1);
      prev = cur;
    }
    return t;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c) {
        if (!img.get(r, c) || degree(r, c) != 1) continue;
        // walk inward from the endpoint
        std::vector<Pixel> walk{{r, c}};
        Pixel prev{-1, -1}, cur{r, c};
        bool is_spur = false;
        while (static_cast<int>(walk.size()) <= max_len) {
          Pixel next{-1, -1};
          int options = 0;
          for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
              if (dr == 0 && dc == 0) continue;
              const Pixel q{cur.r + dr, cur.c + dc};
              if (!img.in_bounds(q.r, q.c) || !img.get(q.r, q.c) || q == prev) continue;
              next = q;
              ++options;
            }
          if (options == 0) break;  // isolated short chain, not a spur
          if (branch_count(next.r, next.c) >= 3) {
            is_spur = true;  // reached a junction within max_len
            break;
          }
          if (options > 1) break;  // staircase corner, not a junction
          prev = cur;
          cur = next;
          walk.push_back(cur);
        }
        if (is_spur && !walk.empty()) {
          for (const Pixel& p : walk) img.set(p.r, p.c, false);
          changed = true;
        }
      }
  }
  return img;
}

// Removes 8-connected components with fewer than min_pixels marked pixels.
inline BinaryImage remove_specks(const BinaryImage& b, int min_pixels) {
  BinaryImage out = b;
  BinaryImage seen(b.width, b.height);
  std::vector<Pixel> comp;
  std::deque<Pixel> queue;
  for (int r = 0; r < b.height; ++r) {
    for (int c = 0; c < b.width; ++c) {
      if (!b.get(r, c) || seen.get(r, c)) continue;
      comp.clear();
      queue.push_back({r, c});
      seen.set(r, c);
      while (!queue.empty()) {
        const Pixel p = queue.front();
        queue.pop_front();
        comp.push_back(p);
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = p.r + dr, cc = p.c + dc;
            if (b.in_bounds(rr, cc) && b.get(rr, cc) && !seen.get(rr, cc)) {
              seen.set(rr, cc);
              queue.push_back({rr, cc});
            }
          }
      }
      if (static_cast<int>(comp.size()) < min_pixels)
        for (const Pixel& p : comp) out.set(p.r, p.c, false);
    }
  }
  return out;
}

// Cleanup applied to each detection image: 3x3 closing to bridge one-pixel
// gaps, thinning toward single-pixel strokes, spur pruning so thinning
// artifacts do not fragment chains at fake junctions, then speck removal.
inline BinaryImage morphological_cleanup(const BinaryImage& b, int speck_min = 5) {
  return remove_specks(prune_spurs(zhang_suen_thin(erode3x3(dilate3x3(b)))), speck_min);
}

// Pixelwise OR of the two detection images.
inline BinaryImage merge_edges(const BinaryImage& dd, const BinaryImage& cd) {
  if (dd.width != cd.width || dd.height != cd.height) throw input_error("merge_edges: dimension mismatch");
  BinaryImage out = dd;
  for (size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = out.bits[i] | cd.bits[i];
  return out;
}

}  // namespace edgegrasp
