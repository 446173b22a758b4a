#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_set>
#include <vector>

#include "edgegrasp/features.hpp"
#include "edgegrasp/force_closure.hpp"
#include "edgegrasp/geometry.hpp"
#include "edgegrasp/segments.hpp"

namespace edgegrasp {

// Part of a segment usable as a finger contact: the slice enclosed by the
// pair's overlap area, plus which wrench side produced it.
struct ContactRegion2D {
  int parent_id = -1;
  LineSegment sub_segment;
  int side = 0;  // +1: projected toward +beta, -1: toward -beta
};

struct CandidatePair {
  ContactRegion2D a, b;
  double beta_deg = 0.0;
  Vec2 p_f = Vec2::Zero();  // center of the overlap area
  std::vector<Pixel> overlap_pixels;
  int seg_a = -1, seg_b = -1;
};

// Two segments can oppose each other only when their lines are within twice
// the friction half-angle; the difference folds at 180.
inline bool angle_test(const FeaturedSegment& a, const FeaturedSegment& b, double alpha_f_rad) {
  const double diff = angle_difference_deg(segment_angle(a.segment), segment_angle(b.segment));
  return diff < 2.0 * rad2deg(alpha_f_rad);
}

// Projection angle for a pair: the orthogonal direction of their bisector.
// Folded so it stays in (90 - alpha_f, 90] for any pair passing the angle
// test, including near-0/near-180 wraps.
inline double pair_beta_deg(const FeaturedSegment& a, const FeaturedSegment& b) {
  return 90.0 - 0.5 * angle_difference_deg(segment_angle(a.segment), segment_angle(b.segment));
}

// Overlap test with explicit projection sides. Each segment projects a
// parallelogram of width w_max at +-beta; a nonempty intersection yields the
// contact regions (the segment slices the overlap projects back onto) and
// the force focus point at the overlap centroid.
inline std::optional<CandidatePair> overlap_test_sided(const FeaturedSegment& a, const FeaturedSegment& b,
                                                       double w_max, int side_a, int side_b, int img_width,
                                                       int img_height) {
  const double beta = pair_beta_deg(a, b);

  // projections must face each other
  const Vec2 mid_a = a.segment.midpoint(), mid_b = b.segment.midpoint();
  const Vec2 dir_a = rotate2(a.segment.direction(), deg2rad(side_a * beta));
  const Vec2 dir_b = rotate2(b.segment.direction(), deg2rad(side_b * beta));
  if ((mid_b - mid_a).dot(dir_a) <= 0.0 || (mid_a - mid_b).dot(dir_b) <= 0.0) return std::nullopt;

  const Mask ha = build_mask(a.segment, w_max, side_a * beta, img_width, img_height);
  const Mask hb = build_mask(b.segment, w_max, side_b * beta, img_width, img_height);
  if (ha.covered.empty() || hb.covered.empty()) return std::nullopt;

  std::unordered_set<size_t> in_a;
  in_a.reserve(ha.covered.size() * 2);
  for (const Pixel& p : ha.covered) in_a.insert(static_cast<size_t>(p.r) * img_width + p.c);

  CandidatePair pair;
  Vec2 centroid = Vec2::Zero();
  for (const Pixel& p : hb.covered) {
    if (!in_a.count(static_cast<size_t>(p.r) * img_width + p.c)) continue;
    pair.overlap_pixels.push_back(p);
    centroid += to_point(p);
  }
  if (pair.overlap_pixels.empty()) return std::nullopt;
  centroid /= static_cast<double>(pair.overlap_pixels.size());

  auto region_of = [&](const FeaturedSegment& seg, const Mask& mask, int side) -> std::optional<ContactRegion2D> {
    double smin = std::numeric_limits<double>::max(), smax = std::numeric_limits<double>::lowest();
    for (const Pixel& p : pair.overlap_pixels) {
      const double s = mask.params(to_point(p)).x();
      smin = std::min(smin, s);
      smax = std::max(smax, s);
    }
    smin = std::clamp(smin, 0.0, mask.len);
    smax = std::clamp(smax, 0.0, mask.len);
    if (!(smax > smin)) return std::nullopt;

    ContactRegion2D region;
    region.parent_id = seg.id;
    region.side = side;
    region.sub_segment.p_start = mask.origin + smin * mask.u;
    region.sub_segment.p_end = mask.origin + smax * mask.u;
    for (const Pixel& p : seg.segment.member_pixels) {
      const double s = (to_point(p) - mask.origin).dot(mask.u);
      if (s >= smin - 0.5 && s <= smax + 0.5) region.sub_segment.member_pixels.push_back(p);
    }
    if (region.sub_segment.member_pixels.empty()) return std::nullopt;
    return region;
  };

  auto ra = region_of(a, ha, side_a);
  auto rb = region_of(b, hb, side_b);
  if (!ra || !rb) return std::nullopt;

  pair.a = std::move(*ra);
  pair.b = std::move(*rb);
  pair.beta_deg = beta;
  pair.p_f = centroid;
  pair.seg_a = a.id;
  pair.seg_b = b.id;
  return pair;
}

// Projection sides a segment offers: DD edges project toward their object
// side only; convex CD edges are reachable from both sides and yield a
// hypothesis per side.
inline std::vector<int> wrench_sides(const FeaturedSegment& seg) {
  switch (seg.label) {
    case EdgeLabel::DDminus: return {+1};
    case EdgeLabel::DDplus: return {-1};
    case EdgeLabel::CDpm: return {+1, -1};
    case EdgeLabel::CD0: return {};
  }
  return {};
}

// Label-driven overlap test: tries the side hypotheses in deterministic
// order and returns the first nonempty overlap.
inline std::optional<CandidatePair> overlap_test(const FeaturedSegment& a, const FeaturedSegment& b, double w_max,
                                                 int img_width, int img_height) {
  for (int sa : wrench_sides(a))
    for (int sb : wrench_sides(b))
      if (auto pair = overlap_test_sided(a, b, w_max, sa, sb, img_width, img_height)) return pair;
  return std::nullopt;
}

struct PairingParams {
  double alpha_f = std::atan(0.4);  // radians
  int img_width = 640;
  int img_height = 480;
  // projection reach: the pixel equivalent of the maximum gripper opening at
  // the pair's depth when metric data is available, else the fallback
  double eps_max = 0.07;  // meters
  double fx = 570.0;
  double fallback_w_max = 60.0;  // pixels
  bool use_metric_w_max = true;
  // 2D centroid-distance gate derived from the gripper opening
  bool gate = true;
  double gate_factor = 1.5;
};

// Enumerates all unordered segment pairs (CD0 excluded), filtering by the
// angle test, the distance gate, the overlap test per compatible wrench-side
// hypothesis, and finally the planar force-closure condition evaluated at
// the region centers. Output order is deterministic.
inline std::vector<CandidatePair> enumerate_pairs(const std::vector<FeaturedSegment>& segments,
                                                  const PairingParams& params) {
  std::vector<CandidatePair> out;
  for (size_t i = 0; i < segments.size(); ++i) {
    const FeaturedSegment& a = segments[i];
    if (a.label == EdgeLabel::CD0) continue;
    for (size_t j = i + 1; j < segments.size(); ++j) {
      const FeaturedSegment& b = segments[j];
      if (b.label == EdgeLabel::CD0) continue;
      if (!angle_test(a, b, params.alpha_f)) continue;

      const bool have_depth = std::isfinite(a.seg_depth) && std::isfinite(b.seg_depth) && a.seg_depth > 0.0 &&
                              b.seg_depth > 0.0;
      const double z = have_depth ? 0.5 * (a.seg_depth + b.seg_depth) : 0.0;
      if (params.gate && have_depth) {
        const double gate_px = params.gate_factor * params.eps_max * params.fx / z;
        if ((a.segment.midpoint() - b.segment.midpoint()).norm() > gate_px) continue;
      }
      const double w_max = (params.use_metric_w_max && have_depth) ? params.eps_max * params.fx / z
                                                                   : params.fallback_w_max;

      for (int sa : wrench_sides(a))
        for (int sb : wrench_sides(b)) {
          auto pair = overlap_test_sided(a, b, w_max, sa, sb, params.img_width, params.img_height);
          if (!pair) continue;
          // region centers with wrench-direction normals must close
          PlanarContact ca{pair->a.sub_segment.midpoint(), rotate2(a.segment.direction(), sa * kPi / 2.0),
                           params.alpha_f};
          PlanarContact cb{pair->b.sub_segment.midpoint(), rotate2(b.segment.direction(), sb * kPi / 2.0),
                           params.alpha_f};
          if (!two_finger_fc(ca, cb)) continue;
          out.push_back(std::move(*pair));
        }
    }
  }
  return out;
}

}  // namespace edgegrasp
