#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "edgegrasp/binary_image.hpp"
#include "edgegrasp/depth_image.hpp"
#include "edgegrasp/geometry.hpp"
#include "edgegrasp/segments.hpp"

namespace edgegrasp {

// Rasterized parallelogram mask spanned by a segment and a side vector of
// length w at angle gamma (degrees, counter-clockwise from the segment
// direction). Pixel centers are covered half-open on both axes so an
// axis-aligned mask covers exactly |L| * w pixels.
struct Mask {
  Vec2 origin = Vec2::Zero();
  Vec2 u = Vec2::UnitX();     // unit segment direction
  Vec2 side = Vec2::UnitY();  // unit side direction
  double len = 0.0;
  double w = 0.0;
  double gamma_deg = 0.0;
  std::vector<Pixel> covered;
  bool clipped_out = false;  // nothing of the parallelogram was in bounds

  // parallelogram coordinates of a point: q = origin + a*u + b*side
  Vec2 params(const Vec2& q) const {
    const double det = cross2(u, side);
    const Vec2 d = q - origin;
    return {cross2(d, side) / det, cross2(u, d) / det};
  }
};

inline Mask build_mask(const LineSegment& L, double w, double gamma_deg, int img_width, int img_height) {
  if (w < 1.0) throw input_error("build_mask: width must be >= 1");
  const double len = L.length();
  if (len <= 0.0) throw input_error("build_mask: zero-length segment");

  Mask m;
  m.origin = L.p_start;
  m.u = L.direction();
  m.side = rotate2(m.u, deg2rad(gamma_deg));
  m.len = len;
  m.w = w;
  m.gamma_deg = gamma_deg;

  const double det = cross2(m.u, m.side);
  if (std::abs(det) < 1e-9) {
    m.clipped_out = true;  // degenerate: side parallel to segment
    return m;
  }

  const Vec2 corners[4] = {m.origin, m.origin + len * m.u, m.origin + len * m.u + w * m.side, m.origin + w * m.side};
  double min_x = corners[0].x(), max_x = corners[0].x(), min_y = corners[0].y(), max_y = corners[0].y();
  for (const Vec2& p : corners) {
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }
  const int c0 = std::max(0, static_cast<int>(std::floor(min_x)));
  const int c1 = std::min(img_width - 1, static_cast<int>(std::ceil(max_x)));
  const int r0 = std::max(0, static_cast<int>(std::floor(min_y)));
  const int r1 = std::min(img_height - 1, static_cast<int>(std::ceil(max_y)));

  constexpr double eps = 1e-6;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const Vec2 ab = m.params(Vec2(c, r));
      if (ab.x() >= -eps && ab.x() < len - eps && ab.y() >= -eps && ab.y() < w - eps) m.covered.push_back({r, c});
    }
  m.clipped_out = m.covered.empty();
  return m;
}

struct MaskStats {
  double mean_depth = std::numeric_limits<double>::quiet_NaN();
  double valid_fraction = 0.0;
  size_t pixel_count = 0;
};

inline MaskStats mask_depth_stats(const Mask& m, const DepthImage& img) {
  MaskStats s;
  s.pixel_count = m.covered.size();
  if (m.covered.empty()) return s;
  double acc = 0.0;
  size_t n = 0;
  for (const Pixel& p : m.covered) {
    if (!img.is_valid(p.r, p.c)) continue;
    acc += img.at(p.r, p.c);
    ++n;
  }
  s.valid_fraction = static_cast<double>(n) / static_cast<double>(m.covered.size());
  if (n > 0) s.mean_depth = acc / static_cast<double>(n);
  return s;
}

// DD edges occlude their background; the sign tells which side of the
// segment holds the object (and with it the wrench convex). Convex CD edges
// are reachable from both sides, concave ones from neither.
enum class EdgeLabel { DDminus, DDplus, CDpm, CD0 };

inline const char* to_string(EdgeLabel l) {
  switch (l) {
    case EdgeLabel::DDminus: return "DD-";
    case EdgeLabel::DDplus: return "DD+";
    case EdgeLabel::CDpm: return "CD+-";
    case EdgeLabel::CD0: return "CD0";
  }
  return "?";
}

struct FeaturedSegment {
  LineSegment segment;
  EdgeLabel label = EdgeLabel::CD0;
  double mean_depth_pos = std::numeric_limits<double>::quiet_NaN();  // d over H+
  double mean_depth_neg = std::numeric_limits<double>::quiet_NaN();  // d over H-
  double mean_depth_on = std::numeric_limits<double>::quiet_NaN();   // d over H0
  double seg_depth = std::numeric_limits<double>::quiet_NaN();       // d along member pixels
  int id = -1;

  bool is_dd() const { return label == EdgeLabel::DDminus || label == EdgeLabel::DDplus; }
  bool is_cd() const { return !is_dd(); }

  // +1 when the object lies on the +90 side of the segment direction, -1 on
  // the -90 side; 0 for CD edges (no foreground/background distinction)
  int object_side() const {
    if (label == EdgeLabel::DDminus) return +1;
    if (label == EdgeLabel::DDplus) return -1;
    return 0;
  }

  Vec2 side_dir(int side) const { return rotate2(segment.direction(), side * kPi / 2.0); }
  Vec2 object_side_dir() const { return side_dir(object_side()); }
};

struct ClassifyParams {
  int w0 = 5;                    // side-mask width, pixels
  double min_valid_frac = 0.30;  // below this a mask is unusable
  double probe_px = 2.5;         // across-edge sampling offset
  double dd_jump = 0.02;         // meters; larger across-edge jumps mean DD
};

// Assigns the edge-type label. A depth edge is DD when the depth values on
// its two sides genuinely differ: the median across-edge jump sampled a few
// pixels out decides, with detector hit counts as the fallback where depth
// is unusable. The DD sign comes from the side with the lower mean depth
// (the object side), CD convexity from comparing side means against the
// on-edge mean. Returns nothing when the side masks carry too little valid
// depth to decide.
inline std::optional<FeaturedSegment> classify_edge(const LineSegment& L, const DepthImage& img,
                                                    const GradientField& grad, const BinaryImage& dd_src,
                                                    const BinaryImage& cd_src, const ClassifyParams& params = {}) {
  (void)grad;
  bool is_dd = false, decided = false;
  {
    const Vec2 perp = rotate2(L.direction(), kPi / 2.0);
    std::vector<double> jumps;
    for (const Pixel& p : L.member_pixels) {
      const Vec2 a = to_point(p) + params.probe_px * perp;
      const Vec2 b = to_point(p) - params.probe_px * perp;
      const int ra = static_cast<int>(std::lround(a.y())), ca = static_cast<int>(std::lround(a.x()));
      const int rb = static_cast<int>(std::lround(b.y())), cb = static_cast<int>(std::lround(b.x()));
      if (!img.in_bounds(ra, ca) || !img.in_bounds(rb, cb)) continue;
      if (!img.is_valid(ra, ca) || !img.is_valid(rb, cb)) continue;
      jumps.push_back(std::abs(img.at(ra, ca) - img.at(rb, cb)));
    }
    if (jumps.size() >= std::max<size_t>(2, L.member_pixels.size() / 3)) {
      std::nth_element(jumps.begin(), jumps.begin() + jumps.size() / 2, jumps.end());
      is_dd = jumps[jumps.size() / 2] > params.dd_jump;
      decided = true;
    }
  }
  if (!decided) {
    // fall back to comparing detector responses along the chain
    size_t dd_hits = 0, cd_hits = 0;
    auto count_hits = [&](int reach) {
      dd_hits = cd_hits = 0;
      for (const Pixel& p : L.member_pixels)
        for (int dr = -reach; dr <= reach; ++dr)
          for (int dc = -reach; dc <= reach; ++dc) {
            if (!dd_src.in_bounds(p.r + dr, p.c + dc)) continue;
            dd_hits += dd_src.get(p.r + dr, p.c + dc);
            cd_hits += cd_src.get(p.r + dr, p.c + dc);
          }
    };
    count_hits(0);
    if (dd_hits == 0 && cd_hits == 0) count_hits(1);
    is_dd = dd_hits >= cd_hits;
  }

  const Mask h_pos = build_mask(L, params.w0, +90.0, img.width, img.height);
  const Mask h_neg = build_mask(L, params.w0, -90.0, img.width, img.height);
  const Mask h_on = build_mask(L, 1.0, +90.0, img.width, img.height);
  const MaskStats s_pos = mask_depth_stats(h_pos, img);
  const MaskStats s_neg = mask_depth_stats(h_neg, img);
  const MaskStats s_on = mask_depth_stats(h_on, img);
  if (s_pos.valid_fraction < params.min_valid_frac || s_neg.valid_fraction < params.min_valid_frac)
    return std::nullopt;

  FeaturedSegment out;
  out.segment = L;
  out.mean_depth_pos = s_pos.mean_depth;
  out.mean_depth_neg = s_neg.mean_depth;
  out.mean_depth_on = s_on.mean_depth;

  double acc = 0.0;
  size_t n = 0;
  for (const Pixel& p : L.member_pixels)
    if (img.in_bounds(p.r, p.c) && img.is_valid(p.r, p.c)) {
      acc += img.at(p.r, p.c);
      ++n;
    }
  if (n > 0) out.seg_depth = acc / static_cast<double>(n);

  if (is_dd) {
    out.label = s_pos.mean_depth < s_neg.mean_depth ? EdgeLabel::DDminus : EdgeLabel::DDplus;
  } else {
    const double side_mean = 0.5 * (s_pos.mean_depth + s_neg.mean_depth);
    const double on_mean = std::isnan(s_on.mean_depth) ? out.seg_depth : s_on.mean_depth;
    out.label = side_mean > on_mean ? EdgeLabel::CDpm : EdgeLabel::CD0;
  }
  return out;
}

struct RelocateParams {
  int search_w = 7;         // half-width of the perpendicular peak search, pixels
  double max_shift = 2.0;   // largest displacement past the gradient peak, pixels
  double min_peak = 0.005;  // ignore peaks implying a step below this (meters)
  double fg_tol = 0.015;    // meters; depth agreement with the foreground level
};

// Moves DD edge pixels onto the foreground object. For every member pixel
// the gradient-magnitude peak along the mask width perpendicular to the
// segment marks the true discontinuity; pixels not clearly on the foreground
// side of that peak are shifted past it, by just enough displacement that
// the new pixel's depth verifiably matches the foreground surface.
inline FeaturedSegment relocate_dd_pixels(const FeaturedSegment& seg, const DepthImage& img,
                                          const GradientField& grad, const RelocateParams& params = {}) {
  if (!seg.is_dd()) throw input_error("relocate_dd_pixels: segment is not DD-labeled");
  const Vec2 fg = seg.object_side_dir();

  FeaturedSegment out = seg;
  std::vector<Pixel> moved;
  moved.reserve(seg.segment.member_pixels.size());
  for (const Pixel& p : seg.segment.member_pixels) {
    double best_mag = -1.0;
    int best_t = 0;
    for (int t = -params.search_w; t <= params.search_w; ++t) {
      const Vec2 q = to_point(p) + t * fg;
      const int rr = static_cast<int>(std::lround(q.y()));
      const int cc = static_cast<int>(std::lround(q.x()));
      if (rr < 0 || rr >= grad.height || cc < 0 || cc >= grad.width) continue;
      const size_t i = grad.idx(rr, cc);
      if (!grad.valid[i]) continue;
      // ties resolve toward the foreground side of the discontinuity
      if (grad.magnitude[i] >= best_mag) {
        best_mag = grad.magnitude[i];
        best_t = t;
      }
    }
    Pixel np = p;
    if (best_mag >= 0.0 && 2.0 * best_mag >= params.min_peak && -best_t < 1.0) {
      auto depth_at = [&](double t) -> double {
        const Vec2 q = to_point(p) + t * fg;
        const int rr = static_cast<int>(std::lround(q.y()));
        const int cc = static_cast<int>(std::lround(q.x()));
        if (!img.in_bounds(rr, cc) || !img.is_valid(rr, cc)) return std::numeric_limits<double>::quiet_NaN();
        return img.at(rr, cc);
      };
      // the surface one mask-width inside serves as the foreground reference
      const double ref = depth_at(best_t + params.max_shift + 1.0);
      double shift = params.max_shift;
      if (std::isfinite(ref)) {
        for (double k = 1.0; k <= params.max_shift; k += 1.0) {
          const double d = depth_at(best_t + k);
          if (std::isfinite(d) && std::abs(d - ref) < params.fg_tol) {
            shift = k;
            break;
          }
        }
      }
      const Vec2 q = to_point(p) + (best_t + shift) * fg;
      np.r = std::clamp(static_cast<int>(std::lround(q.y())), 0, grad.height - 1);
      np.c = std::clamp(static_cast<int>(std::lround(q.x())), 0, grad.width - 1);
    }
    if (moved.empty() || !(moved.back() == np)) moved.push_back(np);
  }
  if (moved.empty()) return out;

  // refit the endpoint line to the relocated pixels
  Vec2 mean = Vec2::Zero();
  for (const Pixel& p : moved) mean += to_point(p);
  mean /= static_cast<double>(moved.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (const Pixel& p : moved) {
    const Vec2 d = to_point(p) - mean;
    sxx += d.x() * d.x();
    sxy += d.x() * d.y();
    syy += d.y() * d.y();
  }
  Vec2 dir;
  if (sxx + syy < 1e-12) {
    dir = seg.segment.direction();
  } else {
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    dir = Vec2(std::cos(theta), std::sin(theta));
    if (dir.dot(seg.segment.direction()) < 0.0) dir = -dir;
  }
  double smin = std::numeric_limits<double>::max(), smax = std::numeric_limits<double>::lowest();
  for (const Pixel& p : moved) {
    const double s = (to_point(p) - mean).dot(dir);
    smin = std::min(smin, s);
    smax = std::max(smax, s);
  }
  out.segment.member_pixels = std::move(moved);
  out.segment.p_start = mean + smin * dir;
  out.segment.p_end = mean + smax * dir;
  return out;
}

struct SplitParams {
  double dd_jump = 0.015;   // meters
  double cd_jump = 0.35;    // radians
  int margin = 4;           // pixels kept intact at each end
  double side_offset = 3.0; // perpendicular sampling offset, pixels
  int window = 4;           // samples per side of the comparison windows
};

namespace detail {

inline double window_median(const std::vector<double>& v, int lo, int hi) {
  std::vector<double> w;
  for (int i = lo; i <= hi; ++i)
    if (std::isfinite(v[i])) w.push_back(v[i]);
  if (w.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::nth_element(w.begin(), w.begin() + w.size() / 2, w.end());
  return w[w.size() / 2];
}

// circular mean direction of a window; invalid when the vectors cancel
inline std::optional<double> window_mean_angle(const std::vector<double>& v, int lo, int hi) {
  Vec2 acc = Vec2::Zero();
  int n = 0;
  for (int i = lo; i <= hi; ++i) {
    if (!std::isfinite(v[i])) continue;
    acc += Vec2(std::cos(v[i]), std::sin(v[i]));
    ++n;
  }
  if (n == 0 || acc.norm() < 0.6 * n) return std::nullopt;
  return std::atan2(acc.y(), acc.x());
}

}  // namespace detail

// Detects a second collinear edge hiding inside one fitted segment: an
// abrupt change in the foreground depth level, in the across-edge depth
// difference, or in either side's surface orientation along the segment
// interior. Profiles are sampled a few pixels off the edge so the staircase
// of the chain itself cannot trigger a split. Halves are re-classified.
inline std::vector<FeaturedSegment> split_ambiguous(const FeaturedSegment& seg, const DepthImage& img,
                                                    const GradientField& grad, const BinaryImage& dd_src,
                                                    const BinaryImage& cd_src, const SplitParams& params = {},
                                                    const ClassifyParams& cls = {}) {
  const auto& px = seg.segment.member_pixels;
  const int n = static_cast<int>(px.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> level(n, nan), side_diff(n, nan), dir_pos(n, nan), dir_neg(n, nan);

  const Vec2 perp = seg.side_dir(+1);
  for (int k = 0; k < n; ++k) {
    auto sample = [&](int sign, double* depth, double* dir) {
      const Vec2 q = to_point(px[k]) + sign * params.side_offset * perp;
      const int r = static_cast<int>(std::lround(q.y()));
      const int c = static_cast<int>(std::lround(q.x()));
      if (!img.in_bounds(r, c)) return;
      if (img.is_valid(r, c)) *depth = img.at(r, c);
      if (grad.valid[grad.idx(r, c)]) *dir = grad.direction[grad.idx(r, c)];
    };
    double dp = nan, dm = nan;
    sample(+1, &dp, &dir_pos[k]);
    sample(-1, &dm, &dir_neg[k]);
    if (std::isfinite(dp) && std::isfinite(dm)) {
      level[k] = std::min(dp, dm);
      side_diff[k] = dp - dm;
    } else if (std::isfinite(dp) || std::isfinite(dm)) {
      level[k] = std::isfinite(dp) ? dp : dm;
    }
  }

  // Surfaces seen in perspective produce genuinely ramped profiles along an
  // edge, so a plain window difference would fire on every steep silhouette.
  // Three consecutive windows cancel the linear trend: a ramp scores zero, a
  // step scores its height.
  const int w = params.window;
  const int k_lo = std::max(params.margin, 2 * w - 1);
  int split_at = -1;
  for (int k = k_lo; k + 1 < n - std::max(params.margin, w); ++k) {
    auto depth_jump = [&](const std::vector<double>& prof) {
      const double m1 = detail::window_median(prof, k - 2 * w + 1, k - w);
      const double m2 = detail::window_median(prof, k - w + 1, k);
      const double m3 = detail::window_median(prof, k + 1, k + w);
      if (!std::isfinite(m1) || !std::isfinite(m2) || !std::isfinite(m3)) return 0.0;
      return std::abs(m3 - 2.0 * m2 + m1);
    };
    if (depth_jump(level) > params.dd_jump || depth_jump(side_diff) > params.dd_jump) {
      split_at = k;
      break;
    }
    // direction criterion only where no depth cliff contaminates the side
    // samples; across a cliff the depth profiles above already decide
    const double diff_l = detail::window_median(side_diff, k - w + 1, k);
    const double diff_r = detail::window_median(side_diff, k + 1, k + w);
    if (std::isfinite(diff_l) && std::isfinite(diff_r) && std::abs(diff_l) <= params.dd_jump &&
        std::abs(diff_r) <= params.dd_jump) {
      bool dir_break = false;
      for (const auto* prof : {&dir_pos, &dir_neg}) {
        const auto a1 = detail::window_mean_angle(*prof, k - 2 * w + 1, k - w);
        const auto a2 = detail::window_mean_angle(*prof, k - w + 1, k);
        const auto a3 = detail::window_mean_angle(*prof, k + 1, k + w);
        if (a1 && a2 && a3 &&
            std::abs(wrap_angle(*a3 - *a2) - wrap_angle(*a2 - *a1)) > params.cd_jump)
          dir_break = true;
      }
      if (dir_break) {
        split_at = k;
        break;
      }
    }
  }
  if (split_at < 0) return {seg};

  auto make_half = [&](int lo, int hi) -> std::optional<FeaturedSegment> {
    if (hi - lo + 1 < 2) return std::nullopt;
    LineSegment half;
    half.member_pixels.assign(px.begin() + lo, px.begin() + hi + 1);
    half.p_start = to_point(px[lo]);
    half.p_end = to_point(px[hi]);
    return classify_edge(half, img, grad, dd_src, cd_src, cls);
  };

  std::vector<FeaturedSegment> out;
  for (auto& half : {make_half(0, split_at), make_half(split_at + 1, n - 1)}) {
    if (!half) continue;
    for (auto& piece : split_ambiguous(*half, img, grad, dd_src, cd_src, params, cls)) out.push_back(std::move(piece));
  }
  if (out.empty()) out.push_back(seg);
  return out;
}

}  // namespace edgegrasp
