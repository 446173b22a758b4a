#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "edgegrasp/geometry.hpp"

namespace edgegrasp {

// Point contact with friction in the plane. The wrench convex is the closed
// cone of half-angle alpha around the inward normal n.
struct PlanarContact {
  Vec2 p = Vec2::Zero();
  Vec2 n = Vec2::UnitX();
  double alpha = 0.0;  // radians, in (0, pi/2)
};

struct Wrench {
  Vec2 f = Vec2::UnitX();  // unit force direction
  Vec2 p = Vec2::Zero();   // application point
};

struct WrenchSet {
  std::vector<Wrench> wrenches;
};

// Cone membership is closed: a direction exactly on the cone edge counts as
// inside, consistent with the strict 2*alpha angle test at equality.
constexpr double kConeTol = 1e-9;

inline bool in_cone(const Vec2& dir, const Vec2& axis, double alpha) {
  return angle_between(dir, axis) <= alpha + kConeTol;
}

namespace detail {

// Strictly positive solution of a1*f1 + a2*f2 = v, handling collinear pairs.
inline bool strictly_positive_combo2(const Vec2& v, const Vec2& f1, const Vec2& f2) {
  constexpr double eps = 1e-12;
  const double det = cross2(f1, f2);
  if (std::abs(det) > eps) {
    const double a1 = cross2(v, f2) / det;
    const double a2 = cross2(f1, v) / det;
    return a1 > eps && a2 > eps;
  }
  // collinear force pair
  const bool antipodal = f1.dot(f2) < 0.0;
  if (v.norm() < eps) return antipodal;  // a1*f1 = a2*(-f2)
  if (std::abs(cross2(v, f1)) > eps * v.norm()) return false;
  if (antipodal) return true;  // any v along the common line
  return v.dot(f1) > eps;      // same-direction pair only reaches +f1
}

// True when the three directions positively span the plane with strictly
// positive coefficients (two of them independent).
inline bool positive_span_triple(const Vec2& f1, const Vec2& f2, const Vec2& f3) {
  constexpr double eps = 1e-12;
  const Vec2 f[3] = {f1, f2, f3};
  for (int k = 0; k < 3; ++k) {
    const Vec2& a = f[k];
    const Vec2& b = f[(k + 1) % 3];
    const Vec2& c = f[(k + 2) % 3];
    if (std::abs(cross2(a, b)) <= eps) continue;
    const double det = cross2(a, b);
    const double wa = cross2(-c, b) / det;
    const double wb = cross2(a, -c) / det;
    if (wa > eps && wb > eps) return true;
  }
  return false;
}

struct Line {
  Vec2 p;
  Vec2 d;
};

inline std::optional<Vec2> line_intersection(const Line& a, const Line& b) {
  const double det = cross2(a.d, b.d);
  if (std::abs(det) < 1e-12) return std::nullopt;
  const double t = cross2(b.p - a.p, b.d) / det;
  return a.p + t * a.d;
}

// Three lines meeting at a common point, or all mutually parallel (a common
// point at infinity).
inline bool lines_concurrent(const Line& a, const Line& b, const Line& c) {
  constexpr double tol = 1e-9;
  const auto pab = line_intersection(a, b);
  if (!pab) {
    const auto pac = line_intersection(a, c);
    if (!pac) return true;  // all parallel
    // a and b are distinct parallels unless they coincide
    if (std::abs(cross2(a.d, b.p - a.p)) / std::max(1.0, (b.p - a.p).norm()) > tol) return false;
    return true;  // b lies on a, so any a^c intersection is common
  }
  return std::abs(cross2(c.d, *pab - c.p)) / std::max(1.0, (*pab - c.p).norm()) < tol;
}

}  // namespace detail

// Force-direction closure: some triple of force directions admits a strictly
// positive combination summing to zero with two of them independent.
inline bool force_direction_closure(const WrenchSet& W) {
  const auto& ws = W.wrenches;
  const size_t n = ws.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      for (size_t k = j + 1; k < n; ++k)
        if (detail::positive_span_triple(ws[i].f, ws[j].f, ws[k].f)) return true;
  return false;
}

// Torque closure: some quadruple, split into two pairs with intersection
// points p12 and p34, satisfies p34 - p12 = +-(a1 f1 + a2 f2) = -+(a3 f3 +
// a4 f4) with strictly positive coefficients, and at least three of the four
// lines of action are not concurrent (nor parallel).
inline bool torque_closure(const WrenchSet& W) {
  const auto& ws = W.wrenches;
  const size_t n = ws.size();
  if (n < 4) return false;

  auto line_of = [&](size_t i) { return detail::Line{ws[i].p, ws[i].f}; };

  std::vector<size_t> q(4);
  for (q[0] = 0; q[0] < n; ++q[0])
    for (q[1] = q[0] + 1; q[1] < n; ++q[1])
      for (q[2] = q[1] + 1; q[2] < n; ++q[2])
        for (q[3] = q[2] + 1; q[3] < n; ++q[3]) {
          bool independent = false;
          for (int drop = 0; drop < 4 && !independent; ++drop) {
            detail::Line l[3];
            int m = 0;
            for (int t = 0; t < 4; ++t)
              if (t != drop) l[m++] = line_of(q[t]);
            if (!detail::lines_concurrent(l[0], l[1], l[2])) independent = true;
          }
          if (!independent) continue;

          static const int pairings[3][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
          for (const auto& pr : pairings) {
            const size_t a = q[pr[0]], b = q[pr[1]], c = q[pr[2]], d = q[pr[3]];
            const auto pab = detail::line_intersection(line_of(a), line_of(b));
            const auto pcd = detail::line_intersection(line_of(c), line_of(d));
            if (!pab || !pcd) continue;
            const Vec2 v = *pcd - *pab;
            const bool fwd = detail::strictly_positive_combo2(v, ws[a].f, ws[b].f) &&
                             detail::strictly_positive_combo2(-v, ws[c].f, ws[d].f);
            const bool rev = detail::strictly_positive_combo2(-v, ws[a].f, ws[b].f) &&
                             detail::strictly_positive_combo2(v, ws[c].f, ws[d].f);
            if (fwd || rev) return true;
          }
        }
  return false;
}

// Two-opposing-finger condition: the segment connecting the contacts lies
// inside both friction cones.
inline bool two_finger_fc(const PlanarContact& c1, const PlanarContact& c2) {
  const Vec2 d = c2.p - c1.p;
  if (d.norm() < 1e-12) throw input_error("two_finger_fc: coincident contacts");
  const Vec2 u = d.normalized();
  return in_cone(u, c1.n, c1.alpha) && in_cone(-u, c2.n, c2.alpha);
}

// The two cone-edge force directions of a contact, each paired with the
// contact point.
inline std::vector<Wrench> cone_edge_wrenches(const PlanarContact& c) {
  return {{rotate2(c.n, c.alpha), c.p}, {rotate2(c.n, -c.alpha), c.p}};
}

namespace detail {

inline bool triangular_feasible(const Vec2& q, const PlanarContact* c, double* margin_out = nullptr) {
  double margin = 1e9;
  Vec2 k[3];
  for (int i = 0; i < 3; ++i) {
    const Vec2 d = c[i].p - q;
    if (d.norm() < 1e-9) return false;
    k[i] = d.normalized();
    // force applied at p_i is directed toward q; it must lie in the cone
    margin = std::min(margin, c[i].alpha - angle_between(-k[i], c[i].n));
  }
  if (margin < -kConeTol) return false;
  if (!positive_span_triple(k[0], k[1], k[2])) return false;
  if (margin_out) *margin_out = margin;
  return true;
}

}  // namespace detail

// Searches for a force focus point for a three-contact grasp: a point from
// which the segments to all contacts exit their friction cones and whose
// unit directions admit a strictly positive zero combination. Grid search
// over the contact bounding box refined by shrinking local steps; the
// best-margin feasible point is returned.
inline std::optional<Vec2> triangular_fc(const PlanarContact& c1, const PlanarContact& c2, const PlanarContact& c3) {
  const PlanarContact cs[3] = {c1, c2, c3};
  const double area = cross2(c2.p - c1.p, c3.p - c1.p);
  const double scale = std::max({(c2.p - c1.p).norm(), (c3.p - c1.p).norm(), (c3.p - c2.p).norm()});
  if (std::abs(area) < 1e-9 * scale * scale) throw input_error("triangular_fc: collinear contacts");

  Vec2 lo = c1.p.cwiseMin(c2.p).cwiseMin(c3.p);
  Vec2 hi = c1.p.cwiseMax(c2.p).cwiseMax(c3.p);
  const Vec2 pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  constexpr int kGrid = 96;
  bool found = false;
  double best_margin = -1e9;
  Vec2 best = Vec2::Zero();
  for (int i = 0; i <= kGrid; ++i)
    for (int j = 0; j <= kGrid; ++j) {
      const Vec2 q(lo.x() + (hi.x() - lo.x()) * i / kGrid, lo.y() + (hi.y() - lo.y()) * j / kGrid);
      double m;
      if (detail::triangular_feasible(q, cs, &m) && m > best_margin) {
        best_margin = m;
        best = q;
        found = true;
      }
    }
  if (!found) return std::nullopt;

  // local refinement toward the max-margin point
  double step = (hi - lo).maxCoeff() / kGrid;
  for (int it = 0; it < 40; ++it) {
    bool improved = false;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) {
        if (dx == 0 && dy == 0) continue;
        const Vec2 q = best + step * Vec2(dx, dy);
        double m;
        if (detail::triangular_feasible(q, cs, &m) && m > best_margin) {
          best_margin = m;
          best = q;
          improved = true;
        }
      }
    if (!improved) step *= 0.5;
    if (step < 1e-9 * scale) break;
  }
  return best;
}

}  // namespace edgegrasp
