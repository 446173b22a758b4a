#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgegrasp/depth_image.hpp"
#include "edgegrasp/features.hpp"
#include "edgegrasp/geometry.hpp"
#include "edgegrasp/grasp3d.hpp"
#include "edgegrasp/keyval.hpp"
#include "edgegrasp/pairing.hpp"

namespace edgegrasp {

// ---------------------------------------------------------------------------
// scene description

struct CameraPose {
  Vec3 eye{0.0, -0.55, 0.80};
  Vec3 look_at{0.0, 0.05, 0.0};
  Vec3 up{0.0, 0.0, 1.0};
};

struct BoxSpec {
  Vec2 center{0.0, 0.0};  // bottom-face center on the table, world xy
  double bottom_z = 0.0;
  Vec3 extents{0.05, 0.05, 0.05};  // full side lengths
  double yaw_deg = 0.0;
};

struct CylinderSpec {
  Vec2 center{0.0, 0.0};
  double bottom_z = 0.0;
  double radius = 0.03;
  double height = 0.09;
};

struct SceneSpec {
  std::string name = "scene";
  CameraModel cam;
  int width = 640;
  int height = 480;
  CameraPose pose;
  double table_z = 0.0;
  std::vector<BoxSpec> boxes;
  std::vector<CylinderSpec> cylinders;
  double noise_sigma = 0.0;  // meters
  uint32_t seed = 0;
};

inline SceneSpec parse_scene(const KeyValFile& kv) {
  SceneSpec spec;
  spec.name = kv.section("").get_string("name", "scene");
  const KeyValSection& cam = kv.section("camera");
  spec.width = cam.get_int("width", spec.width);
  spec.height = cam.get_int("height", spec.height);
  spec.cam.fx = cam.get_double("fx", spec.cam.fx);
  spec.cam.fy = cam.get_double("fy", spec.cam.fy);
  spec.cam.cx = cam.get_double("cx", spec.cam.cx);
  spec.cam.cy = cam.get_double("cy", spec.cam.cy);
  auto vec3 = [](const KeyValSection& s, const std::string& key, Vec3 fallback) {
    const auto v = s.get_vector(key);
    if (v.empty()) return fallback;
    if (v.size() != 3) throw config_error("scene: '" + key + "' needs 3 numbers");
    return Vec3(v[0], v[1], v[2]);
  };
  spec.pose.eye = vec3(cam, "eye", spec.pose.eye);
  spec.pose.look_at = vec3(cam, "look_at", spec.pose.look_at);
  spec.pose.up = vec3(cam, "up", spec.pose.up);
  spec.table_z = kv.section("table").get_double("z", 0.0);
  const KeyValSection& noise = kv.section("noise");
  spec.noise_sigma = noise.get_double("sigma", 0.0);
  spec.seed = static_cast<uint32_t>(noise.get_int("seed", 0));

  for (const auto& s : kv.sections) {
    if (s.name == "box") {
      BoxSpec b;
      const auto c = s.get_vector("center");
      if (c.size() != 2) throw config_error("scene: box center needs 2 numbers");
      b.center = Vec2(c[0], c[1]);
      b.bottom_z = s.get_double("bottom_z", spec.table_z);
      const auto e = s.get_vector("extents");
      if (e.size() != 3) throw config_error("scene: box extents needs 3 numbers");
      b.extents = Vec3(e[0], e[1], e[2]);
      if (b.extents.minCoeff() <= 0.0) throw config_error("scene: box extents must be positive");
      b.yaw_deg = s.get_double("yaw", 0.0);
      spec.boxes.push_back(b);
    } else if (s.name == "cylinder") {
      CylinderSpec cy;
      const auto c = s.get_vector("center");
      if (c.size() != 2) throw config_error("scene: cylinder center needs 2 numbers");
      cy.center = Vec2(c[0], c[1]);
      cy.bottom_z = s.get_double("bottom_z", spec.table_z);
      cy.radius = s.get_double("radius", cy.radius);
      cy.height = s.get_double("height", cy.height);
      if (cy.radius <= 0.0 || cy.height <= 0.0) throw config_error("scene: cylinder size must be positive");
      spec.cylinders.push_back(cy);
    }
  }
  return spec;
}

inline SceneSpec load_scene_file(const std::string& path) { return parse_scene(parse_keyval_file(path)); }

// ---------------------------------------------------------------------------
// exact ray casting

namespace detail {

struct SceneGeom {
  const SceneSpec* spec;
  Eigen::Matrix3d r_cw;  // world -> camera rows: right, down, forward

  explicit SceneGeom(const SceneSpec& s) : spec(&s) {
    const Vec3 fwd = (s.pose.look_at - s.pose.eye).normalized();
    Vec3 right = fwd.cross(s.pose.up);
    if (right.norm() < 1e-9) throw input_error("scene: camera up is parallel to the view direction");
    right.normalize();
    const Vec3 down = fwd.cross(right).normalized();
    r_cw.row(0) = right;
    r_cw.row(1) = down;
    r_cw.row(2) = fwd;
  }

  Vec3 to_camera(const Vec3& world) const { return r_cw * (world - spec->pose.eye); }

  // ray through a (possibly fractional) pixel; the direction is scaled so
  // that the ray parameter equals camera-frame depth
  Vec3 pixel_ray(double row, double col) const {
    const Vec3 dir_cam((col - spec->cam.cx) / spec->cam.fx, (row - spec->cam.cy) / spec->cam.fy, 1.0);
    return r_cw.transpose() * dir_cam;
  }

  std::optional<Vec2> project(const Vec3& world) const {
    const Vec3 pc = to_camera(world);
    if (pc.z() < 1e-6) return std::nullopt;
    return Vec2(spec->cam.project(pc));
  }
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int object = -2;  // -1 table, >= 0 primitive index, -2 none
  int face = -1;
};

// box faces: 0 +x, 1 -x, 2 +y, 3 -y, 4 +z (top), 5 -z (bottom)
inline std::optional<std::pair<double, int>> intersect_box(const BoxSpec& b, const Vec3& o, const Vec3& d) {
  const double yaw = deg2rad(b.yaw_deg);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  auto to_local = [&](const Vec3& v) { return Vec3(cy * v.x() + sy * v.y(), -sy * v.x() + cy * v.y(), v.z()); };
  const Vec3 center(b.center.x(), b.center.y(), b.bottom_z + 0.5 * b.extents.z());
  const Vec3 ol = to_local(o - center);
  const Vec3 dl = to_local(d);
  const Vec3 h = 0.5 * b.extents;

  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  int face = -1;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dl[i]) < 1e-15) {
      if (std::abs(ol[i]) > h[i]) return std::nullopt;
      continue;
    }
    double t1 = (-h[i] - ol[i]) / dl[i];
    double t2 = (h[i] - ol[i]) / dl[i];
    int f_near = dl[i] > 0 ? 2 * i + 1 : 2 * i;  // -side face when moving +
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > tmin) {
      tmin = t1;
      face = f_near;
    }
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return std::nullopt;
  }
  if (tmin <= 1e-9) return std::nullopt;
  // remap axis-pair ids to the 0..5 convention
  static const int face_map[6] = {0, 1, 2, 3, 4, 5};  // 2i=+ , 2i+1=-
  return std::make_pair(tmin, face_map[face]);
}

// cylinder faces: 0 lateral, 1 top, 2 bottom
inline std::optional<std::pair<double, int>> intersect_cylinder(const CylinderSpec& cyl, const Vec3& o,
                                                                const Vec3& d) {
  const Vec3 ol(o.x() - cyl.center.x(), o.y() - cyl.center.y(), o.z() - cyl.bottom_z);
  double best_t = std::numeric_limits<double>::infinity();
  int best_face = -1;

  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double bq = 2.0 * (ol.x() * d.x() + ol.y() * d.y());
    const double cq = ol.x() * ol.x() + ol.y() * ol.y() - cyl.radius * cyl.radius;
    const double disc = bq * bq - 4.0 * a * cq;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-bq - sq) / (2.0 * a), (-bq + sq) / (2.0 * a)}) {
        if (t <= 1e-9 || t >= best_t) continue;
        const double z = ol.z() + t * d.z();
        if (z >= 0.0 && z <= cyl.height) {
          best_t = t;
          best_face = 0;
        }
      }
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    for (int cap = 0; cap < 2; ++cap) {
      const double zc = cap == 0 ? cyl.height : 0.0;
      const double t = (zc - ol.z()) / d.z();
      if (t <= 1e-9 || t >= best_t) continue;
      const double x = ol.x() + t * d.x(), y = ol.y() + t * d.y();
      if (x * x + y * y <= cyl.radius * cyl.radius) {
        best_t = t;
        best_face = cap == 0 ? 1 : 2;
      }
    }
  }
  if (best_face < 0) return std::nullopt;
  return std::make_pair(best_t, best_face);
}

inline Hit cast_ray(const SceneSpec& spec, const Vec3& o, const Vec3& d) {
  Hit hit;
  if (std::abs(d.z()) > 1e-15) {
    const double t = (spec.table_z - o.z()) / d.z();
    if (t > 1e-9) {
      hit.t = t;
      hit.object = -1;
      hit.face = 0;
    }
  }
  for (size_t i = 0; i < spec.boxes.size(); ++i)
    if (auto r = intersect_box(spec.boxes[i], o, d); r && r->first < hit.t) {
      hit.t = r->first;
      hit.object = static_cast<int>(i);
      hit.face = r->second;
    }
  for (size_t i = 0; i < spec.cylinders.size(); ++i)
    if (auto r = intersect_cylinder(spec.cylinders[i], o, d); r && r->first < hit.t) {
      hit.t = r->first;
      hit.object = static_cast<int>(spec.boxes.size() + i);
      hit.face = r->second;
    }
  return hit;
}

inline bool point_inside(const SceneSpec& spec, const Vec3& p) {
  for (const BoxSpec& b : spec.boxes) {
    const double yaw = deg2rad(b.yaw_deg);
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const Vec3 center(b.center.x(), b.center.y(), b.bottom_z + 0.5 * b.extents.z());
    const Vec3 v = p - center;
    const Vec3 local(cy * v.x() + sy * v.y(), -sy * v.x() + cy * v.y(), v.z());
    if ((local.cwiseAbs() - 0.5 * b.extents).maxCoeff() <= 0.0) return true;
  }
  for (const CylinderSpec& c : spec.cylinders) {
    const double dx = p.x() - c.center.x(), dy = p.y() - c.center.y();
    if (dx * dx + dy * dy <= c.radius * c.radius && p.z() >= c.bottom_z && p.z() <= c.bottom_z + c.height)
      return true;
  }
  return false;
}

// deterministic standard normal draws (Box-Muller over the raw generator)
struct GaussianDraw {
  std::mt19937 rng;
  bool have_spare = false;
  double spare = 0.0;

  explicit GaussianDraw(uint32_t seed) : rng(seed) {}

  double operator()() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double u1 = (static_cast<double>(rng()) + 1.0) / 4294967297.0;
    const double u2 = (static_cast<double>(rng()) + 1.0) / 4294967297.0;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare = r * std::sin(2.0 * kPi * u2);
    have_spare = true;
    return r * std::cos(2.0 * kPi * u2);
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// ground truth

enum class GtLabel { DD, CDconvex };

struct GroundTruthEdge {
  int object_id = -1;
  GtLabel label = GtLabel::DD;
  std::vector<Vec2> polyline;     // image points, x = col, y = row
  std::vector<Vec3> points_cam;   // matching camera-frame 3D samples
  Vec2 object_side = Vec2::Zero();  // image-plane unit normal toward the object (DD only)
  double pixel_length = 0.0;
  std::set<std::pair<int, int>> surfaces;  // adjacent (object, face) keys
};

struct GroundTruthSurface {
  int object_id = -1;
  int face_id = -1;
  std::vector<Pixel> pixels;
  Vec2 centroid_px = Vec2::Zero();
  std::vector<int> edge_ids;
  bool graspable = false;
};

struct GroundTruth {
  int width = 0;
  int height = 0;
  int object_count = 0;
  std::vector<GroundTruthEdge> graspable_edges;
  std::vector<GroundTruthSurface> surfaces;
  std::vector<uint8_t> object_graspable;
  std::vector<int> object_id;       // exact per-pixel id buffers (noise-free)
  std::vector<int> face_id;
  std::vector<double> exact_depth;  // noise-free depth
};

struct GtParams {
  double dd_gap = 0.02;        // meters of depth jump that makes an edge DD
  double probe_px = 2.5;       // perpendicular probe offset
  double min_edge_px = 12.0;   // shorter ground-truth pieces are discarded
  double rim_step_px = 2.0;    // arc-length sampling of curved rims
  double alpha_f = std::atan(0.4);
  double eps_max = 0.07;       // pairing reach used for graspability
  double chord_tol_px = 1.5;   // polyline-to-chord simplification tolerance
  // a surface intersection only counts as a CD edge when the gradient
  // direction actually jumps across it; two faces can meet with aligned
  // projected gradients, which no direction-image feature can see
  double cd_jump = 0.35;  // radians
};

// Straight chord approximations of a ground-truth polyline in the pipeline's
// segment form, labels included; used for graspability analysis and tests.
inline std::vector<FeaturedSegment> gt_edge_chords(const GroundTruthEdge& e, double tol_px = 1.5,
                                                   double min_len_px = 6.0) {
  std::vector<FeaturedSegment> segs;
  const auto& poly = e.polyline;
  size_t lo = 0;
  while (lo + 1 < poly.size()) {
    size_t hi = poly.size() - 1;
    // grow the chord until the deviation bound breaks
    for (size_t probe = lo + 2; probe <= poly.size() - 1; ++probe) {
      double dev = 0.0;
      for (size_t k = lo + 1; k < probe; ++k) dev = std::max(dev, line_point_distance(poly[lo], poly[probe], poly[k]));
      if (dev > tol_px) {
        hi = probe - 1;
        break;
      }
      hi = probe;
    }
    if (hi <= lo) break;
    FeaturedSegment f;
    f.segment.p_start = poly[lo];
    f.segment.p_end = poly[hi];
    double zacc = 0.0;
    for (size_t k = lo; k <= hi; ++k) {
      f.segment.member_pixels.push_back(
          {static_cast<int>(std::lround(poly[k].y())), static_cast<int>(std::lround(poly[k].x()))});
      zacc += e.points_cam[k].z();
    }
    f.seg_depth = zacc / static_cast<double>(hi - lo + 1);
    if (e.label == GtLabel::CDconvex) {
      f.label = EdgeLabel::CDpm;
    } else {
      const Vec2 plus = rotate2(f.segment.direction(), kPi / 2.0);
      f.label = plus.dot(e.object_side) > 0.0 ? EdgeLabel::DDminus : EdgeLabel::DDplus;
    }
    if (f.segment.length() >= min_len_px) segs.push_back(std::move(f));
    lo = hi;
  }
  return segs;
}

namespace detail {

struct CandidateCurve {
  int object_id;
  std::vector<Vec3> points;             // world
  std::vector<std::array<Vec3, 2>> normals;  // outward normals of the two adjacent faces, per point
};

inline void add_box_curves(const SceneSpec& spec, int obj, std::vector<CandidateCurve>& out,
                           const SceneGeom& geom) {
  const BoxSpec& b = spec.boxes[obj];
  const double yaw = deg2rad(b.yaw_deg);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  auto to_world = [&](const Vec3& local) {
    return Vec3(cy * local.x() - sy * local.y() + b.center.x(), sy * local.x() + cy * local.y() + b.center.y(),
                local.z() + b.bottom_z);
  };
  auto axis_world = [&](const Vec3& local) {
    return Vec3(cy * local.x() - sy * local.y(), sy * local.x() + cy * local.y(), local.z());
  };
  const double hx = 0.5 * b.extents.x(), hy = 0.5 * b.extents.y(), hz = b.extents.z();
  const Vec3 nx = axis_world({1, 0, 0}), ny = axis_world({0, 1, 0}), nz = axis_world({0, 0, 1});

  struct E {
    Vec3 a, b;
    Vec3 n1, n2;
  };
  std::vector<E> edges;
  // top rectangle
  edges.push_back({{hx, -hy, hz}, {hx, hy, hz}, nx, nz});
  edges.push_back({{-hx, -hy, hz}, {-hx, hy, hz}, -nx, nz});
  edges.push_back({{-hx, hy, hz}, {hx, hy, hz}, ny, nz});
  edges.push_back({{-hx, -hy, hz}, {hx, -hy, hz}, -ny, nz});
  // bottom rectangle
  edges.push_back({{hx, -hy, 0}, {hx, hy, 0}, nx, -nz});
  edges.push_back({{-hx, -hy, 0}, {-hx, hy, 0}, -nx, -nz});
  edges.push_back({{-hx, hy, 0}, {hx, hy, 0}, ny, -nz});
  edges.push_back({{-hx, -hy, 0}, {hx, -hy, 0}, -ny, -nz});
  // vertical
  edges.push_back({{hx, hy, 0}, {hx, hy, hz}, nx, ny});
  edges.push_back({{hx, -hy, 0}, {hx, -hy, hz}, nx, -ny});
  edges.push_back({{-hx, hy, 0}, {-hx, hy, hz}, -nx, ny});
  edges.push_back({{-hx, -hy, 0}, {-hx, -hy, hz}, -nx, -ny});

  for (const E& e : edges) {
    const Vec3 wa = to_world(e.a), wb = to_world(e.b);
    // sample at roughly one-pixel spacing
    double px_len = 4.0;
    const auto pa = geom.project(wa), pb = geom.project(wb);
    if (pa && pb) px_len = (*pa - *pb).norm();
    const int n = std::max(4, static_cast<int>(std::ceil(px_len)));
    CandidateCurve curve;
    curve.object_id = obj;
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      curve.points.push_back(wa + t * (wb - wa));
      curve.normals.push_back({e.n1, e.n2});
    }
    out.push_back(std::move(curve));
  }
}

inline void add_cylinder_curves(const SceneSpec& spec, int idx, std::vector<CandidateCurve>& out,
                                const SceneGeom& geom, double rim_step_px) {
  const CylinderSpec& c = spec.cylinders[idx];
  const int obj = static_cast<int>(spec.boxes.size()) + idx;
  const Vec3 top_n(0, 0, 1), bottom_n(0, 0, -1);

  // rims, sampled by arc length in image pixels
  for (int cap = 0; cap < 2; ++cap) {
    const double z = c.bottom_z + (cap == 0 ? c.height : 0.0);
    const Vec3 cap_n = cap == 0 ? top_n : bottom_n;
    double circ_px = 64.0;
    const auto p0 = geom.project(Vec3(c.center.x() + c.radius, c.center.y(), z));
    const auto p1 = geom.project(Vec3(c.center.x() - c.radius, c.center.y(), z));
    if (p0 && p1) circ_px = kPi * (*p0 - *p1).norm();
    const int n = std::max(24, static_cast<int>(std::ceil(circ_px / rim_step_px)));
    CandidateCurve curve;
    curve.object_id = obj;
    for (int i = 0; i <= n; ++i) {
      const double psi = 2.0 * kPi * i / n;
      const Vec3 radial(std::cos(psi), std::sin(psi), 0.0);
      curve.points.push_back(Vec3(c.center.x(), c.center.y(), z) + c.radius * radial);
      curve.normals.push_back({radial, cap_n});
    }
    out.push_back(std::move(curve));
  }

  // lateral silhouette generators: the tangency condition is independent of
  // height for a vertical cylinder
  const Vec2 e(spec.pose.eye.x() - c.center.x(), spec.pose.eye.y() - c.center.y());
  const double dist = e.norm();
  if (dist > c.radius) {
    const double phi0 = std::atan2(e.y(), e.x());
    const double dphi = std::acos(c.radius / dist);
    for (double psi : {phi0 + dphi, phi0 - dphi}) {
      const Vec3 radial(std::cos(psi), std::sin(psi), 0.0);
      const Vec3 base(c.center.x() + c.radius * radial.x(), c.center.y() + c.radius * radial.y(), c.bottom_z);
      const Vec3 top = base + Vec3(0, 0, c.height);
      double px_len = 8.0;
      const auto pa = geom.project(base), pb = geom.project(top);
      if (pa && pb) px_len = (*pa - *pb).norm();
      const int n = std::max(4, static_cast<int>(std::ceil(px_len)));
      CandidateCurve curve;
      curve.object_id = obj;
      for (int i = 0; i <= n; ++i) {
        curve.points.push_back(base + (static_cast<double>(i) / n) * Vec3(0, 0, c.height));
        curve.normals.push_back({radial, radial});
      }
      out.push_back(std::move(curve));
    }
  }
}

struct SampleClass {
  bool usable = false;
  GtLabel label = GtLabel::DD;
  Vec2 px = Vec2::Zero();
  Vec3 p_cam = Vec3::Zero();
  Vec2 side = Vec2::Zero();
  std::set<std::pair<int, int>> surfaces;
};

}  // namespace detail

// Exact ray-cast depth of the scene plus analytically derived ground truth:
// graspable depth edges (silhouettes and convex surface intersections, with
// concave resting junctions excluded), visible surface regions, and
// per-surface/per-object graspability. Seeded Gaussian noise is added to the
// returned depth image only; the ground truth stays exact.
inline std::pair<DepthImage, GroundTruth> render(const SceneSpec& spec, const GtParams& params = {}) {
  if (spec.width < 8 || spec.height < 8) throw input_error("scene: image too small");
  if (detail::point_inside(spec, spec.pose.eye)) throw input_error("scene: camera inside a primitive");
  const detail::SceneGeom geom(spec);

  GroundTruth truth;
  truth.width = spec.width;
  truth.height = spec.height;
  truth.object_count = static_cast<int>(spec.boxes.size() + spec.cylinders.size());
  truth.object_id.assign(static_cast<size_t>(spec.width) * spec.height, -2);
  truth.face_id.assign(truth.object_id.size(), -1);
  truth.exact_depth.assign(truth.object_id.size(), 0.0);

  DepthImage depth(spec.width, spec.height);
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c) {
      const Vec3 dir = geom.pixel_ray(r, c);
      const detail::Hit hit = detail::cast_ray(spec, spec.pose.eye, dir);
      const size_t i = depth.idx(r, c);
      if (hit.object == -2) {
        depth.valid[i] = 0;  // ray escapes past the table horizon
        continue;
      }
      depth.depth[i] = hit.t;  // ray parameter equals camera depth
      truth.exact_depth[i] = hit.t;
      truth.object_id[i] = hit.object;
      truth.face_id[i] = hit.face;
    }

  // --- ground-truth edges -------------------------------------------------
  std::vector<detail::CandidateCurve> curves;
  for (size_t i = 0; i < spec.boxes.size(); ++i) detail::add_box_curves(spec, static_cast<int>(i), curves, geom);
  for (size_t i = 0; i < spec.cylinders.size(); ++i)
    detail::add_cylinder_curves(spec, static_cast<int>(i), curves, geom, params.rim_step_px);

  auto probe_depth = [&](const Vec2& px) -> std::pair<double, std::pair<int, int>> {
    const Vec3 dir = geom.pixel_ray(px.y(), px.x());
    const detail::Hit hit = detail::cast_ray(spec, spec.pose.eye, dir);
    return {hit.t, {hit.object, hit.face}};
  };

  const double margin = params.probe_px + 1.5;
  for (const detail::CandidateCurve& curve : curves) {
    const size_t n = curve.points.size();
    std::vector<detail::SampleClass> samples(n);
    std::vector<std::optional<Vec2>> proj(n);
    for (size_t i = 0; i < n; ++i) proj[i] = geom.project(curve.points[i]);

    for (size_t i = 0; i < n; ++i) {
      if (!proj[i]) continue;
      const Vec2 px = *proj[i];
      if (px.x() < margin || px.x() > spec.width - 1 - margin || px.y() < margin ||
          px.y() > spec.height - 1 - margin)
        continue;

      // occlusion: nothing may hit strictly before the sample itself
      const Vec3 to_q = curve.points[i] - spec.pose.eye;
      const detail::Hit occ = detail::cast_ray(spec, spec.pose.eye, to_q);
      if (occ.object != -2 && occ.t < 1.0 - 1e-6) continue;

      // local image tangent from curve neighbors
      const size_t i0 = i > 0 ? i - 1 : i, i1 = i + 1 < n ? i + 1 : i;
      if (!proj[i0] || !proj[i1]) continue;
      Vec2 tangent = *proj[i1] - *proj[i0];
      if (tangent.norm() < 1e-9) continue;
      tangent.normalize();
      const Vec2 perp(-tangent.y(), tangent.x());

      const auto [z_plus, id_plus] = probe_depth(px + params.probe_px * perp);
      const auto [z_minus, id_minus] = probe_depth(px - params.probe_px * perp);
      if (!std::isfinite(z_plus) || !std::isfinite(z_minus)) continue;

      detail::SampleClass s;
      s.px = px;
      s.p_cam = geom.to_camera(curve.points[i]);
      const int obj = curve.object_id;
      const double jump = std::abs(z_plus - z_minus);
      // jumps near the DD/CD decision threshold are genuinely ambiguous for
      // any consistent classifier; such samples are not graded
      if (jump > 0.7 * params.dd_gap && jump < 1.5 * params.dd_gap) continue;
      if (jump >= 1.5 * params.dd_gap) {
        const bool plus_near = z_plus < z_minus;
        const auto& near_id = plus_near ? id_plus : id_minus;
        if (near_id.first != obj) continue;  // another object in front
        s.label = GtLabel::DD;
        s.side = plus_near ? perp : Vec2(-perp);
        s.surfaces.insert(near_id);
        s.usable = true;
      } else {
        const Vec3 view = curve.points[i] - spec.pose.eye;
        const bool front1 = curve.normals[i][0].dot(view) < -1e-9;
        const bool front2 = curve.normals[i][1].dot(view) < -1e-9;
        if (front1 && front2) {
          // gradient direction of the exact depth on each side of the edge
          auto direction_at = [&](const Vec2& q) -> std::optional<double> {
            const int r = static_cast<int>(std::lround(q.y()));
            const int c = static_cast<int>(std::lround(q.x()));
            if (r < 1 || r >= spec.height - 1 || c < 1 || c >= spec.width - 1) return std::nullopt;
            auto at = [&](int rr, int cc) { return truth.exact_depth[static_cast<size_t>(rr) * spec.width + cc]; };
            const double gx = 0.5 * (at(r, c + 1) - at(r, c - 1));
            const double gy = 0.5 * (at(r + 1, c) - at(r - 1, c));
            return std::atan2(gy, gx);
          };
          const auto t_plus = direction_at(px + params.probe_px * perp);
          const auto t_minus = direction_at(px - params.probe_px * perp);
          if (t_plus && t_minus && std::abs(wrap_angle(*t_plus - *t_minus)) > params.cd_jump) {
            s.label = GtLabel::CDconvex;
            if (id_plus.first == obj) s.surfaces.insert(id_plus);
            if (id_minus.first == obj) s.surfaces.insert(id_minus);
            s.usable = true;
          }
        }
      }
      samples[i] = s;
    }

    // group consecutive usable samples of the same class into edges
    size_t i = 0;
    while (i < n) {
      if (!samples[i].usable) {
        ++i;
        continue;
      }
      size_t j = i;
      Vec2 side_ref = samples[i].side;
      while (j + 1 < n && samples[j + 1].usable && samples[j + 1].label == samples[i].label) {
        if (samples[i].label == GtLabel::DD && samples[j + 1].side.dot(side_ref) <= 0.0) break;
        ++j;
      }
      GroundTruthEdge edge;
      edge.object_id = curve.object_id;
      edge.label = samples[i].label;
      Vec2 side_acc = Vec2::Zero();
      for (size_t k = i; k <= j; ++k) {
        edge.polyline.push_back(samples[k].px);
        edge.points_cam.push_back(samples[k].p_cam);
        side_acc += samples[k].side;
        edge.surfaces.insert(samples[k].surfaces.begin(), samples[k].surfaces.end());
        if (k > i) edge.pixel_length += (samples[k].px - samples[k - 1].px).norm();
      }
      if (edge.label == GtLabel::DD && side_acc.norm() > 1e-9) edge.object_side = side_acc.normalized();
      if (edge.pixel_length >= params.min_edge_px && edge.polyline.size() >= 3)
        truth.graspable_edges.push_back(std::move(edge));
      i = j + 1;
    }
  }

  // --- surfaces -----------------------------------------------------------
  std::map<std::pair<int, int>, size_t> surf_index;
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c) {
      const size_t i = depth.idx(r, c);
      if (truth.object_id[i] < 0) continue;
      const std::pair<int, int> key{truth.object_id[i], truth.face_id[i]};
      auto it = surf_index.find(key);
      if (it == surf_index.end()) {
        GroundTruthSurface s;
        s.object_id = key.first;
        s.face_id = key.second;
        truth.surfaces.push_back(std::move(s));
        it = surf_index.emplace(key, truth.surfaces.size() - 1).first;
      }
      truth.surfaces[it->second].pixels.push_back({r, c});
    }
  std::erase_if(truth.surfaces, [](const GroundTruthSurface& s) { return s.pixels.size() < 40; });
  for (GroundTruthSurface& s : truth.surfaces) {
    Vec2 acc = Vec2::Zero();
    for (const Pixel& p : s.pixels) acc += to_point(p);
    s.centroid_px = acc / static_cast<double>(s.pixels.size());
    for (size_t e = 0; e < truth.graspable_edges.size(); ++e)
      if (truth.graspable_edges[e].surfaces.count({s.object_id, s.face_id}))
        s.edge_ids.push_back(static_cast<int>(e));
  }

  // --- per-surface graspability -------------------------------------------
  // Chord-approximate each boundary edge and run the same pair tests the
  // pipeline applies (the evaluation protocol puts no gripper-width bound on
  // plain graspability).
  std::vector<std::vector<FeaturedSegment>> edge_chords(truth.graspable_edges.size());
  for (size_t e = 0; e < truth.graspable_edges.size(); ++e)
    edge_chords[e] = gt_edge_chords(truth.graspable_edges[e], params.chord_tol_px);

  PairingParams pairing;
  pairing.alpha_f = params.alpha_f;
  pairing.img_width = spec.width;
  pairing.img_height = spec.height;
  pairing.eps_max = params.eps_max;
  pairing.fx = spec.cam.fx;

  truth.object_graspable.assign(truth.object_count, 0);
  for (GroundTruthSurface& s : truth.surfaces) {
    std::vector<FeaturedSegment> segs;
    for (int e : s.edge_ids)
      for (const FeaturedSegment& f : edge_chords[e]) {
        FeaturedSegment g = f;
        g.id = static_cast<int>(segs.size());
        segs.push_back(std::move(g));
      }
    s.graspable = !enumerate_pairs(segs, pairing).empty();
    if (s.graspable && s.object_id >= 0) truth.object_graspable[s.object_id] = 1;
  }

  // --- sensor noise ---------------------------------------------------------
  if (spec.noise_sigma > 0.0) {
    detail::GaussianDraw gauss(spec.seed);
    for (size_t i = 0; i < depth.size(); ++i) {
      const double g = gauss();  // draw for every pixel to keep the stream stable
      if (depth.valid[i]) depth.depth[i] += spec.noise_sigma * g;
    }
  }
  return {std::move(depth), std::move(truth)};
}

// ---------------------------------------------------------------------------
// detection-rate evaluation

struct DetectionReport {
  int graspable_edges = 0, detected_edges = 0;
  int graspable_surfaces = 0, detected_surfaces = 0;
  int graspable_objects = 0, detected_objects = 0;
  std::vector<uint8_t> edge_detected;
  std::vector<uint8_t> surface_detected;

  static double rate(int det, int total) { return total == 0 ? 1.0 : static_cast<double>(det) / total; }
  double edge_rate() const { return rate(detected_edges, graspable_edges); }
  double surface_rate() const { return rate(detected_surfaces, graspable_surfaces); }
  double object_rate() const { return rate(detected_objects, graspable_objects); }
};

namespace detail {

inline double polyline_point_distance(const std::vector<Vec2>& poly, const Vec2& q) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < poly.size(); ++i) best = std::min(best, segment_point_distance(poly[i], poly[i + 1], q));
  return best;
}

inline bool label_compatible(const GroundTruthEdge& e, const FeaturedSegment& f) {
  if (e.label == GtLabel::CDconvex) return f.label == EdgeLabel::CDpm;
  if (!f.is_dd()) return false;
  return e.object_side.dot(f.object_side_dir()) > 0.0;
}

}  // namespace detail

// An edge counts as detected when at least 70% of its length lies within
// match_tol of detected segments carrying the correct label. A surface is
// detected when some candidate pair touches two of its boundary edges; an
// object when one of its graspable surfaces is.
inline DetectionReport evaluate_detection(const std::vector<FeaturedSegment>& detected,
                                          const std::vector<CandidatePair>& pairs, const GroundTruth& truth,
                                          double match_tol = 3.0) {
  DetectionReport report;
  report.graspable_edges = static_cast<int>(truth.graspable_edges.size());
  report.edge_detected.assign(truth.graspable_edges.size(), 0);

  std::map<int, const FeaturedSegment*> by_id;
  for (const FeaturedSegment& f : detected) by_id[f.id] = &f;

  for (size_t e = 0; e < truth.graspable_edges.size(); ++e) {
    const GroundTruthEdge& edge = truth.graspable_edges[e];
    size_t matched = 0;
    for (const Vec2& sample : edge.polyline) {
      bool hit = false;
      for (const FeaturedSegment& f : detected) {
        if (!detail::label_compatible(edge, f)) continue;
        if (segment_point_distance(f.segment.p_start, f.segment.p_end, sample) <= match_tol) {
          hit = true;
          break;
        }
      }
      matched += hit;
    }
    if (matched >= 0.70 * static_cast<double>(edge.polyline.size())) {
      report.edge_detected[e] = 1;
      ++report.detected_edges;
    }
  }

  // GT edges each pair's contact regions lie along
  auto region_edge_matches = [&](const ContactRegion2D& region) {
    std::set<int> out;
    auto it = by_id.find(region.parent_id);
    if (it == by_id.end()) return out;
    const FeaturedSegment& parent = *it->second;
    const Vec2 mid = region.sub_segment.midpoint();
    for (size_t e = 0; e < truth.graspable_edges.size(); ++e) {
      const GroundTruthEdge& edge = truth.graspable_edges[e];
      if (!detail::label_compatible(edge, parent)) continue;
      if (detail::polyline_point_distance(edge.polyline, mid) <= match_tol) out.insert(static_cast<int>(e));
    }
    return out;
  };
  std::vector<std::pair<std::set<int>, std::set<int>>> pair_edges;
  pair_edges.reserve(pairs.size());
  for (const CandidatePair& p : pairs) pair_edges.emplace_back(region_edge_matches(p.a), region_edge_matches(p.b));

  report.surface_detected.assign(truth.surfaces.size(), 0);
  std::vector<uint8_t> object_detected(std::max(truth.object_count, 0), 0);
  for (size_t s = 0; s < truth.surfaces.size(); ++s) {
    const GroundTruthSurface& surf = truth.surfaces[s];
    if (!surf.graspable) continue;
    ++report.graspable_surfaces;
    const std::set<int> own(surf.edge_ids.begin(), surf.edge_ids.end());
    bool found = false;
    for (const auto& [ea, eb] : pair_edges) {
      const bool a_on = std::any_of(ea.begin(), ea.end(), [&](int e) { return own.count(e); });
      const bool b_on = std::any_of(eb.begin(), eb.end(), [&](int e) { return own.count(e); });
      if (a_on && b_on) {
        found = true;
        break;
      }
    }
    if (found) {
      report.surface_detected[s] = 1;
      ++report.detected_surfaces;
      if (surf.object_id >= 0) object_detected[surf.object_id] = 1;
    }
  }

  for (int o = 0; o < truth.object_count; ++o) {
    if (!truth.object_graspable[o]) continue;
    ++report.graspable_objects;
    if (object_detected[o]) ++report.detected_objects;
  }
  return report;
}

}  // namespace edgegrasp
