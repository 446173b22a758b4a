#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "edgegrasp/depth_image.hpp"
#include "edgegrasp/geometry.hpp"

namespace edgegrasp {

// Pinhole intrinsics mapping pixels to camera-frame 3D.
struct CameraModel {
  double fx = 570.0;
  double fy = 570.0;
  double cx = 319.5;
  double cy = 239.5;

  Vec3 unproject(double row, double col, double z) const {
    return {(col - cx) * z / fx, (row - cy) * z / fy, z};
  }
  Vec2 project(const Vec3& p) const { return {p.x() / p.z() * fx + cx, p.y() / p.z() * fy + cy}; }
};

struct BackprojectResult {
  std::vector<Vec3> points;
  size_t skipped_invalid = 0;
};

// Standard pinhole back-projection of valid depth pixels; invalid pixels are
// skipped and counted.
inline BackprojectResult backproject(const std::vector<Pixel>& pixels, const DepthImage& img,
                                     const CameraModel& cam) {
  BackprojectResult out;
  out.points.reserve(pixels.size());
  for (const Pixel& p : pixels) {
    if (!img.in_bounds(p.r, p.c) || !img.is_valid(p.r, p.c)) {
      ++out.skipped_invalid;
      continue;
    }
    out.points.push_back(cam.unproject(p.r, p.c, img.at(p.r, p.c)));
  }
  return out;
}

// Strict gripper width gate.
inline bool width_check(const Vec3& pa_mean, const Vec3& pb_mean, double eps_min, double eps_max) {
  if (!(eps_min < eps_max)) throw input_error("width_check: eps_min must be < eps_max");
  const double d = (pa_mean - pb_mean).norm();
  return d > eps_min && d < eps_max;
}

struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();  // unit
  double offset = 0.0;          // plane: normal . x = offset
  std::vector<int> inliers;     // indices into the input set
  double rms = 0.0;

  double distance(const Vec3& p) const { return std::abs(normal.dot(p) - offset); }
};

namespace detail {

inline PlaneFit least_squares_plane(const std::vector<Vec3>& pts, const std::vector<int>& idx) {
  Vec3 centroid = Vec3::Zero();
  for (int i : idx) centroid += pts[i];
  centroid /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (int i : idx) {
    const Vec3 d = pts[i] - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  PlaneFit fit;
  fit.normal = es.eigenvectors().col(0).normalized();
  fit.offset = fit.normal.dot(centroid);
  return fit;
}

}  // namespace detail

// RANSAC plane estimation with least-squares refinement on the consensus
// set. Points farther than t_max from the model are outliers. Deterministic
// for a fixed seed.
inline PlaneFit fit_plane_ransac(const std::vector<Vec3>& points, double t_max, int iterations, uint32_t seed,
                                 int min_inliers = 10) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw input_error("fit_plane_ransac: fewer than 3 points");

  std::mt19937 rng(seed);
  auto draw = [&](int bound) { return static_cast<int>(rng() % static_cast<uint32_t>(bound)); };

  int best_count = -1;
  Vec3 best_n = Vec3::UnitZ();
  double best_d = 0.0;
  const double scale = 1e-12;
  for (int it = 0; it < iterations; ++it) {
    const int i0 = draw(n);
    int i1 = draw(n), i2 = draw(n);
    while (i1 == i0) i1 = draw(n);
    while (i2 == i0 || i2 == i1) i2 = draw(n);
    const Vec3 nvec = (points[i1] - points[i0]).cross(points[i2] - points[i0]);
    if (nvec.norm() < scale) continue;
    const Vec3 nn = nvec.normalized();
    const double d = nn.dot(points[i0]);
    int count = 0;
    for (const Vec3& p : points)
      if (std::abs(nn.dot(p) - d) <= t_max) ++count;
    if (count > best_count) {
      best_count = count;
      best_n = nn;
      best_d = d;
    }
  }
  if (best_count < 3) throw input_error("fit_plane_ransac: degenerate input (no plane hypothesis)");

  std::vector<int> consensus;
  for (int i = 0; i < n; ++i)
    if (std::abs(best_n.dot(points[i]) - best_d) <= t_max) consensus.push_back(i);

  PlaneFit fit = detail::least_squares_plane(points, consensus);
  fit.inliers.clear();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dist = fit.distance(points[i]);
    if (dist <= t_max) {
      fit.inliers.push_back(i);
      acc += dist * dist;
    }
  }
  if (static_cast<int>(fit.inliers.size()) < std::min(min_inliers, n))
    throw input_error("fit_plane_ransac: insufficient inlier support");
  fit.rms = std::sqrt(acc / static_cast<double>(fit.inliers.size()));
  return fit;
}

// Full grasp record for a parallel-jaw gripper, camera frame.
struct GraspCandidate {
  Vec3 position = Vec3::Zero();        // P_G
  Mat3 rotation = Mat3::Identity();    // columns: closing, binormal, approach
  double opening_pre = 0.0;            // finger width before contact
  double width = 0.0;                  // finger width at contact
  Vec3 contact_a = Vec3::Zero();
  Vec3 contact_b = Vec3::Zero();
  Vec3 approach = Vec3::UnitZ();       // V_G
  Vec3 closing = Vec3::UnitX();        // V_c
  Vec3 plane_normal = Vec3::UnitZ();   // V_R as oriented
  double plane_rms = 0.0;
  double plane_inlier_ratio = 0.0;
  double region_px_length = 0.0;       // summed 2D contact-region length
  int seg_a = -1, seg_b = -1;
  double score = 0.0;
};

// Computes the grasp pose from the two contact-region point sets and their
// common plane. The approach direction is the plane normal oriented into the
// scene (away from the camera at the origin); the closing direction connects
// the region centroids and is re-orthogonalized against the approach before
// assembling the right-handed frame.
inline GraspCandidate grasp_parameters(const std::vector<Vec3>& region_a, const std::vector<Vec3>& region_b,
                                       const PlaneFit& plane, double eps_d, double eps_max) {
  if (region_a.empty() || region_b.empty()) throw input_error("grasp_parameters: empty contact region");
  Vec3 pa = Vec3::Zero(), pb = Vec3::Zero();
  for (const Vec3& p : region_a) pa += p;
  for (const Vec3& p : region_b) pb += p;
  pa /= static_cast<double>(region_a.size());
  pb /= static_cast<double>(region_b.size());

  const Vec3 mid = 0.5 * (pa + pb);
  Vec3 v_g = plane.normal;
  if (v_g.dot(mid) < 0.0) v_g = -v_g;  // approach into the scene

  Vec3 v_c = pa - pb;
  const double width = v_c.norm();
  if (width < 1e-12) throw input_error("grasp_parameters: coincident contact centroids");
  v_c /= width;
  Vec3 v_c_orth = v_c - v_c.dot(v_g) * v_g;
  if (v_c_orth.norm() < 1e-3) throw input_error("grasp_parameters: closing direction parallel to approach");
  v_c_orth.normalize();

  GraspCandidate g;
  g.contact_a = pa;
  g.contact_b = pb;
  g.approach = v_g;
  g.closing = v_c_orth;
  g.plane_normal = v_g;
  g.position = mid - eps_d * v_g;
  g.rotation.col(0) = v_c_orth;
  g.rotation.col(1) = v_g.cross(v_c_orth);
  g.rotation.col(2) = v_g;
  g.opening_pre = eps_max;
  g.width = width;
  g.plane_rms = plane.rms;
  return g;
}

struct RankingParams {
  double w_region = 0.01;   // per pixel of contact-region length
  double w_inliers = 1.0;   // per unit inlier ratio
  double w_rms = 10.0;      // per meter of plane rms
  double dedup_pos = 0.01;  // meters
  double dedup_angle_deg = 10.0;
};

// Scores, orders, and de-duplicates candidates. Near-identical poses merge
// into the higher-scoring record.
inline std::vector<GraspCandidate> rank_candidates(std::vector<GraspCandidate> cands,
                                                   const RankingParams& params = {}) {
  for (GraspCandidate& g : cands)
    g.score = params.w_region * g.region_px_length + params.w_inliers * g.plane_inlier_ratio -
              params.w_rms * g.plane_rms;
  std::stable_sort(cands.begin(), cands.end(), [](const GraspCandidate& a, const GraspCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.position.z() != b.position.z()) return a.position.z() < b.position.z();
    return std::make_pair(a.seg_a, a.seg_b) < std::make_pair(b.seg_a, b.seg_b);
  });

  std::vector<GraspCandidate> kept;
  for (GraspCandidate& g : cands) {
    bool duplicate = false;
    for (const GraspCandidate& k : kept) {
      if ((g.position - k.position).norm() >= params.dedup_pos) continue;
      const Mat3 rel = k.rotation.transpose() * g.rotation;
      const double cos_angle = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
      if (rad2deg(std::acos(cos_angle)) < params.dedup_angle_deg) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(std::move(g));
  }
  return kept;
}

}  // namespace edgegrasp
