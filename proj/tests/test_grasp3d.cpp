#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "edgegrasp/grasp3d.hpp"

using namespace edgegrasp;

namespace {

std::vector<Vec3> plane_points(const Vec3& normal, double offset, int n, uint32_t seed, double span = 0.2) {
  // orthonormal basis of the plane
  Vec3 t1 = normal.cross(Vec3::UnitX());
  if (t1.norm() < 1e-6) t1 = normal.cross(Vec3::UnitY());
  t1.normalize();
  const Vec3 t2 = normal.normalized().cross(t1);
  const Vec3 origin = offset * normal.normalized();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-span, span);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.push_back(origin + u(rng) * t1 + u(rng) * t2);
  return pts;
}

}  // namespace

TEST_CASE("backproject principal point and unit tangent", "[grasp3d]") {
  CameraModel cam{500.0, 500.0, 320.0, 240.0};
  DepthImage img(900, 481, 1.0);
  const auto res = backproject({{240, 320}, {240, 820}}, img, cam);
  REQUIRE(res.points.size() == 2);
  CHECK((res.points[0] - Vec3(0, 0, 1)).norm() < 1e-12);
  CHECK((res.points[1] - Vec3(1, 0, 1)).norm() < 1e-12);
}

TEST_CASE("backproject skips invalid pixels with a count", "[grasp3d]") {
  CameraModel cam;
  DepthImage img(10, 10, 0.5);
  img.valid[img.idx(3, 3)] = 0;
  const auto res = backproject({{3, 3}, {4, 4}, {20, 20}}, img, cam);
  CHECK(res.points.size() == 1);
  CHECK(res.skipped_invalid == 2);
}

TEST_CASE("backprojected points of a rendered plane satisfy its equation", "[grasp3d]") {
  // depth image of the plane n.X = d under a pinhole camera
  CameraModel cam{570.0, 570.0, 319.5, 239.5};
  const Vec3 n = Vec3(0.1, -0.2, 1.0).normalized();
  const double d = 0.8;
  DepthImage img(640, 480, 0.0);
  for (int r = 0; r < 480; ++r)
    for (int c = 0; c < 640; ++c) {
      const Vec3 dir((c - cam.cx) / cam.fx, (r - cam.cy) / cam.fy, 1.0);
      img.at(r, c) = d / n.dot(dir);
    }
  std::vector<Pixel> pixels;
  for (int k = 0; k < 400; ++k) pixels.push_back({(k * 37) % 480, (k * 91) % 640});
  const auto res = backproject(pixels, img, cam);
  for (const Vec3& p : res.points) CHECK(std::abs(n.dot(p) - d) < 1e-6);
}

TEST_CASE("width_check is strict at both bounds", "[grasp3d]") {
  const Vec3 origin = Vec3::Zero();
  CHECK(width_check(origin, {0.05, 0, 0}, 0.02, 0.07));
  CHECK_FALSE(width_check(origin, {0.02, 0, 0}, 0.02, 0.07));
  CHECK_FALSE(width_check(origin, {0.10, 0, 0}, 0.02, 0.07));
  CHECK_THROWS_AS(width_check(origin, origin, 0.07, 0.02), input_error);
}

TEST_CASE("fit_plane_ransac recovers an exact plane", "[grasp3d]") {
  const Vec3 n = Vec3(0.2, 0.3, 0.9).normalized();
  const auto pts = plane_points(n, 0.6, 100, 5);
  const PlaneFit fit = fit_plane_ransac(pts, 0.005, 128, 99);
  CHECK(fit.inliers.size() == 100);
  CHECK(fit.rms < 1e-12);
  CHECK(std::min((fit.normal - n).norm(), (fit.normal + n).norm()) < 1e-9);
}

TEST_CASE("fit_plane_ransac rejects 20% outliers", "[grasp3d]") {
  const Vec3 n = Vec3(-0.1, 0.25, 0.96).normalized();
  auto pts = plane_points(n, 0.55, 80, 17);
  std::mt19937 rng(18);
  std::uniform_real_distribution<double> u(-0.15, 0.15);
  for (int i = 0; i < 20; ++i) pts.push_back(Vec3(u(rng), u(rng), 0.55 + u(rng) + 0.02));
  const PlaneFit fit = fit_plane_ransac(pts, 0.005, 256, 4);
  CHECK(fit.inliers.size() >= 78);
  const double angle = std::acos(std::min(std::abs(fit.normal.dot(n)), 1.0));
  CHECK(rad2deg(angle) < 2.0);
}

TEST_CASE("fit_plane_ransac with three points is exact", "[grasp3d]") {
  const std::vector<Vec3> pts{{0, 0, 0.5}, {0.1, 0, 0.5}, {0, 0.1, 0.56}};
  const PlaneFit fit = fit_plane_ransac(pts, 0.01, 32, 1, 3);
  CHECK(fit.inliers.size() == 3);
  for (const Vec3& p : pts) CHECK(fit.distance(p) < 1e-12);
}

TEST_CASE("fit_plane_ransac is deterministic for a fixed seed", "[grasp3d]") {
  auto pts = plane_points(Vec3(0.3, -0.4, 0.85).normalized(), 0.7, 60, 23);
  std::mt19937 rng(24);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int i = 0; i < 15; ++i) pts.push_back(Vec3(u(rng), u(rng), 0.7 + u(rng)));
  const PlaneFit a = fit_plane_ransac(pts, 0.006, 64, 1234);
  const PlaneFit b = fit_plane_ransac(pts, 0.006, 64, 1234);
  CHECK(a.normal == b.normal);
  CHECK(a.offset == b.offset);
  CHECK(a.inliers == b.inliers);
  CHECK(a.rms == b.rms);
}

TEST_CASE("fit_plane_ransac error paths", "[grasp3d]") {
  CHECK_THROWS_AS(fit_plane_ransac({{0, 0, 0}, {1, 0, 0}}, 0.01, 16, 1), input_error);
  std::vector<Vec3> collinear;
  for (int i = 0; i < 10; ++i) collinear.push_back({0.01 * i, 0.02 * i, 0.5});
  CHECK_THROWS_AS(fit_plane_ransac(collinear, 0.01, 64, 1), input_error);
  // valid plane but far outliers cut support below the minimum
  auto pts = plane_points(Vec3::UnitZ(), 0.5, 4, 3);
  pts.push_back({5.0, 5.0, 9.0});
  CHECK_THROWS_AS(fit_plane_ransac(pts, 1e-9, 64, 1, 10), input_error);
}

TEST_CASE("grasp_parameters computes the documented pose", "[grasp3d]") {
  const std::vector<Vec3> region_a{{0.0, 0.0, 0.5}};
  const std::vector<Vec3> region_b{{0.05, 0.0, 0.5}};
  PlaneFit plane;
  plane.normal = Vec3(0, 0, -1);  // toward the camera; must be flipped
  plane.offset = -0.5;
  const GraspCandidate g = grasp_parameters(region_a, region_b, plane, 0.1, 0.07);
  CHECK((g.approach - Vec3(0, 0, 1)).norm() < 1e-12);
  CHECK((g.position - Vec3(0.025, 0.0, 0.4)).norm() < 1e-12);
  CHECK(g.width == Catch::Approx(0.05));
  CHECK(g.opening_pre == Catch::Approx(0.07));
  CHECK((g.contact_a - Vec3(0, 0, 0.5)).norm() < 1e-12);
  CHECK((g.closing - Vec3(-1, 0, 0)).norm() < 1e-12);
  CHECK((g.rotation.transpose() * g.rotation - Mat3::Identity()).norm() < 1e-12);
  CHECK(g.rotation.determinant() == Catch::Approx(1.0));
}

TEST_CASE("grasp_parameters re-orthogonalizes the closing direction", "[grasp3d]") {
  // contacts slightly out of plane so closing is not orthogonal to approach
  const std::vector<Vec3> region_a{{0.0, 0.0, 0.52}};
  const std::vector<Vec3> region_b{{0.05, 0.0, 0.50}};
  PlaneFit plane;
  plane.normal = Vec3(0.05, 0.0, 1.0).normalized();
  plane.offset = plane.normal.dot(Vec3(0.025, 0, 0.51));
  const GraspCandidate g = grasp_parameters(region_a, region_b, plane, 0.08, 0.07);
  CHECK(std::abs(g.approach.dot(g.closing)) < 1e-12);
  CHECK((g.rotation.transpose() * g.rotation - Mat3::Identity()).norm() < 1e-9);
  CHECK(g.rotation.determinant() == Catch::Approx(1.0));
  CHECK((g.rotation.col(2) - g.approach).norm() < 1e-12);
}

TEST_CASE("grasp_parameters rejects degenerate closing directions", "[grasp3d]") {
  const std::vector<Vec3> region_a{{0.0, 0.0, 0.50}};
  const std::vector<Vec3> region_b{{0.0, 0.0, 0.55}};  // aligned with the plane normal
  PlaneFit plane;
  plane.normal = Vec3(0, 0, 1);
  plane.offset = 0.5;
  CHECK_THROWS_AS(grasp_parameters(region_a, region_b, plane, 0.08, 0.07), input_error);
}

TEST_CASE("grasp_parameters is equivariant under camera rotations", "[grasp3d]") {
  std::mt19937 rng(808);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::vector<Vec3> a = plane_points(Vec3(u(rng), u(rng), 2.0).normalized(), 0.6, 12, 100 + trial, 0.01);
    std::vector<Vec3> b;
    for (const Vec3& p : a) b.push_back(p + Vec3(0.04, 0.01, 0.0));
    PlaneFit plane = detail::least_squares_plane([&] {
      std::vector<Vec3> joint = a;
      joint.insert(joint.end(), b.begin(), b.end());
      return joint;
    }(), [&] {
      std::vector<int> idx(a.size() + b.size());
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
      return idx;
    }());

    const GraspCandidate base = grasp_parameters(a, b, plane, 0.08, 0.07);

    // random rotation via axis-angle
    const Vec3 axis = Vec3(u(rng), u(rng), u(rng)).normalized();
    const double angle = 0.4 * u(rng);
    const Mat3 rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    auto rotate_all = [&](const std::vector<Vec3>& pts) {
      std::vector<Vec3> out;
      for (const Vec3& p : pts) out.push_back(rot * p);
      return out;
    };
    PlaneFit plane_rot = plane;
    plane_rot.normal = rot * plane.normal;
    const GraspCandidate turned = grasp_parameters(rotate_all(a), rotate_all(b), plane_rot, 0.08, 0.07);

    CHECK((turned.position - rot * base.position).norm() < 1e-9);
    CHECK((turned.contact_a - rot * base.contact_a).norm() < 1e-9);
    CHECK((turned.approach - rot * base.approach).norm() < 1e-9);
    CHECK((turned.rotation - rot * base.rotation).norm() < 1e-9);
  }
}

TEST_CASE("rank_candidates orders, deduplicates, and keeps singletons", "[grasp3d]") {
  GraspCandidate longer;
  longer.position = {0.0, 0.0, 0.5};
  longer.region_px_length = 60.0;
  longer.plane_inlier_ratio = 0.9;
  longer.plane_rms = 0.001;

  GraspCandidate shorter = longer;
  shorter.position = {0.2, 0.0, 0.5};
  shorter.region_px_length = 20.0;

  auto ranked = rank_candidates({shorter, longer});
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].region_px_length == 60.0);

  // identical poses merge into the higher-scoring record
  GraspCandidate twin = longer;
  twin.region_px_length = 30.0;
  ranked = rank_candidates({longer, twin});
  REQUIRE(ranked.size() == 1);
  CHECK(ranked[0].region_px_length == 60.0);

  ranked = rank_candidates({longer});
  REQUIRE(ranked.size() == 1);
}
