#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace edgegrasp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = std::numbers::pi;

// Unreadable/ill-formed input data (files, images, degenerate geometry).
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values or unparsable config files.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Vec2 rotate2(const Vec2& v, double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

// Angle between two nonzero vectors, in [0, pi].
inline double angle_between(const Vec2& a, const Vec2& b) {
  const double d = a.normalized().dot(b.normalized());
  return std::acos(std::clamp(d, -1.0, 1.0));
}

inline double angle_between(const Vec3& a, const Vec3& b) {
  const double d = a.normalized().dot(b.normalized());
  return std::acos(std::clamp(d, -1.0, 1.0));
}

// Integer pixel coordinate, row-major image convention.
struct Pixel {
  int r = 0;
  int c = 0;
  bool operator==(const Pixel&) const = default;
};

// Pixel -> point in segment coordinates (x = column, y = row).
inline Vec2 to_point(const Pixel& p) { return {static_cast<double>(p.c), static_cast<double>(p.r)}; }

// Distance from point q to the infinite line through a and b.
// Falls back to point distance when a == b.
inline double line_point_distance(const Vec2& a, const Vec2& b, const Vec2& q) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len < 1e-12) return (q - a).norm();
  return std::abs(cross2(d, q - a)) / len;
}

// Distance from point q to the closed segment [a, b].
inline double segment_point_distance(const Vec2& a, const Vec2& b, const Vec2& q) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 < 1e-24) return (q - a).norm();
  const double t = std::clamp((q - a).dot(d) / len2, 0.0, 1.0);
  return (q - (a + t * d)).norm();
}

}  // namespace edgegrasp
