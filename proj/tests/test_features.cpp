#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "edgegrasp/depth_image.hpp"
#include "edgegrasp/edge_detect.hpp"
#include "edgegrasp/features.hpp"

using namespace edgegrasp;

namespace {

DepthImage make_image(int w, int h, auto&& fn) {
  DepthImage img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) img.at(r, c) = fn(r, c);
  return img;
}

LineSegment seg_with_members(Vec2 a, Vec2 b) {
  LineSegment s;
  s.p_start = a;
  s.p_end = b;
  const int n = static_cast<int>(std::ceil((b - a).norm()));
  for (int i = 0; i <= n; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / n);
    const Pixel px{static_cast<int>(std::lround(p.y())), static_cast<int>(std::lround(p.x()))};
    if (s.member_pixels.empty() || !(s.member_pixels.back() == px)) s.member_pixels.push_back(px);
  }
  return s;
}

BinaryImage mark_members(int w, int h, const LineSegment& s) {
  BinaryImage b(w, h);
  for (const Pixel& p : s.member_pixels)
    if (b.in_bounds(p.r, p.c)) b.set(p.r, p.c);
  return b;
}

// independent point-in-parallelogram test via a full-pivot linear solve
std::set<std::pair<int, int>> oracle_parallelogram(const LineSegment& L, double w, double gamma_deg, int img_w,
                                                   int img_h) {
  const Vec2 u = L.direction();
  const Vec2 side = rotate2(u, deg2rad(gamma_deg));
  Eigen::Matrix2d m;
  m << u.x(), side.x(), u.y(), side.y();
  const auto solver = m.fullPivLu();
  std::set<std::pair<int, int>> covered;
  for (int r = 0; r < img_h; ++r)
    for (int c = 0; c < img_w; ++c) {
      const Vec2 ab = solver.solve(Vec2(Vec2(c, r) - L.p_start));
      if (ab.x() >= -1e-6 && ab.x() < L.length() - 1e-6 && ab.y() >= -1e-6 && ab.y() < w - 1e-6)
        covered.insert({r, c});
    }
  return covered;
}

}  // namespace

TEST_CASE("build_mask covers an axis-aligned rectangle above the segment", "[features]") {
  const LineSegment L = seg_with_members({5, 10}, {15, 10});
  const Mask above = build_mask(L, 3, +90.0, 40, 30);
  CHECK(above.covered.size() == 30);  // |L| * w
  for (const Pixel& p : above.covered) {
    CHECK(p.r >= 10);
    CHECK(p.r <= 12);
    CHECK(p.c >= 5);
    CHECK(p.c <= 14);
  }
  const Mask below = build_mask(L, 3, -90.0, 40, 30);
  CHECK(below.covered.size() == 30);
  for (const Pixel& p : below.covered) {
    CHECK(p.r <= 10);
    CHECK(p.r >= 8);
  }
}

TEST_CASE("build_mask area tracks |L|*w on axis-aligned segments", "[features]") {
  for (double len : {8.0, 14.0, 21.0}) {
    const LineSegment horiz = seg_with_members({6, 20}, {6 + len, 20});
    const LineSegment vert = seg_with_members({20, 4}, {20, 4 + len});
    for (int w : {1, 4, 6}) {
      CHECK(std::abs(static_cast<double>(build_mask(horiz, w, 90.0, 64, 48).covered.size()) - len * w) <= len);
      CHECK(std::abs(static_cast<double>(build_mask(vert, w, 90.0, 64, 48).covered.size()) - len * w) <= len);
    }
  }
}

TEST_CASE("build_mask matches the point-in-parallelogram oracle at 45 degrees", "[features]") {
  const LineSegment L = seg_with_members({8, 8}, {20, 20});
  for (double gamma : {90.0, -90.0, 60.0, -120.0}) {
    const Mask m = build_mask(L, 2, gamma, 40, 40);
    const auto expected = oracle_parallelogram(L, 2, gamma, 40, 40);
    std::set<std::pair<int, int>> got;
    for (const Pixel& p : m.covered) got.insert({p.r, p.c});
    CHECK(got == expected);
  }
}

TEST_CASE("build_mask flags fully out-of-bounds masks", "[features]") {
  LineSegment L;
  L.p_start = {-50, -50};
  L.p_end = {-40, -50};
  const Mask m = build_mask(L, 3, 90.0, 40, 40);
  CHECK(m.covered.empty());
  CHECK(m.clipped_out);
}

TEST_CASE("build_mask validates arguments", "[features]") {
  LineSegment L;
  L.p_start = {0, 0};
  L.p_end = {10, 0};
  CHECK_THROWS_AS(build_mask(L, 0.5, 90.0, 40, 40), input_error);
  LineSegment degenerate;
  degenerate.p_start = degenerate.p_end = {5, 5};
  CHECK_THROWS_AS(build_mask(degenerate, 3, 90.0, 40, 40), input_error);
}

TEST_CASE("classify_edge labels a DD edge by the lower-depth side", "[features]") {
  // foreground 0.5 fills the +90 side (larger rows), background 0.9 above
  const DepthImage img = make_image(40, 30, [](int r, int) { return r >= 15 ? 0.5 : 0.9; });
  const GradientField grad = compute_gradients(img);
  const LineSegment L = seg_with_members({5, 15}, {34, 15});
  const BinaryImage dd = mark_members(40, 30, L);
  const BinaryImage cd(40, 30);
  const auto f = classify_edge(L, img, grad, dd, cd);
  REQUIRE(f.has_value());
  CHECK(f->label == EdgeLabel::DDminus);
  CHECK(f->mean_depth_pos == Catch::Approx(0.5));
  CHECK(f->mean_depth_neg > 0.7);
  CHECK(f->object_side_dir().y() > 0.9);  // toward the foreground rows
}

TEST_CASE("classify_edge labels ridge and valley CD edges", "[features]") {
  const LineSegment L = seg_with_members({5, 15}, {34, 15});
  const BinaryImage dd(40, 30);
  const BinaryImage cd = mark_members(40, 30, L);

  const DepthImage ridge = make_image(40, 30, [](int r, int) { return 0.50 + 0.01 * std::abs(r - 15); });
  const GradientField ridge_grad = compute_gradients(ridge);
  const auto convex = classify_edge(L, ridge, ridge_grad, dd, cd);
  REQUIRE(convex.has_value());
  CHECK(convex->label == EdgeLabel::CDpm);

  const DepthImage valley = make_image(40, 30, [](int r, int) { return 0.55 - 0.01 * std::abs(r - 15); });
  const GradientField valley_grad = compute_gradients(valley);
  const auto concave = classify_edge(L, valley, valley_grad, dd, cd);
  REQUIRE(concave.has_value());
  CHECK(concave->label == EdgeLabel::CD0);
}

TEST_CASE("classify_edge drops segments without usable side depth", "[features]") {
  DepthImage img(40, 30, 0.0, 0);  // everything invalid
  img.width = 40;
  const GradientField grad{40, 30, std::vector<double>(1200, 0.0), std::vector<double>(1200, 0.0),
                           std::vector<double>(1200, 0.0), std::vector<double>(1200, 0.0),
                           std::vector<uint8_t>(1200, 0)};
  const LineSegment L = seg_with_members({5, 15}, {34, 15});
  const BinaryImage dd = mark_members(40, 30, L);
  const BinaryImage cd(40, 30);
  CHECK_FALSE(classify_edge(L, img, grad, dd, cd).has_value());
}

TEST_CASE("DD sign always points at the analytically lower side", "[features]") {
  // step edges at several orientations
  for (double angle_deg : {0.0, 30.0, 60.0, 90.0, 120.0}) {
    const double a = deg2rad(angle_deg);
    const Vec2 u(std::cos(a), std::sin(a));
    const Vec2 lower_side = rotate2(u, kPi / 2.0);  // object placed on the +90 side
    const Vec2 center(32, 32);
    const DepthImage img = make_image(64, 64, [&](int r, int c) {
      const Vec2 q = Vec2(c, r) - center;
      return q.dot(lower_side) >= 0.0 ? 0.45 : 0.85;
    });
    const GradientField grad = compute_gradients(img);
    const LineSegment L = seg_with_members(center - 14.0 * u, center + 14.0 * u);
    const BinaryImage dd = mark_members(64, 64, L);
    const BinaryImage cd(64, 64);
    const auto f = classify_edge(L, img, grad, dd, cd);
    REQUIRE(f.has_value());
    REQUIRE(f->is_dd());
    CHECK(f->object_side_dir().dot(lower_side) > 0.7);
  }
}

TEST_CASE("mask-level convexity agrees with pointwise convexity for all dihedral angles", "[features]") {
  // ridge/valley profiles for dihedral angles 20..160; Eq.-style oracle tests
  // midpoint convexity of the 1D profile perpendicular to the edge
  const LineSegment L = seg_with_members({10, 20}, {50, 20});
  const BinaryImage dd(64, 41);
  const BinaryImage cd = mark_members(64, 41, L);
  for (int dihedral = 20; dihedral <= 160; dihedral += 10) {
    const double slope = 0.002 * std::tan(deg2rad((180.0 - dihedral) / 2.0));
    for (bool ridge : {true, false}) {
      auto profile = [&](int r) { return 0.5 + (ridge ? slope : -slope) * std::abs(r - 20); };
      const DepthImage img = make_image(64, 41, [&](int r, int) { return profile(r); });
      const GradientField grad = compute_gradients(img);

      // pointwise convexity over the enclosing window
      bool convex = true;
      for (int r = 14; r <= 26; ++r)
        if (2.0 * profile(r) > profile(r - 1) + profile(r + 1) + 1e-12) convex = false;

      const auto f = classify_edge(L, img, grad, dd, cd);
      REQUIRE(f.has_value());
      const bool classified_convex = f->label == EdgeLabel::CDpm;
      INFO("dihedral " << dihedral << (ridge ? " ridge" : " valley"));
      CHECK(classified_convex == convex);
    }
  }
}

TEST_CASE("relocate_dd_pixels moves boundary pixels onto the foreground", "[features]") {
  // foreground 0.5 on the -90 side (columns right of the step), segment drawn
  // exactly on the step boundary
  const DepthImage img = make_image(48, 40, [](int, int c) { return c >= 20 ? 0.5 : 0.9; });
  const GradientField grad = compute_gradients(img);
  const LineSegment L = seg_with_members({20, 6}, {20, 33});
  const BinaryImage dd = mark_members(48, 40, L);
  const BinaryImage cd(48, 40);
  auto f = classify_edge(L, img, grad, dd, cd);
  REQUIRE(f.has_value());
  REQUIRE(f->label == EdgeLabel::DDplus);  // foreground on the -90 side

  const FeaturedSegment moved = relocate_dd_pixels(*f, img, grad);
  REQUIRE(moved.segment.member_pixels.size() >= 20);
  for (const Pixel& p : moved.segment.member_pixels) {
    CHECK(p.c >= 21);  // moved at least one pixel toward the foreground
    CHECK(img.at(p.r, p.c) == Catch::Approx(0.5));
  }
}

TEST_CASE("relocate_dd_pixels leaves interior foreground segments in place", "[features]") {
  const DepthImage img = make_image(48, 40, [](int, int c) { return c >= 20 ? 0.5 : 0.9; });
  const GradientField grad = compute_gradients(img);
  const LineSegment L = seg_with_members({26, 6}, {26, 33});  // six pixels inside the foreground
  const BinaryImage dd = mark_members(48, 40, L);
  const BinaryImage cd(48, 40);
  auto f = classify_edge(L, img, grad, dd, cd);
  REQUIRE(f.has_value());
  f->label = EdgeLabel::DDplus;  // object toward -90 (larger columns)

  const FeaturedSegment moved = relocate_dd_pixels(*f, img, grad);
  for (size_t i = 0; i < moved.segment.member_pixels.size(); ++i)
    CHECK(std::abs(moved.segment.member_pixels[i].c - 26) <= 1);
}

TEST_CASE("relocate_dd_pixels rejects CD segments", "[features]") {
  FeaturedSegment f;
  f.segment = seg_with_members({5, 5}, {15, 5});
  f.label = EdgeLabel::CDpm;
  const DepthImage img(32, 32, 0.5);
  GradientField grad{32, 32, std::vector<double>(1024, 0.0), std::vector<double>(1024, 0.0),
                     std::vector<double>(1024, 0.0), std::vector<double>(1024, 0.0),
                     std::vector<uint8_t>(1024, 1)};
  CHECK_THROWS_AS(relocate_dd_pixels(f, img, grad), input_error);
}

TEST_CASE("split_ambiguous separates collinear edges at a depth jump", "[features]") {
  // one fitted segment spans two collinear foreground edges at 0.5 and 0.7
  const DepthImage img = make_image(64, 40, [](int r, int c) {
    if (r < 15) return 0.9;
    return c < 32 ? 0.5 : 0.7;
  });
  const GradientField grad = compute_gradients(img);
  LineSegment L = seg_with_members({6, 15}, {57, 15});
  const BinaryImage dd = mark_members(64, 40, L);
  const BinaryImage cd(64, 40);
  auto f = classify_edge(L, img, grad, dd, cd);
  REQUIRE(f.has_value());

  const auto pieces = split_ambiguous(*f, img, grad, dd, cd);
  REQUIRE(pieces.size() == 2);
  CHECK(std::abs(pieces[0].segment.p_end.x() - 32.0) <= 3.0);
  CHECK(pieces[0].is_dd());
  CHECK(pieces[1].is_dd());
}

TEST_CASE("split_ambiguous keeps homogeneous segments intact", "[features]") {
  const DepthImage img = make_image(64, 40, [](int r, int) { return r >= 15 ? 0.5 : 0.9; });
  const GradientField grad = compute_gradients(img);
  const LineSegment L = seg_with_members({6, 15}, {57, 15});
  const BinaryImage dd = mark_members(64, 40, L);
  const BinaryImage cd(64, 40);
  const auto f = classify_edge(L, img, grad, dd, cd);
  REQUIRE(f.has_value());
  const auto pieces = split_ambiguous(*f, img, grad, dd, cd);
  REQUIRE(pieces.size() == 1);
  CHECK(pieces[0].segment.member_pixels.size() == f->segment.member_pixels.size());
}

TEST_CASE("split_ambiguous separates segments at a gradient-direction jump", "[features]") {
  // depth continuous along the member row; gradient direction rotates by 90
  // degrees halfway along the segment
  const double a = 0.002;
  const DepthImage img = make_image(64, 40, [&](int r, int c) {
    return c < 32 ? 0.6 + a * r : 0.6 + a * 15 + a * (c - 32);
  });
  const GradientField grad = compute_gradients(img);
  LineSegment L = seg_with_members({6, 15}, {57, 15});
  const BinaryImage dd(64, 40);
  const BinaryImage cd = mark_members(64, 40, L);
  auto f = classify_edge(L, img, grad, dd, cd);
  REQUIRE(f.has_value());

  const auto pieces = split_ambiguous(*f, img, grad, dd, cd);
  REQUIRE(pieces.size() >= 2);
  CHECK(std::abs(pieces[0].segment.p_end.x() - 32.0) <= 5.0);
}
