#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "edgegrasp/depth_image.hpp"
#include "edgegrasp/edge_detect.hpp"
#include "edgegrasp/segments.hpp"

using namespace edgegrasp;

namespace {

DepthImage make_image(int w, int h, auto&& fn) {
  DepthImage img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) img.at(r, c) = fn(r, c);
  return img;
}

BinaryImage random_bits(int w, int h, uint32_t seed, double density) {
  BinaryImage b(w, h);
  std::mt19937 rng(seed);
  for (auto& bit : b.bits) bit = (rng() % 1000) < density * 1000 ? 1 : 0;
  return b;
}

int count_components_8(const BinaryImage& b) {
  BinaryImage seen(b.width, b.height);
  int components = 0;
  std::vector<Pixel> stack;
  for (int r = 0; r < b.height; ++r)
    for (int c = 0; c < b.width; ++c) {
      if (!b.get(r, c) || seen.get(r, c)) continue;
      ++components;
      stack.push_back({r, c});
      seen.set(r, c);
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = p.r + dr, cc = p.c + dc;
            if (b.in_bounds(rr, cc) && b.get(rr, cc) && !seen.get(rr, cc)) {
              seen.set(rr, cc);
              stack.push_back({rr, cc});
            }
          }
      }
    }
  return components;
}

}  // namespace

TEST_CASE("detect_dd_edges marks an ideal step once per row", "[edges]") {
  const int w = 40, h = 30, step_col = 20;
  const DepthImage img = make_image(w, h, [&](int, int c) { return c < step_col ? 0.5 : 0.8; });
  const GradientField grad = compute_gradients(img);
  const BinaryImage dd = detect_dd_edges(img, grad, 0.005, 0.015);
  for (int r = 1; r < h - 1; ++r) {
    int marked = 0, where = -1;
    for (int c = 0; c < w; ++c)
      if (dd.get(r, c)) {
        ++marked;
        where = c;
      }
    CHECK(marked == 1);
    CHECK(std::abs(where - step_col) <= 1);
  }
}

TEST_CASE("detect_dd_edges is empty on a constant image", "[edges]") {
  const DepthImage img = make_image(24, 24, [](int, int) { return 0.75; });
  const GradientField grad = compute_gradients(img);
  CHECK(detect_dd_edges(img, grad, 0.005, 0.015).count() == 0);
}

TEST_CASE("detect_dd_edges localizes a slanted silhouette", "[edges]") {
  // step along the line c = 0.7 r + 8
  const int w = 64, h = 64;
  const DepthImage img = make_image(w, h, [](int r, int c) { return c < 0.7 * r + 8.0 ? 0.5 : 0.9; });
  const GradientField grad = compute_gradients(img);
  const BinaryImage dd = detect_dd_edges(img, grad, 0.005, 0.015);
  size_t near = 0, total = 0;
  for (int r = 2; r < h - 2; ++r)
    for (int c = 0; c < w; ++c)
      if (dd.get(r, c)) {
        ++total;
        const double dist = std::abs(c - (0.7 * r + 8.0)) / std::sqrt(1.0 + 0.49);
        if (dist <= 1.5) ++near;
      }
  REQUIRE(total > 40);
  CHECK(static_cast<double>(near) / total >= 0.95);
}

TEST_CASE("detect_dd_edges output stays above the low threshold", "[edges]") {
  std::mt19937 rng(5);
  const DepthImage img = make_image(48, 36, [&](int r, int c) {
    double d = 0.6 + 0.004 * std::sin(0.4 * r) + 0.004 * std::cos(0.3 * c);
    if (c > 30) d += 0.05;
    return d + (rng() % 100) * 1e-5;
  });
  const GradientField grad = compute_gradients(img);
  const double low = 0.005;
  const BinaryImage dd = detect_dd_edges(img, grad, low, 0.015);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      if (dd.get(r, c)) CHECK(2.0 * grad.magnitude[grad.idx(r, c)] > low);
}

TEST_CASE("detect_cd_edges marks a roof ridge with continuous depth", "[edges]") {
  // two ramps meeting along the diagonal; gradient direction jumps by pi/2
  const int n = 48;
  const DepthImage img = make_image(n, n, [](int r, int c) { return 0.6 + 0.002 * std::min(c, r); });
  const GradientField grad = compute_gradients(img);
  const BinaryImage cd = detect_cd_edges(grad, 0.12, 0.35);
  size_t total = 0, near = 0;
  for (int r = 3; r < n - 3; ++r)
    for (int c = 3; c < n - 3; ++c)
      if (cd.get(r, c)) {
        ++total;
        if (std::abs(r - c) <= 2) ++near;
      }
  REQUIRE(total > 20);
  CHECK(near == total);
}

TEST_CASE("detect_cd_edges is empty on a single ramp", "[edges]") {
  const DepthImage img = make_image(32, 32, [](int, int c) { return 0.5 + 0.002 * c; });
  const GradientField grad = compute_gradients(img);
  CHECK(detect_cd_edges(grad, 0.12, 0.35).count() == 0);
}

TEST_CASE("detect_cd_edges handles the branch cut in the direction image", "[edges]") {
  // smooth surface whose gradient direction drifts through +-pi; the wrapped
  // difference stays tiny everywhere, so nothing may be marked
  const int n = 40;
  const DepthImage img = make_image(n, n, [&](int r, int c) {
    return 1.0 - 0.002 * c + 0.5 * 4e-5 * (r - n / 2.0) * (r - n / 2.0);
  });
  const GradientField grad = compute_gradients(img);
  // the direction field really crosses the branch cut near the middle row
  CHECK(grad.direction[grad.idx(n / 2 - 4, 5)] * grad.direction[grad.idx(n / 2 + 4, 5)] < 0.0);
  const BinaryImage cd = detect_cd_edges(grad, 0.12, 0.35);
  CHECK(cd.count() == 0);
}

TEST_CASE("thresholds must be ordered", "[edges]") {
  const DepthImage img = make_image(8, 8, [](int, int) { return 0.5; });
  const GradientField grad = compute_gradients(img);
  CHECK_THROWS_AS(detect_dd_edges(img, grad, 0.02, 0.01), input_error);
  CHECK_THROWS_AS(detect_cd_edges(grad, 0.4, 0.3), input_error);
}

TEST_CASE("morphological_cleanup thins a thick bar to one pixel", "[edges]") {
  BinaryImage bar(40, 20);
  for (int r = 8; r <= 10; ++r)
    for (int c = 5; c <= 34; ++c) bar.set(r, c);
  const BinaryImage thin = morphological_cleanup(bar);
  int min_c = 1000, max_c = -1;
  for (int c = 0; c < 40; ++c) {
    int per_col = 0;
    for (int r = 0; r < 20; ++r)
      if (thin.get(r, c)) {
        ++per_col;
        min_c = std::min(min_c, c);
        max_c = std::max(max_c, c);
      }
    CHECK(per_col <= 1);
  }
  CHECK(min_c <= 5 + 2);
  CHECK(max_c >= 34 - 2);
}

TEST_CASE("morphological_cleanup removes isolated specks", "[edges]") {
  BinaryImage b(20, 20);
  b.set(4, 7);
  b.set(15, 3);
  CHECK(morphological_cleanup(b).count() == 0);
}

TEST_CASE("morphological_cleanup keeps an L connected and thin", "[edges]") {
  BinaryImage b(40, 40);
  for (int r = 5; r <= 30; ++r)
    for (int t = 0; t < 2; ++t) b.set(r, 10 + t);
  for (int c = 10; c <= 32; ++c)
    for (int t = 0; t < 2; ++t) b.set(30 + t, c);
  const BinaryImage out = morphological_cleanup(b);
  REQUIRE(out.count() > 30);
  CHECK(count_components_8(out) == 1);
  // no 2x2 block fully marked
  for (int r = 0; r < 39; ++r)
    for (int c = 0; c < 39; ++c)
      CHECK_FALSE((out.get(r, c) && out.get(r + 1, c) && out.get(r, c + 1) && out.get(r + 1, c + 1)));
}

TEST_CASE("morphological_cleanup never exceeds the dilation bound", "[edges]") {
  for (uint32_t seed : {1u, 2u, 3u}) {
    const BinaryImage b = random_bits(32, 32, seed, 0.2);
    const BinaryImage out = morphological_cleanup(b);
    CHECK(out.count() <= dilate3x3(b).count());
    // every isolated input pixel is gone
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        if (!out.get(r, c)) continue;
        int neighbors = 0;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            if (out.in_bounds(r + dr, c + dc) && out.get(r + dr, c + dc)) ++neighbors;
          }
        CHECK(neighbors >= 1);
      }
  }
}

TEST_CASE("merge_edges identity, idempotence, commutativity, associativity", "[edges]") {
  const BinaryImage empty(16, 16);
  const BinaryImage a = random_bits(16, 16, 11, 0.3);
  const BinaryImage b = random_bits(16, 16, 12, 0.3);
  const BinaryImage c = random_bits(16, 16, 13, 0.3);

  CHECK(merge_edges(empty, b) == b);
  CHECK(merge_edges(a, empty) == a);
  CHECK(merge_edges(a, a) == a);
  CHECK(merge_edges(a, b) == merge_edges(b, a));
  CHECK(merge_edges(merge_edges(a, b), c) == merge_edges(a, merge_edges(b, c)));

  BinaryImage overlap(4, 4);
  overlap.set(1, 1);
  CHECK(merge_edges(overlap, overlap).count() == 1);

  CHECK_THROWS_AS(merge_edges(a, BinaryImage(8, 8)), input_error);
}
