#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "edgegrasp/depth_image.hpp"

using namespace edgegrasp;

namespace {

DepthImage make_image(int w, int h, auto&& fn) {
  DepthImage img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) img.at(r, c) = fn(r, c);
  return img;
}

std::string pgm_ascii(int w, int h, const std::vector<int>& raw) {
  std::ostringstream out;
  out << "P2\n" << w << " " << h << "\n65535\n";
  for (int v : raw) out << v << "\n";
  return out.str();
}

// independent of the DepthImage stencil code path
double oracle_gx(const DepthImage& img, int r, int c) {
  return (img.depth[img.idx(r, c + 1)] - img.depth[img.idx(r, c - 1)]) * 0.5;
}
double oracle_gy(const DepthImage& img, int r, int c) {
  return (img.depth[img.idx(r + 1, c)] - img.depth[img.idx(r - 1, c)]) * 0.5;
}

double median_oracle(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

TEST_CASE("load_depth converts raw units and flags non-returns", "[imaging]") {
  std::istringstream in(pgm_ascii(2, 2, {1000, 1000, 1000, 0}));
  const DepthImage img = load_depth(in, 0.001);
  REQUIRE(img.width == 2);
  REQUIRE(img.height == 2);
  CHECK(img.at(0, 0) == Catch::Approx(1.0));
  CHECK(img.at(0, 1) == Catch::Approx(1.0));
  CHECK(img.at(1, 0) == Catch::Approx(1.0));
  CHECK(img.is_valid(0, 0));
  CHECK(img.is_valid(0, 1));
  CHECK(img.is_valid(1, 0));
  CHECK_FALSE(img.is_valid(1, 1));
}

TEST_CASE("load_depth all-zero raster is fully invalid", "[imaging]") {
  std::istringstream in(pgm_ascii(3, 2, {0, 0, 0, 0, 0, 0}));
  const DepthImage img = load_depth(in, 0.001);
  CHECK(img.invalid_count() == 6);
}

TEST_CASE("load_depth reads a 640x480 16-bit binary raster", "[imaging]") {
  std::ostringstream out;
  out << "P5\n640 480\n65535\n";
  for (int i = 0; i < 640 * 480; ++i) {
    const int v = 800 + (i % 500);
    out.put(static_cast<char>((v >> 8) & 0xff));
    out.put(static_cast<char>(v & 0xff));
  }
  std::istringstream in(out.str());
  const DepthImage img = load_depth(in, 0.001);
  REQUIRE(img.width == 640);
  REQUIRE(img.height == 480);
  CHECK(img.at(0, 0) == Catch::Approx(0.8));
  CHECK(img.invalid_count() == 0);
}

TEST_CASE("load_depth rejects malformed input", "[imaging]") {
  std::istringstream bad_magic("P7\n2 2\n255\n");
  CHECK_THROWS_AS(load_depth(bad_magic, 0.001), input_error);
  std::istringstream zero_dims("P2\n0 4\n255\n");
  CHECK_THROWS_AS(load_depth(zero_dims, 0.001), input_error);
  std::istringstream truncated("P5\n4 4\n65535\n\x01\x02");
  CHECK_THROWS_AS(load_depth(truncated, 0.001), input_error);
}

TEST_CASE("pgm16 round trip preserves depths at millimeter scale", "[imaging]") {
  DepthImage img = make_image(7, 5, [](int r, int c) { return 0.5 + 0.001 * (r * 7 + c); });
  img.valid[3] = 0;
  std::ostringstream out;
  save_depth_pgm16(img, out, 1000.0);
  std::istringstream in(out.str());
  const DepthImage back = load_depth(in, 0.001);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 7; ++c) {
      CHECK(back.is_valid(r, c) == img.is_valid(r, c));
      if (img.is_valid(r, c)) CHECK(back.at(r, c) == Catch::Approx(img.at(r, c)).margin(1e-9));
    }
}

TEST_CASE("fill_shadows fills from a constant neighborhood", "[imaging]") {
  DepthImage img = make_image(5, 5, [](int, int) { return 1.0; });
  img.valid[img.idx(2, 2)] = 0;
  const DepthImage filled = fill_shadows(img, 3, 4);
  CHECK(filled.invalid_count() == 0);
  CHECK(filled.at(2, 2) == Catch::Approx(1.0));
}

TEST_CASE("fill_shadows assigns the median of valid neighbors", "[imaging]") {
  // five valid neighbors: {0.9, 1.0, 1.1, 1.0, 1.0}
  DepthImage img(3, 3, 0.0, 0);
  const std::vector<double> vals{0.9, 1.0, 1.1, 1.0, 1.0};
  const Pixel where[5] = {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 2}};
  for (int i = 0; i < 5; ++i) {
    img.at(where[i].r, where[i].c) = vals[i];
    img.valid[img.idx(where[i].r, where[i].c)] = 1;
  }
  const double expected = median_oracle(vals);
  REQUIRE(expected == Catch::Approx(1.0));  // frozen from the oracle
  const DepthImage filled = fill_shadows(img, 3, 1);
  CHECK(filled.at(1, 1) == Catch::Approx(expected));
  CHECK(filled.is_valid(1, 1));
}

TEST_CASE("fill_shadows leaves a fully valid image bit-identical", "[imaging]") {
  const DepthImage img = make_image(9, 7, [](int r, int c) { return 0.4 + 0.01 * r + 0.002 * c; });
  const DepthImage filled = fill_shadows(img);
  CHECK(filled.depth == img.depth);
  CHECK(filled.valid == img.valid);
}

TEST_CASE("fill_shadows never alters valid pixels and is idempotent", "[imaging]") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    DepthImage img = make_image(20, 16, [&](int, int) { return 0.5 + (rng() % 1000) * 1e-4; });
    for (int k = 0; k < 40; ++k) img.valid[rng() % img.size()] = 0;
    const DepthImage orig = img;
    const DepthImage filled = fill_shadows(img);
    for (size_t i = 0; i < img.size(); ++i)
      if (orig.valid[i]) {
        CHECK(filled.valid[i] == 1);
        CHECK(filled.depth[i] == orig.depth[i]);
      }
    const DepthImage again = fill_shadows(filled);
    CHECK(again.depth == filled.depth);
    CHECK(again.valid == filled.valid);
  }
}

TEST_CASE("compute_gradients on flat and ramp images", "[imaging]") {
  const GradientField flat = compute_gradients(make_image(8, 8, [](int, int) { return 0.8; }));
  for (double m : flat.magnitude) CHECK(m == 0.0);

  const GradientField ramp = compute_gradients(make_image(8, 8, [](int, int c) { return 0.001 * c; }));
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      const size_t i = ramp.idx(r, c);
      CHECK(ramp.gx[i] == Catch::Approx(0.001).margin(1e-12));
      CHECK(ramp.gy[i] == Catch::Approx(0.0).margin(1e-12));
      CHECK(ramp.direction[i] == Catch::Approx(0.0).margin(1e-12));
    }

  const GradientField diag = compute_gradients(make_image(8, 8, [](int r, int c) { return 0.001 * (r + c); }));
  for (int r = 1; r < 7; ++r)
    for (int c = 1; c < 7; ++c) {
      const size_t i = diag.idx(r, c);
      CHECK(diag.magnitude[i] == Catch::Approx(0.001 * std::sqrt(2.0)).margin(1e-12));
      CHECK(diag.direction[i] == Catch::Approx(kPi / 4.0).margin(1e-12));
    }
}

TEST_CASE("compute_gradients rejects tiny images", "[imaging]") {
  CHECK_THROWS_AS(compute_gradients(DepthImage(1, 5, 0.3)), input_error);
}

TEST_CASE("gradient invariants hold on the field", "[imaging]") {
  std::mt19937 rng(7);
  const DepthImage img = make_image(16, 12, [&](int r, int c) {
    return 0.6 + 0.002 * std::sin(0.3 * r) * std::cos(0.2 * c) + (rng() % 100) * 1e-6;
  });
  const GradientField g = compute_gradients(img);
  for (size_t i = 0; i < g.magnitude.size(); ++i) {
    CHECK(g.magnitude[i] == Catch::Approx(std::hypot(g.gx[i], g.gy[i])).margin(1e-15));
    CHECK(g.direction[i] <= kPi);
    CHECK(g.direction[i] > -kPi);
  }
}

TEST_CASE("compute_gradients matches the finite-difference oracle on smooth surfaces", "[imaging]") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> amp(0.001, 0.01), freq(0.05, 0.4), phase(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 20; ++trial) {
    const double a1 = amp(rng), a2 = amp(rng), f1 = freq(rng), f2 = freq(rng), p1 = phase(rng), p2 = phase(rng);
    const DepthImage img = make_image(32, 24, [&](int r, int c) {
      return 0.7 + a1 * std::sin(f1 * r + p1) + a2 * std::cos(f2 * c + p2) + 0.0005 * r * c / 100.0;
    });
    const GradientField g = compute_gradients(img);
    for (int r = 1; r < img.height - 1; ++r)
      for (int c = 1; c < img.width - 1; ++c) {
        const size_t i = g.idx(r, c);
        REQUIRE(std::abs(g.gx[i] - oracle_gx(img, r, c)) < 1e-9);
        REQUIRE(std::abs(g.gy[i] - oracle_gy(img, r, c)) < 1e-9);
      }
  }
}

TEST_CASE("gradient of an affine surface is constant in the interior", "[imaging]") {
  const DepthImage img = make_image(14, 11, [](int r, int c) { return 0.5 + 0.003 * r - 0.002 * c; });
  const GradientField g = compute_gradients(img);
  for (int r = 1; r < 10; ++r)
    for (int c = 1; c < 13; ++c) {
      CHECK(g.gx[g.idx(r, c)] == Catch::Approx(-0.002).margin(1e-12));
      CHECK(g.gy[g.idx(r, c)] == Catch::Approx(0.003).margin(1e-12));
    }
}
