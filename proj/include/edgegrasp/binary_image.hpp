#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "edgegrasp/geometry.hpp"

namespace edgegrasp {

// Per-pixel boolean raster sharing the source image dimensions.
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> bits;

  BinaryImage() = default;
  BinaryImage(int w, int h) : width(w), height(h), bits(static_cast<size_t>(w) * h, 0) {}

  size_t idx(int r, int c) const { return static_cast<size_t>(r) * width + c; }
  bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
  bool get(int r, int c) const { return bits[idx(r, c)] != 0; }
  void set(int r, int c, bool v = true) { bits[idx(r, c)] = v ? 1 : 0; }
  size_t count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b != 0;
    return n;
  }
  bool operator==(const BinaryImage&) const = default;
};

// 1-bit portable bitmap (P4), packed rows, marked pixels are black.
inline void save_pbm(const BinaryImage& b, std::ostream& out) {
  out << "P4\n" << b.width << " " << b.height << "\n";
  const int stride = (b.width + 7) / 8;
  std::vector<unsigned char> row(stride);
  for (int r = 0; r < b.height; ++r) {
    std::fill(row.begin(), row.end(), 0);
    for (int c = 0; c < b.width; ++c)
      if (b.get(r, c)) row[c / 8] |= static_cast<unsigned char>(0x80 >> (c % 8));
    out.write(reinterpret_cast<const char*>(row.data()), stride);
  }
}

inline void save_pbm_file(const BinaryImage& b, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw input_error("cannot write bitmap: " + path);
  save_pbm(b, f);
}

}  // namespace edgegrasp
