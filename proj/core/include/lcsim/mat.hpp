#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lcsim {

// Dense row-major matrix of doubles. Deliberately minimal; everything in
// this library is small dot-product arithmetic on K x d or m x m blocks.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

  std::span<double> row(int r) {
    return {v.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
  std::span<const double> row(int r) const {
    return {v.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

}  // namespace lcsim
