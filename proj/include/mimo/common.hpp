#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mimo {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;

// Dense row-major matrix, just enough for this library.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  Vec a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  ConstSpan row(std::size_t r) const { return ConstSpan(a).subspan(r * cols, cols); }
  std::span<double> row(std::size_t r) { return std::span<double>(a).subspan(r * cols, cols); }
};

// Rank-3 tensor in (channels, height, width) order, row-major.
struct Tensor3 {
  std::size_t c = 0, h = 0, w = 0;
  Vec v;

  Tensor3() = default;
  Tensor3(std::size_t c_, std::size_t h_, std::size_t w_, double fill = 0.0)
      : c(c_), h(h_), w(w_), v(c_ * h_ * w_, fill) {}

  double& at(std::size_t ci, std::size_t hi, std::size_t wi) {
    return v[(ci * h + hi) * w + wi];
  }
  double at(std::size_t ci, std::size_t hi, std::size_t wi) const {
    return v[(ci * h + hi) * w + wi];
  }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor3& o) const { return c == o.c && h == o.h && w == o.w; }
};

inline double dot(ConstSpan x, ConstSpan y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(ConstSpan x);

/// Cosine of the angle between x and y; throws on a zero-norm input.
double cosine(ConstSpan x, ConstSpan y);

[[noreturn]] inline void fail(const std::string& msg) { throw std::invalid_argument(msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

}  // namespace mimo
