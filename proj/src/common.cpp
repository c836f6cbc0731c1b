#include "mimo/common.hpp"

#include <cmath>

namespace mimo {

double norm2(ConstSpan x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double cosine(ConstSpan x, ConstSpan y) {
  require(x.size() == y.size(), "cosine: dimension mismatch");
  double nx = norm2(x), ny = norm2(y);
  require(nx > 0.0 && ny > 0.0, "cosine: zero-norm vector");
  return dot(x, y) / (nx * ny);
}

}  // namespace mimo
