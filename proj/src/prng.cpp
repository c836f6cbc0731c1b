#include "mimo/prng.hpp"

#include <cmath>

namespace mimo {

double SplitRng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller on (0,1] x [0,1).
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double t = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::vector<double> SplitRng::unit_sphere(std::size_t dim) {
  std::vector<double> v(dim);
  for (;;) {
    double n2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      v[i] = gaussian();
      n2 += v[i] * v[i];
    }
    if (n2 > 1e-300) {
      double inv = 1.0 / std::sqrt(n2);
      for (auto& x : v) x *= inv;
      return v;
    }
  }
}

}  // namespace mimo
