#include <algorithm>
#include <cmath>

#include "vinestep/kernels.hpp"

namespace vinestep::kernels::scalar {

void gauss_h(const double* x1, const double* x2, std::size_t n, double rho, double bound, double* out) {
  const double inv = 1.0 / std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    const double prod = rho * x2[i];
    const double v = (x1[i] - prod) * inv;
    out[i] = std::min(std::max(v, -bound), bound);
  }
}

void axpby(double a, const double* x1, double b, const double* x2, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double l = a * x1[i];
    const double r = b * x2[i];
    out[i] = l + r;
  }
}

CrossMoments cross_moments(const double* x1, const double* x2, std::size_t n) {
  // Four lane accumulators, matching the AVX2 register layout.
  double a11[4] = {}, a22[4] = {}, a12[4] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t l = i & 3u;
    a11[l] += x1[i] * x1[i];
    a22[l] += x2[i] * x2[i];
    a12[l] += x1[i] * x2[i];
  }
  return {(a11[0] + a11[1]) + (a11[2] + a11[3]), (a22[0] + a22[1]) + (a22[2] + a22[3]),
          (a12[0] + a12[1]) + (a12[2] + a12[3])};
}

}  // namespace vinestep::kernels::scalar
