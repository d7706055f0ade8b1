#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "vinestep/kernels.hpp"

namespace vinestep::kernels::avx2 {

void gauss_h(const double* x1, const double* x2, std::size_t n, double rho, double bound, double* out) {
  const double inv = 1.0 / std::sqrt(1.0 - rho * rho);
  const __m256d vrho = _mm256_set1_pd(rho);
  const __m256d vinv = _mm256_set1_pd(inv);
  const __m256d vhi = _mm256_set1_pd(bound);
  const __m256d vlo = _mm256_set1_pd(-bound);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(x1 + i);
    const __m256d b = _mm256_loadu_pd(x2 + i);
    __m256d v = _mm256_mul_pd(_mm256_sub_pd(a, _mm256_mul_pd(vrho, b)), vinv);
    v = _mm256_min_pd(_mm256_max_pd(v, vlo), vhi);
    _mm256_storeu_pd(out + i, v);
  }
  for (; i < n; ++i) {
    const double prod = rho * x2[i];
    const double v = (x1[i] - prod) * inv;
    out[i] = std::min(std::max(v, -bound), bound);
  }
}

void axpby(double a, const double* x1, double b, const double* x2, std::size_t n, double* out) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d l = _mm256_mul_pd(va, _mm256_loadu_pd(x1 + i));
    const __m256d r = _mm256_mul_pd(vb, _mm256_loadu_pd(x2 + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(l, r));
  }
  for (; i < n; ++i) {
    const double l = a * x1[i];
    const double r = b * x2[i];
    out[i] = l + r;
  }
}

CrossMoments cross_moments(const double* x1, const double* x2, std::size_t n) {
  __m256d a11 = _mm256_setzero_pd();
  __m256d a22 = _mm256_setzero_pd();
  __m256d a12 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(x1 + i);
    const __m256d b = _mm256_loadu_pd(x2 + i);
    a11 = _mm256_add_pd(a11, _mm256_mul_pd(a, a));
    a22 = _mm256_add_pd(a22, _mm256_mul_pd(b, b));
    a12 = _mm256_add_pd(a12, _mm256_mul_pd(a, b));
  }
  alignas(32) double l11[4], l22[4], l12[4];
  _mm256_store_pd(l11, a11);
  _mm256_store_pd(l22, a22);
  _mm256_store_pd(l12, a12);
  for (; i < n; ++i) {
    const std::size_t l = i & 3u;
    l11[l] += x1[i] * x1[i];
    l22[l] += x2[i] * x2[i];
    l12[l] += x1[i] * x2[i];
  }
  return {(l11[0] + l11[1]) + (l11[2] + l11[3]), (l22[0] + l22[1]) + (l22[2] + l22[3]),
          (l12[0] + l12[1]) + (l12[2] + l12[3])};
}

}  // namespace vinestep::kernels::avx2
