#pragma once

// Data-parallel inner loops of the Gaussian-vine fast path. Every kernel has a
// scalar reference implementation and, on x86-64, an AVX2 variant selected at
// runtime. Both variants use the same lane-wise accumulation order and no
// fused multiply-add, so their results are bit-identical.

#include <cstddef>
#include <span>
#include <string_view>

namespace vinestep::kernels {

struct CrossMoments {
  double s11 = 0.0;  // sum x1^2
  double s22 = 0.0;  // sum x2^2
  double s12 = 0.0;  // sum x1 x2
};

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);
/// ISA used by the dispatching entry points. Defaults to the best available;
/// VINESTEP_SIMD=scalar in the environment forces the reference kernels.
Isa active_isa();
/// Throws std::invalid_argument if the ISA is not available on this CPU/build.
void set_active_isa(Isa isa);

/// out[i] = clamp((x1[i] - rho * x2[i]) / sqrt(1 - rho^2), -bound, bound)
void gauss_h(std::span<const double> x1, std::span<const double> x2, double rho, double bound,
             std::span<double> out);

/// out[i] = a * x1[i] + b * x2[i]
void axpby(double a, std::span<const double> x1, double b, std::span<const double> x2,
           std::span<double> out);

CrossMoments cross_moments(std::span<const double> x1, std::span<const double> x2);

namespace scalar {
void gauss_h(const double* x1, const double* x2, std::size_t n, double rho, double bound, double* out);
void axpby(double a, const double* x1, double b, const double* x2, std::size_t n, double* out);
CrossMoments cross_moments(const double* x1, const double* x2, std::size_t n);
}  // namespace scalar

namespace avx2 {
void gauss_h(const double* x1, const double* x2, std::size_t n, double rho, double bound, double* out);
void axpby(double a, const double* x1, double b, const double* x2, std::size_t n, double* out);
CrossMoments cross_moments(const double* x1, const double* x2, std::size_t n);
}  // namespace avx2

}  // namespace vinestep::kernels
