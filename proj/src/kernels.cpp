#include "vinestep/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace vinestep::kernels {

namespace {

Isa detect() {
  if (const char* env = std::getenv("VINESTEP_SIMD"); env && std::string(env) == "scalar")
    return Isa::Scalar;
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
  if (isa == Isa::Scalar) return true;
#if defined(VINESTEP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) throw std::invalid_argument("SIMD variant not available on this machine");
  current().store(isa, std::memory_order_relaxed);
}

#if defined(VINESTEP_HAVE_AVX2)
#define VINESTEP_DISPATCH(fn, ...) \
  (active_isa() == Isa::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define VINESTEP_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void gauss_h(std::span<const double> x1, std::span<const double> x2, double rho, double bound,
             std::span<double> out) {
  if (x2.size() != x1.size() || out.size() != x1.size())
    throw std::invalid_argument("gauss_h: length mismatch");
  VINESTEP_DISPATCH(gauss_h, x1.data(), x2.data(), x1.size(), rho, bound, out.data());
}

void axpby(double a, std::span<const double> x1, double b, std::span<const double> x2,
           std::span<double> out) {
  if (x2.size() != x1.size() || out.size() != x1.size())
    throw std::invalid_argument("axpby: length mismatch");
  VINESTEP_DISPATCH(axpby, a, x1.data(), b, x2.data(), x1.size(), out.data());
}

CrossMoments cross_moments(std::span<const double> x1, std::span<const double> x2) {
  if (x2.size() != x1.size()) throw std::invalid_argument("cross_moments: length mismatch");
  return VINESTEP_DISPATCH(cross_moments, x1.data(), x2.data(), x1.size());
}

#undef VINESTEP_DISPATCH

}  // namespace vinestep::kernels
