#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "vinestep/estimate.hpp"
#include "vinestep/kernels.hpp"
#include "vinestep/rng.hpp"

using namespace vinestep;
using kernels::Isa;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

struct IsaGuard {
  Isa saved = kernels::active_isa();
  ~IsaGuard() { kernels::set_active_isa(saved); }
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(kernels::isa_available(Isa::Scalar));
  EXPECT_EQ(kernels::isa_name(Isa::Scalar), "scalar");
  EXPECT_EQ(kernels::isa_name(Isa::Avx2), "avx2");
  IsaGuard guard;
  kernels::set_active_isa(Isa::Scalar);
  EXPECT_EQ(kernels::active_isa(), Isa::Scalar);
}

TEST(Kernels, ScalarMatchesNaiveFormulas) {
  IsaGuard guard;
  kernels::set_active_isa(Isa::Scalar);
  Rng rng(3);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 33u, 1000u}) {
    const auto x1 = random_vector(n, rng, 8.0), x2 = random_vector(n, rng, 8.0);
    std::vector<double> out(n);
    const double rho = 0.37, bound = 6.0;
    kernels::gauss_h(x1, x2, rho, bound, out);
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_NEAR(out[i], std::clamp((x1[i] - rho * x2[i]) / std::sqrt(1 - rho * rho), -bound, bound), 1e-14);
    kernels::axpby(0.5, x1, -2.0, x2, out);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(out[i], 0.5 * x1[i] - 2.0 * x2[i], 1e-14);
    double s11 = 0, s22 = 0, s12 = 0;
    for (std::size_t i = 0; i < n; ++i) s11 += x1[i] * x1[i], s22 += x2[i] * x2[i], s12 += x1[i] * x2[i];
    const auto m = kernels::cross_moments(x1, x2);
    EXPECT_NEAR(m.s11, s11, 1e-10 * std::max(1.0, s11));
    EXPECT_NEAR(m.s22, s22, 1e-10 * std::max(1.0, s22));
    EXPECT_NEAR(m.s12, s12, 1e-10 * std::max(1.0, std::abs(s11)));
  }
}

TEST(Kernels, Avx2BitIdenticalToScalar) {
  if (!kernels::isa_available(Isa::Avx2)) GTEST_SKIP() << "AVX2 not available";
  IsaGuard guard;
  Rng rng(5);
  for (std::size_t n = 0; n < 70; ++n) {
    for (double scale : {1.0, 10.0, 1e-3}) {
      const auto x1 = random_vector(n, rng, scale), x2 = random_vector(n, rng, scale);
      const double rho = 2.0 * rng.uniform() - 1.0;
      std::vector<double> hs(n), ha(n), as(n), aa(n);
      kernels::set_active_isa(Isa::Scalar);
      kernels::gauss_h(x1, x2, rho, 3.0 * scale, hs);
      kernels::axpby(rho, x1, 1.0 - rho, x2, as);
      const auto ms = kernels::cross_moments(x1, x2);
      kernels::set_active_isa(Isa::Avx2);
      kernels::gauss_h(x1, x2, rho, 3.0 * scale, ha);
      kernels::axpby(rho, x1, 1.0 - rho, x2, aa);
      const auto ma = kernels::cross_moments(x1, x2);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_TRUE(same_bits(hs[i], ha[i])) << "n=" << n << " i=" << i;
        EXPECT_TRUE(same_bits(as[i], aa[i])) << "n=" << n << " i=" << i;
      }
      EXPECT_TRUE(same_bits(ms.s11, ma.s11) && same_bits(ms.s22, ma.s22) && same_bits(ms.s12, ma.s12)) << "n=" << n;
    }
  }
}

TEST(Kernels, LengthMismatchThrows) {
  std::vector<double> a(3), b(4), out(3);
  EXPECT_THROW(kernels::gauss_h(a, b, 0.1, 1.0, out), std::invalid_argument);
  EXPECT_THROW(kernels::cross_moments(a, b), std::invalid_argument);
  EXPECT_THROW(kernels::axpby(1.0, a, 1.0, b, out), std::invalid_argument);
}

TEST(Kernels, GaussianFitIdenticalAcrossIsas) {
  if (!kernels::isa_available(Isa::Avx2)) GTEST_SKIP() << "AVX2 not available";
  IsaGuard guard;
  const auto m = VineModel::from_theta_model(RVineStructure::cvine(8), Family::Gaussian, ThetaModelSpec::parse("harmonic"));
  const SampleMatrix U = simulate(m, 1003, 7);
  kernels::set_active_isa(Isa::Scalar);
  const auto a = stepwise_fit(m.structure(), Family::Gaussian, U).theta_hat;
  const auto pa = phi_mean(m, U);
  kernels::set_active_isa(Isa::Avx2);
  const auto b = stepwise_fit(m.structure(), Family::Gaussian, U).theta_hat;
  const auto pb = phi_mean(m, U);
  EXPECT_EQ(a, b);
  EXPECT_EQ(pa, pb);
}
