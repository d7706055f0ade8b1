#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "vinestep/diffvine.hpp"
#include "vinestep/normal.hpp"
#include "vinestep/rng.hpp"
#include "vinestep/validate.hpp"

using namespace vinestep;

namespace {

VineModel gaussian(const RVineStructure& s, double value) {
  return VineModel::from_theta(s, Family::Gaussian, std::vector<double>(s.edge_count(), value));
}

}  // namespace

TEST(Validate, AlphaSequences) {
  EXPECT_EQ(AlphaSeq::constant()(7), 1.0);
  EXPECT_EQ(AlphaSeq::linear()(3), 3.0);
  const AlphaSeq c = AlphaSeq::custom({2.0, 0.5});
  EXPECT_EQ(c(1), 2.0);
  EXPECT_EQ(c(2), 0.5);
  EXPECT_EQ(c(9), 0.5);
  const AlphaSeq ps = AlphaSeq::partial_sum_power(1.1, 4);
  EXPECT_NEAR(ps(3), 1.0 + std::pow(2.0, -1.1) + std::pow(3.0, -1.1), 1e-14);
  EXPECT_EQ(AlphaSeq::linear().scaled(2.5)(2), 5.0);
  EXPECT_EQ(AlphaSeq::parse("linear", 5).rule(), AlphaSeq::Rule::Linear);
  EXPECT_EQ(AlphaSeq::parse("constant", 5).name(), "constant");
  EXPECT_THROW(AlphaSeq::parse("cubic", 5), std::invalid_argument);
  EXPECT_THROW(AlphaSeq::custom({1.0, 0.0}), std::invalid_argument);
}

TEST(Validate, DeltaMagnitudes) {
  const auto m = gaussian(RVineStructure::cvine(5), 0.1);
  for (const auto& d : sample_deltas(m, 0.005, AlphaSeq::constant(), 20, 1))
    for (double x : d) EXPECT_EQ(std::abs(x), 0.005);
  for (const auto& d : sample_deltas(m, 1e-7, AlphaSeq::linear(), 20, 2))
    for (int j = 0; j < m.param_count(); ++j) {
      EXPECT_DOUBLE_EQ(std::abs(d[j]), 1e-7 * m.tree_of_param(j));
      if (m.tree_of_param(j) == 3) EXPECT_DOUBLE_EQ(std::abs(d[j]), 3e-7);
    }
  EXPECT_THROW(sample_deltas(m, 0.0, AlphaSeq::constant(), 1, 1), std::invalid_argument);
  EXPECT_THROW(sample_deltas(m, 0.1, AlphaSeq::constant(), 0, 1), std::invalid_argument);
}

TEST(Validate, SignsAreFair) {
  const auto m = gaussian(RVineStructure::dvine(6), 0.0);
  const int K = 10000;
  const auto deltas = sample_deltas(m, 1.0, AlphaSeq::constant(), K, 3);
  const double se = 0.5 / std::sqrt(static_cast<double>(K));
  for (int j = 0; j < m.param_count(); ++j) {
    int plus = 0;
    for (const auto& d : deltas) plus += d[j] > 0;
    EXPECT_LE(std::abs(static_cast<double>(plus) / K - 0.5), 4 * se) << "j=" << j;
  }
}

TEST(Validate, DefaultSampleSizesUseNaturalLog) {
  EXPECT_EQ(default_n_a3(10), static_cast<std::size_t>(std::ceil(2000 * std::log(10.0))));
  EXPECT_EQ(default_n_a3(10), 4606u);
  EXPECT_EQ(default_n_mn(20), 600u);
}

TEST(Validate, QuantileType7) {
  EXPECT_DOUBLE_EQ(quantile_type7({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_type7({4, 1, 3, 2}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile_type7({4, 1, 3, 2}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_type7({4, 1, 3, 2}, -3.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_type7({5}, 0.3), 5.0);
  EXPECT_THROW(quantile_type7({}, 0.5), std::invalid_argument);
}

TEST(Validate, A3NearMinusOneAtIndependence) {
  const auto m = gaussian(RVineStructure::cvine(4), 0.0);
  const double a3 = estimate_a3(m, 1e-4, AlphaSeq::constant(), 10, 40000, 4);
  EXPECT_NEAR(a3, -1.0, 0.1);
}

TEST(Validate, A3TwoDimensionalClosedForm) {
  for (double rho : {-0.6, 0.0, 0.5}) {
    const auto m = gaussian(RVineStructure::dvine(2), rho);
    const double a3 = estimate_a3(m, 1e-4, AlphaSeq::constant(), 1, 400000, 5);
    const double target = -(1 + rho * rho) / std::pow(1 - rho * rho, 2);
    EXPECT_LT(a3, 0.0);
    EXPECT_NEAR(a3, target, 0.03 * std::abs(target)) << "rho=" << rho;
  }
}

// The statistic is a difference quotient of the sample mean of phi; for small
// eps it equals the Jacobian contraction (J_hat Delta)_j / Delta_j on the same
// rows. The streams below follow the estimator's documented seed derivation.
TEST(Validate, A3MatchesJacobianContraction) {
  Rng rng(6);
  for (const auto& s : {RVineStructure::cvine(4), RVineStructure::dvine(3)}) {
    std::vector<double> th(s.edge_count());
    for (double& x : th) x = 1.2 * rng.uniform() - 0.6;
    const auto m = VineModel::from_theta(s, Family::Gaussian, th);
    const std::size_t N = 3000;
    const std::uint64_t seed = 7;
    const double eps = 1e-6;
    const double a3 = estimate_a3(m, eps, AlphaSeq::constant(), 1, N, seed);
    const SampleMatrix U = simulate(m, N, derive_seed(seed, {1}));
    const auto delta = sample_deltas(m, eps, AlphaSeq::constant(), 1, derive_seed(seed, {2}))[0];
    const int p = m.param_count();
    std::vector<double> contraction(p, 0.0);
    for (std::size_t i = 0; i < N; ++i)
      for (const auto& row : grad_phi_analytic(m, U.row(i)))
        for (int k = 0; k < p; ++k) contraction[row.j] += row.entries[k] * delta[k] / N;
    double best = -INFINITY;
    for (int j = 0; j < p; ++j) best = std::max(best, contraction[j] / delta[j]);
    EXPECT_NEAR(a3, best, 1e-3);
  }
}

TEST(Validate, MnTwoDimensionalIsMeanSquaredSlope) {
  const double rho = 0.3;
  const auto m = gaussian(RVineStructure::dvine(2), rho);
  const std::size_t N = 5000;
  const std::uint64_t seed = 8;
  const double mn = estimate_mn(m, 1e-3, AlphaSeq::constant(), 3, N, seed);
  EXPECT_GT(mn, 0.0);
  // Brute force over the same rows and perturbations.
  const SampleMatrix U = simulate(m, N, derive_seed(seed, {1}));
  double best = 0.0;
  for (const auto& d : sample_deltas(m, 1e-3, AlphaSeq::constant(), 3, derive_seed(seed, {2}))) {
    const double r = rho + d[0], w = 1 - r * r;
    double sq = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double x1 = norm_quantile(U(i, 0)), x2 = norm_quantile(U(i, 1));
      const double Nn = x1 * x2 * (1 + r * r) - r * (x1 * x1 + x2 * x2);
      const double dN = 2 * r * x1 * x2 - (x1 * x1 + x2 * x2);
      const double slope = (w + 2 * r * r) / (w * w) + dN / (w * w) + 4 * r * Nn / (w * w * w);
      sq += slope * slope / N;
    }
    best = std::max(best, sq);
  }
  EXPECT_NEAR(mn, best, 1e-9 * best);
}

TEST(Validate, MnInvariantUnderAlphaScaling) {
  const auto m = gaussian(RVineStructure::cvine(5), 0.3);
  const AlphaSeq a = AlphaSeq::linear();
  // Same perturbations (eps compensates the scale): identical statistic.
  const MnDn base = estimate_mndn(m, 1e-3, a, 4, 500, 9);
  const MnDn scaled = estimate_mndn(m, 1e-3 / 3.7, a.scaled(3.7), 4, 500, 9);
  EXPECT_NEAR(scaled.mn2, base.mn2, 1e-12 * base.mn2);
  EXPECT_NEAR(scaled.dn, base.dn, 1e-12 * base.dn);
  // With tiny eps the perturbation itself barely matters.
  const double tiny = estimate_mn(m, 1e-9, a, 2, 500, 9);
  const double tiny_scaled = estimate_mn(m, 1e-9, a.scaled(10.0), 2, 500, 9);
  EXPECT_NEAR(tiny, tiny_scaled, 1e-6 * tiny);
}

TEST(Validate, MnStableInSampleSize) {
  const auto m = gaussian(RVineStructure::cvine(10), 0.0);
  const std::size_t N = default_n_mn(10);
  const double a = estimate_mn(m, 0.005, AlphaSeq::constant(), 5, N, 10);
  const double b = estimate_mn(m, 0.005, AlphaSeq::constant(), 5, 2 * N, 11);
  ASSERT_TRUE(std::isfinite(a));
  EXPECT_LT(std::abs(b - a) / a, 0.25);
}

TEST(Validate, DnClampsToMaximumForTinyModels) {
  // d=2, p=1: p^2 <= 15.
  const auto m2 = gaussian(RVineStructure::dvine(2), 0.2);
  EXPECT_EQ(estimate_dn(m2, 1e-3, AlphaSeq::constant(), 2, 300, 12),
            estimate_dn_at(m2, 1e-3, AlphaSeq::constant(), 2, 300, 12, 1.0));
  // d=3, p=3: 9 <= 15.
  const auto m3 = gaussian(RVineStructure::dvine(3), 0.2);
  EXPECT_EQ(estimate_dn(m3, 1e-3, AlphaSeq::constant(), 2, 300, 12),
            estimate_dn_at(m3, 1e-3, AlphaSeq::constant(), 2, 300, 12, 1.0));
  // d=4, p=6: level 1 - 15/36.
  const auto m4 = gaussian(RVineStructure::dvine(4), 0.2);
  EXPECT_EQ(estimate_dn(m4, 1e-3, AlphaSeq::constant(), 2, 300, 12),
            estimate_dn_at(m4, 1e-3, AlphaSeq::constant(), 2, 300, 12, 1.0 - 15.0 / 36.0));
}

TEST(Validate, DnMatchesBruteForceQuantile) {
  const auto m = gaussian(RVineStructure::dvine(2), 0.0);
  const std::size_t N = 1000000;
  const double level = 0.9;
  const double dn = estimate_dn_at(m, 1e-9, AlphaSeq::constant(), 1, N, 13, level);
  // At rho = 0 the slope is 1 - x1^2 - x2^2.
  Rng rng(14);
  std::vector<double> v(N);
  for (double& s : v) {
    const double x1 = norm_quantile(rng.uniform()), x2 = norm_quantile(rng.uniform());
    s = std::abs(1 - x1 * x1 - x2 * x2);
  }
  const double ref = quantile_type7(v, level);
  EXPECT_NEAR(dn, ref, 0.02 * ref);
}

TEST(Validate, DnMonotoneInLevel) {
  const auto m = gaussian(RVineStructure::cvine(4), 0.25);
  double prev = -INFINITY;
  for (double q : {0.1, 0.5, 0.8, 0.95, 1.0}) {
    const double v = estimate_dn_at(m, 1e-3, AlphaSeq::constant(), 3, 400, 15, q);
    EXPECT_GE(v, prev) << "level " << q;
    prev = v;
  }
}

TEST(Validate, EstimatorsAreDeterministic) {
  const auto m = gaussian(RVineStructure::cvine(5), 0.3);
  EXPECT_EQ(estimate_a3(m, 0.005, AlphaSeq::constant(), 5, 500, 16), estimate_a3(m, 0.005, AlphaSeq::constant(), 5, 500, 16));
  const MnDn a = estimate_mndn(m, 0.005, AlphaSeq::constant(), 5, 300, 17);
  const MnDn b = estimate_mndn(m, 0.005, AlphaSeq::constant(), 5, 300, 17);
  EXPECT_EQ(a.mn2, b.mn2);
  EXPECT_EQ(a.dn, b.dn);
  EXPECT_NE(estimate_a3(m, 0.005, AlphaSeq::constant(), 5, 500, 18), estimate_a3(m, 0.005, AlphaSeq::constant(), 5, 500, 16));
}

TEST(Validate, JacobianStatisticsRequireGaussian) {
  const auto m = VineModel::from_theta_model(RVineStructure::cvine(3), Family::GumbelSigned, ThetaModelSpec::parse("harmonic"));
  EXPECT_THROW(estimate_mn(m, 0.005, AlphaSeq::constant(), 2, 200, 1), std::invalid_argument);
  EXPECT_NO_THROW(estimate_a3(m, 0.005, AlphaSeq::constant(), 2, 200, 1));
}
