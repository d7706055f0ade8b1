#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "vinestep/diffvine.hpp"
#include "vinestep/normal.hpp"
#include "vinestep/rng.hpp"

using namespace vinestep;

namespace {

// d/drho of the Gaussian copula score, differentiated by hand from
// s = rho/w + N/w^2 with w = 1 - rho^2 and N = x1 x2 (1 + rho^2) - rho (x1^2 + x2^2).
double dscore_drho(double rho, double x1, double x2) {
  const double w = 1 - rho * rho;
  const double N = x1 * x2 * (1 + rho * rho) - rho * (x1 * x1 + x2 * x2);
  const double dN = 2 * rho * x1 * x2 - (x1 * x1 + x2 * x2);
  return (w + 2 * rho * rho) / (w * w) + dN / (w * w) + 4 * rho * N / (w * w * w);
}

Eigen::MatrixXd dense(const std::vector<PhiJacobianRow>& rows) {
  const int p = static_cast<int>(rows.size());
  Eigen::MatrixXd M(p, p);
  for (const auto& r : rows)
    for (int k = 0; k < p; ++k) M(r.j, k) = r.entries[k];
  return M;
}

struct MeanSe {
  Eigen::MatrixXd mean, se;
};

// Entrywise Monte-Carlo mean and standard error of the analytic Jacobian.
MeanSe jacobian_moments(const VineModel& m, std::size_t n, std::uint64_t seed) {
  const SampleMatrix U = simulate(m, n, seed);
  const int p = m.param_count();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p), s2 = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::MatrixXd J = dense(grad_phi_analytic(m, U.row(i)));
    s += J;
    s2 += J.cwiseProduct(J);
  }
  MeanSe out;
  out.mean = s / n;
  out.se = ((s2 / n - out.mean.cwiseProduct(out.mean)) / n).cwiseSqrt();
  return out;
}

VineModel random_gaussian(const RVineStructure& s, Rng& rng) {
  std::vector<double> th(s.edge_count());
  for (double& x : th) x = 1.6 * rng.uniform() - 0.8;
  return VineModel::from_theta(s, Family::Gaussian, th);
}

}  // namespace

TEST(DiffVine, TwoDimensionalEntryIsClosedForm) {
  for (double rho : {-0.7, 0.0, 0.35, 0.9})
    for (double u1 : {0.1, 0.5, 0.83})
      for (double u2 : {0.27, 0.95}) {
        const auto m = VineModel::from_theta(RVineStructure::dvine(2), Family::Gaussian, std::vector<double>{rho});
        const auto rows = grad_phi_analytic(m, std::vector<double>{u1, u2});
        ASSERT_EQ(rows.size(), 1u);
        const double ref = dscore_drho(rho, norm_quantile(u1), norm_quantile(u2));
        EXPECT_NEAR(rows[0].entries[0], ref, 1e-12 * std::max(1.0, std::abs(ref)));
      }
}

TEST(DiffVine, LaterTreeEntriesAreExactlyZero) {
  Rng rng(1);
  for (const auto& s : {RVineStructure::cvine(6), RVineStructure::dvine(6), RVineStructure::cvine(7, 3)}) {
    const auto m = random_gaussian(s, rng);
    const std::vector<double> u = {0.2, 0.9, 0.4, 0.61, 0.05, 0.33, 0.7};
    const std::span<const double> row(u.data(), s.d());
    for (const auto& r : grad_phi_analytic(m, row))
      for (int k = 0; k < m.param_count(); ++k)
        if (m.tree_of_param(k) > m.tree_of_param(r.j)) EXPECT_EQ(r.entries[k], 0.0);
  }
}

TEST(DiffVine, AnalyticMatchesFiniteDifference) {
  Rng rng(2);
  for (const auto& s : {RVineStructure::cvine(6), RVineStructure::dvine(6)}) {
    const auto m = random_gaussian(s, rng);
    const SampleMatrix U = simulate(m, 100, 3);
    double worst = 0.0;
    for (std::size_t i = 0; i < U.rows(); ++i) {
      const Eigen::MatrixXd A = dense(grad_phi_analytic(m, U.row(i)));
      const Eigen::MatrixXd F = dense(grad_phi_fd(m, U.row(i)));
      for (int j = 0; j < A.rows(); ++j)
        for (int k = 0; k < A.cols(); ++k)
          worst = std::max(worst, std::abs(A(j, k) - F(j, k)) / std::max(1.0, std::abs(A(j, k))));
    }
    EXPECT_LE(worst, 1e-6);
  }
}

TEST(DiffVine, NonGaussianAnalyticThrows) {
  const auto m = VineModel::from_theta_model(RVineStructure::dvine(3), Family::GumbelSigned, ThetaModelSpec::parse("harmonic"));
  EXPECT_THROW(grad_phi_analytic(m, std::vector<double>{0.2, 0.4, 0.6}), std::invalid_argument);
  EXPECT_NO_THROW(grad_phi_fd(m, std::vector<double>{0.2, 0.4, 0.6}));
}

TEST(DiffVine, CrossEntryMatchesClosedForm) {
  // C-vine d=3: theta = (rho12, rho13, rho23;1).
  const auto m = VineModel::from_theta(RVineStructure::cvine(3), Family::Gaussian, std::vector<double>{0.6, 0.3, 0.4});
  const auto ms = jacobian_moments(m, 1000000, 4);
  const double target = -0.24 / (0.84 * 0.64);
  EXPECT_NEAR(target, -0.446429, 1e-6);
  EXPECT_LE(std::abs(ms.mean(2, 0) - target), 3 * ms.se(2, 0));
  // Same form with the roles of the two tree-1 edges exchanged.
  const double other = -0.3 * 0.4 / (0.84 * (1 - 0.09));
  EXPECT_LE(std::abs(ms.mean(2, 1) - other), 4 * ms.se(2, 1));
  // Tree-1 diagonal entries.
  for (int k : {0, 1}) {
    const double r = m.theta()[k];
    EXPECT_LE(std::abs(ms.mean(k, k) + (1 + r * r) / std::pow(1 - r * r, 2)), 4 * ms.se(k, k));
  }
}

TEST(DiffVine, IndependenceDiagonalAveragesToMinusOne) {
  const auto m = VineModel::from_theta(RVineStructure::dvine(4), Family::Gaussian, std::vector<double>(6, 0.0));
  const SampleMatrix U = simulate(m, 100000, 5);
  std::vector<double> s(6, 0.0), s2(6, 0.0);
  for (std::size_t i = 0; i < U.rows(); ++i) {
    const auto rows = grad_phi_fd(m, U.row(i));
    for (int j = 0; j < 6; ++j) s[j] += rows[j].entries[j], s2[j] += rows[j].entries[j] * rows[j].entries[j];
  }
  for (int j = 0; j < 6; ++j) {
    const double mean = s[j] / U.rows(), se = std::sqrt((s2[j] / U.rows() - mean * mean) / U.rows());
    EXPECT_LE(std::abs(mean + 1.0), 4 * se) << "j=" << j;
  }
}

TEST(DiffVine, EmpiricalJIsMinusIdentityAtIndependence) {
  const auto m = VineModel::from_theta(RVineStructure::cvine(4), Family::Gaussian, std::vector<double>(6, 0.0));
  const std::size_t N = 100000;
  const EmpiricalIJ ij = empirical_IJ(m, N, 6);
  const auto ref = jacobian_moments(m, N, 7);  // standard errors from an independent sample
  EXPECT_EQ(ij.N, N);
  for (int j = 0; j < 6; ++j)
    for (int k = 0; k < 6; ++k) {
      const double target = j == k ? -1.0 : 0.0;
      EXPECT_LE(std::abs(ij.J_hat(j, k) - target), 4 * ref.se(j, k) + 1e-12) << j << "," << k;
    }
}

TEST(DiffVine, EmpiricalIOfTwoDimensionalIndependence) {
  const auto m = VineModel::from_theta(RVineStructure::dvine(2), Family::Gaussian, std::vector<double>{0.0});
  const std::size_t N = 200000;
  const EmpiricalIJ ij = empirical_IJ(m, N, 8);
  // Var[x1 x2] = 1 and Var[(x1 x2)^2] = 9 - 1.
  EXPECT_LE(std::abs(ij.I_hat(0, 0) - 1.0), 4 * std::sqrt(8.0 / N));
}

TEST(DiffVine, BQuantityInEmpiricalJ) {
  const double r12 = 0.5, r2i = -0.3;
  // C-vine d=4: tree 1 (1,2),(1,3),(1,4); tree 2 (2,3;1),(2,4;1); tree 3.
  const auto m = VineModel::from_theta(RVineStructure::cvine(4), Family::Gaussian,
                                       std::vector<double>{r12, 0.2, 0.4, r2i, r2i, 0.1});
  const std::size_t N = 200000;
  const EmpiricalIJ ij = empirical_IJ(m, N, 9);
  const auto ref = jacobian_moments(m, N, 10);
  const double b = -r12 * r2i / ((1 - r2i * r2i) * (1 - r12 * r12));
  for (int row : {3, 4}) EXPECT_LE(std::abs(ij.J_hat(row, 0) - b), 4 * ref.se(row, 0)) << "row " << row;
}

TEST(DiffVine, EmpiricalMatricesAreWellFormed) {
  Rng rng(11);
  const auto m = random_gaussian(RVineStructure::dvine(5), rng);
  const EmpiricalIJ a = empirical_IJ(m, 5000, 12, GradMethod::Analytic);
  const EmpiricalIJ f = empirical_IJ(m, 5000, 12, GradMethod::FiniteDifference);
  EXPECT_LE((a.I_hat - a.I_hat.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a.I_hat).eigenvalues().minCoeff(), -1e-10);
  for (int j = 0; j < m.param_count(); ++j)
    for (int k = 0; k < m.param_count(); ++k)
      if (m.tree_of_param(k) > m.tree_of_param(j)) EXPECT_LE(std::abs(a.J_hat(j, k)), 1e-12);
  EXPECT_LE((a.J_hat - f.J_hat).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_EQ(a.I_hat, f.I_hat);
  EXPECT_EQ(a.theta, m.theta());
  EXPECT_EQ(a.seed, 12u);
  const EmpiricalIJ again = empirical_IJ(m, 5000, 12);
  EXPECT_EQ(again.J_hat, a.J_hat);
  EXPECT_THROW(empirical_IJ(m, 50, 1), std::invalid_argument);
}

TEST(DiffVine, GumbelDiagonalIsNegative) {
  const auto m = VineModel::from_theta_model(RVineStructure::dvine(3), Family::GumbelSigned, ThetaModelSpec::parse("geometric"));
  const EmpiricalIJ ij = empirical_IJ(m, 100000, 13, GradMethod::FiniteDifference);
  for (int j = 0; j < 3; ++j) EXPECT_LT(ij.J_hat(j, j), 0.0) << "j=" << j;
}

TEST(DiffVine, DerivativeAndExpectationInterchange) {
  Rng rng(14);
  const auto m = random_gaussian(RVineStructure::cvine(4), rng);
  const std::size_t N = 50000;
  const SampleMatrix U = simulate(m, N, 15);
  const auto ms = jacobian_moments(m, N, 15);
  const auto th = m.theta();
  const double h = 1e-5;
  for (int k = 0; k < m.param_count(); ++k) {
    auto up = th, down = th;
    up[k] += h, down[k] -= h;
    const auto pu = phi_mean(m.with_theta(up), U), pd = phi_mean(m.with_theta(down), U);
    for (int j = 0; j < m.param_count(); ++j)
      EXPECT_LE(std::abs((pu[j] - pd[j]) / (2 * h) - ms.mean(j, k)), 4 * ms.se(j, k) + 1e-6) << j << "," << k;
  }
}

TEST(DiffVine, PhiNormalAgreesWithPhi) {
  Rng rng(16);
  const auto m = random_gaussian(RVineStructure::dvine(5), rng);
  const std::vector<double> u = {0.13, 0.5, 0.77, 0.92, 0.31};
  std::vector<double> x;
  for (double v : u) x.push_back(norm_quantile(v));
  const auto a = phi(m, u), b = phi_normal(m, x);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9 * std::max(1.0, std::abs(a[k])));
}
