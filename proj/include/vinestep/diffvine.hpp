#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vinestep/vinemodel.hpp"

namespace vinestep {

/// Row j of the Jacobian of phi: entries[k] = d phi_j / d theta_k, k = 0..p-1.
struct PhiJacobianRow {
  int j = 0;
  std::vector<double> entries;
};

/// Exact Jacobian of phi at one observation for a Gaussian vine, by forward
/// accumulation of normal-score pseudo-data gradients along the parent links.
std::vector<PhiJacobianRow> grad_phi_analytic(const VineModel& model, std::span<const double> u);

/// Central finite differences of phi in each theta_k (absolute step).
/// Gaussian vines are differenced on the normal-score scale, where the
/// recursion does not lose tail precision; other families on the copula scale.
std::vector<PhiJacobianRow> grad_phi_fd(const VineModel& model, std::span<const double> u,
                                        double step = 1e-5);

/// phi for a Gaussian vine evaluated from normal scores x = Phi^-1(u).
std::vector<double> phi_normal(const VineModel& model, std::span<const double> x);

enum class GradMethod { Analytic, FiniteDifference };

struct EmpiricalIJ {
  Eigen::MatrixXd I_hat;  // sample covariance of phi
  Eigen::MatrixXd J_hat;  // sample mean of the Jacobian of phi
  std::size_t N = 0;
  std::uint64_t seed = 0;
  std::vector<double> theta;
};

/// Monte-Carlo I and J at the model's parameters over N simulated rows.
EmpiricalIJ empirical_IJ(const VineModel& model, std::size_t N, std::uint64_t seed,
                         GradMethod method = GradMethod::Analytic);

}  // namespace vinestep
