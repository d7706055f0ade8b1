#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vinestep {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Family { Independence, Gaussian, GumbelSigned, StudentT };

/// Which conditional distribution an h-function evaluates.
///   FirstGivenSecond: C(u | v) = dC(u, v)/dv
///   SecondGivenFirst: C(v | u) = dC(u, v)/du
enum class HSide { FirstGivenSecond, SecondGivenFirst };

int family_arity(Family f);
std::string_view family_name(Family f);
/// Accepts the names produced by family_name plus a few aliases
/// ("gumbel", "t", "student"). Throws std::invalid_argument.
Family parse_family(std::string_view name);

inline constexpr double kUnitClamp = 1e-10;
inline constexpr double kGumbelThetaMax = 49.0;
inline constexpr double kNuMin = 2.0;   // exclusive
inline constexpr double kNuMax = 50.0;  // inclusive
inline constexpr double kStudentNuTrue = 4.0;

inline double clamp_unit(double u) {
  return u < kUnitClamp ? kUnitClamp : (u > 1.0 - kUnitClamp ? 1.0 - kUnitClamp : u);
}

/// A bivariate copula from one of the supported families.
///
/// Parameterizations:
///   Gaussian      params = {rho},      rho in (-1, 1)
///   GumbelSigned  params = {theta},    |theta| <= 49; theta >= 0 is
///                 Gumbel(1 + theta), theta < 0 is the 90 degree rotation of
///                 Gumbel(1 - theta) with density c(1 - u, v)
///   StudentT      params = {rho, nu},  rho in (-1, 1), nu in (2, 50]
class PairCopula {
 public:
  PairCopula() = default;
  /// Throws DomainError when the parameters are outside the family domain.
  PairCopula(Family family, std::span<const double> params);
  PairCopula(Family family, std::initializer_list<double> params)
      : PairCopula(family, std::span<const double>(params.begin(), params.size())) {}

  static PairCopula independence() { return {}; }
  static PairCopula gaussian(double rho) { return {Family::Gaussian, {rho}}; }
  static PairCopula gumbel(double theta) { return {Family::GumbelSigned, {theta}}; }
  static PairCopula student(double rho, double nu) { return {Family::StudentT, {rho, nu}}; }

  Family family() const { return family_; }
  int arity() const { return family_arity(family_); }
  std::span<const double> params() const { return {params_.data(), static_cast<std::size_t>(arity())}; }
  double param(int i) const { return params_[i]; }

  /// True when params are inside the open domain (or at nu_max).
  static bool in_domain(Family family, std::span<const double> params);

 private:
  Family family_ = Family::Independence;
  std::array<double, 2> params_{};
};

double log_density(const PairCopula& c, double u, double v);
double density(const PairCopula& c, double u, double v);
double hfunc(const PairCopula& c, double u, double v, HSide side);

/// Inverse of hfunc in its conditioned argument. For FirstGivenSecond returns
/// u with hfunc(c, u, cond, side) = w; for SecondGivenFirst returns v with
/// hfunc(c, cond, v, side) = w.
double hinv(const PairCopula& c, double w, double cond, HSide side);

/// Gradient of log_density with respect to the parameters (length = arity).
std::vector<double> score(const PairCopula& c, double u, double v);

struct GaussianScorePartials {
  double ds_drho;
  double ds_dx1;
  double ds_dx2;
  double dh_drho;
  double dh_dx1;
};

/// Closed-form partials of the Gaussian score s(x1, x2; rho) and of the
/// normal-score h-function h(x1, x2; rho) = (x1 - rho x2) / sqrt(1 - rho^2).
GaussianScorePartials score_partials_gaussian(const PairCopula& c, double x1, double x2);

/// Gaussian pair copula on normal scores x = Phi^-1(u).
namespace gauss {

inline double log_density(double rho, double x1, double x2) {
  const double r2 = rho * rho;
  const double om = 1.0 - r2;
  return -0.5 * std::log(om) - (r2 * (x1 * x1 + x2 * x2) - 2.0 * rho * x1 * x2) / (2.0 * om);
}

inline double score(double rho, double x1, double x2) {
  const double om = 1.0 - rho * rho;
  return rho / om - rho * (x1 * x1 + x2 * x2) / (om * om) + (1.0 + rho * rho) * x1 * x2 / (om * om);
}

inline double h(double rho, double x1, double x2) {
  return (x1 - rho * x2) / std::sqrt(1.0 - rho * rho);
}

/// Log-likelihood of n pairs from their sufficient statistics
/// s11 = sum x1^2, s22 = sum x2^2, s12 = sum x1 x2.
inline double loglik_moments(double rho, double n, double s11, double s22, double s12) {
  const double r2 = rho * rho;
  const double om = 1.0 - r2;
  return -0.5 * n * std::log(om) - (r2 * (s11 + s22) - 2.0 * rho * s12) / (2.0 * om);
}

inline double score_moments(double rho, double n, double s11, double s22, double s12) {
  const double om = 1.0 - rho * rho;
  return n * rho / om - rho * (s11 + s22) / (om * om) + (1.0 + rho * rho) * s12 / (om * om);
}

}  // namespace gauss

}  // namespace vinestep
