#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vinestep/vinemodel.hpp"

namespace vinestep {

/// Positive per-tree weights alpha(t) used to scale perturbations.
class AlphaSeq {
 public:
  enum class Rule { Constant, Linear, Custom };

  static AlphaSeq constant() { return AlphaSeq(Rule::Constant, {}); }
  static AlphaSeq linear() { return AlphaSeq(Rule::Linear, {}); }
  /// values[t-1] = alpha(t); trees beyond the table reuse the last value.
  static AlphaSeq custom(std::vector<double> values);
  /// alpha(t) = sum_{s <= t} s^-power.
  static AlphaSeq partial_sum_power(double power, int trees);
  /// "constant", "linear" (alpha(t) = t) or "psum" (sum_{s<=t} s^-1.1).
  static AlphaSeq parse(std::string_view name, int trees);

  Rule rule() const { return rule_; }
  std::string name() const;
  double operator()(int tree) const;
  AlphaSeq scaled(double c) const;

 private:
  AlphaSeq(Rule r, std::vector<double> v) : rule_(r), values_(std::move(v)) {}
  Rule rule_;
  std::vector<double> values_;
  double scale_ = 1.0;
};

/// K perturbation vectors with Delta_j = +-eps * alpha(tree of j), fair signs.
std::vector<std::vector<double>> sample_deltas(const VineModel& model, double eps, const AlphaSeq& alpha,
                                               int K, std::uint64_t seed);

/// Default Monte-Carlo sizes: ceil(2000 ln d) and ceil(200 ln d).
std::size_t default_n_a3(int d);
std::size_t default_n_mn(int d);

/// Curvature statistic: max over j and the K draws of
/// (mean phi_j(theta + Delta) - mean phi_j(theta)) / Delta_j on N rows
/// simulated from the model. N = 0 selects the default.
double estimate_a3(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                   std::uint64_t seed);

struct MnDn {
  double mn2 = 0.0;  // max over j, draws of mean_i (sum_{k<=j} |alpha_k/alpha_j dphi_j/dtheta_k|)^2
  double dn = 0.0;   // max over j, draws of the (1 - 15/p^2) quantile of the unsquared sums
};

/// Both Jacobian-based statistics from one pass (Gaussian vines only).
MnDn estimate_mndn(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                   std::uint64_t seed);
double estimate_mn(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                   std::uint64_t seed);
double estimate_dn(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                   std::uint64_t seed);
/// Same as estimate_dn with an explicit quantile level.
double estimate_dn_at(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                      std::uint64_t seed, double level);

/// Type-7 (linear interpolation) sample quantile; levels <= 0 or >= 1 clamp
/// to the sample minimum / maximum.
double quantile_type7(std::vector<double> x, double level);

}  // namespace vinestep
