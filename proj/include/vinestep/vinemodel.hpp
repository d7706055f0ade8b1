#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vinestep/paircop.hpp"
#include "vinestep/vinestruct.hpp"

namespace vinestep {

/// n x d observations, stored column-major. U-scale entries lie in (0, 1);
/// X-scale entries are arbitrary reals.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::size_t n, std::size_t d) : n_(n), d_(d), data_(n * d, 0.0) {}

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * n_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * n_ + i]; }

  std::span<const double> col(std::size_t j) const { return {data_.data() + j * n_, n_}; }
  std::span<double> col(std::size_t j) { return {data_.data() + j * n_, n_}; }
  std::vector<double> row(std::size_t i) const;

  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const SampleMatrix&, const SampleMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> data_;
};

/// Per-tree true parameter profile theta_t shared by all edges of tree t.
struct ThetaModelSpec {
  enum class Kind { Zero, Geometric, Harmonic, SqrtSlow };
  Kind kind = Kind::Zero;
  double scale = 1.0;

  /// zero: 0, geometric: scale * 0.5^t, harmonic: scale / (t + 1),
  /// sqrt-slow: scale / sqrt(t + 1). Default scales give 0.5^t, 1/(t+1) and
  /// 0.5/sqrt(t+1).
  double value(int tree) const;

  static double default_scale(Kind kind);
  static ThetaModelSpec parse(std::string_view name);  // "zero", "geometric", ...
  std::string name() const;
};

/// Structure plus one pair copula per stored edge (canonical edge order).
class VineModel {
 public:
  VineModel(RVineStructure structure, std::vector<PairCopula> copulas);

  /// Independence copula on every edge.
  static VineModel independence(RVineStructure structure);
  /// One family on all edges, parameters taken from a flattened theta.
  static VineModel from_theta(RVineStructure structure, Family family, std::span<const double> theta);
  /// Per-edge families, parameters from a flattened theta.
  static VineModel from_theta(RVineStructure structure, std::span<const Family> families,
                              std::span<const double> theta);
  /// One family, tree-t parameters from the theta model. Student's t edges
  /// get rho = theta_t and nu = 4.
  static VineModel from_theta_model(RVineStructure structure, Family family, const ThetaModelSpec& spec);

  const RVineStructure& structure() const { return structure_; }
  const std::vector<PairCopula>& copulas() const { return copulas_; }
  const PairCopula& copula(int flat_edge) const { return copulas_.at(flat_edge); }
  const PairCopula& copula(int tree, int i) const { return copulas_.at(structure_.edge_offset(tree) + i); }
  std::vector<Family> families() const;

  /// Length of the flattened parameter vector.
  int param_count() const { return param_offset_.back(); }
  /// Index of the first parameter of a (flat) edge.
  int param_offset(int flat_edge) const { return param_offset_.at(flat_edge); }
  /// Tree (1-based) that owns parameter j.
  int tree_of_param(int j) const;
  /// Flat edge that owns parameter j.
  int edge_of_param(int j) const;

  /// Tree-major flattening: (theta_e)_{e in T1}, (theta_e)_{e in T2}, ...
  std::vector<double> theta() const;
  /// Same structure and families, new flattened parameters.
  VineModel with_theta(std::span<const double> theta) const;

  bool all_gaussian() const;  // Gaussian or independence on every edge

 private:
  RVineStructure structure_;
  std::vector<PairCopula> copulas_;
  std::vector<int> param_offset_;
};

/// Inputs (u_{a|D}, u_{b|D}) of every edge for every observation.
class PseudoDataCache {
 public:
  PseudoDataCache(std::size_t n, std::size_t edges)
      : n_(n), edges_(edges), first_(n * edges), second_(n * edges) {}

  std::size_t rows() const { return n_; }
  std::size_t edges() const { return edges_; }
  std::span<const double> first(std::size_t e) const { return {first_.data() + e * n_, n_}; }
  std::span<const double> second(std::size_t e) const { return {second_.data() + e * n_, n_}; }
  std::span<double> first(std::size_t e) { return {first_.data() + e * n_, n_}; }
  std::span<double> second(std::size_t e) { return {second_.data() + e * n_, n_}; }

 private:
  std::size_t n_, edges_;
  std::vector<double> first_, second_;
};

PseudoDataCache pseudo_data(const VineModel& model, const SampleMatrix& U);

/// n iid draws by sequential inverse Rosenblatt transform. The uniforms are
/// generated row by row from a single stream seeded with `seed`, so output is
/// bit-reproducible and independent of the thread count.
SampleMatrix simulate(const VineModel& model, std::size_t n, std::uint64_t seed);

/// Correlation matrix of the normal scores of a Gaussian vine. Truncated C-
/// and D-vines are completed with zero partial correlations.
Eigen::MatrixXd implied_corr(const VineModel& model);

/// Stacked per-edge scores at one observation, canonical order.
std::vector<double> phi(const VineModel& model, std::span<const double> u);

/// Column means of phi over the rows of U.
std::vector<double> phi_mean(const VineModel& model, const SampleMatrix& U);

double loglik(const VineModel& model, const SampleMatrix& U);

/// Row-wise normal scores Phi^-1(u), with u clamped to [1e-10, 1 - 1e-10].
SampleMatrix normal_scores(const SampleMatrix& U);

/// |Phi^-1(1e-10)|: bound applied to h-outputs on the normal-score scale.
double normal_score_bound();

}  // namespace vinestep
