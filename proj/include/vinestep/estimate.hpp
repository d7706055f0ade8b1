#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "vinestep/vinemodel.hpp"

namespace vinestep {

enum class MarginsMode { Known, Empirical };

std::string_view margins_name(MarginsMode m);
MarginsMode parse_margins(std::string_view name);

/// Column-wise ranks divided by n + 1; ties get their average rank.
SampleMatrix pseudo_obs(const SampleMatrix& X);

struct EdgeDiagnostics {
  int iterations = 0;
  bool converged = true;
  bool at_boundary = false;      // estimate within 1e-6 of the search domain edge
  std::vector<double> gradient;  // mean score at the estimate
};

struct EdgeFit {
  PairCopula copula;
  EdgeDiagnostics diag;
};

/// Maximum-likelihood fit of one pair copula to the pairs (u[i], v[i]).
/// One-parameter families use bounded Brent search on the domain shrunk by
/// 1e-6; Student's t uses Nelder-Mead over (rho, ln(nu - 2)).
EdgeFit fit_edge(Family family, std::span<const double> u, std::span<const double> v);

struct FitResult {
  VineModel model;
  std::vector<double> theta_hat;
  std::vector<EdgeDiagnostics> diagnostics;  // canonical edge order
  MarginsMode margins = MarginsMode::Known;

  int nonconverged() const;
};

/// Stepwise MLE: fits tree 1, then computes the pseudo-data of tree 2 from
/// the fitted tree-1 copulas, and so on up to the truncation level.
FitResult stepwise_fit(const RVineStructure& structure, std::span<const Family> families,
                       const SampleMatrix& U, MarginsMode margins = MarginsMode::Known);
FitResult stepwise_fit(const RVineStructure& structure, Family family, const SampleMatrix& U,
                       MarginsMode margins = MarginsMode::Known);

}  // namespace vinestep
