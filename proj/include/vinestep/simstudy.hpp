#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vinestep/estimate.hpp"
#include "vinestep/vinemodel.hpp"

namespace vinestep {

enum class StructureKind { CVine, DVine };

std::string_view structure_name(StructureKind k);
StructureKind parse_structure(std::string_view name);
RVineStructure build_structure(StructureKind k, int d, int trunc = -1);

struct StudyConfig {
  std::string study_id = "study";
  StructureKind structure = StructureKind::CVine;
  Family family = Family::Gaussian;
  ThetaModelSpec theta_model{};
  std::vector<int> d_list;
  std::vector<int> n_list;
  int replications = 0;  // 0 selects the default (100, or 50 for Student's t)
  MarginsMode margins = MarginsMode::Known;
  int trunc = -1;  // -1: full vine
  std::uint64_t seed = 1;
  bool timing = true;  // false writes wall_ms = 0 so rows are byte-reproducible

  int effective_replications() const;
};

struct StudyRow {
  std::string study_id;
  StructureKind structure = StructureKind::CVine;
  Family family = Family::Gaussian;
  std::string theta_model;
  MarginsMode margins = MarginsMode::Known;
  int trunc = 0;
  int d = 0;
  int n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double maxnorm_stat = 0.0;
  double sum_stat = 0.0;
  int nonconverged = 0;  // -1 marks a replication that failed outright
  double wall_ms = 0.0;
};

/// Seed of one replication cell.
std::uint64_t rep_seed(std::uint64_t base, int d, int n, int rep);

/// sqrt(n / ln d) * max_k |err_k| and sqrt(n) / d * sum_k err_k.
double maxnorm_stat(std::span<const double> err, int n, int d);
double sum_stat(std::span<const double> err, int n, int d);

/// Parameter indices that enter the error statistics: every parameter,
/// except that for Student's t only the correlations are used.
std::vector<int> statistic_indices(const VineModel& model);

/// One replication. Never throws on numerical failure; such rows carry
/// nonconverged = -1 and NaN statistics.
StudyRow run_cell(const StudyConfig& config, int d, int n, int rep);

/// All cells, ordered by (d, n, rep) regardless of scheduling.
std::vector<StudyRow> run_study(const StudyConfig& config);

enum class Regime { Linear, Quadratic, Cubic };
std::string_view regime_name(Regime r);
Regime parse_regime(std::string_view name);

/// Sample size of a growth regime at dimension d: linear 25d, quadratic
/// 0.125 d^2, cubic 0.003 (d - 50)^3 (d > 50 only), or 0.005 d^3 for the
/// Student's t cubic regime. Rounded, floored at 50.
int regime_n(Regime r, int d, Family family = Family::Gaussian);

/// Log-log interpolation (or extrapolation from the two nearest support
/// points) of mean errors table[(d, n)] to n_target at fixed d.
double interp_error(const std::map<std::pair<int, int>, double>& table, int d, int n_target);

/// Mean of the raw max-norm error per (d, n), recovered from maxnorm_stat.
std::map<std::pair<int, int>, double> mean_maxnorm_table(const std::vector<StudyRow>& rows);

}  // namespace vinestep
