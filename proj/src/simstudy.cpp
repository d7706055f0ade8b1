#include "vinestep/simstudy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vinestep/normal.hpp"
#include "vinestep/parallel.hpp"
#include "vinestep/rng.hpp"

namespace vinestep {

std::string_view structure_name(StructureKind k) { return k == StructureKind::CVine ? "cvine" : "dvine"; }

StructureKind parse_structure(std::string_view name) {
  if (name == "cvine" || name == "c-vine" || name == "C") return StructureKind::CVine;
  if (name == "dvine" || name == "d-vine" || name == "D") return StructureKind::DVine;
  throw std::invalid_argument("unknown structure '" + std::string(name) + "'");
}

RVineStructure build_structure(StructureKind k, int d, int trunc) {
  return k == StructureKind::CVine ? RVineStructure::cvine(d, trunc) : RVineStructure::dvine(d, trunc);
}

int StudyConfig::effective_replications() const {
  if (replications > 0) return replications;
  return family == Family::StudentT ? 50 : 100;
}

std::uint64_t rep_seed(std::uint64_t base, int d, int n, int rep) {
  return derive_seed(base, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(rep)});
}

double maxnorm_stat(std::span<const double> err, int n, int d) {
  double m = 0.0;
  for (double e : err) m = std::max(m, std::abs(e));
  return std::sqrt(static_cast<double>(n) / std::log(static_cast<double>(d))) * m;
}

double sum_stat(std::span<const double> err, int n, int d) {
  double s = 0.0;
  for (double e : err) s += e;
  return std::sqrt(static_cast<double>(n)) / d * s;
}

std::vector<int> statistic_indices(const VineModel& model) {
  std::vector<int> idx;
  for (int e = 0; e < static_cast<int>(model.copulas().size()); ++e) {
    const PairCopula& c = model.copula(e);
    const int off = model.param_offset(e);
    if (c.family() == Family::StudentT) idx.push_back(off);
    else
      for (int r = 0; r < c.arity(); ++r) idx.push_back(off + r);
  }
  return idx;
}

StudyRow run_cell(const StudyConfig& config, int d, int n, int rep) {
  const auto start = std::chrono::steady_clock::now();
  StudyRow row;
  row.study_id = config.study_id;
  row.structure = config.structure;
  row.family = config.family;
  row.theta_model = config.theta_model.name();
  row.margins = config.margins;
  row.trunc = config.trunc < 0 ? d - 1 : config.trunc;
  row.d = d;
  row.n = n;
  row.rep = rep;
  row.seed = rep_seed(config.seed, d, n, rep);
  try {
    const VineModel truth = VineModel::from_theta_model(build_structure(config.structure, d, config.trunc),
                                                        config.family, config.theta_model);
    SampleMatrix U = simulate(truth, static_cast<std::size_t>(n), row.seed);
    if (config.margins == MarginsMode::Empirical) {
      // Standard-normal margins, then estimated back by ranks.
      SampleMatrix X(U.rows(), U.cols());
      for (std::size_t j = 0; j < U.cols(); ++j)
        for (std::size_t i = 0; i < U.rows(); ++i) X(i, j) = norm_quantile(U(i, j));
      U = pseudo_obs(X);
    }
    const FitResult fit = stepwise_fit(truth.structure(), truth.families(), U, config.margins);
    const std::vector<double> star = truth.theta();
    std::vector<double> err;
    for (int j : statistic_indices(truth)) err.push_back(fit.theta_hat[j] - star[j]);
    row.maxnorm_stat = maxnorm_stat(err, n, d);
    row.sum_stat = sum_stat(err, n, d);
    row.nonconverged = fit.nonconverged();
  } catch (const std::exception&) {
    row.maxnorm_stat = row.sum_stat = std::numeric_limits<double>::quiet_NaN();
    row.nonconverged = -1;
  }
  if (config.timing)
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::vector<StudyRow> run_study(const StudyConfig& config) {
  if (config.d_list.empty() || config.n_list.empty()) throw std::invalid_argument("study needs d and n values");
  const int reps = config.effective_replications();
  struct Cell {
    int d, n, rep;
  };
  std::vector<Cell> cells;
  for (int d : config.d_list)
    for (int n : config.n_list)
      for (int r = 0; r < reps; ++r) cells.push_back({d, n, r});
  std::vector<StudyRow> rows(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) { rows[i] = run_cell(config, cells[i].d, cells[i].n, cells[i].rep); });
  return rows;
}

std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::Linear: return "linear";
    case Regime::Quadratic: return "quadratic";
    case Regime::Cubic: return "cubic";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  if (name == "linear") return Regime::Linear;
  if (name == "quadratic") return Regime::Quadratic;
  if (name == "cubic") return Regime::Cubic;
  throw std::invalid_argument("unknown regime '" + std::string(name) + "'");
}

int regime_n(Regime r, int d, Family family) {
  if (d < 2) throw std::invalid_argument("regime_n: d must be at least 2");
  double n = 0.0;
  switch (r) {
    case Regime::Linear: n = 25.0 * d; break;
    case Regime::Quadratic: n = 0.125 * d * d; break;
    case Regime::Cubic:
      if (family == Family::StudentT) {
        n = 0.005 * std::pow(d, 3);
      } else {
        if (d <= 50) throw std::invalid_argument("cubic regime is defined only for d > 50");
        n = 0.003 * std::pow(d - 50.0, 3);
      }
      break;
  }
  return std::max(50, static_cast<int>(std::lround(n)));
}

double interp_error(const std::map<std::pair<int, int>, double>& table, int d, int n_target) {
  std::vector<std::pair<int, double>> pts;
  for (auto it = table.lower_bound({d, std::numeric_limits<int>::min()}); it != table.end() && it->first.first == d; ++it)
    pts.emplace_back(it->first.second, it->second);
  if (pts.size() < 2) throw std::invalid_argument("interp_error needs two n values at d = " + std::to_string(d));
  for (const auto& [n, e] : pts)
    if (n == n_target) return e;
  std::size_t i0, i1;
  if (n_target < pts.front().first) {
    i0 = 0, i1 = 1;
  } else if (n_target > pts.back().first) {
    i0 = pts.size() - 2, i1 = pts.size() - 1;
  } else {
    i1 = 1;
    while (pts[i1].first < n_target) ++i1;
    i0 = i1 - 1;
  }
  const double x0 = std::log(pts[i0].first), x1 = std::log(pts[i1].first);
  const double y0 = std::log(pts[i0].second), y1 = std::log(pts[i1].second);
  const double slope = (y1 - y0) / (x1 - x0);
  return std::exp(y0 + slope * (std::log(n_target) - x0));
}

std::map<std::pair<int, int>, double> mean_maxnorm_table(const std::vector<StudyRow>& rows) {
  std::map<std::pair<int, int>, std::pair<double, int>> acc;
  for (const StudyRow& r : rows) {
    if (r.nonconverged < 0 || !std::isfinite(r.maxnorm_stat)) continue;
    const double raw = r.maxnorm_stat / std::sqrt(r.n / std::log(static_cast<double>(r.d)));
    auto& a = acc[{r.d, r.n}];
    a.first += raw;
    a.second += 1;
  }
  std::map<std::pair<int, int>, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

}  // namespace vinestep
