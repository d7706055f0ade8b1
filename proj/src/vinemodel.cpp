#include "vinestep/vinemodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vinestep/kernels.hpp"
#include "vinestep/normal.hpp"
#include "vinestep/parallel.hpp"
#include "vinestep/rng.hpp"
#include "vinestep/sweep.hpp"

namespace vinestep {

std::vector<double> SampleMatrix::row(std::size_t i) const {
  std::vector<double> r(d_);
  for (std::size_t j = 0; j < d_; ++j) r[j] = (*this)(i, j);
  return r;
}

// ---------------------------------------------------------------------------
// ThetaModelSpec

double ThetaModelSpec::default_scale(Kind kind) { return kind == Kind::SqrtSlow ? 0.5 : 1.0; }

double ThetaModelSpec::value(int tree) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Geometric: return scale * std::pow(0.5, tree);
    case Kind::Harmonic: return scale / (tree + 1.0);
    case Kind::SqrtSlow: return scale / std::sqrt(tree + 1.0);
  }
  return 0.0;
}

ThetaModelSpec ThetaModelSpec::parse(std::string_view name) {
  ThetaModelSpec s;
  if (name == "zero") s.kind = Kind::Zero;
  else if (name == "geometric") s.kind = Kind::Geometric;
  else if (name == "harmonic") s.kind = Kind::Harmonic;
  else if (name == "sqrt-slow" || name == "sqrtslow" || name == "sqrt_slow") s.kind = Kind::SqrtSlow;
  else throw std::invalid_argument("unknown theta model '" + std::string(name) + "'");
  s.scale = default_scale(s.kind);
  return s;
}

std::string ThetaModelSpec::name() const {
  switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::Geometric: return "geometric";
    case Kind::Harmonic: return "harmonic";
    case Kind::SqrtSlow: return "sqrt-slow";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// VineModel

VineModel::VineModel(RVineStructure structure, std::vector<PairCopula> copulas)
    : structure_(std::move(structure)), copulas_(std::move(copulas)) {
  if (static_cast<int>(copulas_.size()) != structure_.edge_count())
    throw std::invalid_argument("VineModel: " + std::to_string(copulas_.size()) + " copulas for " +
                                std::to_string(structure_.edge_count()) + " edges");
  param_offset_.assign(copulas_.size() + 1, 0);
  for (std::size_t e = 0; e < copulas_.size(); ++e)
    param_offset_[e + 1] = param_offset_[e] + copulas_[e].arity();
}

VineModel VineModel::independence(RVineStructure structure) {
  const int m = structure.edge_count();
  return VineModel(std::move(structure), std::vector<PairCopula>(m));
}

VineModel VineModel::from_theta(RVineStructure structure, Family family, std::span<const double> theta) {
  std::vector<Family> fams(structure.edge_count(), family);
  return from_theta(std::move(structure), fams, theta);
}

VineModel VineModel::from_theta(RVineStructure structure, std::span<const Family> families,
                                std::span<const double> theta) {
  if (static_cast<int>(families.size()) != structure.edge_count())
    throw std::invalid_argument("VineModel::from_theta: family count mismatch");
  std::vector<PairCopula> cops;
  cops.reserve(families.size());
  std::size_t k = 0;
  for (Family f : families) {
    const std::size_t a = family_arity(f);
    if (k + a > theta.size()) throw std::invalid_argument("VineModel::from_theta: theta too short");
    cops.emplace_back(f, theta.subspan(k, a));
    k += a;
  }
  if (k != theta.size()) throw std::invalid_argument("VineModel::from_theta: theta too long");
  return VineModel(std::move(structure), std::move(cops));
}

VineModel VineModel::from_theta_model(RVineStructure structure, Family family, const ThetaModelSpec& spec) {
  std::vector<PairCopula> cops;
  cops.reserve(structure.edge_count());
  for (int t = 1; t <= structure.trunc(); ++t) {
    const double v = spec.value(t);
    for (std::size_t i = 0; i < structure.tree(t).size(); ++i) {
      switch (family) {
        case Family::Independence: cops.emplace_back(); break;
        case Family::Gaussian: cops.push_back(PairCopula::gaussian(v)); break;
        case Family::GumbelSigned: cops.push_back(PairCopula::gumbel(v)); break;
        case Family::StudentT: cops.push_back(PairCopula::student(v, kStudentNuTrue)); break;
      }
    }
  }
  return VineModel(std::move(structure), std::move(cops));
}

std::vector<Family> VineModel::families() const {
  std::vector<Family> f;
  f.reserve(copulas_.size());
  for (const auto& c : copulas_) f.push_back(c.family());
  return f;
}

int VineModel::edge_of_param(int j) const {
  if (j < 0 || j >= param_count()) throw std::out_of_range("parameter index out of range");
  auto it = std::upper_bound(param_offset_.begin(), param_offset_.end(), j);
  return static_cast<int>(it - param_offset_.begin()) - 1;
}

int VineModel::tree_of_param(int j) const { return structure_.tree_of_edge(edge_of_param(j)); }

std::vector<double> VineModel::theta() const {
  std::vector<double> th;
  th.reserve(param_count());
  for (const auto& c : copulas_)
    for (double p : c.params()) th.push_back(p);
  return th;
}

VineModel VineModel::with_theta(std::span<const double> theta) const {
  const auto fams = families();
  return from_theta(structure_, fams, theta);
}

bool VineModel::all_gaussian() const {
  return std::all_of(copulas_.begin(), copulas_.end(), [](const PairCopula& c) {
    return c.family() == Family::Gaussian || c.family() == Family::Independence;
  });
}

// ---------------------------------------------------------------------------
// Sample-level operations

double normal_score_bound() {
  static const double bound = -norm_quantile(kUnitClamp);
  return bound;
}

SampleMatrix normal_scores(const SampleMatrix& U) {
  SampleMatrix X(U.rows(), U.cols());
  parallel_for(U.cols(), [&](std::size_t j) {
    const auto in = U.col(j);
    auto out = X.col(j);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const double u = in[i];
      if (!(u >= 0.0 && u <= 1.0)) throw DomainError("sample entry outside [0, 1]");
      out[i] = norm_quantile(clamp_unit(u));
    }
  });
  return X;
}

namespace {

std::span<const PairCopula> tree_copulas(const VineModel& m, int t) {
  const auto& s = m.structure();
  return std::span<const PairCopula>(m.copulas()).subspan(s.edge_offset(t), s.tree(t).size());
}

}  // namespace

PseudoDataCache pseudo_data(const VineModel& model, const SampleMatrix& U) {
  const auto& s = model.structure();
  PseudoDataCache cache(U.rows(), s.edge_count());
  TreeSweep sweep(s, U, TreeSweep::Scale::Unit);
  while (!sweep.done()) {
    const int t = sweep.tree();
    for (std::size_t i = 0; i < s.tree(t).size(); ++i) {
      const int e = s.edge_offset(t) + static_cast<int>(i);
      std::copy(sweep.in_a(i).begin(), sweep.in_a(i).end(), cache.first(e).begin());
      std::copy(sweep.in_b(i).begin(), sweep.in_b(i).end(), cache.second(e).begin());
    }
    sweep.advance(tree_copulas(model, t));
  }
  return cache;
}

double loglik(const VineModel& model, const SampleMatrix& U) {
  const auto& s = model.structure();
  std::vector<double> per_edge(s.edge_count(), 0.0);
  TreeSweep sweep(s, U, TreeSweep::Scale::Unit);
  while (!sweep.done()) {
    const int t = sweep.tree();
    const int off = s.edge_offset(t);
    parallel_for(s.tree(t).size(), [&](std::size_t i) {
      const PairCopula& c = model.copula(off + static_cast<int>(i));
      if (c.family() == Family::Independence) return;
      const auto a = sweep.in_a(i);
      const auto b = sweep.in_b(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) acc += log_density(c, a[k], b[k]);
      per_edge[off + i] = acc;
    });
    sweep.advance(tree_copulas(model, t));
  }
  double total = 0.0;
  for (double v : per_edge) total += v;
  return total;
}

std::vector<double> phi(const VineModel& model, std::span<const double> u) {
  SampleMatrix U(1, u.size());
  for (std::size_t j = 0; j < u.size(); ++j) U(0, j) = u[j];
  const auto& s = model.structure();
  std::vector<double> out(model.param_count(), 0.0);
  TreeSweep sweep(s, U, TreeSweep::Scale::Unit);
  while (!sweep.done()) {
    const int t = sweep.tree();
    for (std::size_t i = 0; i < s.tree(t).size(); ++i) {
      const int e = s.edge_offset(t) + static_cast<int>(i);
      const auto sc = score(model.copula(e), sweep.in_a(i)[0], sweep.in_b(i)[0]);
      std::copy(sc.begin(), sc.end(), out.begin() + model.param_offset(e));
    }
    sweep.advance(tree_copulas(model, t));
  }
  return out;
}

std::vector<double> phi_mean(const VineModel& model, const SampleMatrix& U) {
  const auto& s = model.structure();
  const double n = static_cast<double>(U.rows());
  std::vector<double> out(model.param_count(), 0.0);
  if (model.all_gaussian()) {
    const SampleMatrix X = normal_scores(U);
    TreeSweep sweep(s, X, TreeSweep::Scale::Normal);
    while (!sweep.done()) {
      const int t = sweep.tree();
      for (std::size_t i = 0; i < s.tree(t).size(); ++i) {
        const int e = s.edge_offset(t) + static_cast<int>(i);
        const PairCopula& c = model.copula(e);
        if (c.family() != Family::Gaussian) continue;
        const auto m = kernels::cross_moments(sweep.in_a(i), sweep.in_b(i));
        out[model.param_offset(e)] = gauss::score_moments(c.param(0), n, m.s11, m.s22, m.s12) / n;
      }
      sweep.advance(tree_copulas(model, t));
    }
    return out;
  }
  TreeSweep sweep(s, U, TreeSweep::Scale::Unit);
  while (!sweep.done()) {
    const int t = sweep.tree();
    const int off = s.edge_offset(t);
    parallel_for(s.tree(t).size(), [&](std::size_t i) {
      const int e = off + static_cast<int>(i);
      const PairCopula& c = model.copula(e);
      const int ar = c.arity();
      if (ar == 0) return;
      const auto a = sweep.in_a(i);
      const auto b = sweep.in_b(i);
      std::vector<double> acc(ar, 0.0);
      for (std::size_t k = 0; k < a.size(); ++k) {
        const auto sc = score(c, a[k], b[k]);
        for (int r = 0; r < ar; ++r) acc[r] += sc[r];
      }
      for (int r = 0; r < ar; ++r) out[model.param_offset(e) + r] = acc[r] / n;
    });
    sweep.advance(tree_copulas(model, t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

// Per-row evaluation state for the inverse Rosenblatt transform. Edge inputs
// are computed lazily from the parent links and memoized; on the normal-score
// scale (all-Gaussian models) every h-function and inverse is linear.
class RowSampler {
 public:
  RowSampler(const VineModel& model, bool normal)
      : model_(model), s_(model.structure()), normal_(normal), bound_(normal_score_bound()) {
    const int m = s_.edge_count();
    value_.assign(2 * m, 0.0);
    known_.assign(2 * m, 0);
    var_.assign(s_.d(), 0.0);
  }

  void reset() { std::fill(known_.begin(), known_.end(), 0); }

  void set_var(int j, double v) { var_[j] = v; }
  double var(int j) const { return var_[j]; }

  void set_input(int flat, bool side_a, double v) {
    const int k = 2 * flat + (side_a ? 0 : 1);
    value_[k] = v;
    known_[k] = 1;
  }

  // u_{a|D} (side_a) or u_{b|D} of a flat edge.
  double input(int tree, int i, bool side_a) {
    const int flat = s_.edge_offset(tree) + i;
    const int k = 2 * flat + (side_a ? 0 : 1);
    if (known_[k]) return value_[k];
    const Edge& e = s_.edge(tree, i);
    double v;
    if (tree == 1) {
      v = var_[side_a ? e.a : e.b];
    } else {
      const int parent = side_a ? e.parent_a : e.parent_b;
      const HSide side = side_a ? e.side_a : e.side_b;
      const double pa = input(tree - 1, parent, true);
      const double pb = input(tree - 1, parent, false);
      v = h(s_.edge_offset(tree - 1) + parent, pa, pb, side);
    }
    value_[k] = v;
    known_[k] = 1;
    return v;
  }

  double h(int flat, double a, double b, HSide side) const {
    const PairCopula& c = model_.copula(flat);
    if (!normal_) return hfunc(c, a, b, side);
    const double rho = c.family() == Family::Gaussian ? c.param(0) : 0.0;
    const double r = side == HSide::FirstGivenSecond ? gauss::h(rho, a, b) : gauss::h(rho, b, a);
    return std::clamp(r, -bound_, bound_);
  }

  double inverse(int flat, double w, double cond, HSide side) const {
    const PairCopula& c = model_.copula(flat);
    if (!normal_) return hinv(c, w, cond, side);
    const double rho = c.family() == Family::Gaussian ? c.param(0) : 0.0;
    const double r = w * std::sqrt(1.0 - rho * rho) + rho * cond;
    return std::clamp(r, -bound_, bound_);
  }

 private:
  const VineModel& model_;
  const RVineStructure& s_;
  bool normal_;
  double bound_;
  std::vector<double> value_;
  std::vector<char> known_;
  std::vector<double> var_;
};

}  // namespace

SampleMatrix simulate(const VineModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("simulate: n must be at least 1");
  const auto& s = model.structure();
  const int d = s.d();
  const SamplingPlan plan = s.sampling_plan();
  const bool normal = model.all_gaussian();

  std::vector<double> W(n * d);
  Rng rng(seed);
  for (double& w : W) w = rng.uniform();

  SampleMatrix U(n, d);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(thread_count(), n));
  parallel_for(workers, [&](std::size_t w) {
    RowSampler rs(model, normal);
    for (std::size_t r = w; r < n; r += workers) {
      rs.reset();
      const double* wr = &W[r * d];
      for (int k = 0; k < d; ++k) {
        const int j = plan.order[k];
        double v = normal ? norm_quantile(wr[k]) : wr[k];
        const auto& chain = plan.chains[k];
        for (int t = static_cast<int>(chain.size()); t >= 1; --t) {
          const auto& link = chain[t - 1];
          const int flat = s.edge_offset(link.tree) + link.edge;
          const double cond = rs.input(link.tree, link.edge, !link.var_is_a);
          const HSide side = link.var_is_a ? HSide::FirstGivenSecond : HSide::SecondGivenFirst;
          v = rs.inverse(flat, v, cond, side);
          if (t > 1) rs.set_input(flat, link.var_is_a, v);
        }
        rs.set_var(j, v);
      }
      for (int j = 0; j < d; ++j) U(r, j) = normal ? clamp_unit(norm_cdf(rs.var(j))) : rs.var(j);
    }
  });
  return U;
}

// ---------------------------------------------------------------------------
// Implied correlation of Gaussian vines

Eigen::MatrixXd implied_corr(const VineModel& model) {
  if (!model.all_gaussian()) throw std::invalid_argument("implied_corr requires a Gaussian vine");
  const RVineStructure full = model.structure().trunc() == model.structure().d() - 1
                                  ? model.structure()
                                  : model.structure().completed();
  const int d = full.d();
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(d, d);
  for (int t = 1; t <= full.trunc(); ++t) {
    for (std::size_t i = 0; i < full.tree(t).size(); ++i) {
      const Edge& e = full.edge(t, static_cast<int>(i));
      double rho = 0.0;
      if (t <= model.structure().trunc()) {
        const PairCopula& c = model.copula(t, static_cast<int>(i));
        if (c.family() == Family::Gaussian) rho = c.param(0);
      }
      if (e.D.empty()) {
        S(e.a, e.b) = S(e.b, e.a) = rho;
        continue;
      }
      const int m = static_cast<int>(e.D.size());
      Eigen::MatrixXd SDD(m, m);
      Eigen::VectorXd SaD(m), SbD(m);
      for (int r = 0; r < m; ++r) {
        SaD(r) = S(e.a, e.D[r]);
        SbD(r) = S(e.b, e.D[r]);
        for (int q = 0; q < m; ++q) SDD(r, q) = S(e.D[r], e.D[q]);
      }
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(SDD);
      const Eigen::VectorXd xa = ldlt.solve(SaD);
      const Eigen::VectorXd xb = ldlt.solve(SbD);
      const double va = 1.0 - SaD.dot(xa);
      const double vb = 1.0 - SbD.dot(xb);
      const double v = rho * std::sqrt(va * vb) + SaD.dot(xb);
      S(e.a, e.b) = S(e.b, e.a) = v;
    }
  }
  return S;
}

}  // namespace vinestep
