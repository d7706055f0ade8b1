#include "vinestep/estimate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

#include "vinestep/kernels.hpp"
#include "vinestep/normal.hpp"
#include "vinestep/parallel.hpp"
#include "vinestep/sweep.hpp"

namespace vinestep {

std::string_view margins_name(MarginsMode m) { return m == MarginsMode::Known ? "known" : "empirical"; }

MarginsMode parse_margins(std::string_view name) {
  if (name == "known") return MarginsMode::Known;
  if (name == "empirical" || name == "pseudo") return MarginsMode::Empirical;
  throw std::invalid_argument("unknown margins mode '" + std::string(name) + "'");
}

SampleMatrix pseudo_obs(const SampleMatrix& X) {
  const std::size_t n = X.rows();
  if (n < 2) throw std::invalid_argument("pseudo_obs needs at least two rows");
  SampleMatrix U(n, X.cols());
  parallel_for(X.cols(), [&](std::size_t j) {
    const auto x = X.col(j);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    auto out = U.col(j);
    for (std::size_t i = 0; i < n;) {
      std::size_t k = i;
      while (k + 1 < n && x[idx[k + 1]] == x[idx[i]]) ++k;
      const double rank = 0.5 * static_cast<double>(i + k) + 1.0;  // average of ranks i+1..k+1
      for (std::size_t r = i; r <= k; ++r) out[idx[r]] = rank / static_cast<double>(n + 1);
      i = k + 1;
    }
  });
  return U;
}

int FitResult::nonconverged() const {
  return static_cast<int>(std::count_if(diagnostics.begin(), diagnostics.end(),
                                        [](const EdgeDiagnostics& d) { return !d.converged; }));
}

namespace {

constexpr double kShrink = 1e-6;
constexpr int kBrentBits = 31;  // absolute tolerance floor ~2.3e-10, relative ~9.3e-10
constexpr std::uintmax_t kBrentMaxIter = 200;
constexpr int kNelderMeadMaxIter = 500;

struct ScalarFit {
  double x;
  int iterations;
  bool converged;
};

// Maximizes f on [lo, hi].
template <class F>
ScalarFit maximize_scalar(F&& f, double lo, double hi) {
  std::uintmax_t iters = kBrentMaxIter;
  const auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, lo, hi,
                                                       kBrentBits, iters);
  return {r.first, static_cast<int>(iters), iters < kBrentMaxIter};
}

bool near_bounds(double x, double lo, double hi) {
  return x - lo < kShrink || hi - x < kShrink;
}

EdgeFit fit_gaussian_moments(double n, const kernels::CrossMoments& m) {
  const double lo = -1.0 + kShrink, hi = 1.0 - kShrink;
  const ScalarFit r = maximize_scalar(
      [&](double rho) { return gauss::loglik_moments(rho, n, m.s11, m.s22, m.s12); }, lo, hi);
  EdgeFit out{PairCopula::gaussian(r.x), {}};
  out.diag.iterations = r.iterations;
  out.diag.converged = r.converged;
  out.diag.at_boundary = near_bounds(r.x, lo, hi);
  out.diag.gradient = {gauss::score_moments(r.x, n, m.s11, m.s22, m.s12) / n};
  return out;
}

// Gumbel log-likelihood with the per-observation logarithms precomputed for
// both rotation branches.
class GumbelObjective {
 public:
  GumbelObjective(std::span<const double> u, std::span<const double> v) {
    const std::size_t n = u.size();
    xu_.resize(n), lxu_.resize(n), xr_.resize(n), lxr_.resize(n), y_.resize(n), ly_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = clamp_unit(u[i]);
      const double b = clamp_unit(v[i]);
      xu_[i] = -std::log(a);
      lxu_[i] = std::log(xu_[i]);
      xr_[i] = -std::log1p(-a);
      lxr_[i] = std::log(xr_[i]);
      y_[i] = -std::log(b);
      ly_[i] = std::log(y_[i]);
    }
  }

  double operator()(double theta) const {
    const bool rot = theta < 0.0;
    const double delta = 1.0 + std::abs(theta);
    const auto& x = rot ? xr_ : xu_;
    const auto& lx = rot ? lxr_ : lxu_;
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = delta * lx[i];
      const double q = delta * ly_[i];
      const double hi = std::max(p, q);
      const double log_a = (hi + std::log1p(std::exp(std::min(p, q) - hi))) / delta;
      const double a = std::exp(log_a);
      acc += -a + (delta - 1.0) * (lx[i] + ly_[i]) + x[i] + y_[i] + (1.0 - 2.0 * delta) * log_a +
             std::log(a + delta - 1.0);
    }
    return acc;
  }

 private:
  std::vector<double> xu_, lxu_, xr_, lxr_, y_, ly_;
};

std::vector<double> mean_score(const PairCopula& c, std::span<const double> u, std::span<const double> v) {
  std::vector<double> g(c.arity(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto s = score(c, u[i], v[i]);
    for (int r = 0; r < c.arity(); ++r) g[r] += s[r];
  }
  for (double& x : g) x /= static_cast<double>(u.size());
  return g;
}

struct SimplexResult {
  std::array<double, 2> x;
  int iterations;
  bool converged;
};

// Nelder-Mead minimization in two dimensions.
template <class F>
SimplexResult nelder_mead(F&& f, std::array<double, 2> start, std::array<double, 2> step) {
  using P = std::array<double, 2>;
  std::array<P, 3> s{start, start, start};
  s[1][0] += step[0];
  s[2][1] += step[1];
  std::array<double, 3> fv{f(s[0]), f(s[1]), f(s[2])};
  auto comb = [](const P& a, const P& b, double t) { return P{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}; };
  for (int it = 0; it < kNelderMeadMaxIter; ++it) {
    std::array<int, 3> o{0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const P best = s[o[0]], mid = s[o[1]], worst = s[o[2]];
    const double fb = fv[o[0]], fm = fv[o[1]], fw = fv[o[2]];
    const double spread = std::max({std::abs(mid[0] - best[0]), std::abs(worst[0] - best[0]),
                                    std::abs(mid[1] - best[1]), std::abs(worst[1] - best[1])});
    if (spread < 1e-9 && std::abs(fw - fb) <= 1e-10 * (1.0 + std::abs(fb)))
      return {best, it, true};
    const P c{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
    const P xr = comb(c, worst, -1.0);
    const double fr = f(xr);
    P next;
    double fn;
    if (fr < fb) {
      const P xe = comb(c, worst, -2.0);
      const double fe = f(xe);
      if (fe < fr) next = xe, fn = fe;
      else next = xr, fn = fr;
    } else if (fr < fm) {
      next = xr, fn = fr;
    } else {
      const P xc = fr < fw ? comb(c, worst, -0.5) : comb(c, worst, 0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fw)) {
        next = xc, fn = fc;
      } else {
        s[o[1]] = comb(best, mid, 0.5);
        s[o[2]] = comb(best, worst, 0.5);
        fv[o[1]] = f(s[o[1]]);
        fv[o[2]] = f(s[o[2]]);
        continue;
      }
    }
    s[o[2]] = next;
    fv[o[2]] = fn;
  }
  const int b = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {s[b], kNelderMeadMaxIter, false};
}

EdgeFit fit_student(std::span<const double> u, std::span<const double> v) {
  const double rho_max = 1.0 - kShrink;
  const double lnu_lo = std::log(kShrink), lnu_hi = std::log(kNuMax - kNuMin);
  auto to_params = [&](const std::array<double, 2>& z) {
    return std::array<double, 2>{std::clamp(z[0], -rho_max, rho_max),
                                 kNuMin + std::exp(std::clamp(z[1], lnu_lo, lnu_hi))};
  };
  auto objective = [&](const std::array<double, 2>& z) {
    const auto p = to_params(z);
    // Quadratic penalty keeps the simplex near the box without flat plateaus.
    const double pen = std::pow(z[0] - p[0], 2) + std::pow(z[1] - std::clamp(z[1], lnu_lo, lnu_hi), 2);
    const PairCopula c(Family::StudentT, std::span<const double>(p));
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += log_density(c, u[i], v[i]);
    return -acc + 1e3 * static_cast<double>(u.size()) * pen;
  };
  SimplexResult r = nelder_mead(objective, {0.0, std::log(2.0)}, {0.1, 0.5});
  int iters = r.iterations;
  if (!r.converged) {
    // Restart from the correlation of the normal scores.
    double s11 = 0, s22 = 0, s12 = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double a = norm_quantile(clamp_unit(u[i])), b = norm_quantile(clamp_unit(v[i]));
      s11 += a * a, s22 += b * b, s12 += a * b;
    }
    const double r0 = std::clamp(s12 / std::sqrt(s11 * s22), -0.95, 0.95);
    r = nelder_mead(objective, {r0, std::log(2.0)}, {0.05, 0.5});
    iters += r.iterations;
  }
  const auto p = to_params(r.x);
  EdgeFit out{PairCopula::student(p[0], p[1]), {}};
  out.diag.iterations = iters;
  out.diag.converged = r.converged;
  out.diag.at_boundary = std::abs(p[0]) > rho_max - kShrink || r.x[1] <= lnu_lo + kShrink ||
                         r.x[1] >= lnu_hi - kShrink;
  out.diag.gradient = mean_score(out.copula, u, v);
  return out;
}

}  // namespace

EdgeFit fit_edge(Family family, std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("fit_edge: u and v differ in length");
  if (u.size() < 10) throw std::invalid_argument("fit_edge needs at least 10 pairs");
  switch (family) {
    case Family::Independence: return {};
    case Family::Gaussian: {
      std::vector<double> x(u.size()), y(v.size());
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(u[i] >= 0.0 && u[i] <= 1.0 && v[i] >= 0.0 && v[i] <= 1.0))
          throw DomainError("fit_edge: observation outside [0, 1]");
        x[i] = norm_quantile(clamp_unit(u[i]));
        y[i] = norm_quantile(clamp_unit(v[i]));
      }
      return fit_gaussian_moments(static_cast<double>(u.size()), kernels::cross_moments(x, y));
    }
    case Family::GumbelSigned: {
      for (std::size_t i = 0; i < u.size(); ++i)
        if (!(u[i] >= 0.0 && u[i] <= 1.0 && v[i] >= 0.0 && v[i] <= 1.0))
          throw DomainError("fit_edge: observation outside [0, 1]");
      const GumbelObjective obj(u, v);
      const double lo = -kGumbelThetaMax + kShrink, hi = kGumbelThetaMax - kShrink;
      const ScalarFit r = maximize_scalar(obj, lo, hi);
      EdgeFit out{PairCopula::gumbel(r.x), {}};
      out.diag.iterations = r.iterations;
      out.diag.converged = r.converged;
      out.diag.at_boundary = near_bounds(r.x, lo, hi);
      out.diag.gradient = mean_score(out.copula, u, v);
      return out;
    }
    case Family::StudentT: return fit_student(u, v);
  }
  return {};
}

FitResult stepwise_fit(const RVineStructure& structure, std::span<const Family> families,
                       const SampleMatrix& U, MarginsMode margins) {
  if (static_cast<int>(families.size()) != structure.edge_count())
    throw std::invalid_argument("stepwise_fit: family count mismatch");
  if (U.rows() < 10) throw std::invalid_argument("stepwise_fit needs at least 10 observations");
  const bool gaussian = std::all_of(families.begin(), families.end(), [](Family f) {
    return f == Family::Gaussian || f == Family::Independence;
  });
  const double n = static_cast<double>(U.rows());

  std::vector<PairCopula> copulas(structure.edge_count());
  std::vector<EdgeDiagnostics> diags(structure.edge_count());
  SampleMatrix X;
  if (gaussian) X = normal_scores(U);
  TreeSweep sweep(structure, gaussian ? X : U, gaussian ? TreeSweep::Scale::Normal : TreeSweep::Scale::Unit);
  while (!sweep.done()) {
    const int t = sweep.tree();
    const int off = structure.edge_offset(t);
    parallel_for(structure.tree(t).size(), [&](std::size_t i) {
      const int e = off + static_cast<int>(i);
      EdgeFit fit;
      if (families[e] == Family::Independence) {
        fit = EdgeFit{};
      } else if (gaussian) {
        fit = fit_gaussian_moments(n, kernels::cross_moments(sweep.in_a(i), sweep.in_b(i)));
      } else {
        fit = fit_edge(families[e], sweep.in_a(i), sweep.in_b(i));
      }
      copulas[e] = fit.copula;
      diags[e] = std::move(fit.diag);
    });
    sweep.advance(std::span<const PairCopula>(copulas).subspan(off, structure.tree(t).size()));
  }
  VineModel model(structure, std::move(copulas));
  std::vector<double> theta = model.theta();
  return FitResult{std::move(model), std::move(theta), std::move(diags), margins};
}

FitResult stepwise_fit(const RVineStructure& structure, Family family, const SampleMatrix& U,
                       MarginsMode margins) {
  std::vector<Family> fams(structure.edge_count(), family);
  return stepwise_fit(structure, fams, U, margins);
}

}  // namespace vinestep
