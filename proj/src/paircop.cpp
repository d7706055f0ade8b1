#include "vinestep/paircop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vinestep/normal.hpp"

namespace vinestep {

int family_arity(Family f) {
  switch (f) {
    case Family::Independence: return 0;
    case Family::Gaussian: return 1;
    case Family::GumbelSigned: return 1;
    case Family::StudentT: return 2;
  }
  return 0;
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Independence: return "independence";
    case Family::Gaussian: return "gaussian";
    case Family::GumbelSigned: return "gumbel";
    case Family::StudentT: return "student";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "independence" || name == "indep") return Family::Independence;
  if (name == "gaussian" || name == "normal") return Family::Gaussian;
  if (name == "gumbel" || name == "gumbel-signed" || name == "gumbelsigned") return Family::GumbelSigned;
  if (name == "student" || name == "t" || name == "student-t") return Family::StudentT;
  throw std::invalid_argument("unknown copula family '" + std::string(name) + "'");
}

bool PairCopula::in_domain(Family family, std::span<const double> params) {
  if (params.size() != static_cast<std::size_t>(family_arity(family))) return false;
  for (double p : params)
    if (!std::isfinite(p)) return false;
  switch (family) {
    case Family::Independence: return true;
    case Family::Gaussian: return std::abs(params[0]) < 1.0;
    case Family::GumbelSigned: return std::abs(params[0]) <= kGumbelThetaMax;
    case Family::StudentT:
      return std::abs(params[0]) < 1.0 && params[1] > kNuMin && params[1] <= kNuMax;
  }
  return false;
}

PairCopula::PairCopula(Family family, std::span<const double> params) : family_(family) {
  if (!in_domain(family, params))
    throw DomainError("parameters outside the domain of the " + std::string(family_name(family)) +
                      " family");
  std::copy(params.begin(), params.end(), params_.begin());
}

namespace {

double check_unit(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("copula argument outside [0, 1]");
  return clamp_unit(u);
}

// ---- Gumbel (delta >= 1), arguments already clamped ----

struct GumbelTerms {
  double x, y, lx, ly, log_a, a;
};

GumbelTerms gumbel_terms(double delta, double u, double v) {
  GumbelTerms g;
  g.x = -std::log(u);
  g.y = -std::log(v);
  g.lx = std::log(g.x);
  g.ly = std::log(g.y);
  const double p = delta * g.lx;
  const double q = delta * g.ly;
  const double hi = std::max(p, q);
  const double lo = std::min(p, q);
  g.log_a = (hi + std::log1p(std::exp(lo - hi))) / delta;
  g.a = std::exp(g.log_a);
  return g;
}

double gumbel_log_density(double delta, double u, double v) {
  const GumbelTerms g = gumbel_terms(delta, u, v);
  return -g.a + (delta - 1.0) * (g.lx + g.ly) + g.x + g.y + (1.0 - 2.0 * delta) * g.log_a +
         std::log(g.a + delta - 1.0);
}

// dC(u, v)/dv for the unrotated Gumbel copula.
double gumbel_h_given_v(double delta, double u, double v) {
  const GumbelTerms g = gumbel_terms(delta, u, v);
  return std::exp(-g.a + (1.0 - delta) * g.log_a + (delta - 1.0) * g.ly + g.y);
}

// ---- Student's t ----

double student_log_density(double rho, double nu, double u, double v) {
  const double x1 = t_quantile(u, nu);
  const double x2 = t_quantile(v, nu);
  const double om = 1.0 - rho * rho;
  const double q = x1 * x1 + x2 * x2 - 2.0 * rho * x1 * x2;
  const double log_biv = std::lgamma(0.5 * (nu + 2.0)) - std::lgamma(0.5 * nu) -
                         std::log(nu * std::numbers::pi) - 0.5 * std::log(om) -
                         0.5 * (nu + 2.0) * std::log1p(q / (nu * om));
  return log_biv - t_log_pdf(x1, nu) - t_log_pdf(x2, nu);
}

double student_h(double rho, double nu, double u, double v) {
  const double x1 = t_quantile(u, nu);
  const double x2 = t_quantile(v, nu);
  const double scale = std::sqrt((nu + x2 * x2) * (1.0 - rho * rho) / (nu + 1.0));
  return t_cdf((x1 - rho * x2) / scale, nu + 1.0);
}

double student_hinv(double rho, double nu, double w, double v) {
  const double x2 = t_quantile(v, nu);
  const double scale = std::sqrt((nu + x2 * x2) * (1.0 - rho * rho) / (nu + 1.0));
  return t_cdf(t_quantile(w, nu + 1.0) * scale + rho * x2, nu);
}

// Unchecked evaluation for clamped arguments; used by the numeric score so
// that perturbed parameters may step slightly outside the declared domain.
double raw_log_density(Family f, const double* p, double u, double v) {
  switch (f) {
    case Family::Independence: return 0.0;
    case Family::Gaussian: return gauss::log_density(p[0], norm_quantile(u), norm_quantile(v));
    case Family::GumbelSigned:
      if (p[0] >= 0.0) return gumbel_log_density(1.0 + p[0], u, v);
      return gumbel_log_density(1.0 - p[0], 1.0 - u, v);
    case Family::StudentT: return student_log_density(p[0], p[1], u, v);
  }
  return 0.0;
}

// h(u | v), arguments clamped.
double raw_h_first(Family f, const double* p, double u, double v) {
  switch (f) {
    case Family::Independence: return u;
    case Family::Gaussian:
      return norm_cdf(gauss::h(p[0], norm_quantile(u), norm_quantile(v)));
    case Family::GumbelSigned:
      if (p[0] >= 0.0) return gumbel_h_given_v(1.0 + p[0], u, v);
      return 1.0 - gumbel_h_given_v(1.0 - p[0], 1.0 - u, v);
    case Family::StudentT: return student_h(p[0], p[1], u, v);
  }
  return u;
}

// h(v | u), arguments clamped.
double raw_h_second(Family f, const double* p, double u, double v) {
  switch (f) {
    case Family::Independence: return v;
    case Family::Gaussian:
      return norm_cdf(gauss::h(p[0], norm_quantile(v), norm_quantile(u)));
    case Family::GumbelSigned:
      // Gumbel is exchangeable: dC(u, v)/du = h(v | u) with roles swapped.
      if (p[0] >= 0.0) return gumbel_h_given_v(1.0 + p[0], v, u);
      return gumbel_h_given_v(1.0 - p[0], v, 1.0 - u);
    case Family::StudentT: return student_h(p[0], p[1], v, u);
  }
  return v;
}

// Safeguarded Newton on [lo, hi] for an increasing h(x) - w with derivative
// given by the copula density.
template <class H, class Dens>
double solve_monotone(H&& h, Dens&& dens, double w) {
  double lo = kUnitClamp;
  double hi = 1.0 - kUnitClamp;
  if (h(lo) >= w) return lo;
  if (h(hi) <= w) return hi;
  double x = w;
  constexpr int kMaxIter = 200;
  for (int it = 0; it < kMaxIter; ++it) {
    const double f = h(x) - w;
    if (f == 0.0) return x;
    if (f < 0.0) lo = x; else hi = x;
    if (hi - lo < 1e-15) return 0.5 * (lo + hi);
    const double d = dens(x);
    double next = (d > 0.0 && std::isfinite(d)) ? x - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  throw ConvergenceError("h-function inversion did not converge");
}

}  // namespace

double log_density(const PairCopula& c, double u, double v) {
  u = check_unit(u);
  v = check_unit(v);
  return raw_log_density(c.family(), c.params().data(), u, v);
}

double density(const PairCopula& c, double u, double v) { return std::exp(log_density(c, u, v)); }

double hfunc(const PairCopula& c, double u, double v, HSide side) {
  u = check_unit(u);
  v = check_unit(v);
  const double* p = c.params().data();
  const double r = side == HSide::FirstGivenSecond ? raw_h_first(c.family(), p, u, v)
                                                   : raw_h_second(c.family(), p, u, v);
  return clamp_unit(r);
}

double hinv(const PairCopula& c, double w, double cond, HSide side) {
  w = check_unit(w);
  cond = check_unit(cond);
  const double* p = c.params().data();
  switch (c.family()) {
    case Family::Independence: return w;
    case Family::Gaussian: {
      const double rho = p[0];
      const double x = norm_quantile(w) * std::sqrt(1.0 - rho * rho) + rho * norm_quantile(cond);
      return clamp_unit(norm_cdf(x));
    }
    case Family::StudentT: return clamp_unit(student_hinv(p[0], p[1], w, cond));
    case Family::GumbelSigned: break;
  }
  const Family f = c.family();
  if (side == HSide::FirstGivenSecond) {
    return solve_monotone([&](double x) { return raw_h_first(f, p, x, cond); },
                          [&](double x) { return std::exp(raw_log_density(f, p, x, cond)); }, w);
  }
  return solve_monotone([&](double x) { return raw_h_second(f, p, cond, x); },
                        [&](double x) { return std::exp(raw_log_density(f, p, cond, x)); }, w);
}

std::vector<double> score(const PairCopula& c, double u, double v) {
  u = check_unit(u);
  v = check_unit(v);
  std::vector<double> out(c.arity());
  if (c.family() == Family::Gaussian) {
    out[0] = gauss::score(c.param(0), norm_quantile(u), norm_quantile(v));
    return out;
  }
  std::array<double, 2> p{};
  for (int i = 0; i < c.arity(); ++i) p[i] = c.param(i);
  for (int i = 0; i < c.arity(); ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(p[i]));
    std::array<double, 2> up = p, dn = p;
    up[i] += step;
    dn[i] -= step;
    out[i] = (raw_log_density(c.family(), up.data(), u, v) -
              raw_log_density(c.family(), dn.data(), u, v)) / (2.0 * step);
  }
  return out;
}

GaussianScorePartials score_partials_gaussian(const PairCopula& c, double x1, double x2) {
  if (c.family() != Family::Gaussian)
    throw std::invalid_argument("score_partials_gaussian requires a Gaussian pair copula");
  const double rho = c.param(0);
  const double r2 = rho * rho;
  const double om = 1.0 - r2;
  const double om2 = om * om;
  const double om3 = om2 * om;
  GaussianScorePartials out;
  out.ds_drho = (1.0 + r2) / om2 - (1.0 + 3.0 * r2) / om3 * (x1 * x1 + x2 * x2) +
                2.0 * (3.0 * rho + r2 * rho) / om3 * x1 * x2;
  out.ds_dx1 = ((1.0 + r2) * x2 - 2.0 * rho * x1) / om2;
  out.ds_dx2 = ((1.0 + r2) * x1 - 2.0 * rho * x2) / om2;
  out.dh_drho = (rho * x1 - x2) / (om * std::sqrt(om));
  out.dh_dx1 = 1.0 / std::sqrt(om);
  return out;
}

}  // namespace vinestep
