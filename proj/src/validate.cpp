#include "vinestep/validate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vinestep/diffvine.hpp"
#include "vinestep/parallel.hpp"
#include "vinestep/rng.hpp"

namespace vinestep {

AlphaSeq AlphaSeq::custom(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("custom alpha table is empty");
  for (double v : values)
    if (!(v > 0.0)) throw std::invalid_argument("alpha values must be positive");
  return AlphaSeq(Rule::Custom, std::move(values));
}

AlphaSeq AlphaSeq::partial_sum_power(double power, int trees) {
  std::vector<double> v(std::max(trees, 1));
  double acc = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = acc += std::pow(static_cast<double>(t + 1), -power);
  return custom(std::move(v));
}

AlphaSeq AlphaSeq::parse(std::string_view name, int trees) {
  if (name == "constant" || name == "constant-1" || name == "one") return constant();
  if (name == "linear" || name == "linear-in-tree") return linear();
  if (name == "psum" || name == "partial-sum") return partial_sum_power(1.1, trees);
  throw std::invalid_argument("unknown alpha rule '" + std::string(name) + "'");
}

std::string AlphaSeq::name() const {
  switch (rule_) {
    case Rule::Constant: return "constant";
    case Rule::Linear: return "linear";
    case Rule::Custom: return "custom";
  }
  return "?";
}

double AlphaSeq::operator()(int tree) const {
  switch (rule_) {
    case Rule::Constant: return scale_;
    case Rule::Linear: return scale_ * tree;
    case Rule::Custom:
      return scale_ * values_[std::min<std::size_t>(static_cast<std::size_t>(tree - 1), values_.size() - 1)];
  }
  return scale_;
}

AlphaSeq AlphaSeq::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("alpha scale must be positive");
  AlphaSeq a = *this;
  a.scale_ *= c;
  return a;
}

std::vector<std::vector<double>> sample_deltas(const VineModel& model, double eps, const AlphaSeq& alpha,
                                               int K, std::uint64_t seed) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  const int p = model.param_count();
  std::vector<double> mag(p);
  for (int j = 0; j < p; ++j) mag[j] = eps * alpha(model.tree_of_param(j));
  Rng rng(seed);
  std::vector<std::vector<double>> out(K, std::vector<double>(p));
  for (auto& delta : out)
    for (int j = 0; j < p; ++j) delta[j] = rng.sign() * mag[j];
  return out;
}

std::size_t default_n_a3(int d) { return static_cast<std::size_t>(std::ceil(2000.0 * std::log(d))); }
std::size_t default_n_mn(int d) { return static_cast<std::size_t>(std::ceil(200.0 * std::log(d))); }

namespace {

std::vector<double> shifted(const std::vector<double>& theta, const std::vector<double>& delta) {
  std::vector<double> t = theta;
  for (std::size_t j = 0; j < t.size(); ++j) t[j] += delta[j];
  return t;
}

}  // namespace

double estimate_a3(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                   std::uint64_t seed) {
  if (N == 0) N = default_n_a3(model.structure().d());
  const SampleMatrix U = simulate(model, N, derive_seed(seed, {1}));
  const auto deltas = sample_deltas(model, eps, alpha, K, derive_seed(seed, {2}));
  const std::vector<double> base = phi_mean(model, U);
  const std::vector<double> theta = model.theta();
  double best = -INFINITY;
  for (const auto& delta : deltas) {
    const std::vector<double> moved = phi_mean(model.with_theta(shifted(theta, delta)), U);
    for (std::size_t j = 0; j < moved.size(); ++j) best = std::max(best, (moved[j] - base[j]) / delta[j]);
  }
  return best;
}

double quantile_type7(std::vector<double> x, double level) {
  if (x.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  if (level <= 0.0) return x.front();
  if (level >= 1.0) return x.back();
  const double h = (static_cast<double>(x.size()) - 1.0) * level;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

namespace {

MnDn mndn_impl(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
               std::uint64_t seed, double level) {
  if (!model.all_gaussian()) throw std::invalid_argument("M_n / D_n estimation requires a Gaussian vine");
  if (N == 0) N = default_n_mn(model.structure().d());
  const int p = model.param_count();
  const SampleMatrix U = simulate(model, N, derive_seed(seed, {1}));
  const auto deltas = sample_deltas(model, eps, alpha, K, derive_seed(seed, {2}));
  const std::vector<double> theta = model.theta();
  std::vector<double> a(p);
  for (int j = 0; j < p; ++j) a[j] = alpha(model.tree_of_param(j));

  MnDn out{-INFINITY, -INFINITY};
  for (const auto& delta : deltas) {
    const VineModel moved = model.with_theta(shifted(theta, delta));
    // sums[j][i]: weighted absolute row sum of the Jacobian at observation i.
    std::vector<std::vector<double>> sums(p, std::vector<double>(N));
    parallel_for(N, [&](std::size_t i) {
      const auto rows = grad_phi_analytic(moved, U.row(i));
      for (int j = 0; j < p; ++j) {
        double acc = 0.0;
        for (int k = 0; k <= j; ++k) acc += std::abs(a[k] / a[j] * rows[j].entries[k]);
        sums[j][i] = acc;
      }
    });
    for (int j = 0; j < p; ++j) {
      double sq = 0.0;
      for (double v : sums[j]) sq += v * v;
      out.mn2 = std::max(out.mn2, sq / static_cast<double>(N));
      out.dn = std::max(out.dn, quantile_type7(sums[j], level));
    }
  }
  return out;
}

double dn_level(const VineModel& model) {
  // For p^2 <= 15 the level is not a probability; use the sample maximum.
  const double p = model.param_count();
  return p * p <= 15.0 ? 1.0 : 1.0 - 15.0 / (p * p);
}

}  // namespace

MnDn estimate_mndn(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                   std::uint64_t seed) {
  return mndn_impl(model, eps, alpha, K, N, seed, dn_level(model));
}

double estimate_mn(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                   std::uint64_t seed) {
  return estimate_mndn(model, eps, alpha, K, N, seed).mn2;
}

double estimate_dn(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                   std::uint64_t seed) {
  return estimate_mndn(model, eps, alpha, K, N, seed).dn;
}

double estimate_dn_at(const VineModel& model, double eps, const AlphaSeq& alpha, int K, std::size_t N,
                      std::uint64_t seed, double level) {
  return mndn_impl(model, eps, alpha, K, N, seed, level).dn;
}

}  // namespace vinestep
