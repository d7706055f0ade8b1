#include "vinestep/diffvine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vinestep/normal.hpp"
#include "vinestep/parallel.hpp"

namespace vinestep {

namespace {

double edge_rho(const PairCopula& c) { return c.family() == Family::Gaussian ? c.param(0) : 0.0; }

void require_gaussian(const VineModel& model, const char* what) {
  if (!model.all_gaussian()) throw std::invalid_argument(std::string(what) + " requires a Gaussian vine");
}

std::vector<double> to_normal(std::span<const double> u) {
  std::vector<double> x(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (!(u[j] >= 0.0 && u[j] <= 1.0)) throw DomainError("observation outside [0, 1]");
    x[j] = norm_quantile(clamp_unit(u[j]));
  }
  return x;
}

// Value of u_{a|D} or u_{b|D} feeding an edge of tree t, given the previous
// tree's h-outputs (first = a-given-b, second = b-given-a).
struct Outputs {
  std::vector<double> first, second;
};

}  // namespace

std::vector<double> phi_normal(const VineModel& model, std::span<const double> x) {
  require_gaussian(model, "phi_normal");
  const auto& s = model.structure();
  if (x.size() != static_cast<std::size_t>(s.d())) throw std::invalid_argument("phi_normal: row length");
  const double bound = normal_score_bound();
  std::vector<double> out(model.param_count(), 0.0);
  Outputs prev;
  for (int t = 1; t <= s.trunc(); ++t) {
    const auto& edges = s.tree(t);
    Outputs cur{std::vector<double>(edges.size()), std::vector<double>(edges.size())};
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Edge& e = edges[i];
      double xa, xb;
      if (t == 1) {
        xa = x[e.a], xb = x[e.b];
      } else {
        xa = e.side_a == HSide::FirstGivenSecond ? prev.first[e.parent_a] : prev.second[e.parent_a];
        xb = e.side_b == HSide::FirstGivenSecond ? prev.first[e.parent_b] : prev.second[e.parent_b];
      }
      const int flat = s.edge_offset(t) + static_cast<int>(i);
      const PairCopula& c = model.copula(flat);
      const double rho = edge_rho(c);
      if (c.family() == Family::Gaussian) out[model.param_offset(flat)] = gauss::score(rho, xa, xb);
      cur.first[i] = std::clamp(gauss::h(rho, xa, xb), -bound, bound);
      cur.second[i] = std::clamp(gauss::h(rho, xb, xa), -bound, bound);
    }
    prev = std::move(cur);
  }
  return out;
}

std::vector<PhiJacobianRow> grad_phi_analytic(const VineModel& model, std::span<const double> u) {
  require_gaussian(model, "grad_phi_analytic");
  const auto& s = model.structure();
  if (u.size() != static_cast<std::size_t>(s.d())) throw std::invalid_argument("grad_phi_analytic: row length");
  const std::vector<double> x = to_normal(u);
  const double bound = normal_score_bound();
  const int p = model.param_count();

  std::vector<PhiJacobianRow> rows(p);
  for (int j = 0; j < p; ++j) rows[j] = {j, std::vector<double>(p, 0.0)};

  // Normal-score pseudo-data of the previous tree with their gradients over
  // the parameters of all earlier trees (a prefix of theta).
  struct Node {
    double value;
    std::vector<double> grad;
  };
  std::vector<Node> prev_first, prev_second;
  for (int t = 1; t <= s.trunc(); ++t) {
    const auto& edges = s.tree(t);
    const int next_prefix = t < s.trunc() ? model.param_offset(s.edge_offset(t + 1)) : p;
    std::vector<Node> cur_first(edges.size()), cur_second(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Edge& e = edges[i];
      const int flat = s.edge_offset(t) + static_cast<int>(i);
      const PairCopula& c = model.copula(flat);
      static const std::vector<double> kEmpty;
      double xa, xb;
      const std::vector<double>* ga = &kEmpty;
      const std::vector<double>* gb = &kEmpty;
      if (t == 1) {
        xa = x[e.a], xb = x[e.b];
      } else {
        const Node& na = e.side_a == HSide::FirstGivenSecond ? prev_first[e.parent_a] : prev_second[e.parent_a];
        const Node& nb = e.side_b == HSide::FirstGivenSecond ? prev_first[e.parent_b] : prev_second[e.parent_b];
        xa = na.value, xb = nb.value, ga = &na.grad, gb = &nb.grad;
      }
      const double rho = edge_rho(c);
      const bool has_param = c.family() == Family::Gaussian;
      const int k = has_param ? model.param_offset(flat) : -1;
      const PairCopula g = PairCopula::gaussian(rho);
      const GaussianScorePartials pa = score_partials_gaussian(g, xa, xb);
      const GaussianScorePartials pb = score_partials_gaussian(g, xb, xa);  // roles swapped
      const double dh_dother = -rho / std::sqrt(1.0 - rho * rho);

      if (has_param) {
        auto& row = rows[k].entries;
        for (std::size_t q = 0; q < ga->size(); ++q) row[q] += pa.ds_dx1 * (*ga)[q];
        for (std::size_t q = 0; q < gb->size(); ++q) row[q] += pa.ds_dx2 * (*gb)[q];
        row[k] = pa.ds_drho;
      }
      if (t == s.trunc()) continue;

      auto propagate = [&](const GaussianScorePartials& pp, double own, const std::vector<double>& g_own,
                           const std::vector<double>& g_other) {
        Node n{own, std::vector<double>(next_prefix, 0.0)};
        if (std::abs(own) >= bound) {
          n.value = std::clamp(own, -bound, bound);
          return n;
        }
        for (std::size_t q = 0; q < g_own.size(); ++q) n.grad[q] += pp.dh_dx1 * g_own[q];
        for (std::size_t q = 0; q < g_other.size(); ++q) n.grad[q] += dh_dother * g_other[q];
        if (has_param) n.grad[k] = pp.dh_drho;
        return n;
      };
      cur_first[i] = propagate(pa, gauss::h(rho, xa, xb), *ga, *gb);
      cur_second[i] = propagate(pb, gauss::h(rho, xb, xa), *gb, *ga);
    }
    prev_first = std::move(cur_first);
    prev_second = std::move(cur_second);
  }
  return rows;
}

std::vector<PhiJacobianRow> grad_phi_fd(const VineModel& model, std::span<const double> u, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_phi_fd: step must be positive");
  const int p = model.param_count();
  const bool gaussian = model.all_gaussian();
  const std::vector<double> x = gaussian ? to_normal(u) : std::vector<double>{};
  auto eval = [&](const VineModel& m) { return gaussian ? phi_normal(m, x) : phi(m, u); };

  std::vector<PhiJacobianRow> rows(p);
  for (int j = 0; j < p; ++j) rows[j] = {j, std::vector<double>(p, 0.0)};
  const std::vector<double> theta = model.theta();
  for (int k = 0; k < p; ++k) {
    std::vector<double> up = theta, dn = theta;
    up[k] += step;
    dn[k] -= step;
    const auto fu = eval(model.with_theta(up));
    const auto fd = eval(model.with_theta(dn));
    for (int j = 0; j < p; ++j) rows[j].entries[k] = (fu[j] - fd[j]) / (2.0 * step);
  }
  return rows;
}

EmpiricalIJ empirical_IJ(const VineModel& model, std::size_t N, std::uint64_t seed, GradMethod method) {
  if (N < 100) throw std::invalid_argument("empirical_IJ needs at least 100 draws");
  if (method == GradMethod::Analytic) require_gaussian(model, "analytic empirical_IJ");
  const SampleMatrix U = simulate(model, N, seed);
  const int p = model.param_count();
  const bool gaussian = model.all_gaussian();

  // Fixed chunking keeps the floating-point summation order independent of
  // the thread count.
  constexpr std::size_t kChunks = 64;
  struct Partial {
    Eigen::VectorXd sum_phi;
    Eigen::MatrixXd sum_outer, sum_jac;
  };
  std::vector<Partial> parts(kChunks);
  parallel_for(kChunks, [&](std::size_t c) {
    Partial& part = parts[c];
    part.sum_phi = Eigen::VectorXd::Zero(p);
    part.sum_outer = Eigen::MatrixXd::Zero(p, p);
    part.sum_jac = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = c; i < N; i += kChunks) {
      const std::vector<double> row = U.row(i);
      const std::vector<double> f = gaussian ? phi_normal(model, to_normal(row)) : phi(model, row);
      const Eigen::Map<const Eigen::VectorXd> fv(f.data(), p);
      part.sum_phi += fv;
      part.sum_outer.noalias() += fv * fv.transpose();
      const auto jac = method == GradMethod::Analytic ? grad_phi_analytic(model, row) : grad_phi_fd(model, row);
      for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) part.sum_jac(j, k) += jac[j].entries[k];
    }
  });
  Eigen::VectorXd sum_phi = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(p, p), sum_jac = Eigen::MatrixXd::Zero(p, p);
  for (const Partial& part : parts) {
    sum_phi += part.sum_phi;
    sum_outer += part.sum_outer;
    sum_jac += part.sum_jac;
  }
  const double n = static_cast<double>(N);
  const Eigen::VectorXd mean = sum_phi / n;
  EmpiricalIJ out;
  out.I_hat = (sum_outer - n * mean * mean.transpose()) / (n - 1.0);
  out.J_hat = sum_jac / n;
  out.N = N;
  out.seed = seed;
  out.theta = model.theta();
  return out;
}

}  // namespace vinestep
