#include "vinestep/sweep.hpp"

#include <stdexcept>

#include "vinestep/kernels.hpp"
#include "vinestep/parallel.hpp"

namespace vinestep {

TreeSweep::TreeSweep(const RVineStructure& structure, const SampleMatrix& data, Scale scale)
    : structure_(&structure), scale_(scale), n_(data.rows()) {
  if (data.cols() != static_cast<std::size_t>(structure.d()))
    throw std::invalid_argument("sample has " + std::to_string(data.cols()) + " columns, vine has d = " +
                                std::to_string(structure.d()));
  for (const Edge& e : structure.tree(1)) {
    in_a_.push_back(data.col(e.a));
    in_b_.push_back(data.col(e.b));
  }
}

void TreeSweep::advance(std::span<const PairCopula> copulas) {
  if (done()) throw std::logic_error("TreeSweep advanced past the last tree");
  const auto& edges = structure_->tree(tree_);
  if (copulas.size() != edges.size()) throw std::invalid_argument("TreeSweep: copula count mismatch");
  if (tree_ == structure_->trunc()) {
    ++tree_;
    in_a_.clear();
    in_b_.clear();
    return;
  }

  std::vector<std::vector<double>> first(edges.size(), std::vector<double>(n_));
  std::vector<std::vector<double>> second(edges.size(), std::vector<double>(n_));
  if (scale_ == Scale::Normal) {
    const double bound = normal_score_bound();
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const PairCopula& c = copulas[i];
      double rho = 0.0;
      if (c.family() == Family::Gaussian) rho = c.param(0);
      else if (c.family() != Family::Independence)
        throw std::invalid_argument("normal-score sweep requires Gaussian or independence edges");
      kernels::gauss_h(in_a_[i], in_b_[i], rho, bound, first[i]);
      kernels::gauss_h(in_b_[i], in_a_[i], rho, bound, second[i]);
    }
  } else {
    parallel_for(edges.size(), [&](std::size_t i) {
      const PairCopula& c = copulas[i];
      const auto a = in_a_[i];
      const auto b = in_b_[i];
      for (std::size_t k = 0; k < n_; ++k) {
        first[i][k] = hfunc(c, a[k], b[k], HSide::FirstGivenSecond);
        second[i][k] = hfunc(c, a[k], b[k], HSide::SecondGivenFirst);
      }
    });
  }

  ++tree_;
  const auto& next = structure_->tree(tree_);
  std::vector<std::span<const double>> na, nb;
  for (const Edge& e : next) {
    na.push_back(e.side_a == HSide::FirstGivenSecond ? first[e.parent_a] : second[e.parent_a]);
    nb.push_back(e.side_b == HSide::FirstGivenSecond ? first[e.parent_b] : second[e.parent_b]);
  }
  // Spans point into the vectors' heap buffers, which survive the move.
  out_first_ = std::move(first);
  out_second_ = std::move(second);
  in_a_ = std::move(na);
  in_b_ = std::move(nb);
}

}  // namespace vinestep
