#pragma once

#include <span>
#include <vector>

#include "vinestep/vinemodel.hpp"

namespace vinestep {

/// Tree-by-tree evaluation of the h-function recursion over a whole sample.
///
/// At tree t the sweep exposes, for every edge of T_t, the columns
/// u_{a|D} and u_{b|D}. advance() takes the pair copulas of T_t, computes the
/// h-outputs that feed T_{t+1} and moves on. Only one tree of outputs is held
/// at a time.
///
/// Scale::Unit works on the copula scale with the generic pair-copula code.
/// Scale::Normal works on normal scores x = Phi^-1(u) and accepts only
/// Gaussian and independence edges; there the h-function is linear and runs
/// through the SIMD kernels.
class TreeSweep {
 public:
  enum class Scale { Unit, Normal };

  /// `data` must already be on the requested scale (U for Unit, normal
  /// scores for Normal).
  TreeSweep(const RVineStructure& structure, const SampleMatrix& data, Scale scale);

  int tree() const { return tree_; }
  bool done() const { return tree_ > structure_->trunc(); }
  Scale scale() const { return scale_; }
  std::size_t rows() const { return n_; }

  std::span<const double> in_a(int i) const { return in_a_.at(i); }
  std::span<const double> in_b(int i) const { return in_b_.at(i); }

  /// `copulas` holds the pair copulas of the current tree, in edge order.
  void advance(std::span<const PairCopula> copulas);

 private:
  const RVineStructure* structure_;
  Scale scale_;
  std::size_t n_;
  int tree_ = 1;
  std::vector<std::span<const double>> in_a_, in_b_;
  std::vector<std::vector<double>> out_first_, out_second_;
};

}  // namespace vinestep
