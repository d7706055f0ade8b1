#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vinestep/paircop.hpp"

namespace vinestep {

/// One edge (a, b; D) of an R-vine tree. Node ids are 0-based column indices;
/// labels and serialized structures use 1-based ids.
struct Edge {
  int tree = 1;           // 1-based tree index
  int a = 0;              // conditioned variables, a < b
  int b = 0;
  std::vector<int> D;     // conditioning set, sorted
  // Edges of the previous tree that produce u_{a|D} and u_{b|D}, and which
  // h-function side of those edges yields them. -1 in tree 1.
  int parent_a = -1;
  int parent_b = -1;
  HSide side_a = HSide::FirstGivenSecond;
  HSide side_b = HSide::FirstGivenSecond;

  /// "(1,3;2)" style label with 1-based ids.
  std::string label() const;
};

enum class VineKind { CVine, DVine, General };

struct StructureViolation {
  int tree = 0;        // 1-based, 0 for structure-level problems
  int edge = -1;       // index within the tree, -1 when not edge specific
  std::string message;
};

/// Order in which simulate() draws the variables, and for each variable the
/// chain of edges (tree 1 first) that links it to the previously drawn ones.
struct SamplingPlan {
  struct Link {
    int tree;         // 1-based
    int edge;         // index within the tree
    bool var_is_a;    // the new variable is the edge's conditioned a
  };
  std::vector<int> order;
  std::vector<std::vector<Link>> chains;  // chains[k] belongs to order[k]
};

/// Nested tree sequence T_1..T_trunc of a (possibly truncated) R-vine.
/// Trees above the truncation level are not stored; their pair copulas are
/// independence by definition. Immutable after construction.
class RVineStructure {
 public:
  /// Path-shaped trees: T_1 = (1,2),(2,3),...; trunc defaults to d-1.
  static RVineStructure dvine(int d, int trunc = -1);
  /// Star-shaped trees with roots 1, (1,2), (2,3;1), ...
  static RVineStructure cvine(int d, int trunc = -1);
  /// Builds from labeled edges, deriving parent links where they exist.
  /// Never throws on structural problems; call validate() for a report.
  static RVineStructure from_edges(int d, int trunc, std::vector<std::vector<Edge>> trees);

  int d() const { return d_; }
  /// CVine/DVine when the stored trees coincide with the canonical
  /// construction (also detected for loaded structures).
  VineKind kind() const { return kind_; }
  int trunc() const { return trunc_; }
  const std::vector<std::vector<Edge>>& trees() const { return trees_; }
  /// Edges of tree t (1-based).
  const std::vector<Edge>& tree(int t) const { return trees_.at(t - 1); }
  const Edge& edge(int t, int i) const { return trees_.at(t - 1).at(i); }

  /// Total edges across stored trees; equals trunc*d - trunc*(trunc+1)/2 when valid.
  int edge_count() const { return static_cast<int>(edge_offset_.back()); }
  /// Canonical (tree-major) index of the first edge of tree t.
  int edge_offset(int t) const { return edge_offset_.at(t - 1); }
  int tree_of_edge(int flat) const;

  /// Keeps trees 1..k.
  RVineStructure truncated(int k) const;
  /// For C- and D-vines, the same structure with all d-1 trees.
  /// Throws std::logic_error for general truncated structures.
  RVineStructure completed() const;

  std::optional<StructureViolation> validate() const;

  /// Throws std::logic_error if no plan exists (invalid structure).
  SamplingPlan sampling_plan() const;

 private:
  RVineStructure(int d, int trunc, std::vector<std::vector<Edge>> trees);
  void index_offsets();

  int d_ = 0;
  int trunc_ = 0;
  VineKind kind_ = VineKind::General;
  std::vector<std::vector<Edge>> trees_;
  std::vector<int> edge_offset_;
};

/// arity * (number of edges in trees 1..trunc) = arity * (trunc*d - trunc*(trunc+1)/2).
long long param_count(const RVineStructure& s, int arity_per_edge);

}  // namespace vinestep
