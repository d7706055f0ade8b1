#include "vinestep/vinestruct.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vinestep {

std::string Edge::label() const {
  std::ostringstream os;
  os << '(' << a + 1 << ',' << b + 1;
  if (!D.empty()) {
    os << ';';
    for (std::size_t i = 0; i < D.size(); ++i) os << (i ? "," : "") << D[i] + 1;
  }
  os << ')';
  return os.str();
}

namespace {

std::vector<int> full_set(const Edge& e) {
  std::vector<int> s = e.D;
  s.push_back(e.a);
  s.push_back(e.b);
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<int> with(std::vector<int> set, int x) {
  set.insert(std::lower_bound(set.begin(), set.end(), x), x);
  return set;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int x, int y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    parent[x] = y;
    return true;
  }
};

int checked_dim(int d, int trunc) {
  if (d < 2) throw std::invalid_argument("vine dimension must be at least 2");
  if (trunc < 0) trunc = d - 1;
  if (trunc < 1 || trunc > d - 1) throw std::invalid_argument("truncation level must lie in [1, d-1]");
  return trunc;
}

}  // namespace

RVineStructure::RVineStructure(int d, int trunc, std::vector<std::vector<Edge>> trees)
    : d_(d), trunc_(trunc), trees_(std::move(trees)) {
  index_offsets();
}

void RVineStructure::index_offsets() {
  edge_offset_.assign(trees_.size() + 1, 0);
  for (std::size_t t = 0; t < trees_.size(); ++t)
    edge_offset_[t + 1] = edge_offset_[t] + static_cast<int>(trees_[t].size());
}

int RVineStructure::tree_of_edge(int flat) const {
  auto it = std::upper_bound(edge_offset_.begin(), edge_offset_.end(), flat);
  return static_cast<int>(it - edge_offset_.begin());
}

RVineStructure RVineStructure::dvine(int d, int trunc) {
  trunc = checked_dim(d, trunc);
  std::vector<std::vector<Edge>> trees(trunc);
  for (int t = 1; t <= trunc; ++t) {
    for (int i = 0; i + t < d; ++i) {
      Edge e;
      e.tree = t;
      e.a = i;
      e.b = i + t;
      for (int k = i + 1; k < i + t; ++k) e.D.push_back(k);
      if (t > 1) {
        // u_{i|i+1..i+t-1} is the first-given-second output of (i, i+t-1; ...),
        // u_{i+t|...} the second-given-first output of (i+1, i+t; ...).
        e.parent_a = i;
        e.side_a = HSide::FirstGivenSecond;
        e.parent_b = i + 1;
        e.side_b = HSide::SecondGivenFirst;
      }
      trees[t - 1].push_back(std::move(e));
    }
  }
  RVineStructure s(d, trunc, std::move(trees));
  s.kind_ = VineKind::DVine;
  return s;
}

RVineStructure RVineStructure::cvine(int d, int trunc) {
  trunc = checked_dim(d, trunc);
  std::vector<std::vector<Edge>> trees(trunc);
  for (int t = 1; t <= trunc; ++t) {
    const int root = t - 1;
    for (int j = t; j < d; ++j) {
      Edge e;
      e.tree = t;
      e.a = root;
      e.b = j;
      for (int k = 0; k < root; ++k) e.D.push_back(k);
      if (t > 1) {
        // Tree t-1 holds (root-1, j'; ...) for j' = root..d-1, in that order.
        e.parent_a = 0;  // (root-1, root; ...)
        e.side_a = HSide::SecondGivenFirst;
        e.parent_b = j - root;  // (root-1, j; ...)
        e.side_b = HSide::SecondGivenFirst;
      }
      trees[t - 1].push_back(std::move(e));
    }
  }
  RVineStructure s(d, trunc, std::move(trees));
  s.kind_ = VineKind::CVine;
  return s;
}

RVineStructure RVineStructure::from_edges(int d, int trunc, std::vector<std::vector<Edge>> trees) {
  for (std::size_t t = 0; t < trees.size(); ++t) {
    for (Edge& e : trees[t]) {
      e.tree = static_cast<int>(t) + 1;
      if (e.a > e.b) std::swap(e.a, e.b);
      std::sort(e.D.begin(), e.D.end());
      e.parent_a = e.parent_b = -1;
    }
    if (t == 0) continue;
    std::map<std::vector<int>, int> by_set;
    for (std::size_t i = 0; i < trees[t - 1].size(); ++i)
      by_set.emplace(full_set(trees[t - 1][i]), static_cast<int>(i));
    for (Edge& e : trees[t]) {
      auto link = [&](int var, int& parent, HSide& side) {
        auto it = by_set.find(with(e.D, var));
        if (it == by_set.end()) return;
        const Edge& p = trees[t - 1][it->second];
        if (p.a == var) {
          parent = it->second;
          side = HSide::FirstGivenSecond;
        } else if (p.b == var) {
          parent = it->second;
          side = HSide::SecondGivenFirst;
        }
      };
      link(e.a, e.parent_a, e.side_a);
      link(e.b, e.parent_b, e.side_b);
    }
  }
  RVineStructure s(d, trunc, std::move(trees));
  if (d >= 2 && trunc >= 1 && trunc <= d - 1) {
    auto same = [&](const RVineStructure& ref) {
      if (ref.trees_.size() != s.trees_.size()) return false;
      for (std::size_t t = 0; t < ref.trees_.size(); ++t) {
        if (ref.trees_[t].size() != s.trees_[t].size()) return false;
        for (std::size_t i = 0; i < ref.trees_[t].size(); ++i) {
          const Edge& x = ref.trees_[t][i];
          const Edge& y = s.trees_[t][i];
          if (x.a != y.a || x.b != y.b || x.D != y.D) return false;
        }
      }
      return true;
    };
    if (same(cvine(d, trunc))) s.kind_ = VineKind::CVine;
    else if (same(dvine(d, trunc))) s.kind_ = VineKind::DVine;
  }
  return s;
}

RVineStructure RVineStructure::truncated(int k) const {
  if (k < 1 || k > trunc_) throw std::invalid_argument("truncation level must lie in [1, trunc]");
  std::vector<std::vector<Edge>> trees(trees_.begin(), trees_.begin() + k);
  RVineStructure s(d_, k, std::move(trees));
  s.kind_ = kind_;
  return s;
}

RVineStructure RVineStructure::completed() const {
  switch (kind_) {
    case VineKind::CVine: return cvine(d_);
    case VineKind::DVine: return dvine(d_);
    case VineKind::General:
      if (trunc_ == d_ - 1) return *this;
      break;
  }
  throw std::logic_error("cannot complete a truncated general R-vine");
}

std::optional<StructureViolation> RVineStructure::validate() const {
  auto fail = [](int tree, int edge, std::string msg) {
    return std::optional<StructureViolation>(StructureViolation{tree, edge, std::move(msg)});
  };
  if (d_ < 2) return fail(0, -1, "dimension below 2");
  if (trunc_ < 1 || trunc_ > d_ - 1) return fail(0, -1, "truncation level outside [1, d-1]");
  if (static_cast<int>(trees_.size()) != trunc_)
    return fail(0, -1, "number of trees differs from truncation level");

  for (int t = 1; t <= trunc_; ++t) {
    const auto& edges = trees_[t - 1];
    if (static_cast<int>(edges.size()) != d_ - t)
      return fail(t, -1, "tree " + std::to_string(t) + " must have " + std::to_string(d_ - t) + " edges");
    std::set<std::vector<int>> seen;
    UnionFind uf(t == 1 ? d_ : static_cast<int>(trees_[t - 2].size()));
    for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
      const Edge& e = edges[i];
      if (e.tree != t) return fail(t, i, "edge carries the wrong tree index");
      if (e.a < 0 || e.b < 0 || e.a >= d_ || e.b >= d_) return fail(t, i, "node id out of range");
      if (e.a == e.b) return fail(t, i, "conditioned variables coincide");
      if (static_cast<int>(e.D.size()) != t - 1) return fail(t, i, "conditioning set has wrong size");
      for (std::size_t k = 0; k < e.D.size(); ++k) {
        if (e.D[k] < 0 || e.D[k] >= d_) return fail(t, i, "conditioning node out of range");
        if (k > 0 && e.D[k] <= e.D[k - 1]) return fail(t, i, "conditioning set not strictly sorted");
        if (e.D[k] == e.a || e.D[k] == e.b) return fail(t, i, "conditioned variable inside conditioning set");
      }
      if (!seen.insert(full_set(e)).second) return fail(t, i, "duplicate edge " + e.label());
      if (t == 1) {
        if (!uf.unite(e.a, e.b)) return fail(t, i, "tree 1 contains a cycle at " + e.label());
        continue;
      }
      if (e.parent_a < 0 || e.parent_b < 0)
        return fail(t, i, "proximity condition violated at " + e.label() +
                              ": no pair of edges in the previous tree shares a node");
      if (e.parent_a == e.parent_b) return fail(t, i, "edge joins a node to itself");
      const auto& prev = trees_[t - 2];
      const Edge& pa = prev.at(e.parent_a);
      const Edge& pb = prev.at(e.parent_b);
      const int va = e.side_a == HSide::FirstGivenSecond ? pa.a : pa.b;
      const int vb = e.side_b == HSide::FirstGivenSecond ? pb.a : pb.b;
      if (va != e.a || vb != e.b || full_set(pa) != with(e.D, e.a) || full_set(pb) != with(e.D, e.b))
        return fail(t, i, "parent links inconsistent with the edge label " + e.label());
      if (!uf.unite(e.parent_a, e.parent_b))
        return fail(t, i, "tree " + std::to_string(t) + " contains a cycle at " + e.label());
    }
  }
  return std::nullopt;
}

SamplingPlan RVineStructure::sampling_plan() const {
  if (auto v = validate()) throw std::logic_error("invalid vine structure: " + v->message);

  for (int first = 0; first < d_; ++first) {
    SamplingPlan plan;
    std::vector<char> drawn(d_, 0);
    std::vector<char> used(edge_count(), 0);
    plan.order.push_back(first);
    plan.chains.emplace_back();
    drawn[first] = 1;
    bool ok = true;
    for (int k = 1; k < d_ && ok; ++k) {
      const int top = std::min(k, trunc_);
      ok = false;
      for (int j = 0; j < d_ && !ok; ++j) {
        if (drawn[j]) continue;
        const auto& edges = trees_[top - 1];
        for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
          const Edge& e = edges[i];
          if (e.a != j && e.b != j) continue;
          const int other = e.a == j ? e.b : e.a;
          if (!drawn[other] ||
              !std::all_of(e.D.begin(), e.D.end(), [&](int x) { return drawn[x] != 0; }))
            continue;
          std::vector<SamplingPlan::Link> chain(top);
          int idx = i;
          for (int t = top; t >= 1; --t) {
            const Edge& c = trees_[t - 1][idx];
            chain[t - 1] = {t, idx, c.a == j};
            if (t > 1) idx = c.a == j ? c.parent_a : c.parent_b;
          }
          for (const auto& l : chain) used[edge_offset_[l.tree - 1] + l.edge] = 1;
          plan.order.push_back(j);
          plan.chains.push_back(std::move(chain));
          drawn[j] = 1;
          ok = true;
          break;
        }
      }
    }
    if (ok && std::all_of(used.begin(), used.end(), [](char c) { return c != 0; })) return plan;
  }
  throw std::logic_error("no sampling order found for vine structure");
}

long long param_count(const RVineStructure& s, int arity_per_edge) {
  const long long t = s.trunc();
  const long long d = s.d();
  return arity_per_edge * (t * d - t * (t + 1) / 2);
}

}  // namespace vinestep
