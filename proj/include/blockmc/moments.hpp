#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "blockmc/errors.hpp"
#include "blockmc/limitlaw.hpp"

namespace blockmc {

/// Rooted tree with an order on children, stored as a parent array in
/// depth-first (preorder) labeling; parent[0] = -1.
struct OrderedTree {
  std::vector<int> parent;

  int vertex_count() const { return static_cast<int>(parent.size()); }
  int edge_count() const { return vertex_count() - 1; }
};

/// All ordered trees with m edges, generated as Dyck words: an up step opens
/// a new child of the current vertex, a down step returns to its parent. The
/// preorder parent array is a canonical encoding, so there are no duplicates.
inline std::vector<OrderedTree> enumerate_ordered_trees(int m) {
  if (m < 0) throw Error("tree edge count must be nonnegative");
  if (m > 12)
    throw ResourceLimit("ordered-tree enumeration capped at 12 edges "
                        "(Catalan growth)");
  std::vector<OrderedTree> trees;
  OrderedTree current;
  current.parent.assign(1, -1);
  std::vector<int> stack{0};
  auto recurse = [&](auto&& self, int ups_left, int depth) -> void {
    if (ups_left == 0 && depth == 0) {
      trees.push_back(current);
      return;
    }
    if (ups_left > 0) {
      current.parent.push_back(stack.back());
      stack.push_back(current.vertex_count() - 1);
      self(self, ups_left - 1, depth + 1);
      stack.pop_back();
      current.parent.pop_back();
    }
    if (depth > 0) {
      int top = stack.back();
      stack.pop_back();
      self(self, ups_left, depth - 1);
      stack.push_back(top);
    }
  };
  recurse(recurse, m, 0);
  return trees;
}

/// Homomorphism density t(T, W) of a tree into a step graphon, evaluated as
/// the exact sum over block labelings: for each labeling l the term is
/// prod_edges W(l_v, l_w) * prod_vertices width(l_v). Cost B^(vertices).
inline double hom_density(const OrderedTree& tree, const StepGraphon& graphon,
                          double labeling_budget = 1e8) {
  graphon.validate();
  const int b = graphon.blocks();
  const int v = tree.vertex_count();
  if (v < 1 || tree.parent[0] != -1)
    throw Error("tree must be rooted at vertex 0");
  for (int vertex = 1; vertex < v; ++vertex)
    if (tree.parent[vertex] < 0 || tree.parent[vertex] >= vertex)
      throw Error("tree parents must precede their children in preorder");
  if (std::pow(static_cast<double>(b), v) > labeling_budget)
    throw ResourceLimit("block labeling count exceeds budget");
  std::vector<int> label(v, 0);
  double total = 0.0;
  auto recurse = [&](auto&& self, int vertex, double partial) -> void {
    if (vertex == v) {
      total += partial;
      return;
    }
    for (int c = 0; c < b; ++c) {
      double term = partial * graphon.width(c);
      if (vertex > 0) term *= graphon.values(label[tree.parent[vertex]], c);
      if (term == 0.0) continue;
      label[vertex] = c;
      self(self, vertex + 1, term);
    }
  };
  recurse(recurse, 0, 1.0);
  return total;
}

/// Moment sequence m_0..m_max of a symmetric measure.
struct MomentSequence {
  std::vector<double> values;  // index = order
  std::string provenance;      // "tree-sum" or "quadrature"

  int max_order() const { return static_cast<int>(values.size()) - 1; }
};

/// Limiting moments from ordered-tree homomorphism densities:
/// m_{2m} = sum over trees with m edges of t(T, W); odd moments vanish.
inline MomentSequence tree_moments(const StepGraphon& graphon, int max_order) {
  if (max_order < 0) throw Error("max order must be nonnegative");
  MomentSequence seq;
  seq.provenance = "tree-sum";
  seq.values.assign(max_order + 1, 0.0);
  seq.values[0] = 1.0;
  for (int m = 1; 2 * m <= max_order; ++m) {
    double sum = 0.0;
    for (const OrderedTree& tree : enumerate_ordered_trees(m))
      sum += hom_density(tree, graphon);
    seq.values[2 * m] = sum;
  }
  return seq;
}

/// Trapezoidal moments of a sampled symmetrized density. The grid must carry
/// the full mass: the zeroth moment is required to land within 0.02 of 1.
inline MomentSequence quadrature_moments(const SpectralDensity& density,
                                         int max_order) {
  MomentSequence seq;
  seq.provenance = "quadrature";
  seq.values.assign(std::max(max_order, 0) + 1, 0.0);
  for (int k = 0; k <= std::max(max_order, 0); ++k) {
    double integral = 0.0;
    for (std::size_t i = 1; i < density.grid.size(); ++i) {
      double fx0 = std::pow(density.grid[i - 1], k) * density.density[i - 1];
      double fx1 = std::pow(density.grid[i], k) * density.density[i];
      integral += 0.5 * (fx0 + fx1) * (density.grid[i] - density.grid[i - 1]);
    }
    seq.values[k] = integral;
  }
  if (std::abs(seq.values[0] - 1.0) > 0.02)
    throw Error("density mass " + std::to_string(seq.values[0]) +
                " is not normalized within 0.02; extend the grid");
  return seq;
}

struct HankelReport {
  bool psd = false;
  double min_eigenvalue = 0.0;
};

/// Positive semidefiniteness of the Hankel matrix (m_{i+j})_{i,j=0..k},
/// the moment-problem criterion; tolerance -1e-9 on the smallest eigenvalue.
inline HankelReport hankel_psd(const MomentSequence& moments, int k) {
  if (2 * k > moments.max_order())
    throw Error("Hankel order exceeds computed moments");
  Eigen::MatrixXd h(k + 1, k + 1);
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) h(i, j) = moments.values[i + j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalFailure("Hankel eigensolve failed");
  HankelReport report;
  report.min_eigenvalue = solver.eigenvalues().minCoeff();
  report.psd = report.min_eigenvalue >= -1e-9;
  return report;
}

}  // namespace blockmc
