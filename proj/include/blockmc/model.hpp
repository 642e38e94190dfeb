#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "blockmc/errors.hpp"

namespace blockmc {

namespace detail {

/// Strong connectivity of the digraph induced by strictly positive entries.
inline bool strongly_connected(const Eigen::MatrixXd& p) {
  const int k = static_cast<int>(p.rows());
  auto reachable = [&](bool forward) {
    std::vector<char> seen(k, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < k; ++v) {
        double w = forward ? p(u, v) : p(v, u);
        if (w > 0.0 && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c; });
  };
  return reachable(true) && reachable(false);
}

/// Period of a strongly connected digraph: gcd of |level(u)+1-level(v)| over
/// all edges, with levels from a BFS tree. The chain is aperiodic iff 1.
inline int digraph_period(const Eigen::MatrixXd& p) {
  const int k = static_cast<int>(p.rows());
  std::vector<long> level(k, -1);
  std::vector<int> queue{0};
  level[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int u = queue[head];
    for (int v = 0; v < k; ++v) {
      if (p(u, v) <= 0.0) continue;
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      }
    }
  }
  long g = 0;
  for (int u = 0; u < k; ++u)
    for (int v = 0; v < k; ++v)
      if (p(u, v) > 0.0) g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
  return static_cast<int>(g == 0 ? 1 : g);
}

}  // namespace detail

/// Equilibrium distribution of a row-stochastic matrix, by direct linear
/// solve of pi (p - I) = 0 with the normalization sum(pi) = 1.
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p) {
  const int k = static_cast<int>(p.rows());
  if (p.cols() != k || k < 1)
    throw RejectedModel("transition matrix must be square and nonempty");
  for (int i = 0; i < k; ++i) {
    double row = 0.0;
    for (int j = 0; j < k; ++j) {
      if (p(i, j) < 0.0 || p(i, j) > 1.0)
        throw RejectedModel("p entry out of [0,1] at (" + std::to_string(i + 1) +
                            "," + std::to_string(j + 1) + ")");
      row += p(i, j);
    }
    if (std::abs(row - 1.0) > 1e-12)
      throw RejectedModel("row " + std::to_string(i + 1) +
                          " of p does not sum to 1");
  }
  if (!detail::strongly_connected(p))
    throw RejectedModel("chain is reducible");
  if (detail::digraph_period(p) != 1)
    throw RejectedModel("chain is periodic");

  // (p - I)^T pi = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a = (p - Eigen::MatrixXd::Identity(k, k)).transpose();
  a.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  Eigen::VectorXd pi = a.partialPivLu().solve(rhs);
  for (int i = 0; i < k; ++i)
    if (!(pi(i) > 0.0))
      throw RejectedModel("equilibrium distribution has a nonpositive entry");
  if (std::abs(pi.sum() - 1.0) > 1e-10 ||
      ((pi.transpose() * p).transpose() - pi).lpNorm<Eigen::Infinity>() > 1e-10)
    throw NumericalFailure("stationary solve did not reach tolerance");
  return pi;
}

/// Block Markov chain parameters: K clusters, cluster transition matrix p,
/// cluster fractions alpha, path-length coefficient lambda (ell ~ lambda n^2),
/// and the derived equilibrium distribution pi. Immutable after construction.
class BlockModel {
 public:
  BlockModel(Eigen::MatrixXd p, Eigen::VectorXd alpha, double lambda)
      : p_(std::move(p)), alpha_(std::move(alpha)), lambda_(lambda) {
    if (alpha_.size() != p_.rows())
      throw RejectedModel("alpha length does not match p dimension");
    if (!(lambda_ > 0.0)) throw RejectedModel("lambda must be positive");
    double asum = 0.0;
    for (int k = 0; k < alpha_.size(); ++k) {
      if (!(alpha_(k) > 0.0))
        throw RejectedModel("alpha entries must be strictly positive");
      asum += alpha_(k);
    }
    if (std::abs(asum - 1.0) > 1e-12)
      throw RejectedModel("alpha does not sum to 1");
    pi_ = stationary_distribution(p_);
  }

  int K() const { return static_cast<int>(p_.rows()); }
  const Eigen::MatrixXd& p() const { return p_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double lambda() const { return lambda_; }
  const Eigen::VectorXd& pi() const { return pi_; }

 private:
  Eigen::MatrixXd p_;
  Eigen::VectorXd alpha_;
  double lambda_;
  Eigen::VectorXd pi_;
};

/// Assignment of n states to clusters as contiguous blocks: states
/// offset(k)..offset(k)+size(k)-1 belong to cluster k. Spectra are invariant
/// under state relabeling, so the contiguous layout is canonical here.
class ClusterLayout {
 public:
  ClusterLayout(int n, std::vector<int> sizes)
      : n_(n), sizes_(std::move(sizes)) {
    offsets_.resize(sizes_.size() + 1, 0);
    for (std::size_t k = 0; k < sizes_.size(); ++k) {
      if (sizes_[k] < 1) throw RejectedModel("empty cluster in layout");
      offsets_[k + 1] = offsets_[k] + sizes_[k];
    }
    if (offsets_.back() != n)
      throw RejectedModel("cluster sizes do not sum to n");
    sigma_.resize(n);
    for (std::size_t k = 0; k < sizes_.size(); ++k)
      std::fill(sigma_.begin() + offsets_[k], sigma_.begin() + offsets_[k + 1],
                static_cast<int>(k));
  }

  int n() const { return n_; }
  int K() const { return static_cast<int>(sizes_.size()); }
  int size(int cluster) const { return sizes_[cluster]; }
  const std::vector<int>& sizes() const { return sizes_; }
  /// First state index of a cluster block.
  int offset(int cluster) const { return offsets_[cluster]; }
  /// Cluster of a state (0-based on both sides).
  int cluster_of(int state) const { return sigma_[state]; }

 private:
  int n_;
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  std::vector<int> sigma_;
};

/// Cluster sizes by largest-remainder rounding of alpha_k * n, with every
/// cluster forced nonempty. Deterministic: remainder ties break to the lower
/// cluster index, and the nonemptiness override takes states from the
/// currently largest cluster.
inline ClusterLayout build_layout(const BlockModel& model, int n) {
  const int k = model.K();
  if (n < k)
    throw RejectedModel("state space smaller than the number of clusters");
  std::vector<int> sizes(k);
  std::vector<std::pair<double, int>> remainder(k);
  int assigned = 0;
  for (int i = 0; i < k; ++i) {
    double exact = model.alpha()(i) * n;
    sizes[i] = static_cast<int>(std::floor(exact));
    remainder[i] = {exact - sizes[i], i};
    assigned += sizes[i];
  }
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int r = 0; r < n - assigned; ++r) ++sizes[remainder[r % k].second];
  for (int i = 0; i < k; ++i) {
    while (sizes[i] == 0) {
      int largest = static_cast<int>(
          std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      --sizes[largest];
      ++sizes[i];
    }
  }
  return ClusterLayout(n, std::move(sizes));
}

/// Mean traversal rate of one directed edge between cluster k1 and cluster k2
/// in the ell = lambda n^2 regime: lambda pi(k1) p(k1,k2) / (alpha_k1 alpha_k2).
inline double edge_rate(const BlockModel& model, int k1, int k2) {
  return model.lambda() * model.pi()(k1) * model.p()(k1, k2) /
         (model.alpha()(k1) * model.alpha()(k2));
}

/// Equilibrium distribution over states: pi(cluster of v) / cluster size.
inline Eigen::VectorXd equilibrium_over_states(const BlockModel& model,
                                               const ClusterLayout& layout) {
  Eigen::VectorXd out(layout.n());
  for (int v = 0; v < layout.n(); ++v) {
    int k = layout.cluster_of(v);
    out(v) = model.pi()(k) / layout.size(k);
  }
  return out;
}

}  // namespace blockmc
