#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "blockmc/model.hpp"

namespace blockmc {

/// Sparse directed-edge traversal counts. Keys are 0-based (row, col) packed
/// as row * n + col; total equals the number of recorded transitions.
struct EdgeCounts {
  int n = 0;
  std::unordered_map<std::uint64_t, std::int64_t> entries;
  std::int64_t total = 0;

  static std::uint64_t key(int n, int i, int j) {
    return static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) + j;
  }

  void add(int i, int j, std::int64_t count = 1) {
    entries[key(n, i, j)] += count;
    total += count;
  }

  std::int64_t at(int i, int j) const {
    auto it = entries.find(key(n, i, j));
    return it == entries.end() ? 0 : it->second;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [k, c] : entries)
      m(static_cast<int>(k / n), static_cast<int>(k % n)) +=
          static_cast<double>(c);
    return m;
  }
};

/// Sparse real matrix with the same keying as EdgeCounts.
struct SparseRealMatrix {
  int n = 0;
  std::unordered_map<std::uint64_t, double> entries;

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [k, v] : entries)
      m(static_cast<int>(k / n), static_cast<int>(k % n)) += v;
    return m;
  }
};

/// A matrix that is constant on cluster blocks, stored as its K x K core.
struct BlockConstantMatrix {
  const ClusterLayout* layout = nullptr;
  Eigen::MatrixXd values;  // K x K

  double at(int i, int j) const {
    return values(layout->cluster_of(i), layout->cluster_of(j));
  }
};

/// Edge traversal counts of a state sequence: entry (i,j) counts the times
/// the sequence steps from i to j. A sequence of length ell+1 yields ell.
inline EdgeCounts frequency_matrix(std::span<const int> states, int n) {
  EdgeCounts counts;
  counts.n = n;
  for (std::size_t t = 0; t + 1 < states.size(); ++t)
    counts.add(states[t], states[t + 1]);
  return counts;
}

/// Row sums of the counts: visit counts of each state among times 0..ell-1.
inline std::vector<std::int64_t> row_sums(const EdgeCounts& counts) {
  std::vector<std::int64_t> sums(counts.n, 0);
  for (const auto& [k, c] : counts.entries)
    sums[static_cast<int>(k / counts.n)] += c;
  return sums;
}

/// Row-normalized counts. Throws ZeroRow for any state with no departures,
/// the division-by-zero case that is only excluded asymptotically.
inline SparseRealMatrix transition_matrix(const EdgeCounts& counts) {
  auto sums = row_sums(counts);
  for (int i = 0; i < counts.n; ++i)
    if (sums[i] == 0) throw ZeroRow(i);
  SparseRealMatrix p;
  p.n = counts.n;
  p.entries.reserve(counts.entries.size());
  for (const auto& [k, c] : counts.entries)
    p.entries[k] = static_cast<double>(c) /
                   static_cast<double>(sums[static_cast<int>(k / counts.n)]);
  return p;
}

/// Expected counts under an equilibrium start, constant on cluster blocks:
/// entry (k1,k2) is ell pi(k1) p(k1,k2) / (size(k1) size(k2)).
inline BlockConstantMatrix expected_frequency(const BlockModel& model,
                                              const ClusterLayout& layout,
                                              std::int64_t ell) {
  BlockConstantMatrix out;
  out.layout = &layout;
  out.values.resize(model.K(), model.K());
  for (int k1 = 0; k1 < model.K(); ++k1)
    for (int k2 = 0; k2 < model.K(); ++k2)
      out.values(k1, k2) = static_cast<double>(ell) * model.pi()(k1) *
                           model.p()(k1, k2) /
                           (static_cast<double>(layout.size(k1)) * layout.size(k2));
  return out;
}

/// Centered counts, materialized dense for spectral work.
inline Eigen::MatrixXd centered(const EdgeCounts& counts,
                                const BlockConstantMatrix& expected) {
  const int n = counts.n;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    int k1 = expected.layout->cluster_of(i);
    for (int j = 0; j < n; ++j)
      m(i, j) = -expected.values(k1, expected.layout->cluster_of(j));
  }
  for (const auto& [k, c] : counts.entries)
    m(static_cast<int>(k / n), static_cast<int>(k % n)) +=
        static_cast<double>(c);
  return m;
}

/// Row i scaled by 1 / ((ell+1) PiX(i)) where PiX is the equilibrium
/// distribution over states.
inline Eigen::MatrixXd q_transform(const Eigen::MatrixXd& m,
                                   const BlockModel& model,
                                   const ClusterLayout& layout,
                                   std::int64_t ell) {
  Eigen::VectorXd pix = equilibrium_over_states(model, layout);
  Eigen::MatrixXd out = m;
  for (int i = 0; i < out.rows(); ++i)
    out.row(i) /= (static_cast<double>(ell) + 1.0) * pix(i);
  return out;
}

/// Symmetric embedding [[0, M], [M^T, 0]] whose spectrum is plus and minus
/// the singular values of M.
inline Eigen::MatrixXd hermitian_dilation(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  h.topRightCorner(n, n) = m;
  h.bottomLeftCorner(n, n) = m.transpose();
  return h;
}

}  // namespace blockmc
