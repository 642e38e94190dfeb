#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <thread>
#include <vector>

#include "blockmc/matrices.hpp"
#include "blockmc/model.hpp"
#include "blockmc/rng.hpp"

namespace blockmc {

/// Starting distribution for X_0.
struct InitialDistribution {
  enum class Kind { Equilibrium, UniformState, PointMass, ClusterMass };
  Kind kind = Kind::Equilibrium;
  int index = 0;  // state for PointMass, cluster for ClusterMass (0-based)

  static InitialDistribution equilibrium() { return {Kind::Equilibrium, 0}; }
  static InitialDistribution uniform_state() { return {Kind::UniformState, 0}; }
  static InitialDistribution point_mass(int state) {
    return {Kind::PointMass, state};
  }
  static InitialDistribution cluster_mass(int cluster) {
    return {Kind::ClusterMass, cluster};
  }
};

/// A materialized trajectory of the block Markov chain.
struct SamplePath {
  std::vector<int> states;  // length ell + 1
  const BlockModel* model = nullptr;
  const ClusterLayout* layout = nullptr;
  std::uint64_t seed = 0;
};

namespace detail {

/// One chain step driver shared by the path and streaming samplers. Each step
/// draws the next cluster from row sigma(x) of p, then a uniform state inside
/// that cluster.
class ChainStepper {
 public:
  ChainStepper(const BlockModel& model, const ClusterLayout& layout,
               std::uint64_t seed)
      : model_(&model), layout_(&layout), rng_(seed) {
    const int k = model.K();
    cum_rows_.resize(k, std::vector<double>(k));
    for (int i = 0; i < k; ++i) {
      int last_positive = 0;
      double acc = 0.0;
      for (int j = 0; j < k; ++j) {
        acc += model.p()(i, j);
        cum_rows_[i][j] = acc;
        if (model.p()(i, j) > 0.0) last_positive = j;
      }
      // Saturate from the last positive bin on, so roundoff in the row sum
      // can never select a zero-probability cluster.
      for (int j = last_positive; j < k; ++j) cum_rows_[i][j] = 1.0;
    }
    cum_pi_.resize(k);
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
      acc += model.pi()(i);
      cum_pi_[i] = acc;
    }
    cum_pi_[k - 1] = 1.0;
  }

  int draw_initial(const InitialDistribution& init) {
    switch (init.kind) {
      case InitialDistribution::Kind::Equilibrium:
        return uniform_in_cluster(draw_from_cumulative(cum_pi_));
      case InitialDistribution::Kind::UniformState:
        return static_cast<int>(rng_.bounded(layout_->n()));
      case InitialDistribution::Kind::PointMass:
        if (init.index < 0 || init.index >= layout_->n())
          throw RejectedModel("point-mass state out of range");
        return init.index;
      case InitialDistribution::Kind::ClusterMass:
        if (init.index < 0 || init.index >= model_->K())
          throw RejectedModel("cluster-mass cluster out of range");
        return uniform_in_cluster(init.index);
    }
    return 0;
  }

  int step(int state) {
    return uniform_in_cluster(
        draw_from_cumulative(cum_rows_[layout_->cluster_of(state)]));
  }

 private:
  int draw_from_cumulative(const std::vector<double>& cum) {
    double u = rng_.uniform();
    for (std::size_t i = 0; i + 1 < cum.size(); ++i)
      if (u < cum[i]) return static_cast<int>(i);
    return static_cast<int>(cum.size()) - 1;
  }

  int uniform_in_cluster(int cluster) {
    return layout_->offset(cluster) +
           static_cast<int>(rng_.bounded(layout_->size(cluster)));
  }

  const BlockModel* model_;
  const ClusterLayout* layout_;
  SplitMix64 rng_;
  std::vector<std::vector<double>> cum_rows_;
  std::vector<double> cum_pi_;
};

}  // namespace detail

/// Materialized sample path of length ell + 1. Identical arguments yield an
/// identical path bit-for-bit.
inline SamplePath sample_path(const BlockModel& model,
                              const ClusterLayout& layout, std::int64_t ell,
                              const InitialDistribution& init,
                              std::uint64_t seed) {
  if (ell < 1) throw Error("path length must be at least 1");
  detail::ChainStepper stepper(model, layout, seed);
  SamplePath path;
  path.model = &model;
  path.layout = &layout;
  path.seed = seed;
  path.states.reserve(static_cast<std::size_t>(ell) + 1);
  int x = stepper.draw_initial(init);
  path.states.push_back(x);
  for (std::int64_t t = 0; t < ell; ++t) {
    x = stepper.step(x);
    path.states.push_back(x);
  }
  return path;
}

inline EdgeCounts frequency_matrix(const SamplePath& path) {
  return frequency_matrix(std::span<const int>(path.states),
                          path.layout->n());
}

/// Edge counts of a fresh path without materializing it. Equals
/// frequency_matrix(sample_path(...)) for every seed.
inline EdgeCounts stream_edge_counts(const BlockModel& model,
                                     const ClusterLayout& layout,
                                     std::int64_t ell,
                                     const InitialDistribution& init,
                                     std::uint64_t seed) {
  if (ell < 1) throw Error("path length must be at least 1");
  detail::ChainStepper stepper(model, layout, seed);
  EdgeCounts counts;
  counts.n = layout.n();
  int x = stepper.draw_initial(init);
  for (std::int64_t t = 0; t < ell; ++t) {
    int y = stepper.step(x);
    counts.add(x, y);
    x = y;
  }
  return counts;
}

namespace detail {

inline std::int64_t count_edge_hits(const BlockModel& model,
                                    const ClusterLayout& layout,
                                    std::int64_t ell, int from, int to,
                                    std::uint64_t stream_seed) {
  ChainStepper stepper(model, layout, stream_seed);
  int x = stepper.draw_initial(InitialDistribution::equilibrium());
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < ell; ++t) {
    int y = stepper.step(x);
    if (x == from && y == to) ++hits;
    x = y;
  }
  return hits;
}

}  // namespace detail

/// Traversal counts of one fixed edge over independent equilibrium-start
/// replicas, as a histogram count-value -> multiplicity. Replica r uses the
/// stream derive_seed(seed, r) and replicas run in parallel; the multiset
/// does not depend on replica order or thread count.
inline std::map<std::int64_t, std::int64_t> replicate_edge_count(
    const BlockModel& model, const ClusterLayout& layout, std::int64_t ell,
    int from, int to, int replicas, std::uint64_t seed) {
  if (replicas < 1) throw Error("replica count must be at least 1");
  unsigned workers = std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(replicas));
  if (workers <= 1) {
    std::map<std::int64_t, std::int64_t> histogram;
    for (int r = 0; r < replicas; ++r)
      ++histogram[detail::count_edge_hits(model, layout, ell, from, to,
                                          derive_seed(seed, r))];
    return histogram;
  }
  std::vector<std::map<std::int64_t, std::int64_t>> partial(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int r = static_cast<int>(w); r < replicas;
           r += static_cast<int>(workers))
        ++partial[w][detail::count_edge_hits(model, layout, ell, from, to,
                                             derive_seed(seed, r))];
    });
  }
  for (std::thread& worker : pool) worker.join();
  std::map<std::int64_t, std::int64_t> histogram;
  for (const auto& local : partial)
    for (const auto& [value, count] : local) histogram[value] += count;
  return histogram;
}

}  // namespace blockmc
