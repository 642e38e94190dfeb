#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "blockmc/sampler.hpp"
#include "test_util.hpp"

using namespace blockmc;

TEST_CASE("identical seeds give identical paths") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 100);
  SamplePath a = sample_path(model, layout, 5000,
                             InitialDistribution::equilibrium(), 99);
  SamplePath b = sample_path(model, layout, 5000,
                             InitialDistribution::equilibrium(), 99);
  CHECK(a.states == b.states);
  SamplePath c = sample_path(model, layout, 5000,
                             InitialDistribution::equilibrium(), 100);
  CHECK(a.states != c.states);
}

TEST_CASE("every sampled transition respects the cluster structure") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 60);
  SamplePath path = sample_path(model, layout, 20000,
                                InitialDistribution::uniform_state(), 5);
  for (std::size_t t = 0; t + 1 < path.states.size(); ++t) {
    int k1 = layout.cluster_of(path.states[t]);
    int k2 = layout.cluster_of(path.states[t + 1]);
    REQUIRE(model.p()(k1, k2) > 0.0);
  }
}

TEST_CASE("single-cluster chain draws uniform states") {
  BlockModel model = testing::single_cluster_model(1.0);
  ClusterLayout layout = build_layout(model, 8);
  SamplePath path = sample_path(model, layout, 80000,
                                InitialDistribution::equilibrium(), 7);
  std::vector<double> freq(8, 0.0);
  for (std::size_t t = 1; t < path.states.size(); ++t)
    freq[path.states[t]] += 1.0;
  // Binomial standard error per state at p = 1/8.
  double se = std::sqrt((1.0 / 8.0) * (7.0 / 8.0) / 80000.0);
  for (int v = 0; v < 8; ++v)
    CHECK(std::abs(freq[v] / 80000.0 - 1.0 / 8.0) < 5.0 * se);
}

TEST_CASE("cluster frequencies match the equilibrium distribution") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 200);
  const std::int64_t ell = 1000000;
  SamplePath path = sample_path(model, layout, ell,
                                InitialDistribution::equilibrium(), 12);
  // Batch means: 100 batches of 10000 steps estimate the standard error of
  // the cluster frequency under the path's autocorrelation.
  const int batches = 100;
  const std::int64_t batch_len = ell / batches;
  for (int k = 0; k < model.K(); ++k) {
    std::vector<double> means(batches, 0.0);
    for (int b = 0; b < batches; ++b) {
      std::int64_t hits = 0;
      for (std::int64_t t = 0; t < batch_len; ++t)
        if (layout.cluster_of(path.states[b * batch_len + t]) == k) ++hits;
      means[b] = static_cast<double>(hits) / batch_len;
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= batches;
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= (batches - 1);
    double se = std::sqrt(var / batches);
    CHECK(std::abs(mean - model.pi()(k)) < 4.0 * se);
  }
}

TEST_CASE("two-stage law: next-cluster frequencies match the p rows") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 50);
  SamplePath path = sample_path(model, layout, 200000,
                                InitialDistribution::equilibrium(), 3);
  Eigen::MatrixXd transitions = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t t = 0; t + 1 < path.states.size(); ++t)
    transitions(layout.cluster_of(path.states[t]),
                layout.cluster_of(path.states[t + 1])) += 1.0;
  for (int k1 = 0; k1 < 3; ++k1) {
    double row = transitions.row(k1).sum();
    for (int k2 = 0; k2 < 3; ++k2) {
      double p = model.p()(k1, k2);
      double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / row);
      CHECK(std::abs(transitions(k1, k2) / row - p) < 5.0 * se + 1e-9);
    }
  }
}

TEST_CASE("equilibrium start has the exact state marginal") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 5);  // sizes 3, 1, 1
  const int draws = 200000;
  std::vector<double> freq(5, 0.0);
  for (int r = 0; r < draws; ++r) {
    SamplePath path = sample_path(model, layout, 1,
                                  InitialDistribution::equilibrium(),
                                  derive_seed(77, r));
    freq[path.states[0]] += 1.0;
  }
  Eigen::VectorXd pix = equilibrium_over_states(model, layout);
  for (int v = 0; v < 5; ++v) {
    double se = std::sqrt(pix(v) * (1.0 - pix(v)) / draws);
    CHECK(std::abs(freq[v] / draws - pix(v)) < 5.0 * se);
  }
}

TEST_CASE("point-mass and cluster-mass starts land where asked") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 30);
  SamplePath point = sample_path(model, layout, 10,
                                 InitialDistribution::point_mass(17), 1);
  CHECK(point.states[0] == 17);
  for (int r = 0; r < 50; ++r) {
    SamplePath cluster = sample_path(model, layout, 1,
                                     InitialDistribution::cluster_mass(2),
                                     derive_seed(5, r));
    CHECK(layout.cluster_of(cluster.states[0]) == 2);
  }
}

TEST_CASE("streamed counts equal the materialized-path counts") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 80);
  for (std::uint64_t seed : {1ULL, 2ULL, 31337ULL}) {
    SamplePath path = sample_path(model, layout, 40000,
                                  InitialDistribution::equilibrium(), seed);
    EdgeCounts from_path = frequency_matrix(path);
    EdgeCounts streamed = stream_edge_counts(
        model, layout, 40000, InitialDistribution::equilibrium(), seed);
    CHECK(streamed.total == 40000);
    CHECK(streamed.total == from_path.total);
    REQUIRE(streamed.entries.size() == from_path.entries.size());
    for (const auto& [key, count] : from_path.entries)
      CHECK(streamed.entries.at(key) == count);
  }
}

TEST_CASE("one replica reduces to one streamed count") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 40);
  int from = layout.offset(0);
  int to = layout.offset(1);
  auto histogram = replicate_edge_count(model, layout, 2000, from, to, 1, 9);
  EdgeCounts counts = stream_edge_counts(model, layout, 2000,
                                         InitialDistribution::equilibrium(),
                                         derive_seed(9, 0));
  REQUIRE(histogram.size() == 1);
  CHECK(histogram.begin()->first == counts.at(from, to));
  CHECK(histogram.begin()->second == 1);
}

TEST_CASE("replica streams are order-independent") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 40);
  int from = layout.offset(0);
  int to = layout.offset(1);
  auto histogram = replicate_edge_count(model, layout, 3000, from, to, 32, 21);
  // Rebuild the multiset replica by replica in reverse order.
  std::map<std::int64_t, std::int64_t> reversed;
  for (int r = 31; r >= 0; --r) {
    EdgeCounts counts = stream_edge_counts(model, layout, 3000,
                                           InitialDistribution::equilibrium(),
                                           derive_seed(21, r));
    ++reversed[counts.at(from, to)];
  }
  CHECK(histogram == reversed);
}

TEST_CASE("replicated edge counts have the predicted mean") {
  // 2000 equilibrium-start replicas at n = 200, ell = 2 n^2: the sample mean
  // of the (0 -> cluster-2) edge count sits within five standard errors of
  // the limiting rate 27/46.
  BlockModel model = testing::reference_model(2.0);
  ClusterLayout layout = build_layout(model, 200);
  const int replicas = 2000;
  auto histogram = replicate_edge_count(model, layout, 2 * 200 * 200,
                                        layout.offset(0), layout.offset(1),
                                        replicas, 4242);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& [value, count] : histogram) {
    sum += static_cast<double>(value) * count;
    sum_sq += static_cast<double>(value) * value * count;
  }
  double mean = sum / replicas;
  double var = sum_sq / replicas - mean * mean;
  double se = std::sqrt(var / replicas);
  CHECK(std::abs(mean - 27.0 / 46.0) < 5.0 * se);
}
