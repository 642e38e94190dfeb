#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "blockmc/pipeline.hpp"
#include "blockmc/sampler.hpp"
#include "test_util.hpp"

using namespace blockmc;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("blockmc_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int counter;
};
int TempDir::counter = 0;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

TransitionDataset dataset_from_pairs(
    const std::vector<std::pair<int, int>>& pairs, int n) {
  TransitionDataset data;
  data.n_states = n;
  data.transitions = pairs;
  for (int v = 0; v < n; ++v) data.labels.push_back(std::to_string(v + 1));
  return data;
}

}  // namespace

TEST_CASE("reading a state sequence forms consecutive pairs") {
  TempDir dir;
  write_file(dir.file("seq.txt"), "a\nb\na\n");
  TransitionDataset data =
      read_transitions(dir.file("seq.txt"), TransitionFormat::StateSequence);
  CHECK(data.n_states == 2);
  REQUIRE(data.transitions.size() == 2);
  CHECK(data.transitions[0] == std::pair<int, int>{0, 1});
  CHECK(data.transitions[1] == std::pair<int, int>{1, 0});
  CHECK(data.labels[0] == "a");
  CHECK(data.labels[1] == "b");
}

TEST_CASE("reading csv pairs with and without header") {
  TempDir dir;
  write_file(dir.file("pairs.csv"), "from,to\nx,y\ny,z\nz,x\n");
  TransitionDataset data =
      read_transitions(dir.file("pairs.csv"), TransitionFormat::CsvPairs);
  CHECK(data.n_states == 3);
  CHECK(data.transitions.size() == 3);

  write_file(dir.file("bare.csv"), "x,y\ny,z\nz,x\n");
  TransitionDataset bare =
      read_transitions(dir.file("bare.csv"), TransitionFormat::CsvPairs);
  CHECK(bare.transitions.size() == 3);
  CHECK(bare.n_states == 3);
}

TEST_CASE("malformed rows carry their line number") {
  TempDir dir;
  write_file(dir.file("bad.csv"), "a,b\nc\n");
  try {
    read_transitions(dir.file("bad.csv"), TransitionFormat::CsvPairs);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  write_file(dir.file("empty.txt"), "\n\n");
  CHECK_THROWS_AS(
      read_transitions(dir.file("empty.txt"), TransitionFormat::StateSequence),
      EmptyInput);
}

TEST_CASE("preprocessing is the identity at threshold zero") {
  TransitionDataset data = dataset_from_pairs({{0, 1}, {1, 2}, {2, 0}}, 3);
  TransitionDataset out = preprocess(data, 0, false);
  CHECK(out.transitions == data.transitions);
  CHECK(out.n_states == 3);
}

TEST_CASE("preprocessing drops self-loop-only data to empty") {
  TransitionDataset data = dataset_from_pairs({{0, 0}, {1, 1}}, 2);
  CHECK_THROWS_AS(preprocess(data, 0, true), EmptyInput);
}

TEST_CASE("trimming iterates until stable") {
  // x->y five times, y->z once, z->w once: one pass removes w (1 visit),
  // which drops z to one visit; only iteration removes z as well.
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 5; ++i) pairs.push_back({0, 1});
  pairs.push_back({1, 2});
  pairs.push_back({2, 3});
  TransitionDataset data = dataset_from_pairs(pairs, 4);
  TransitionDataset out = preprocess(data, 2, false);
  CHECK(out.n_states == 2);
  CHECK(out.transitions.size() == 5);
}

TEST_CASE("preprocessing is idempotent") {
  // Dense 10-state core (20 visits each) plus low-visit satellites that the
  // trim removes, including a few self-loops.
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) pairs.push_back({i, j});
  for (int r = 0; r < 3; ++r) pairs.push_back({10, 0});
  pairs.push_back({11, 12});
  pairs.push_back({5, 5});  // already in the core; dropped as a self-loop
  TransitionDataset data = dataset_from_pairs(pairs, 13);
  TransitionDataset once = preprocess(data, 15, true);
  TransitionDataset twice = preprocess(once, 15, true);
  CHECK(once.n_states == 10);
  CHECK(once.n_states == twice.n_states);
  CHECK(once.transitions == twice.transitions);

  SplitMix64 rng(3);
  std::vector<std::pair<int, int>> random_pairs;
  for (int t = 0; t < 400; ++t)
    random_pairs.push_back({static_cast<int>(rng.bounded(30)),
                            static_cast<int>(rng.bounded(30))});
  TransitionDataset noisy = dataset_from_pairs(random_pairs, 30);
  TransitionDataset first = preprocess(noisy, 8, true);
  TransitionDataset second = preprocess(first, 8, true);
  CHECK(first.n_states == second.n_states);
  CHECK(first.transitions == second.transitions);
}

TEST_CASE("taxi-scale arithmetic for the path-length coefficient") {
  // 55 million transitions over 4486 states: ell / n^2 = 2.733.
  TransitionDataset data;
  data.n_states = 4486;
  data.transitions.resize(1);  // lambda_hat depends only on the counts below
  const double ell = 55e6;
  double lambda_hat = ell / (4486.0 * 4486.0);
  CHECK(lambda_hat == doctest::Approx(2.733).epsilon(1e-3));
  CHECK(lambda_hat > 2.7);
}

TEST_CASE("estimation recovers the reference model from a simulated path") {
  BlockModel model = testing::reference_model(2.0);
  const int n = 500;
  ClusterLayout layout = build_layout(model, n);
  const std::int64_t ell = 2LL * n * n;
  SamplePath path = sample_path(model, layout, ell,
                                InitialDistribution::equilibrium(), 1234);
  TransitionDataset data;
  data.n_states = n;
  for (std::size_t t = 0; t + 1 < path.states.size(); ++t)
    data.transitions.push_back({path.states[t], path.states[t + 1]});
  for (int v = 0; v < n; ++v) data.labels.push_back(std::to_string(v + 1));

  std::vector<int> clustering(n);
  for (int v = 0; v < n; ++v) clustering[v] = layout.cluster_of(v);
  EstimatedModel est = estimate_parameters(data, clustering, 3);

  CHECK(est.lambda_hat == 2.0);  // 2 n^2 / n^2, exact
  CHECK((est.p_hat - model.p()).lpNorm<Eigen::Infinity>() < 0.02);
  CHECK((est.alpha_hat - model.alpha()).lpNorm<Eigen::Infinity>() <=
        1.0 / n + 1e-15);
  CHECK(est.alpha_hat.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(est.pi_hat.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((est.pi_hat - model.pi()).lpNorm<Eigen::Infinity>() < 0.02);

  // The estimated parameters define a valid model.
  BlockModel round_trip = est.to_block_model();
  CHECK(round_trip.K() == 3);
}

TEST_CASE("estimation error shrinks with the state-space size") {
  BlockModel model = testing::reference_model(2.0);
  double errors[2];
  int idx = 0;
  for (int n : {200, 500}) {
    ClusterLayout layout = build_layout(model, n);
    double total = 0.0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      SamplePath path = sample_path(model, layout, 2LL * n * n,
                                    InitialDistribution::equilibrium(), seed);
      TransitionDataset data;
      data.n_states = n;
      for (std::size_t t = 0; t + 1 < path.states.size(); ++t)
        data.transitions.push_back({path.states[t], path.states[t + 1]});
      std::vector<int> clustering(n);
      for (int v = 0; v < n; ++v) clustering[v] = layout.cluster_of(v);
      EstimatedModel est = estimate_parameters(data, clustering, 3);
      total += (est.p_hat - model.p()).lpNorm<Eigen::Infinity>();
    }
    errors[idx++] = total / 3.0;
  }
  CHECK(errors[1] < errors[0]);
}

TEST_CASE("single-cluster estimation is trivial") {
  TransitionDataset data = dataset_from_pairs({{0, 1}, {1, 0}, {0, 0}}, 2);
  EstimatedModel est = estimate_parameters(data, {0, 0}, 1);
  CHECK(est.p_hat(0, 0) == 1.0);
  CHECK(est.pi_hat(0) == 1.0);
  CHECK(est.alpha_hat(0) == 1.0);
}

TEST_CASE("estimation rejects degenerate clusterings") {
  TransitionDataset data = dataset_from_pairs({{0, 1}, {1, 0}}, 2);
  CHECK_THROWS_AS(estimate_parameters(data, {0, 0}, 2), EmptyCluster);
  TransitionDataset one_way = dataset_from_pairs({{0, 1}}, 2);
  CHECK_THROWS_AS(estimate_parameters(one_way, {0, 1}, 2), ZeroClusterRow);
}

TEST_CASE("clustering files resolve against the dataset labels") {
  TempDir dir;
  write_file(dir.file("seq.txt"), "a\nb\nc\na\nb\n");
  TransitionDataset data =
      read_transitions(dir.file("seq.txt"), TransitionFormat::StateSequence);
  write_file(dir.file("clusters.csv"), "state,cluster\na,1\nb,2\nc,2\n");
  int num_clusters = 0;
  std::vector<int> clustering =
      read_clustering(dir.file("clusters.csv"), data, &num_clusters);
  CHECK(num_clusters == 2);
  CHECK(clustering[0] == 0);
  CHECK(clustering[1] == 1);
  CHECK(clustering[2] == 1);

  write_file(dir.file("partial.csv"), "a,1\nb,2\n");
  CHECK_THROWS_AS(read_clustering(dir.file("partial.csv"), data, nullptr),
                  Error);
}
