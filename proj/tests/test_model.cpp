#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "blockmc/model.hpp"
#include "blockmc/rng.hpp"
#include "test_util.hpp"

using namespace blockmc;

TEST_CASE("stationary distribution of the three-cluster reference chain") {
  Eigen::MatrixXd p(3, 3);
  p << 0.9, 0.1, 0.0,
       0.0, 0.1, 0.9,
       0.3, 0.7, 0.0;
  Eigen::VectorXd pi = stationary_distribution(p);

  // Elimination oracle; the exact solution is (27, 10, 9) / 46.
  auto oracle = testing::eliminate_stationary(
      {{0.9, 0.1, 0.0}, {0.0, 0.1, 0.9}, {0.3, 0.7, 0.0}});
  for (int i = 0; i < 3; ++i) CHECK(pi(i) == doctest::Approx(oracle[i]).epsilon(1e-12));
  CHECK(pi(0) == doctest::Approx(27.0 / 46.0).epsilon(1e-14));
  CHECK(pi(1) == doctest::Approx(10.0 / 46.0).epsilon(1e-14));
  CHECK(pi(2) == doctest::Approx(9.0 / 46.0).epsilon(1e-14));
}

TEST_CASE("stationary distribution of a symmetric two-state chain") {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  Eigen::VectorXd pi = stationary_distribution(p);
  CHECK(pi(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pi(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("reducible and periodic chains are rejected") {
  CHECK_THROWS_AS(stationary_distribution(Eigen::MatrixXd::Identity(3, 3)),
                  RejectedModel);
  Eigen::MatrixXd cycle(2, 2);
  cycle << 0.0, 1.0, 1.0, 0.0;
  CHECK_THROWS_AS(stationary_distribution(cycle), RejectedModel);
  Eigen::MatrixXd bad_row(2, 2);
  bad_row << 0.5, 0.4, 0.5, 0.5;
  CHECK_THROWS_AS(stationary_distribution(bad_row), RejectedModel);
}

TEST_CASE("stationary distribution fixed-point property on random models") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    BlockModel model = testing::random_model(rng);
    Eigen::VectorXd residual =
        (model.pi().transpose() * model.p()).transpose() - model.pi();
    CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(model.pi().sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("model validation rejects bad fractions") {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  Eigen::VectorXd alpha(2);
  alpha << 0.7, 0.4;
  CHECK_THROWS_AS(BlockModel(p, alpha, 1.0), RejectedModel);
  alpha << 0.5, 0.5;
  CHECK_THROWS_AS(BlockModel(p, alpha, 0.0), RejectedModel);
  CHECK_NOTHROW(BlockModel(p, alpha, 1.0));
}

TEST_CASE("layout sizes follow largest-remainder rounding") {
  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 1000);
  CHECK(layout.size(0) == 500);
  CHECK(layout.size(1) == 400);
  CHECK(layout.size(2) == 100);

  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  BlockModel uniform(p, alpha, 1.0);
  ClusterLayout small = build_layout(uniform, 10);
  CHECK(small.size(0) == 4);
  CHECK(small.size(1) == 3);
  CHECK(small.size(2) == 3);
}

TEST_CASE("layout forces every cluster nonempty") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
  Eigen::VectorXd alpha(3);
  alpha << 0.98, 0.01, 0.01;
  BlockModel model(p, alpha, 1.0);
  ClusterLayout layout = build_layout(model, 3);
  CHECK(layout.size(0) == 1);
  CHECK(layout.size(1) == 1);
  CHECK(layout.size(2) == 1);
  CHECK_THROWS_AS(build_layout(model, 2), RejectedModel);
}

TEST_CASE("layout sizes sum to n and respect the rounding slack") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    BlockModel model = testing::random_model(rng);
    int n = model.K() + static_cast<int>(rng.bounded(2000));
    ClusterLayout layout = build_layout(model, n);
    int total = 0;
    for (int k = 0; k < model.K(); ++k) {
      CHECK(layout.size(k) >= 1);
      CHECK(std::abs(layout.size(k) - model.alpha()(k) * n) <=
            static_cast<double>(model.K()));
      total += layout.size(k);
    }
    CHECK(total == n);
    CHECK(layout.cluster_of(0) == 0);
    CHECK(layout.cluster_of(n - 1) == model.K() - 1);
  }
}

TEST_CASE("edge rate formula on the reference model") {
  BlockModel model = testing::reference_model(2.0);
  // 2 * (27/46) * 0.1 / (0.5 * 0.4) = 27/46.
  CHECK(edge_rate(model, 0, 1) == doctest::Approx(27.0 / 46.0).epsilon(1e-14));
  CHECK(edge_rate(model, 0, 2) == 0.0);
  BlockModel single = testing::single_cluster_model(1.0);
  CHECK(edge_rate(single, 0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("edge rates aggregate back to the equilibrium distribution") {
  SplitMix64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    BlockModel model = testing::random_model(rng);
    for (int k1 = 0; k1 < model.K(); ++k1) {
      double sum = 0.0;
      for (int k2 = 0; k2 < model.K(); ++k2)
        sum += model.alpha()(k2) * edge_rate(model, k1, k2) *
               model.alpha()(k1) / model.lambda();
      CHECK(sum == doctest::Approx(model.pi()(k1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("equilibrium over states") {
  BlockModel single = testing::single_cluster_model(1.0);
  ClusterLayout four = build_layout(single, 4);
  Eigen::VectorXd uniform = equilibrium_over_states(single, four);
  for (int v = 0; v < 4; ++v) CHECK(uniform(v) == doctest::Approx(0.25));

  BlockModel model = testing::reference_model();
  ClusterLayout layout = build_layout(model, 1000);
  Eigen::VectorXd pix = equilibrium_over_states(model, layout);
  CHECK(pix(0) == doctest::Approx((27.0 / 46.0) / 500.0).epsilon(1e-12));
  CHECK(pix.sum() == doctest::Approx(1.0).epsilon(1e-10));

  SplitMix64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    BlockModel random = testing::random_model(rng);
    int n = random.K() + static_cast<int>(rng.bounded(500));
    ClusterLayout rl = build_layout(random, n);
    CHECK(equilibrium_over_states(random, rl).sum() ==
          doctest::Approx(1.0).epsilon(1e-10));
  }
}
