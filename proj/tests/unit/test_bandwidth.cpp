#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "asbart/bandwidth.hpp"
#include "asbart/error.hpp"
#include "asbart/grow.hpp"
#include "asbart/sampler.hpp"

using namespace asbart;

namespace {

// Counting oracle over the candidate set {|x - c|}: the smallest tau with
// #{x in [c - tau, c + tau]} >= 2p% of n.
double counting_tau(const std::vector<double>& xs, double c, double percent) {
  if (percent == 0.0) return 0.0;
  const double need = 2.0 * percent / 100.0 * static_cast<double>(xs.size());
  std::vector<double> dist;
  for (double x : xs) dist.push_back(std::abs(x - c));
  std::sort(dist.begin(), dist.end());
  for (double tau : dist) {
    const auto count = std::count_if(xs.begin(), xs.end(), [&](double x) { return std::abs(x - c) <= tau; });
    if (static_cast<double>(count) >= need - 1e-9) return tau;
  }
  return dist.back();
}

FeatureMatrix column(const std::vector<double>& xs) {
  FeatureMatrix x(xs.size(), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) x(i, 0) = xs[i];
  return x;
}

FeatureMatrix uniform_matrix(std::size_t n, std::size_t p, Rng& rng) {
  FeatureMatrix x(n, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) x(i, j) = uniform01(rng);
  return x;
}

DecisionTree two_split_tree(GateFamily gate) {
  DecisionTree tree;
  auto [left, right] = tree.split_leaf(0, 0, 0.5, false);
  tree.split_leaf(right, 1, 0.3, false);
  (void)left;
  tree.set_gate(gate);
  return tree;
}

}  // namespace

TEST_CASE("percent grid validation") {
  CHECK_NOTHROW(validate_percent_grid(default_percent_grid()));
  CHECK_THROWS_AS(validate_percent_grid(std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(validate_percent_grid(std::vector<double>{0, 2, 2}), Error);
  CHECK_THROWS_AS(validate_percent_grid(std::vector<double>{0, 60}), Error);
  CHECK_THROWS_AS(validate_percent_grid(std::vector<double>{}), Error);
}

TEST_CASE("percent_to_tau on an explicit integer grid") {
  std::vector<double> xs(100);
  for (int i = 0; i < 100; ++i) xs[static_cast<std::size_t>(i)] = i + 1;
  const auto grid = BandwidthGrid::build(column(xs), default_percent_grid());
  CHECK(grid.percent_to_tau(0.0, 0, 50.0) == 0.0);
  CHECK(grid.percent_to_tau(10.0, 0, 50.0) == 10.0);
  // At the sample minimum the window reaches one-sidedly to the 20th value.
  CHECK(grid.percent_to_tau(10.0, 0, 1.0) == 19.0);
  CHECK_THROWS_AS(grid.percent_to_tau(10.0, 3, 50.0), Error);
  CHECK_THROWS_AS(grid.percent_to_tau(60.0, 0, 50.0), Error);
}

TEST_CASE("percent_to_tau agrees with a counting oracle and is monotone") {
  Rng rng(8);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(37 + trial);
    for (auto& v : xs) v = std::round(normal(rng) * 4.0) / 4.0;
    const auto grid = BandwidthGrid::build(column(xs), default_percent_grid());
    const double c = normal(rng);
    const auto taus = grid.taus_for_cut(0, c);
    REQUIRE(taus.size() == 21);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      CHECK(taus[k] == doctest::Approx(counting_tau(xs, c, static_cast<double>(k))).epsilon(1e-12));
      CHECK(taus[k] == grid.percent_to_tau(static_cast<double>(k), 0, c));
      if (k > 0) CHECK(taus[k] >= taus[k - 1]);
    }
  }
}

TEST_CASE("tree-level tau is the median over ordinal branches") {
  std::vector<double> xs(100);
  for (int i = 0; i < 100; ++i) xs[static_cast<std::size_t>(i)] = i + 1;
  FeatureMatrix x(100, 3);
  for (std::size_t i = 0; i < 100; ++i) {
    x(i, 0) = xs[i];
    x(i, 1) = 2.0 * xs[i];
    x(i, 2) = static_cast<double>(i % 2);
  }
  const auto grid = BandwidthGrid::build(x, {0, 10});
  DecisionTree tree;
  auto [l, r] = tree.split_leaf(0, 0, 50.0, false);
  auto [rl, rr] = tree.split_leaf(r, 1, 100.0, false);
  tree.split_leaf(l, 2, 0.5, true);
  (void)rl;
  (void)rr;
  // Ordinal branches give 10 and 20; the dummy branch is ignored.
  CHECK(grid.tree_taus(tree) == std::vector<double>{0.0, 15.0});

  DecisionTree dummy_only;
  dummy_only.split_leaf(0, 2, 0.5, true);
  CHECK(grid.tree_taus(dummy_only) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("evaluate_tree matches the dense soft marginal and the dense oracle") {
  Rng rng(41);
  std::normal_distribution<double> normal;
  for (auto gate : {GateFamily::linear, GateFamily::sigmoid}) {
    for (double tau : {0.0, 0.05, 0.2, 1.0}) {
      const auto x = uniform_matrix(40, 2, rng);
      std::vector<double> r(40);
      for (auto& v : r) v = normal(rng);
      auto tree = two_split_tree(gate);
      tree.set_tau(tau);
      const auto eval = evaluate_tree(tree, x, r, 0.7, 0.4);
      CHECK(eval.soft == (tau > 0.0));

      Eigen::MatrixXd phi(40, 3);
      for (std::size_t i = 0; i < 40; ++i) {
        const auto p = leaf_probabilities(tree, x.row(i));
        for (std::size_t k = 0; k < 3; ++k) phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = p[k];
      }
      const Eigen::Map<const Eigen::VectorXd> rv(r.data(), 40);
      const double oracle = asbart::testing::tree_marginal_oracle(rv, phi, 0.7, 0.4);
      CHECK(std::abs(eval.log_marginal - oracle) < 1e-8);
      CHECK(eval.log_marginal == doctest::Approx(soft_log_marginal(phi, r, 0.7, 0.4).log_marginal).epsilon(1e-12));

      const std::vector<double> values{1.0, -2.0, 0.5};
      const auto fit = training_fit(eval, values);
      const Eigen::VectorXd expected = phi * Eigen::Vector3d(1.0, -2.0, 0.5);
      for (std::size_t i = 0; i < 40; ++i) CHECK(fit[i] == doctest::Approx(expected[static_cast<Eigen::Index>(i)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("search_bandwidth: skipped for single-leaf and dummy-only trees") {
  Rng rng(2);
  FeatureMatrix x = uniform_matrix(30, 2, rng);
  for (std::size_t i = 0; i < 30; ++i) x(i, 1) = static_cast<double>(i % 2);
  std::vector<double> r(30, 0.3);
  const auto grid = BandwidthGrid::build(x, default_percent_grid());

  DecisionTree leaf;
  leaf.set_gate(GateFamily::linear);
  auto result = search_bandwidth(leaf, x, r, grid, 1.0, 1.0);
  CHECK(result.skipped);
  CHECK(result.tau == 0.0);
  const std::vector<std::size_t> zeros(30, 0);
  CHECK(result.best.log_marginal ==
        doctest::Approx(hard_log_marginal(LeafSuffStats::from_assignment(zeros, r, 1), 1.0, 1.0)));

  DecisionTree dummy;
  dummy.split_leaf(0, 1, 0.5, true);
  dummy.set_gate(GateFamily::linear);
  result = search_bandwidth(dummy, x, r, grid, 1.0, 1.0);
  CHECK(result.skipped);
  CHECK(result.tau == 0.0);
}

TEST_CASE("search_bandwidth returns the argmax and never loses to the hard tree") {
  Rng rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = uniform_matrix(80, 2, rng);
    std::vector<double> r(80);
    for (std::size_t i = 0; i < 80; ++i) r[i] = std::tanh((x(i, 0) - 0.5) * 5.0) + 0.3 * normal(rng);
    const auto grid = BandwidthGrid::build(x, default_percent_grid());
    const auto tree = two_split_tree(GateFamily::linear);
    const auto result = search_bandwidth(tree, x, r, grid, 0.09, 0.5);
    CHECK_FALSE(result.skipped);
    REQUIRE(result.candidates.size() == 21);
    double best = -INFINITY;
    for (const auto& c : result.candidates) best = std::max(best, c.log_marginal);
    CHECK(result.best.log_marginal == best);
    CHECK(result.best.log_marginal >= evaluate_tree(tree, x, r, 0.09, 0.5).log_marginal);
    auto smoothed = tree;
    smoothed.set_tau(result.tau);
    CHECK(evaluate_tree(smoothed, x, r, 0.09, 0.5).log_marginal == doctest::Approx(best).epsilon(1e-12));
  }
  DecisionTree soft = two_split_tree(GateFamily::linear);
  soft.set_tau(0.1);
  const auto x = uniform_matrix(10, 2, rng);
  CHECK_THROWS_AS(search_bandwidth(soft, x, std::vector<double>(10, 0.0), BandwidthGrid::build(x, {0, 5}), 1.0, 1.0),
                  Error);
}

TEST_CASE("smooth logistic signal selects a positive bandwidth") {
  int positive = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 0.05);
    const auto x = uniform_matrix(500, 1, rng);
    std::vector<double> r(500);
    for (std::size_t i = 0; i < 500; ++i) r[i] = asbart::testing::logistic((x(i, 0) - 0.5) / 0.1) - 0.5 + normal(rng);
    const auto cuts = CutpointGrid::build(x, {false});
    const auto root = NodeWorkset::root(x);
    const GrowContext ctx{x, cuts, root, SplitPrior{}, GrowLimits{}, 0.0025, 0.25};
    auto tree = grow_from_root(ctx, r, rng);
    tree.set_gate(GateFamily::linear);
    const auto result = search_bandwidth(tree, x, r, BandwidthGrid::build(x, default_percent_grid()), 0.0025, 0.25);
    positive += result.tau > 0.0;
  }
  MESSAGE("positive bandwidth in " << positive << " of 100 runs");
  CHECK(positive >= 80);
}
