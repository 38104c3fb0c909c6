#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "asbart/error.hpp"
#include "asbart/grow.hpp"
#include "asbart/sampler.hpp"

using namespace asbart;

namespace {

struct Problem {
  FeatureMatrix x;
  std::vector<FeatureInfo> info;
  std::vector<double> y;
};

Problem smooth_problem(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.2);
  Problem p{FeatureMatrix(n, 3), {}, std::vector<double>(n)};
  for (std::size_t j = 0; j < 3; ++j) p.info.push_back({"x" + std::to_string(j + 1), false, "x" + std::to_string(j + 1), -1});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) p.x(i, j) = uniform01(rng);
    p.y[i] = 3.0 * std::sin(3.0 * p.x(i, 0)) + 2.0 * p.x(i, 1) + noise(rng);
  }
  return p;
}

FitConfig small_config(GateFamily gate) {
  FitConfig config;
  config.num_trees = 8;
  config.sweeps = 6;
  config.burn_in = 2;
  config.gate = gate;
  config.seed = 17;
  return config;
}

double traverse(const DecisionTree& tree, std::span<const double> x) {
  NodeId id = 0;
  while (!tree.node(id).is_leaf) {
    const auto& node = tree.node(id);
    id = x[static_cast<std::size_t>(node.split_var)] < node.cutpoint ? node.left : node.right;
  }
  return tree.node(id).leaf_value;
}

}  // namespace

TEST_CASE("mh_accept: identical and better candidates are always accepted") {
  DecisionTree tree;
  tree.split_leaf(0, 0, 0.5, false);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(mh_accept({tree, -10.0}, {tree, -10.0}, SplitPrior{}, rng).accept);
    CHECK(mh_accept({tree, -9.0}, {tree, -10.0}, SplitPrior{}, rng).accept);
  }
}

TEST_CASE("mh_accept: log ratio log(0.5) accepts half the time") {
  DecisionTree tree;
  Rng rng(2024);
  const int draws = 100000;
  int accepted = 0;
  for (int i = 0; i < draws; ++i) accepted += mh_accept({tree, std::log(0.5)}, {tree, 0.0}, SplitPrior{}, rng).accept;
  const double se = std::sqrt(0.25 / draws);
  CHECK(std::abs(static_cast<double>(accepted) / draws - 0.5) < 3.0 * se);
}

TEST_CASE("mh_accept includes the depth prior") {
  DecisionTree leaf, stump;
  stump.split_leaf(0, 0, 0.5, false);
  Rng rng(3);
  const auto decision = mh_accept({stump, 0.0}, {leaf, 0.0}, SplitPrior{}, rng);
  CHECK(decision.log_ratio == doctest::Approx(tree_log_prior(stump, SplitPrior{}) - tree_log_prior(leaf, SplitPrior{})));
}

TEST_CASE("mh_accept rejects a non-finite candidate with a warning") {
  std::vector<std::string> warnings;
  set_warning_handler([&](std::string_view msg) { warnings.emplace_back(msg); });
  DecisionTree tree;
  Rng rng(4);
  CHECK_FALSE(mh_accept({tree, std::nan("")}, {tree, -1.0}, SplitPrior{}, rng).accept);
  CHECK_FALSE(mh_accept({tree, INFINITY}, {tree, -1.0}, SplitPrior{}, rng).accept);
  set_warning_handler(nullptr);
  CHECK(warnings.size() == 2);
}

TEST_CASE("config validation") {
  FitConfig config;
  CHECK_NOTHROW(config.validate());
  config.burn_in = config.sweeps;
  CHECK_THROWS_AS(config.validate(), Error);
  config = FitConfig{};
  config.grid_percents = {0, 5, 3};
  CHECK_THROWS_AS(config.validate(), Error);
  config = FitConfig{};
  config.num_trees = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config = FitConfig{};
  config.gate = GateFamily::hard;
  CHECK(config.effective_grid() == std::vector<double>{0.0});
}

TEST_CASE("constant response: intercept-only behavior") {
  FeatureMatrix x(50, 1);
  for (std::size_t i = 0; i < 50; ++i) x(i, 0) = static_cast<double>(i);
  const std::vector<double> y(50, 4.25);
  FitConfig config;
  config.num_trees = 1;
  config.sweeps = 2;
  config.burn_in = 1;
  const auto model = fit(x, {{"x", false, "x", -1}}, y, config);
  REQUIRE(model.retained.size() == 1);
  const auto pred = predict_mean(model, x);
  const double posterior_sd = std::sqrt(model.sigma2_trace.back() / 50.0) + std::sqrt(model.sigma_mu2);
  for (double v : pred) CHECK(std::abs(v - 4.25) < 2.0 * posterior_sd);
}

TEST_CASE("fit bookkeeping: trace lengths, retained count, drift, positivity") {
  const auto p = smooth_problem(200, 1);
  for (auto gate : {GateFamily::linear, GateFamily::sigmoid, GateFamily::hard}) {
    const auto config = small_config(gate);
    const auto model = fit(p.x, p.info, p.y, config);
    CHECK(model.sigma2_trace.size() == static_cast<std::size_t>(config.sweeps));
    CHECK(model.retained.size() == static_cast<std::size_t>(config.sweeps - config.burn_in));
    CHECK(model.residual_drift.size() == static_cast<std::size_t>(config.sweeps));
    for (double d : model.residual_drift) CHECK(d <= 1e-8);
    for (double s : model.sigma2_trace) CHECK(s > 0.0);
    CHECK(model.proposals == static_cast<std::size_t>(config.sweeps * config.num_trees));
    for (const auto& forest : model.retained) CHECK(forest.trees.size() == static_cast<std::size_t>(config.num_trees));
  }
}

TEST_CASE("soft fits pick up positive bandwidths; hard grid keeps every tree hard") {
  const auto p = smooth_problem(200, 2);
  const auto soft = fit(p.x, p.info, p.y, small_config(GateFamily::linear));
  double max_tau = 0.0;
  for (const auto& forest : soft.retained)
    for (const auto& t : forest.trees) max_tau = std::max(max_tau, t.tau());
  CHECK(max_tau > 0.0);

  auto config = small_config(GateFamily::sigmoid);
  config.grid_percents = {0.0};
  const auto hard = fit(p.x, p.info, p.y, config);
  for (const auto& forest : hard.retained)
    for (const auto& t : forest.trees) CHECK(t.tau() == 0.0);
}

TEST_CASE("seeded determinism: bit-identical sigma2 traces and predictions") {
  const auto p = smooth_problem(150, 3);
  const auto config = small_config(GateFamily::linear);
  const auto a = fit(p.x, p.info, p.y, config);
  const auto b = fit(p.x, p.info, p.y, config);
  CHECK(a.sigma2_trace == b.sigma2_trace);
  CHECK(predict_mean(a, p.x) == predict_mean(b, p.x));
  auto other = config;
  other.seed = 18;
  CHECK(fit(p.x, p.info, p.y, other).sigma2_trace != a.sigma2_trace);
}

TEST_CASE("prediction aggregation") {
  const auto p = smooth_problem(120, 4);
  auto config = small_config(GateFamily::linear);
  const auto model = fit(p.x, p.info, p.y, config);
  const auto per = predict_per_sweep(model, p.x);
  const auto mean = predict_mean(model, p.x);
  REQUIRE(per.size() == model.retained.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    double total = 0.0;
    for (const auto& row : per) total += row[i];
    CHECK(mean[i] == total / static_cast<double>(per.size()));
  }

  config.sweeps = config.burn_in + 1;
  const auto single = fit(p.x, p.info, p.y, config);
  CHECK(predict_mean(single, p.x) == predict_per_sweep(single, p.x)[0]);

  FeatureMatrix wrong(3, 2);
  CHECK_THROWS_AS(predict_mean(model, wrong), Error);
}

TEST_CASE("hard-mode predictions equal an independent traversal average") {
  const auto p = smooth_problem(150, 5);
  const auto model = fit(p.x, p.info, p.y, small_config(GateFamily::hard));
  const auto pred = predict_mean(model, p.x);
  for (std::size_t i = 0; i < 150; ++i) {
    const auto row = p.x.row(i);
    double total = 0.0;
    for (const auto& forest : model.retained) {
      double f = 0.0;
      for (const auto& tree : forest.trees) f += traverse(tree, row);
      total += model.y_center + model.y_scale * f;
    }
    CHECK(pred[i] == doctest::Approx(total / static_cast<double>(model.retained.size())).epsilon(1e-12));
  }
}

TEST_CASE("fit recovers a smooth signal better than the mean") {
  const auto train = smooth_problem(400, 6);
  const auto test = smooth_problem(400, 7);
  FitConfig config;
  config.num_trees = 20;
  config.sweeps = 15;
  config.burn_in = 5;
  const auto model = fit(train.x, train.info, train.y, config);
  const auto pred = predict_mean(model, test.x);
  const double mean_y = std::accumulate(train.y.begin(), train.y.end(), 0.0) / 400.0;
  double sse = 0.0, sse_mean = 0.0;
  for (std::size_t i = 0; i < 400; ++i) {
    sse += (pred[i] - test.y[i]) * (pred[i] - test.y[i]);
    sse_mean += (mean_y - test.y[i]) * (mean_y - test.y[i]);
  }
  CHECK(sse < 0.1 * sse_mean);
}

TEST_CASE("fit input validation") {
  const auto p = smooth_problem(20, 8);
  auto y = p.y;
  y[3] = std::nan("");
  CHECK_THROWS_AS(fit(p.x, p.info, y, small_config(GateFamily::linear)), Error);
  CHECK_THROWS_AS(fit(p.x, p.info, std::vector<double>(5, 0.0), small_config(GateFamily::linear)), Error);
  auto info = p.info;
  info.pop_back();
  CHECK_THROWS_AS(fit(p.x, info, p.y, small_config(GateFamily::linear)), Error);
}
