#include "asbart/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "asbart/error.hpp"

namespace asbart {

std::vector<double> default_percent_grid() {
  std::vector<double> grid(21);
  std::iota(grid.begin(), grid.end(), 0.0);
  return grid;
}

void FitConfig::validate() const {
  if (num_trees < 1) throw invalid_argument("num_trees must be >= 1");
  if (sweeps < 1) throw invalid_argument("sweeps must be >= 1");
  if (burn_in < 0 || burn_in >= sweeps) throw invalid_argument("burn_in must satisfy 0 <= burn_in < sweeps");
  validate_percent_grid(grid_percents);
  if (limits.max_depth < 0) throw invalid_argument("max_depth must be >= 0");
  if (limits.min_node_size < 1) throw invalid_argument("min_node_size must be >= 1");
  if (!(split_prior.alpha > 0.0 && split_prior.alpha < 1.0)) throw invalid_argument("alpha must lie in (0, 1)");
  if (!(split_prior.beta >= 0.0)) throw invalid_argument("beta must be >= 0");
  if (!(leaf_prior_k > 0.0)) throw invalid_argument("leaf prior k must be > 0");
  if (!(sigma_nu > 0.0)) throw invalid_argument("sigma nu must be > 0");
  if (!(sigma_quantile > 0.0 && sigma_quantile < 1.0)) throw invalid_argument("sigma quantile must lie in (0, 1)");
  if (max_cutpoints < 1) throw invalid_argument("max_cutpoints must be >= 1");
}

std::vector<double> FitConfig::effective_grid() const {
  if (gate == GateFamily::hard) return {0.0};
  return grid_percents;
}

MhDecision mh_accept(const TreeProposal& candidate, const TreeProposal& incumbent, const SplitPrior& prior, Rng& rng) {
  if (!std::isfinite(candidate.log_marginal)) {
    warn("MH step: candidate log marginal is not finite; rejecting");
    return {false, -INFINITY};
  }
  const double log_ratio = (candidate.log_marginal + tree_log_prior(candidate.tree, prior)) -
                           (incumbent.log_marginal + tree_log_prior(incumbent.tree, prior));
  if (log_ratio >= 0.0 || !std::isfinite(incumbent.log_marginal)) return {true, log_ratio};
  return {std::log(uniform01(rng)) < log_ratio, log_ratio};
}

namespace {

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

FittedModel fit(const FeatureMatrix& features, const std::vector<FeatureInfo>& feature_info,
                std::span<const double> y, const FitConfig& config) {
  config.validate();
  const std::size_t n = features.rows();
  if (n == 0) throw invalid_argument("fit: no training rows");
  if (y.size() != n) throw invalid_argument("fit: response length does not match feature rows");
  if (feature_info.size() != features.cols()) throw invalid_argument("fit: feature info does not match columns");
  for (double v : y)
    if (!std::isfinite(v)) throw invalid_argument("fit: non-finite response value");
  for (std::size_t j = 0; j < features.cols(); ++j)
    for (double v : features.col(j))
      if (!std::isfinite(v)) throw invalid_argument("fit: non-finite value in feature '" + feature_info[j].name + "'");

  const auto started = std::chrono::steady_clock::now();
  FittedModel model;
  model.features = feature_info;
  model.config = config;
  model.config.grid_percents = config.effective_grid();

  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  model.y_center = mean_of(y);
  model.y_scale = *hi > *lo ? *hi - *lo : 1.0;
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) target[i] = (y[i] - model.y_center) / model.y_scale;

  const int m = config.num_trees;
  const double sigma_mu = 0.5 / (config.leaf_prior_k * std::sqrt(static_cast<double>(m)));
  model.sigma_mu2 = sigma_mu * sigma_mu;
  double sigma_hat = sample_sd(target);
  if (!(sigma_hat > 0.0)) sigma_hat = 1.0;
  model.sigma_prior = {config.sigma_nu, calibrate_sigma_lambda(sigma_hat, config.sigma_nu, config.sigma_quantile)};
  double sigma2 = sigma_hat * sigma_hat;

  std::vector<bool> is_dummy(features.cols());
  for (std::size_t j = 0; j < features.cols(); ++j) is_dummy[j] = feature_info[j].is_dummy;
  const CutpointGrid cut_grid = CutpointGrid::build(features, is_dummy, config.max_cutpoints);
  const BandwidthGrid bw_grid = BandwidthGrid::build(features, model.config.grid_percents);
  model.quantile_tables = bw_grid.quantile_tables();
  const NodeWorkset root = NodeWorkset::root(features);

  Rng rng(config.seed);
  std::vector<DecisionTree> trees(static_cast<std::size_t>(m));
  for (auto& t : trees) t.set_gate(config.gate);
  std::vector<std::vector<double>> fits(static_cast<std::size_t>(m), std::vector<double>(n, 0.0));
  std::vector<double> residual = target;
  std::vector<double> partial(n);

  for (int sweep = 1; sweep <= config.sweeps; ++sweep) {
    const GrowContext ctx{features, cut_grid, root, config.split_prior, config.limits, sigma2, model.sigma_mu2};
    for (int l = 0; l < m; ++l) {
      try {
        auto& tree = trees[static_cast<std::size_t>(l)];
        auto& tree_fit = fits[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < n; ++i) partial[i] = residual[i] + tree_fit[i];

        DecisionTree candidate = grow_from_root(ctx, partial, rng);
        candidate.set_gate(config.gate);
        BandwidthSearchResult search = search_bandwidth(candidate, features, partial, bw_grid, sigma2, model.sigma_mu2);
        candidate.set_tau(search.tau);

        TreeEvaluation incumbent = evaluate_tree(tree, features, partial, sigma2, model.sigma_mu2);
        const auto decision = mh_accept({candidate, search.best.log_marginal}, {tree, incumbent.log_marginal},
                                        config.split_prior, rng);
        ++model.proposals;
        const TreeEvaluation* chosen = &incumbent;
        if (decision.accept) {
          ++model.accepted;
          tree = std::move(candidate);
          chosen = &search.best;
        }
        const auto values = draw_leaf_values(*chosen, sigma2, model.sigma_mu2, rng);
        tree.set_leaf_values(values);
        tree_fit = training_fit(*chosen, values);
        for (std::size_t i = 0; i < n; ++i) residual[i] = partial[i] - tree_fit[i];
      } catch (const Error& e) {
        throw Error(e.code(), "sweep " + std::to_string(sweep) + ", tree " + std::to_string(l + 1) + ": " + e.what());
      }
    }

    double drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double exact = target[i];
      for (const auto& f : fits) exact -= f[i];
      drift = std::max(drift, std::abs(exact - residual[i]));
      residual[i] = exact;
    }
    model.residual_drift.push_back(drift);

    sigma2 = draw_sigma2(residual, model.sigma_prior, rng);
    model.sigma2_trace.push_back(sigma2 * model.y_scale * model.y_scale);
    double tau_sum = 0.0;
    for (const auto& t : trees) tau_sum += t.tau();
    model.mean_tau_trace.push_back(tau_sum / static_cast<double>(m));
    if (sweep > config.burn_in) model.retained.push_back(Forest{trees, model.sigma2_trace.back()});
  }
  model.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return model;
}

std::vector<std::vector<double>> predict_per_sweep(const FittedModel& model, const FeatureMatrix& features) {
  if (model.retained.empty()) throw invalid_argument("predict: model has no retained forests");
  if (features.cols() != model.num_features()) {
    throw invalid_argument("predict: expected " + std::to_string(model.num_features()) + " features, got " +
                           std::to_string(features.cols()));
  }
  std::vector<std::vector<double>> out(model.retained.size(), std::vector<double>(features.rows()));
  std::vector<double> row(features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t j = 0; j < features.cols(); ++j) row[j] = features(i, j);
    for (std::size_t s = 0; s < model.retained.size(); ++s) {
      out[s][i] = model.y_center + model.y_scale * predict_single(model.retained[s], row);
    }
  }
  return out;
}

std::vector<double> predict_mean(const FittedModel& model, const FeatureMatrix& features) {
  const auto draws = predict_per_sweep(model, features);
  std::vector<double> mean(features.rows(), 0.0);
  for (const auto& d : draws)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += d[i];
  for (double& v : mean) v /= static_cast<double>(draws.size());
  return mean;
}

}  // namespace asbart
