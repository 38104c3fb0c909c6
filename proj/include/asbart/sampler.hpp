#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "asbart/bandwidth.hpp"
#include "asbart/feature_matrix.hpp"
#include "asbart/grow.hpp"
#include "asbart/likelihood.hpp"
#include "asbart/rng.hpp"
#include "asbart/schema.hpp"
#include "asbart/tree.hpp"

namespace asbart {

std::vector<double> default_percent_grid();  // 0, 1, ..., 20

struct FitConfig {
  int num_trees = 50;
  int sweeps = 40;
  int burn_in = 15;
  GateFamily gate = GateFamily::linear;
  std::vector<double> grid_percents = default_percent_grid();
  std::uint64_t seed = 0;
  GrowLimits limits;
  SplitPrior split_prior;
  double leaf_prior_k = 2.0;  // sigma_mu = 0.5 / (k sqrt(m)) on the range-scaled response
  double sigma_nu = 3.0;
  double sigma_quantile = 0.9;
  std::size_t max_cutpoints = 100;

  void validate() const;
  /// Percent grid actually searched: [0] for the hard gate.
  std::vector<double> effective_grid() const;
};

struct FittedModel {
  DatasetSchema schema;               // raw schema (may be empty for in-memory fits)
  std::vector<FeatureInfo> features;  // design-matrix columns used for training
  FitConfig config;
  double y_center = 0.0;
  double y_scale = 1.0;
  double sigma_mu2 = 1.0;   // scaled units
  SigmaPrior sigma_prior;   // scaled units
  std::vector<Forest> retained;         // leaf values in scaled units; sigma2 in response units
  std::vector<double> sigma2_trace;     // one per sweep, response units
  std::vector<double> residual_drift;   // max |(y - sum fit) - r| before each sweep's resync
  std::vector<double> mean_tau_trace;   // mean tree bandwidth after each sweep
  std::vector<std::vector<double>> quantile_tables;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  double seconds = 0.0;

  std::size_t num_features() const noexcept { return features.size(); }
};

struct TreeProposal {
  const DecisionTree& tree;
  double log_marginal;
};

struct MhDecision {
  bool accept = false;
  double log_ratio = 0.0;
};

/// Metropolis-Hastings step between two grown-from-root trees (proposal ratio
/// 1): accept with probability min(1, exp(delta log marginal + delta log prior)).
/// A non-finite candidate likelihood is rejected with a warning.
MhDecision mh_accept(const TreeProposal& candidate, const TreeProposal& incumbent, const SplitPrior& prior, Rng& rng);

/// Runs the sampler. `features` must already be dummy-expanded; `feature_info`
/// flags dummy columns (names are carried into the model).
FittedModel fit(const FeatureMatrix& features, const std::vector<FeatureInfo>& feature_info,
                std::span<const double> y, const FitConfig& config);

/// Posterior-mean prediction: average over retained forests.
std::vector<double> predict_mean(const FittedModel& model, const FeatureMatrix& features);
/// One row per retained forest, one column per input row.
std::vector<std::vector<double>> predict_per_sweep(const FittedModel& model, const FeatureMatrix& features);

}  // namespace asbart
