#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "asbart/feature_matrix.hpp"
#include "asbart/rng.hpp"
#include "asbart/tree.hpp"

namespace asbart {

struct SplitPrior {
  double alpha = 0.95;
  double beta = 2.0;
};

/// Prior probability alpha * (1 + depth)^-beta that a node at `depth` splits.
double split_prob(int depth, const SplitPrior& prior);

/// log P(T) up to the split-variable/cutpoint factors, which cancel between
/// grown-from-root trees: sum over branches of log p_d plus sum over leaves of
/// log(1 - p_d).
double tree_log_prior(const DecisionTree& tree, const SplitPrior& prior);

// Candidate cutpoints per feature, in raw units. Ordinal features get the
// midpoints between consecutive distinct values, thinned by uniform striding
// to at most `max_per_feature`; dummy features get the single cut 0.5.
struct CutpointGrid {
  std::vector<std::vector<double>> cutpoints;
  std::vector<bool> is_dummy;

  static CutpointGrid build(const FeatureMatrix& features, const std::vector<bool>& is_dummy,
                            std::size_t max_per_feature = 100);
  std::size_t num_features() const noexcept { return cutpoints.size(); }
};

// Samples reaching a node, with every feature's presorted ordering restricted
// to those samples.
struct NodeWorkset {
  std::vector<std::uint32_t> samples;             // ascending sample ids
  std::vector<std::vector<std::uint32_t>> sorted; // per feature, ordered by value (ties by id)
  int depth = 0;

  std::size_t size() const noexcept { return samples.size(); }
  static NodeWorkset root(const FeatureMatrix& features);
  /// Splits into the samples with x[feature] < cutpoint and the rest.
  std::pair<NodeWorkset, NodeWorkset> partition(const FeatureMatrix& features, int feature, double cutpoint) const;
};

struct SplitCandidate {
  int feature = -1;
  double cutpoint = 0.0;
  double log_lik = 0.0;
  std::size_t left_count = 0;
  double left_sum = 0.0;
};

struct SplitTable {
  std::vector<SplitCandidate> candidates;
  double no_split_log_lik = 0.0;
  std::size_t node_count = 0;
  double node_sum = 0.0;
};

/// Hard two-leaf log marginal for every candidate (feature, cutpoint) that
/// leaves at least `min_child` samples on both sides, plus the one-leaf value,
/// all restricted to the node's samples. One cumulative sweep per feature.
/// `features_to_scan` empty means all features.
SplitTable enumerate_split_loglik(const NodeWorkset& work, const FeatureMatrix& features, const CutpointGrid& grid,
                                  std::span<const double> residuals, double sigma2, double sigma_mu2,
                                  std::size_t min_child = 1, std::span<const int> features_to_scan = {});

/// Draws a split with weight exp(log_lik) or stopping with weight
/// |C| (1 - p_d) / p_d exp(no_split_log_lik). Returns nullopt for stop.
std::optional<SplitCandidate> sample_split_or_stop(const SplitTable& table, int depth, const SplitPrior& prior,
                                                   Rng& rng);

/// Probability of stopping implied by the weights above (for diagnostics/tests).
double stop_probability(const SplitTable& table, int depth, const SplitPrior& prior);

struct GrowLimits {
  int max_depth = 10;
  std::size_t min_node_size = 5;
  std::size_t features_per_node = 0;  // 0 = scan every feature
};

struct GrowContext {
  const FeatureMatrix& features;
  const CutpointGrid& grid;
  const NodeWorkset& root;  // presorted orderings over all samples
  SplitPrior prior;
  GrowLimits limits;
  double sigma2 = 1.0;
  double sigma_mu2 = 1.0;
};

/// Grows a hard (tau = 0) tree from a single root by repeated
/// enumerate -> sample until every node stops. Leaf values are left at 0.
DecisionTree grow_from_root(const GrowContext& ctx, std::span<const double> residuals, Rng& rng);

}  // namespace asbart
