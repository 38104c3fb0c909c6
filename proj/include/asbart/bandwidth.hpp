#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "asbart/feature_matrix.hpp"
#include "asbart/likelihood.hpp"
#include "asbart/rng.hpp"
#include "asbart/tree.hpp"

namespace asbart {

// Bandwidth grid in percent-of-population units together with the sorted
// training columns used to translate a percent into raw-unit tau around a
// given cutpoint.
class BandwidthGrid {
 public:
  BandwidthGrid() = default;
  BandwidthGrid(std::vector<double> percents, std::vector<std::vector<double>> sorted_columns);
  static BandwidthGrid build(const FeatureMatrix& features, std::vector<double> percents);

  const std::vector<double>& percents() const noexcept { return percents_; }
  const std::vector<std::vector<double>>& quantile_tables() const noexcept { return sorted_; }

  /// Smallest tau such that at least ceil(2p% of n) training values of
  /// `feature` lie in [c - tau, c + tau]. p = 0 gives 0.
  double percent_to_tau(double percent, std::size_t feature, double cutpoint) const;
  /// percent_to_tau for every grid percent, sharing one outward scan.
  std::vector<double> taus_for_cut(std::size_t feature, double cutpoint) const;
  /// Tree-level tau for every grid percent: the median over the tree's
  /// ordinal branches of the per-branch tau. All zeros when the tree has no
  /// ordinal branch.
  std::vector<double> tree_taus(const DecisionTree& tree) const;

 private:
  std::vector<double> percents_;
  std::vector<std::vector<double>> sorted_;
};

/// Validates a percent grid: strictly increasing, within [0, 50], starting at 0.
void validate_percent_grid(std::span<const double> percents);

// Row-compressed leaf probabilities of the training rows.
struct SparsePhi {
  std::vector<std::uint32_t> row_start{0};
  std::vector<std::uint32_t> leaf;
  std::vector<double> prob;

  std::size_t rows() const noexcept { return row_start.size() - 1; }
};

// Everything needed after evaluating a tree's marginal likelihood against a
// residual vector: the value itself and the sufficient statistics to draw
// leaf values and compute the tree's fit on the training rows.
struct TreeEvaluation {
  double log_marginal = 0.0;
  bool soft = false;
  // hard
  std::vector<std::uint32_t> leaf_of;
  LeafSuffStats hard_stats;
  // soft
  SparsePhi phi;
  SoftPosterior posterior;
};

/// Marginal likelihood of `tree` (at its own tau and gate) for `residuals`.
TreeEvaluation evaluate_tree(const DecisionTree& tree, const FeatureMatrix& features,
                             std::span<const double> residuals, double sigma2, double sigma_mu2);

std::vector<double> draw_leaf_values(const TreeEvaluation& eval, double sigma2, double sigma_mu2, Rng& rng);

/// Tree contribution on each training row given its leaf values.
std::vector<double> training_fit(const TreeEvaluation& eval, std::span<const double> leaf_values);

struct BandwidthCandidate {
  double percent = 0.0;
  double tau = 0.0;
  double log_marginal = 0.0;
  bool failed = false;
};

struct BandwidthSearchResult {
  double tau = 0.0;
  double percent = 0.0;
  bool skipped = false;  // single leaf or dummy-only tree
  std::vector<BandwidthCandidate> candidates;
  TreeEvaluation best;
};

/// Grid search for the tree-level bandwidth maximizing the soft marginal
/// likelihood. The tree must be hard (tau = 0); its gate family is used for
/// the smoothed evaluations.
BandwidthSearchResult search_bandwidth(const DecisionTree& tree, const FeatureMatrix& features,
                                       std::span<const double> residuals, const BandwidthGrid& grid, double sigma2,
                                       double sigma_mu2);

}  // namespace asbart
