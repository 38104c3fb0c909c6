#include "asbart/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asbart/error.hpp"

namespace asbart {

void validate_percent_grid(std::span<const double> percents) {
  if (percents.empty() || percents.front() != 0.0) throw invalid_argument("bandwidth grid must start at 0%");
  for (std::size_t i = 0; i < percents.size(); ++i) {
    if (!(percents[i] >= 0.0 && percents[i] <= 50.0)) throw invalid_argument("bandwidth grid percents must lie in [0, 50]");
    if (i > 0 && !(percents[i] > percents[i - 1])) throw invalid_argument("bandwidth grid must be strictly increasing");
  }
}

BandwidthGrid::BandwidthGrid(std::vector<double> percents, std::vector<std::vector<double>> sorted_columns)
    : percents_(std::move(percents)), sorted_(std::move(sorted_columns)) {
  validate_percent_grid(percents_);
  for (const auto& col : sorted_) {
    if (!std::is_sorted(col.begin(), col.end())) throw invalid_argument("quantile table is not sorted");
  }
}

BandwidthGrid BandwidthGrid::build(const FeatureMatrix& features, std::vector<double> percents) {
  std::vector<std::vector<double>> sorted(features.cols());
  for (std::size_t j = 0; j < features.cols(); ++j) {
    sorted[j].assign(features.col(j).begin(), features.col(j).end());
    std::sort(sorted[j].begin(), sorted[j].end());
  }
  return {std::move(percents), std::move(sorted)};
}

namespace {

std::size_t required_count(double percent, std::size_t n) {
  const double want = 2.0 * percent / 100.0 * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::ceil(want - 1e-9));
  return std::min(k, n);
}

// The k smallest |x - c| over a sorted column, ascending, by merging outward
// from the insertion point of c.
std::vector<double> nearest_distances(const std::vector<double>& sorted, double cutpoint, std::size_t k) {
  std::vector<double> out;
  out.reserve(k);
  auto hi = static_cast<std::ptrdiff_t>(std::lower_bound(sorted.begin(), sorted.end(), cutpoint) - sorted.begin());
  auto lo = hi - 1;
  const auto n = static_cast<std::ptrdiff_t>(sorted.size());
  while (out.size() < k && (lo >= 0 || hi < n)) {
    const double dl = lo >= 0 ? cutpoint - sorted[lo] : INFINITY;
    const double dh = hi < n ? sorted[hi] - cutpoint : INFINITY;
    if (dl <= dh) {
      out.push_back(dl);
      --lo;
    } else {
      out.push_back(dh);
      ++hi;
    }
  }
  return out;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const auto m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace

double BandwidthGrid::percent_to_tau(double percent, std::size_t feature, double cutpoint) const {
  if (feature >= sorted_.size()) throw invalid_argument("percent_to_tau: feature " + std::to_string(feature) + " out of range");
  if (!(percent >= 0.0 && percent <= 50.0)) throw invalid_argument("percent_to_tau: percent must lie in [0, 50]");
  const auto k = required_count(percent, sorted_[feature].size());
  if (k == 0) return 0.0;
  return nearest_distances(sorted_[feature], cutpoint, k).back();
}

std::vector<double> BandwidthGrid::taus_for_cut(std::size_t feature, double cutpoint) const {
  if (feature >= sorted_.size()) throw invalid_argument("taus_for_cut: feature " + std::to_string(feature) + " out of range");
  const auto n = sorted_[feature].size();
  const auto dist = nearest_distances(sorted_[feature], cutpoint, required_count(percents_.back(), n));
  std::vector<double> taus(percents_.size(), 0.0);
  for (std::size_t g = 0; g < percents_.size(); ++g) {
    const auto k = required_count(percents_[g], n);
    taus[g] = k == 0 ? 0.0 : dist[k - 1];
  }
  return taus;
}

std::vector<double> BandwidthGrid::tree_taus(const DecisionTree& tree) const {
  std::vector<std::vector<double>> per_branch;
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf || node.hard_split) continue;
    per_branch.push_back(taus_for_cut(static_cast<std::size_t>(node.split_var), node.cutpoint));
  }
  std::vector<double> out(percents_.size(), 0.0);
  if (per_branch.empty()) return out;
  std::vector<double> column(per_branch.size());
  for (std::size_t g = 0; g < percents_.size(); ++g) {
    for (std::size_t b = 0; b < per_branch.size(); ++b) column[b] = per_branch[b][g];
    out[g] = median(column);
  }
  return out;
}

TreeEvaluation evaluate_tree(const DecisionTree& tree, const FeatureMatrix& features,
                             std::span<const double> residuals, double sigma2, double sigma_mu2) {
  const std::size_t n = features.rows();
  if (residuals.size() != n) throw invalid_argument("evaluate_tree: residual length mismatch");
  const auto leaves = tree.num_leaves();
  TreeEvaluation eval;
  if (tree.is_hard()) {
    eval.leaf_of.resize(n);
    eval.hard_stats.counts.assign(leaves, 0);
    eval.hard_stats.sums.assign(leaves, 0.0);
    eval.hard_stats.n = n;
    for (std::size_t i = 0; i < n; ++i) {
      const auto b = hard_leaf_index(tree, features, i);
      eval.leaf_of[i] = static_cast<std::uint32_t>(b);
      ++eval.hard_stats.counts[b];
      eval.hard_stats.sums[b] += residuals[i];
      eval.hard_stats.sum_sq += residuals[i] * residuals[i];
    }
    eval.log_marginal = hard_log_marginal(eval.hard_stats, sigma2, sigma_mu2);
    return eval;
  }

  eval.soft = true;
  SoftSuffStats stats;
  stats.lambda = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(leaves), static_cast<Eigen::Index>(leaves));
  stats.weighted_residual = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(leaves));
  stats.n = n;
  stats.sigma2 = sigma2;
  auto& phi = eval.phi;
  phi.row_start.reserve(n + 1);
  std::vector<std::pair<std::uint32_t, double>> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    leaf_probabilities_sparse(tree, features, i, row);
    const double r = residuals[i];
    stats.residual_sq += r * r;
    for (std::size_t a = 0; a < row.size(); ++a) {
      const auto [la, pa] = row[a];
      stats.weighted_residual[la] += r * pa;
      stats.lambda(la, la) += pa * pa;
      for (std::size_t b = a + 1; b < row.size(); ++b) stats.lambda(la, row[b].first) += pa * row[b].second;
      phi.leaf.push_back(la);
      phi.prob.push_back(pa);
    }
    phi.row_start.push_back(static_cast<std::uint32_t>(phi.leaf.size()));
  }
  // Leaves arrive in increasing order per row, so only the upper triangle was filled.
  stats.lambda.triangularView<Eigen::StrictlyLower>() = stats.lambda.transpose();
  stats.lambda /= sigma2;
  stats.weighted_residual /= sigma2;
  eval.posterior = soft_log_marginal(stats, sigma_mu2);
  eval.log_marginal = eval.posterior.log_marginal;
  return eval;
}

std::vector<double> draw_leaf_values(const TreeEvaluation& eval, double sigma2, double sigma_mu2, Rng& rng) {
  return eval.soft ? draw_soft_leaf_values(eval.posterior, rng)
                   : draw_hard_leaf_values(eval.hard_stats, sigma2, sigma_mu2, rng);
}

std::vector<double> training_fit(const TreeEvaluation& eval, std::span<const double> leaf_values) {
  std::vector<double> fit;
  if (!eval.soft) {
    fit.resize(eval.leaf_of.size());
    for (std::size_t i = 0; i < fit.size(); ++i) fit[i] = leaf_values[eval.leaf_of[i]];
    return fit;
  }
  const auto& phi = eval.phi;
  fit.resize(phi.rows());
  for (std::size_t i = 0; i < fit.size(); ++i) {
    double total = 0.0;
    for (auto k = phi.row_start[i]; k < phi.row_start[i + 1]; ++k) total += phi.prob[k] * leaf_values[phi.leaf[k]];
    fit[i] = total;
  }
  return fit;
}

BandwidthSearchResult search_bandwidth(const DecisionTree& tree, const FeatureMatrix& features,
                                       std::span<const double> residuals, const BandwidthGrid& grid, double sigma2,
                                       double sigma_mu2) {
  if (tree.tau() != 0.0) throw invalid_argument("search_bandwidth: candidate tree must be hard (tau = 0)");
  BandwidthSearchResult result;
  const auto& percents = grid.percents();
  const bool trivial = tree.num_leaves() == 1 || !tree.has_smoothable_branch();
  if (trivial || tree.gate() == GateFamily::hard || percents.size() == 1) {
    result.skipped = trivial;
    result.best = evaluate_tree(tree, features, residuals, sigma2, sigma_mu2);
    result.candidates.push_back({0.0, 0.0, result.best.log_marginal, false});
    return result;
  }

  const auto taus = grid.tree_taus(tree);
  DecisionTree trial = tree;
  bool have_best = false;
  for (std::size_t g = 0; g < percents.size(); ++g) {
    BandwidthCandidate cand{percents[g], taus[g], 0.0, false};
    const auto seen = std::find_if(result.candidates.begin(), result.candidates.end(),
                                   [&](const BandwidthCandidate& c) { return c.tau == cand.tau; });
    if (seen != result.candidates.end()) {
      // Same tau as an earlier percent: identical likelihood, and the earlier
      // one already won any tie.
      cand.log_marginal = seen->log_marginal;
      cand.failed = seen->failed;
      result.candidates.push_back(cand);
      continue;
    }
    try {
      trial.set_tau(cand.tau);
      auto eval = evaluate_tree(trial, features, residuals, sigma2, sigma_mu2);
      cand.log_marginal = eval.log_marginal;
      if (!have_best || eval.log_marginal > result.best.log_marginal) {
        have_best = true;
        result.tau = cand.tau;
        result.percent = cand.percent;
        result.best = std::move(eval);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::numerical) throw;
      cand.failed = true;
      warn(std::string("bandwidth candidate skipped: ") + e.what());
    }
    result.candidates.push_back(cand);
  }
  if (!have_best) throw numerical_error("search_bandwidth: every bandwidth candidate failed");
  return result;
}

}  // namespace asbart
