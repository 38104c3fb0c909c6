#include "asbart/grow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "asbart/error.hpp"
#include "asbart/likelihood.hpp"

namespace asbart {

double split_prob(int depth, const SplitPrior& prior) {
  if (depth < 0) throw invalid_argument("split_prob: negative depth");
  return prior.alpha * std::pow(1.0 + depth, -prior.beta);
}

double tree_log_prior(const DecisionTree& tree, const SplitPrior& prior) {
  double total = 0.0;
  for (const auto& node : tree.nodes()) {
    const double p = split_prob(node.depth, prior);
    total += node.is_leaf ? std::log1p(-p) : std::log(p);
  }
  return total;
}

CutpointGrid CutpointGrid::build(const FeatureMatrix& features, const std::vector<bool>& is_dummy,
                                 std::size_t max_per_feature) {
  if (is_dummy.size() != features.cols()) throw invalid_argument("CutpointGrid: dummy flags do not match columns");
  if (max_per_feature < 1) throw invalid_argument("CutpointGrid: max_per_feature must be >= 1");
  CutpointGrid grid;
  grid.is_dummy = is_dummy;
  grid.cutpoints.resize(features.cols());
  for (std::size_t j = 0; j < features.cols(); ++j) {
    if (is_dummy[j]) {
      grid.cutpoints[j] = {0.5};
      continue;
    }
    std::vector<double> values(features.col(j).begin(), features.col(j).end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<double> mids;
    mids.reserve(values.size());
    for (std::size_t i = 1; i < values.size(); ++i) mids.push_back(0.5 * (values[i - 1] + values[i]));
    if (mids.size() > max_per_feature) {
      std::vector<double> thinned;
      thinned.reserve(max_per_feature);
      const double stride =
          max_per_feature == 1 ? 0.0 : static_cast<double>(mids.size() - 1) / static_cast<double>(max_per_feature - 1);
      for (std::size_t i = 0; i < max_per_feature; ++i) {
        const auto idx =
            max_per_feature == 1 ? mids.size() / 2 : static_cast<std::size_t>(std::llround(stride * static_cast<double>(i)));
        thinned.push_back(mids[idx]);
      }
      thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
      mids = std::move(thinned);
    }
    grid.cutpoints[j] = std::move(mids);
  }
  return grid;
}

NodeWorkset NodeWorkset::root(const FeatureMatrix& features) {
  NodeWorkset work;
  work.samples.resize(features.rows());
  std::iota(work.samples.begin(), work.samples.end(), 0U);
  work.sorted.resize(features.cols());
  for (std::size_t j = 0; j < features.cols(); ++j) {
    auto& order = work.sorted[j];
    order = work.samples;
    const auto col = features.col(j);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
  return work;
}

std::pair<NodeWorkset, NodeWorkset> NodeWorkset::partition(const FeatureMatrix& features, int feature,
                                                           double cutpoint) const {
  const auto col = features.col(static_cast<std::size_t>(feature));
  std::vector<char> goes_left(features.rows(), 0);
  NodeWorkset left, right;
  left.depth = right.depth = depth + 1;
  for (auto i : samples) {
    goes_left[i] = col[i] < cutpoint ? 1 : 0;
    (goes_left[i] ? left : right).samples.push_back(i);
  }
  left.sorted.resize(sorted.size());
  right.sorted.resize(sorted.size());
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    left.sorted[j].reserve(left.samples.size());
    right.sorted[j].reserve(right.samples.size());
    for (auto i : sorted[j]) (goes_left[i] ? left.sorted[j] : right.sorted[j]).push_back(i);
  }
  return {std::move(left), std::move(right)};
}

SplitTable enumerate_split_loglik(const NodeWorkset& work, const FeatureMatrix& features, const CutpointGrid& grid,
                                  std::span<const double> residuals, double sigma2, double sigma_mu2,
                                  std::size_t min_child, std::span<const int> features_to_scan) {
  if (work.size() == 0) throw invalid_argument("enumerate_split_loglik: empty node");
  if (!(sigma2 > 0.0) || !(sigma_mu2 > 0.0)) throw invalid_argument("enumerate_split_loglik: variances must be > 0");
  min_child = std::max<std::size_t>(min_child, 1);

  SplitTable table;
  double sum_sq = 0.0;
  for (auto i : work.samples) {
    table.node_sum += residuals[i];
    sum_sq += residuals[i] * residuals[i];
  }
  table.node_count = work.size();
  const auto n = static_cast<double>(table.node_count);
  const double base = -0.5 * n * (std::log(2.0 * 3.14159265358979323846) + std::log(sigma2)) - 0.5 * sum_sq / sigma2;
  table.no_split_log_lik = base + 0.5 * hard_leaf_term(n, table.node_sum, sigma2, sigma_mu2);

  auto scan = [&](int j) {
    const auto& order = work.sorted[static_cast<std::size_t>(j)];
    const auto col = features.col(static_cast<std::size_t>(j));
    std::size_t pos = 0;
    double left_sum = 0.0;
    for (double cut : grid.cutpoints[static_cast<std::size_t>(j)]) {
      while (pos < order.size() && col[order[pos]] < cut) left_sum += residuals[order[pos++]];
      if (pos == order.size()) break;
      if (pos < min_child || order.size() - pos < min_child) continue;
      const auto nl = static_cast<double>(pos);
      const double ll = base + 0.5 * (hard_leaf_term(nl, left_sum, sigma2, sigma_mu2) +
                                      hard_leaf_term(n - nl, table.node_sum - left_sum, sigma2, sigma_mu2));
      table.candidates.push_back({j, cut, ll, pos, left_sum});
    }
  };
  if (features_to_scan.empty()) {
    for (std::size_t j = 0; j < grid.num_features(); ++j) scan(static_cast<int>(j));
  } else {
    for (int j : features_to_scan) scan(j);
  }
  return table;
}

namespace {

double stop_log_weight(const SplitTable& table, int depth, const SplitPrior& prior) {
  const double p = split_prob(depth, prior);
  return std::log(static_cast<double>(table.candidates.size())) + std::log1p(-p) - std::log(p) +
         table.no_split_log_lik;
}

}  // namespace

double stop_probability(const SplitTable& table, int depth, const SplitPrior& prior) {
  if (table.candidates.empty()) return 1.0;
  const double stop = stop_log_weight(table, depth, prior);
  double top = stop;
  for (const auto& c : table.candidates) top = std::max(top, c.log_lik);
  double total = std::exp(stop - top);
  for (const auto& c : table.candidates) total += std::exp(c.log_lik - top);
  return std::exp(stop - top) / total;
}

std::optional<SplitCandidate> sample_split_or_stop(const SplitTable& table, int depth, const SplitPrior& prior,
                                                   Rng& rng) {
  if (table.candidates.empty()) return std::nullopt;
  const double stop = stop_log_weight(table, depth, prior);
  double top = stop;
  for (const auto& c : table.candidates) top = std::max(top, c.log_lik);
  std::vector<double> cumulative(table.candidates.size() + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < table.candidates.size(); ++i) {
    total += std::exp(table.candidates[i].log_lik - top);
    cumulative[i] = total;
  }
  total += std::exp(stop - top);
  cumulative.back() = total;
  const double u = uniform01(rng) * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto idx = static_cast<std::size_t>(it - cumulative.begin());
  if (idx >= table.candidates.size()) return std::nullopt;
  return table.candidates[idx];
}

namespace {

void grow_node(const GrowContext& ctx, DecisionTree& tree, NodeId id, const NodeWorkset& work,
               std::span<const double> residuals, Rng& rng) {
  const auto& limits = ctx.limits;
  const std::size_t min_size = std::max<std::size_t>(limits.min_node_size, 1);
  if (work.depth >= limits.max_depth || work.size() < 2 * min_size) return;

  std::vector<int> subset;
  const std::size_t p = ctx.grid.num_features();
  if (limits.features_per_node > 0 && limits.features_per_node < p) {
    subset.resize(p);
    std::iota(subset.begin(), subset.end(), 0);
    std::shuffle(subset.begin(), subset.end(), rng);
    subset.resize(limits.features_per_node);
    std::sort(subset.begin(), subset.end());
  }
  const SplitTable table =
      enumerate_split_loglik(work, ctx.features, ctx.grid, residuals, ctx.sigma2, ctx.sigma_mu2, min_size, subset);
  const auto choice = sample_split_or_stop(table, work.depth, ctx.prior, rng);
  if (!choice) return;

  const auto [left_id, right_id] = tree.split_leaf(id, choice->feature, choice->cutpoint,
                                                   ctx.grid.is_dummy[static_cast<std::size_t>(choice->feature)]);
  auto [left, right] = work.partition(ctx.features, choice->feature, choice->cutpoint);
  grow_node(ctx, tree, left_id, left, residuals, rng);
  grow_node(ctx, tree, right_id, right, residuals, rng);
}

}  // namespace

DecisionTree grow_from_root(const GrowContext& ctx, std::span<const double> residuals, Rng& rng) {
  if (residuals.size() != ctx.features.rows()) {
    throw invalid_argument("grow_from_root: residual length " + std::to_string(residuals.size()) +
                           " != sample count " + std::to_string(ctx.features.rows()));
  }
  DecisionTree tree;
  if (ctx.root.size() > 0) grow_node(ctx, tree, 0, ctx.root, residuals, rng);
  return tree;
}

}  // namespace asbart
