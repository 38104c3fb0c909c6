#include "asbart/tree.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asbart/error.hpp"

namespace asbart {

std::string_view to_string(GateFamily family) {
  switch (family) {
    case GateFamily::hard: return "hard";
    case GateFamily::sigmoid: return "sigmoid";
    case GateFamily::linear: return "linear";
  }
  return "hard";
}

GateFamily parse_gate_family(std::string_view name) {
  if (name == "hard") return GateFamily::hard;
  if (name == "sigmoid") return GateFamily::sigmoid;
  if (name == "linear") return GateFamily::linear;
  throw invalid_argument("unknown gate family '" + std::string(name) + "' (expected hard|sigmoid|linear)");
}

double gate_left_prob(double x, double cutpoint, double tau, GateFamily family) {
  if (!std::isfinite(x) || !std::isfinite(cutpoint) || !std::isfinite(tau)) {
    throw invalid_argument("gate_left_prob: non-finite input");
  }
  if (tau < 0.0) throw invalid_argument("gate_left_prob: negative bandwidth");
  if (tau == 0.0 || family == GateFamily::hard) return x < cutpoint ? 1.0 : 0.0;
  if (family == GateFamily::sigmoid) return 1.0 / (1.0 + std::exp(-(cutpoint - x) / tau));
  // linear: right-probability is clamp(u/2 + 1/2) with u = (x - c)/tau.
  const double u = (x - cutpoint) / tau;
  return 1.0 - std::clamp(0.5 * u + 0.5, 0.0, 1.0);
}

namespace {

// Same as gate_left_prob without the argument checks; callers guarantee
// finite inputs and tau > 0 for the smooth branch.
inline double left_prob_unchecked(double x, const TreeNode& node, double tau, GateFamily family) {
  if (node.hard_split || tau == 0.0 || family == GateFamily::hard) return x < node.cutpoint ? 1.0 : 0.0;
  if (family == GateFamily::sigmoid) return 1.0 / (1.0 + std::exp(-(node.cutpoint - x) / tau));
  return 1.0 - std::clamp(0.5 * (x - node.cutpoint) / tau + 0.5, 0.0, 1.0);
}

template <typename Access>
void descend(const DecisionTree& tree, NodeId id, double prob, const Access& x,
             std::vector<std::pair<std::uint32_t, double>>& out) {
  const TreeNode& node = tree.node(id);
  if (node.is_leaf) {
    out.emplace_back(static_cast<std::uint32_t>(tree.leaf_index(id)), prob);
    return;
  }
  const double left = left_prob_unchecked(x(node.split_var), node, tree.tau(), tree.gate());
  if (left > 0.0) descend(tree, node.left, prob * left, x, out);
  if (left < 1.0) descend(tree, node.right, prob * (1.0 - left), x, out);
}

int max_split_var(const DecisionTree& tree) {
  int v = -1;
  for (const auto& n : tree.nodes())
    if (!n.is_leaf) v = std::max(v, n.split_var);
  return v;
}

}  // namespace

DecisionTree::DecisionTree() {
  nodes_.push_back(TreeNode{});
  rebuild_leaf_order();
}

DecisionTree DecisionTree::from_nodes(std::vector<TreeNode> nodes, double tau, GateFamily gate) {
  DecisionTree tree;
  tree.nodes_ = std::move(nodes);
  if (tree.nodes_.empty()) throw structure_error("tree has no nodes");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw structure_error("tree bandwidth must be finite and >= 0");
  tree.tau_ = tau;
  tree.gate_ = gate;
  tree.validate();
  tree.rebuild_leaf_order();
  return tree;
}

std::pair<NodeId, NodeId> DecisionTree::split_leaf(NodeId id, int split_var, double cutpoint, bool hard_split) {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size() || !nodes_[id].is_leaf) {
    throw structure_error("split_leaf: node " + std::to_string(id) + " is not a leaf");
  }
  if (split_var < 0) throw invalid_argument("split_leaf: negative split variable");
  const auto left = static_cast<NodeId>(nodes_.size());
  const auto right = left + 1;
  const int depth = nodes_[id].depth + 1;
  TreeNode& parent = nodes_[id];
  parent.is_leaf = false;
  parent.split_var = split_var;
  parent.cutpoint = cutpoint;
  parent.hard_split = hard_split;
  parent.left = left;
  parent.right = right;
  parent.leaf_value = 0.0;
  TreeNode l{.id = left, .depth = depth, .parent = id};
  TreeNode r{.id = right, .depth = depth, .parent = id};
  nodes_.push_back(l);
  nodes_.push_back(r);
  rebuild_leaf_order();
  return {left, right};
}

std::size_t DecisionTree::leaf_index(NodeId id) const {
  const auto pos = leaf_pos_.at(static_cast<std::size_t>(id));
  if (pos < 0) throw structure_error("node " + std::to_string(id) + " is not a leaf");
  return static_cast<std::size_t>(pos);
}

int DecisionTree::max_depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::vector<double> DecisionTree::leaf_values() const {
  std::vector<double> out;
  out.reserve(leaves_.size());
  for (NodeId id : leaves_) out.push_back(nodes_[id].leaf_value);
  return out;
}

void DecisionTree::set_leaf_values(std::span<const double> values) {
  if (values.size() != leaves_.size()) {
    throw invalid_argument("set_leaf_values: expected " + std::to_string(leaves_.size()) + " values, got " +
                           std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < leaves_.size(); ++i) nodes_[leaves_[i]].leaf_value = values[i];
}

void DecisionTree::set_tau(double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw invalid_argument("bandwidth must be finite and >= 0");
  tau_ = tau;
}

bool DecisionTree::has_smoothable_branch() const {
  return std::any_of(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return !n.is_leaf && !n.hard_split; });
}

void DecisionTree::validate() const {
  const auto count = nodes_.size();
  std::vector<int> parents(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const TreeNode& n = nodes_[i];
    const std::string where = "node " + std::to_string(i);
    if (n.id != static_cast<NodeId>(i)) throw structure_error(where + ": id does not match position");
    if (n.is_leaf) {
      if (n.left != kNoNode || n.right != kNoNode) throw structure_error(where + ": leaf has children");
      continue;
    }
    if (n.split_var < 0) throw structure_error(where + ": branch without split variable");
    if (!std::isfinite(n.cutpoint)) throw structure_error(where + ": non-finite cutpoint");
    for (NodeId child : {n.left, n.right}) {
      if (child <= 0 || static_cast<std::size_t>(child) >= count) {
        throw structure_error(where + ": child id out of range");
      }
      if (nodes_[child].depth != n.depth + 1) throw structure_error(where + ": child depth mismatch");
      if (nodes_[child].parent != n.id) throw structure_error(where + ": child parent link mismatch");
      ++parents[child];
    }
    if (n.left == n.right) throw structure_error(where + ": both children are the same node");
  }
  if (nodes_[0].depth != 0 || nodes_[0].parent != kNoNode) throw structure_error("root must have depth 0 and no parent");
  for (std::size_t i = 1; i < count; ++i) {
    if (parents[i] != 1) throw structure_error("node " + std::to_string(i) + " must have exactly one parent");
  }
  // Every non-root node having exactly one parent with strictly increasing
  // depth rules out cycles, so the tree is connected from the root.
}

void DecisionTree::rebuild_leaf_order() {
  leaves_.clear();
  leaf_pos_.assign(nodes_.size(), -1);
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes_[id];
    if (n.is_leaf) {
      leaf_pos_[id] = static_cast<std::int32_t>(leaves_.size());
      leaves_.push_back(id);
    } else {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
}

std::vector<double> leaf_probabilities(const DecisionTree& tree, std::span<const double> x) {
  if (static_cast<int>(x.size()) <= max_split_var(tree)) {
    throw invalid_argument("leaf_probabilities: feature vector too short for tree");
  }
  for (const auto& n : tree.nodes()) {
    if (!n.is_leaf && !std::isfinite(x[n.split_var])) throw invalid_argument("leaf_probabilities: non-finite feature");
  }
  std::vector<std::pair<std::uint32_t, double>> sparse;
  descend(tree, 0, 1.0, [&](int j) { return x[j]; }, sparse);
  std::vector<double> phi(tree.num_leaves(), 0.0);
  for (auto [leaf, p] : sparse) phi[leaf] = p;
  return phi;
}

void leaf_probabilities_sparse(const DecisionTree& tree, const FeatureMatrix& features, std::size_t row,
                               std::vector<std::pair<std::uint32_t, double>>& out) {
  descend(tree, 0, 1.0, [&](int j) { return features(row, static_cast<std::size_t>(j)); }, out);
}

std::size_t hard_leaf_index(const DecisionTree& tree, const FeatureMatrix& features, std::size_t row) {
  NodeId id = 0;
  while (!tree.node(id).is_leaf) {
    const TreeNode& n = tree.node(id);
    id = features(row, static_cast<std::size_t>(n.split_var)) < n.cutpoint ? n.left : n.right;
  }
  return tree.leaf_index(id);
}

double predict_tree(const DecisionTree& tree, std::span<const double> x) {
  if (tree.is_hard()) {
    NodeId id = 0;
    while (!tree.node(id).is_leaf) {
      const TreeNode& n = tree.node(id);
      id = x[n.split_var] < n.cutpoint ? n.left : n.right;
    }
    return tree.node(id).leaf_value;
  }
  std::vector<std::pair<std::uint32_t, double>> sparse;
  descend(tree, 0, 1.0, [&](int j) { return x[j]; }, sparse);
  double total = 0.0;
  for (auto [leaf, p] : sparse) total += p * tree.node(tree.leaves()[leaf]).leaf_value;
  return total;
}

double predict_single(const Forest& forest, std::span<const double> x) {
  double total = 0.0;
  for (const auto& tree : forest.trees) {
    if (static_cast<int>(x.size()) <= max_split_var(tree)) {
      throw invalid_argument("predict_single: feature vector has " + std::to_string(x.size()) +
                             " entries, tree needs more");
    }
    total += predict_tree(tree, x);
  }
  return total;
}

}  // namespace asbart
