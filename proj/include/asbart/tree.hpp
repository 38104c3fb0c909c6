#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "asbart/feature_matrix.hpp"

namespace asbart {

enum class GateFamily { hard, sigmoid, linear };

std::string_view to_string(GateFamily family);
GateFamily parse_gate_family(std::string_view name);

/// Probability that a sample with value `x` at a branch with cutpoint `cutpoint`
/// is routed left. Smaller values go left: the smooth families evaluate
/// psi((c - x) / tau). At tau == 0, or for the hard family, returns 1 if x < c
/// else 0 (a tie goes right).
double gate_left_prob(double x, double cutpoint, double tau, GateFamily family);

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct TreeNode {
  NodeId id = 0;
  int depth = 0;
  bool is_leaf = true;
  // Branch fields.
  int split_var = -1;
  double cutpoint = 0.0;
  bool hard_split = false;  // split on a dummy column: never smoothed
  NodeId left = kNoNode;
  NodeId right = kNoNode;
  NodeId parent = kNoNode;
  // Leaf field.
  double leaf_value = 0.0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary decision tree with a single tree-level bandwidth. Nodes live in a
// flat vector indexed by id; the root is always id 0. Leaves are enumerated
// depth-first, left child first, and every leaf-indexed vector in the library
// (phi, leaf values, sufficient statistics) follows that order.
class DecisionTree {
 public:
  DecisionTree();

  /// Rebuilds a tree from serialized nodes; throws a structure error if the
  /// nodes do not form a well-formed binary tree rooted at id 0.
  static DecisionTree from_nodes(std::vector<TreeNode> nodes, double tau, GateFamily gate);

  /// Turns leaf `id` into a branch and returns the new (left, right) ids.
  std::pair<NodeId, NodeId> split_leaf(NodeId id, int split_var, double cutpoint, bool hard_split);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const TreeNode& root() const { return nodes_.front(); }

  /// Leaf ids in depth-first left-first order.
  const std::vector<NodeId>& leaves() const noexcept { return leaves_; }
  std::size_t num_leaves() const noexcept { return leaves_.size(); }
  std::size_t num_branches() const noexcept { return nodes_.size() - leaves_.size(); }
  /// Position of leaf `id` within leaves().
  std::size_t leaf_index(NodeId id) const;
  int max_depth() const;

  std::vector<double> leaf_values() const;
  void set_leaf_values(std::span<const double> values);

  double tau() const noexcept { return tau_; }
  void set_tau(double tau);
  GateFamily gate() const noexcept { return gate_; }
  void set_gate(GateFamily gate) noexcept { gate_ = gate; }

  /// True when some branch splits on an ordinal (non-dummy) feature.
  bool has_smoothable_branch() const;
  /// True when evaluation reduces to deterministic traversal.
  bool is_hard() const { return tau_ == 0.0 || gate_ == GateFamily::hard || !has_smoothable_branch(); }

  /// Structural validation; throws a structure error describing the defect.
  void validate() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  void rebuild_leaf_order();

  std::vector<TreeNode> nodes_;
  std::vector<NodeId> leaves_;
  std::vector<std::int32_t> leaf_pos_;  // node id -> position in leaves_, -1 for branches
  double tau_ = 0.0;
  GateFamily gate_ = GateFamily::hard;
};

struct Forest {
  std::vector<DecisionTree> trees;
  double sigma2 = 1.0;
};

/// Dense leaf-probability vector phi(x) in leaf order. `x` must cover every
/// feature the tree splits on.
std::vector<double> leaf_probabilities(const DecisionTree& tree, std::span<const double> x);

/// Sparse variant over row `row` of `features`: appends (leaf position,
/// probability) for every leaf reached with non-zero probability.
void leaf_probabilities_sparse(const DecisionTree& tree, const FeatureMatrix& features, std::size_t row,
                               std::vector<std::pair<std::uint32_t, double>>& out);

/// Leaf position reached by deterministic traversal (the hard decision).
std::size_t hard_leaf_index(const DecisionTree& tree, const FeatureMatrix& features, std::size_t row);

/// Soft prediction of a single tree: <phi(x), leaf values>.
double predict_tree(const DecisionTree& tree, std::span<const double> x);

/// Sum of tree predictions. Throws invalid-argument when `x` is shorter than
/// the largest split variable index requires.
double predict_single(const Forest& forest, std::span<const double> x);

}  // namespace asbart
