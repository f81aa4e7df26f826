#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dmphy {

struct TreeNode {
  int parent = -1;
  std::array<int, 2> children{-1, -1};
  double length = std::numeric_limits<double>::quiet_NaN();   // edge above this node
  double support = std::numeric_limits<double>::quiet_NaN();  // clade support in [0,1]
  std::string label;                                          // tips, or verbatim internal labels

  bool is_tip() const { return children[0] < 0; }
  bool has_length() const { return !std::isnan(length); }
  bool has_support() const { return !std::isnan(support); }
};

// Rooted binary topology over labeled tips. Unrooted Newick input (the usual
// trifurcation at the root) is accepted by the parser, which binarizes it
// with a zero-length auxiliary edge; pass such trees through
// root_with_outgroup, where the auxiliary edge dissolves, before clustering
// or likelihood work.
class Topology {
 public:
  Topology() = default;
  Topology(std::vector<TreeNode> nodes, int root);

  int root() const { return root_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const TreeNode& node(int i) const { return nodes_[i]; }
  TreeNode& node(int i) { return nodes_[i]; }

  int tip_count() const { return static_cast<int>(tips_.size()); }
  // Tip node indices; tip slot t (used by alignments and cluster assignments)
  // refers to tips()[t].
  const std::vector<int>& tips() const { return tips_; }
  int tip_slot(const std::string& label) const;  // throws ValidationError if absent
  const std::string& tip_label(int slot) const { return nodes_[tips_[slot]].label; }

  bool strictly_binary() const;
  bool has_branch_lengths() const;  // every non-root edge has a finite length

  // Node indices in postorder (children before parents, root last).
  std::vector<int> postorder() const;

  // Tip slots descending from each node, in increasing slot order.
  std::vector<std::vector<int>> clade_tip_slots() const;

  void validate() const;  // structural invariants; throws std::logic_error

 private:
  void index_tips();

  std::vector<TreeNode> nodes_;
  int root_ = -1;
  std::vector<int> tips_;
};

struct NewickOptions {
  // Resolve internal polytomies arbitrarily with zero-length edges instead of
  // rejecting them. A trifurcation at the root is always accepted.
  bool resolve_polytomies = false;
};

Topology parse_newick(std::string_view text, const NewickOptions& options = {});
Topology parse_newick_file(const std::string& path, const NewickOptions& options = {});
std::string write_newick(const Topology& t);

// Re-roots on the edge leading to the given tip, splitting it in half. The
// previous root is suppressed if it would be left with degree two.
Topology root_with_outgroup(const Topology& t, const std::string& outgroup_label);

// Removes one tip and suppresses the resulting degree-two node.
Topology remove_tip(const Topology& t, const std::string& label);

// Sum of branch lengths along tip-to-tip paths, indexed by tip slot.
Eigen::MatrixXd patristic_distances(const Topology& t);

// All nearest-neighbour-interchange rearrangements: two alternative swaps per
// internal edge. Empty for fewer than four tips.
std::vector<Topology> nni_neighbors(const Topology& t);

// Clades present in t, each as a sorted list of tip labels; used to compare
// topologies irrespective of node numbering.
std::vector<std::vector<std::string>> clade_label_sets(const Topology& t);

}  // namespace dmphy
