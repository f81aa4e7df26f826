#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dmphy/tree.hpp"

namespace dmphy {

// Partition of tip slots into clusters, stored as a 1-based cluster index per
// tip. The canonical form numbers clusters contiguously in order of first
// appearance, so two equal partitions have equal label vectors.
//
// Whether each cluster is a clade of a companion Topology is a property of
// the pair, checked with is_clade_partition; estimators intentionally produce
// assignments with no clade guarantee.
class ClusterAssignment {
 public:
  ClusterAssignment() = default;
  // Any positive labels; canonicalized on construction.
  explicit ClusterAssignment(std::vector<int> labels);

  static ClusterAssignment single_cluster(int n);
  static ClusterAssignment all_singletons(int n);

  int size() const { return static_cast<int>(labels_.size()); }
  int cluster_count() const { return cluster_count_; }
  int operator[](int tip_slot) const { return labels_[tip_slot]; }
  const std::vector<int>& labels() const { return labels_; }

  std::vector<int> cluster_sizes() const;           // index k-1 = size of cluster k
  std::vector<std::vector<int>> cluster_members() const;

  friend bool operator==(const ClusterAssignment& a, const ClusterAssignment& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<int> labels_;
  int cluster_count_ = 0;
};

bool is_clade_partition(const Topology& t, const ClusterAssignment& c);

// Most recent common ancestor node of each cluster's tips (index k-1 for
// cluster k). Throws if c does not match t's tip count.
std::vector<int> cluster_mrcas(const Topology& t, const ClusterAssignment& c);

// Depth-first partition search: descending from the root, a clade becomes a
// cluster once its support reaches support_min and its tip-to-tip diameter is
// at most distance_max; tips reached without acceptance become singletons.
// The root clade and single tips count as certain (support 1); internal nodes
// without a support value count as support 0.
ClusterAssignment clade_partition_search(const Topology& t, double support_min,
                                         double distance_max);

enum class DunnLinkage { single, complete };

// Minimum between-cluster distance divided by maximum cluster diameter.
// Requires at least two clusters and at least one cluster of size >= 2.
double dunn_index(const ClusterAssignment& c, const Eigen::MatrixXd& distances,
                  DunnLinkage linkage = DunnLinkage::single);

struct StartingPartition {
  ClusterAssignment assignment;
  double distance_threshold = 0.0;
  double dunn = std::numeric_limits<double>::quiet_NaN();
  bool dunn_undefined_everywhere = false;  // fell back to the largest threshold
};

// Runs clade_partition_search at every threshold in the grid and keeps the
// partition with the highest Dunn index (ties to the smaller threshold).
StartingPartition select_starting_partition(const Topology& t, double support_min,
                                            std::span<const double> distance_grid);

// {tip label -> cluster id} view used by the JSON interfaces.
std::map<std::string, int> assignment_by_label(const Topology& t, const ClusterAssignment& c);

}  // namespace dmphy
