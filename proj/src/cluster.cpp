#include "dmphy/cluster.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "dmphy/errors.hpp"

namespace dmphy {

ClusterAssignment::ClusterAssignment(std::vector<int> labels) : labels_(std::move(labels)) {
  std::unordered_map<int, int> renumber;  // raw label -> contiguous id
  for (int& l : labels_) {
    if (l < 1) throw ValidationError("cluster labels must be positive");
    const auto [it, inserted] = renumber.emplace(l, static_cast<int>(renumber.size()) + 1);
    l = it->second;
  }
  cluster_count_ = static_cast<int>(renumber.size());
}

ClusterAssignment ClusterAssignment::single_cluster(int n) {
  return ClusterAssignment(std::vector<int>(n, 1));
}

ClusterAssignment ClusterAssignment::all_singletons(int n) {
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i + 1;
  return ClusterAssignment(std::move(labels));
}

std::vector<int> ClusterAssignment::cluster_sizes() const {
  std::vector<int> sizes(cluster_count_, 0);
  for (const int l : labels_) ++sizes[l - 1];
  return sizes;
}

std::vector<std::vector<int>> ClusterAssignment::cluster_members() const {
  std::vector<std::vector<int>> members(cluster_count_);
  for (int i = 0; i < size(); ++i) members[labels_[i] - 1].push_back(i);
  return members;
}

std::vector<int> cluster_mrcas(const Topology& t, const ClusterAssignment& c) {
  if (c.size() != t.tip_count())
    throw ValidationError("assignment size does not match tip count");
  const auto members = c.cluster_members();
  std::vector<int> mrcas(c.cluster_count());
  for (int k = 0; k < c.cluster_count(); ++k) {
    // Walk the first member's ancestor path, then raise until the clade
    // contains every member.
    int node = t.tips()[members[k][0]];
    if (members[k].size() > 1) {
      std::vector<char> is_member(t.node_count(), 0);
      for (const int slot : members[k]) is_member[t.tips()[slot]] = 1;
      std::size_t covered = 1;
      while (covered < members[k].size()) {
        node = t.node(node).parent;
        if (node < 0) throw std::logic_error("cluster_mrcas: ran past the root");
        covered = 0;
        std::vector<int> stack{node};
        while (!stack.empty()) {
          const int v = stack.back();
          stack.pop_back();
          if (t.node(v).is_tip()) {
            covered += is_member[v];
            continue;
          }
          for (const int ch : t.node(v).children) stack.push_back(ch);
        }
      }
    }
    mrcas[k] = node;
  }
  return mrcas;
}

bool is_clade_partition(const Topology& t, const ClusterAssignment& c) {
  if (c.size() != t.tip_count()) return false;
  const auto clades = t.clade_tip_slots();
  const auto members = c.cluster_members();
  const auto mrcas = cluster_mrcas(t, c);
  for (int k = 0; k < c.cluster_count(); ++k)
    if (clades[mrcas[k]] != members[k]) return false;  // members are sorted by slot
  return true;
}

namespace {

// Subtree tip-to-tip diameter per node: the usual two-deepest-children DP.
void subtree_diameters(const Topology& t, std::vector<double>& diameter,
                       std::vector<double>& depth) {
  diameter.assign(t.node_count(), 0.0);
  depth.assign(t.node_count(), 0.0);
  for (const int v : t.postorder()) {
    if (t.node(v).is_tip()) continue;
    const int a = t.node(v).children[0];
    const int b = t.node(v).children[1];
    const double da = depth[a] + t.node(a).length;
    const double db = depth[b] + t.node(b).length;
    depth[v] = std::max(da, db);
    diameter[v] = std::max({diameter[a], diameter[b], da + db});
  }
}

}  // namespace

ClusterAssignment clade_partition_search(const Topology& t, double support_min,
                                         double distance_max) {
  if (!t.strictly_binary())
    throw ValidationError("clade_partition_search: tree must be strictly binary");
  if (!t.has_branch_lengths())
    throw ValidationError("clade_partition_search: tree is missing branch lengths");

  std::vector<double> diameter, depth;
  subtree_diameters(t, diameter, depth);

  auto support_of = [&](int v) {
    if (v == t.root() || t.node(v).is_tip()) return 1.0;
    return t.node(v).has_support() ? t.node(v).support : 0.0;
  };

  std::vector<int> labels(t.tip_count(), 0);
  std::vector<int> slot_of_node(t.node_count(), -1);
  for (int s = 0; s < t.tip_count(); ++s) slot_of_node[t.tips()[s]] = s;

  int next_cluster = 0;
  std::vector<int> stack{t.root()};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    const bool accept = support_of(v) >= support_min && diameter[v] <= distance_max;
    if (accept || t.node(v).is_tip()) {
      const int k = ++next_cluster;
      std::vector<int> sub{v};
      while (!sub.empty()) {
        const int w = sub.back();
        sub.pop_back();
        if (t.node(w).is_tip()) {
          labels[slot_of_node[w]] = k;
          continue;
        }
        for (const int ch : t.node(w).children) sub.push_back(ch);
      }
    } else {
      stack.push_back(t.node(v).children[1]);
      stack.push_back(t.node(v).children[0]);
    }
  }
  return ClusterAssignment(std::move(labels));
}

double dunn_index(const ClusterAssignment& c, const Eigen::MatrixXd& distances,
                  DunnLinkage linkage) {
  if (c.size() != distances.rows() || distances.rows() != distances.cols())
    throw ValidationError("dunn_index: distance matrix shape mismatch");
  if (c.cluster_count() < 2)
    throw ValidationError("dunn_index: undefined for a single cluster");

  const int k = c.cluster_count();
  double max_diameter = 0.0;
  const bool complete = linkage == DunnLinkage::complete;
  // Pairwise cluster distance under the chosen linkage; unordered pairs in an
  // upper triangle keyed (a-1, b-1), a < b.
  Eigen::MatrixXd pair_dist = Eigen::MatrixXd::Constant(
      k, k, complete ? 0.0 : std::numeric_limits<double>::infinity());

  for (int i = 0; i < c.size(); ++i)
    for (int j = i + 1; j < c.size(); ++j) {
      const double d = distances(i, j);
      if (c[i] == c[j]) {
        max_diameter = std::max(max_diameter, d);
      } else {
        const int a = std::min(c[i], c[j]) - 1;
        const int b = std::max(c[i], c[j]) - 1;
        pair_dist(a, b) = complete ? std::max(pair_dist(a, b), d) : std::min(pair_dist(a, b), d);
      }
    }
  if (max_diameter == 0.0)
    throw ValidationError("dunn_index: undefined when every cluster is a singleton");
  double inter = std::numeric_limits<double>::infinity();
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) inter = std::min(inter, pair_dist(a, b));
  return inter / max_diameter;
}

StartingPartition select_starting_partition(const Topology& t, double support_min,
                                            std::span<const double> distance_grid) {
  if (distance_grid.empty())
    throw ValidationError("select_starting_partition: empty distance grid");
  std::vector<double> grid(distance_grid.begin(), distance_grid.end());
  std::sort(grid.begin(), grid.end());

  const Eigen::MatrixXd distances = patristic_distances(t);
  StartingPartition best;
  bool found = false;
  for (const double threshold : grid) {
    ClusterAssignment candidate = clade_partition_search(t, support_min, threshold);
    double dunn;
    try {
      dunn = dunn_index(candidate, distances);
    } catch (const ValidationError&) {
      continue;  // undefined at this threshold
    }
    if (!found || dunn > best.dunn) {
      best.assignment = std::move(candidate);
      best.distance_threshold = threshold;
      best.dunn = dunn;
      found = true;
    }
  }
  if (!found) {
    best.assignment = clade_partition_search(t, support_min, grid.back());
    best.distance_threshold = grid.back();
    best.dunn_undefined_everywhere = true;
  }
  return best;
}

std::map<std::string, int> assignment_by_label(const Topology& t, const ClusterAssignment& c) {
  if (c.size() != t.tip_count())
    throw ValidationError("assignment size does not match tip count");
  std::map<std::string, int> out;
  for (int s = 0; s < t.tip_count(); ++s) out[t.tip_label(s)] = c[s];
  return out;
}

}  // namespace dmphy
