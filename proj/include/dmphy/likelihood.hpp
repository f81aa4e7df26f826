#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "dmphy/alignment.hpp"
#include "dmphy/cluster.hpp"
#include "dmphy/discrete_gamma.hpp"
#include "dmphy/rate_matrix.hpp"
#include "dmphy/transition_grid.hpp"
#include "dmphy/tree.hpp"

namespace dmphy {

// Which branch-length regime each edge belongs to, indexed by the edge's
// child node. Edges strictly below a cluster's most recent common ancestor
// are within-cluster; every other edge, including the stem above each MRCA
// and the edges above singleton tips, is between-cluster.
struct RegimeLabeling {
  std::vector<Regime> edge_regime;  // root entry unused
  std::vector<int> edge_cluster;    // 1-based cluster id for within edges, 0 otherwise
};

RegimeLabeling label_regimes(const Topology& t, const ClusterAssignment& c);

// Partial likelihoods for one subtree: a 4 x patterns matrix per rate
// category, column-rescaled to keep values in [0,1], with the accumulated
// log scale factors alongside.
struct PartialBlock {
  std::vector<Eigen::Matrix4Xd> values;  // [category](state, pattern)
  Eigen::ArrayXXd log_scale;             // (category, pattern)
};

// Memo of subtree partial likelihoods keyed by a 128-bit recursive digest of
// (child keys, per-edge regime label and grid index), tied to the evaluation
// context (site patterns, rate categories, transition grids) through a salt
// folded into the tip digests. A lookup verifies the stored child digests and
// edge codes before accepting the hit, so a digest collision degrades to a
// miss instead of corrupting results.
//
// The store is wiped wholesale once the configured entry budget (counted in
// per-pattern, per-category likelihood vectors) would be exceeded; hit/miss
// counters survive wipes. Cached values are bit-identical to recomputation,
// so wiping at any point never changes a result.
class LikelihoodCache {
 public:
  struct Digest {
    std::uint64_t hi = 0, lo = 0;
    friend bool operator==(const Digest&, const Digest&) = default;
  };

  struct FullKey {
    Digest left, right;
    std::uint64_t left_edge = 0, right_edge = 0;
    friend bool operator==(const FullKey&, const FullKey&) = default;
  };

  struct Stats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t inserts = 0;
    std::uint64_t wipes = 0;
    std::uint64_t entries = 0;  // current, in likelihood vectors
  };

  explicit LikelihoodCache(std::uint64_t max_entries = std::uint64_t{1} << 22)
      : max_entries_(max_entries) {}

  std::shared_ptr<const PartialBlock> find(const Digest& digest, const FullKey& key);
  void insert(const Digest& digest, const FullKey& key, std::shared_ptr<const PartialBlock> block,
              std::uint64_t entry_count);

  void wipe();  // empties the store; counters are preserved
  const Stats& stats() const { return stats_; }
  std::uint64_t max_entries() const { return max_entries_; }

 private:
  struct DigestHash {
    std::size_t operator()(const Digest& d) const {
      return static_cast<std::size_t>(d.lo ^ (d.hi * 0x9e3779b97f4a7c15ull));
    }
  };
  struct Entry {
    FullKey key;
    std::shared_ptr<const PartialBlock> block;
    std::uint64_t entry_count = 0;
  };

  std::uint64_t max_entries_;
  std::unordered_map<Digest, Entry, DigestHash> store_;
  Stats stats_;
};

// Felsenstein pruning over the site patterns of one alignment bound to one
// topology. The per-edge transition matrices are pluggable: the production
// path reads them from marginal transition grids according to a regime
// labeling, the exact path (used by oracles and the sequence simulator's
// consumers) takes explicit matrices.
class PruningEvaluator {
 public:
  PruningEvaluator(const Alignment& compressed, const Topology& t, const Eigen::Vector4d& pi,
                   int n_categories);

  int n_categories() const { return n_categories_; }

  // matrix_of(child_node, category) supplies the transition matrix of the
  // edge above child_node. No caching on this path.
  double log_likelihood(
      const std::function<const Eigen::Matrix4d&(int child_node, int category)>& matrix_of) const;

  // Grid-backed evaluation. grids_salt must identify the grid pair contents;
  // chains pass a fingerprint computed once, the convenience wrapper hashes
  // the grid bytes. Returns -inf when the data is impossible under the model.
  double marginal_log_likelihood(const RegimeLabeling& regimes,
                                 const MarginalTransitionGrid& within,
                                 const MarginalTransitionGrid& between, int within_idx,
                                 int between_idx, std::uint64_t grids_salt,
                                 LikelihoodCache* cache) const;

 private:
  const Topology& topology_;
  Eigen::Vector4d pi_;
  int n_categories_;
  Eigen::VectorXd weights_;
  std::vector<int> postorder_;
  std::vector<int> tip_slot_of_node_;  // -1 for internal nodes
  std::vector<std::shared_ptr<const PartialBlock>> tip_blocks_;  // by tip slot
  std::uint64_t context_salt_;
};

// One-shot wrapper matching the sampler-facing contract.
double marginal_log_likelihood(const Alignment& a, const Topology& t, const ClusterAssignment& c,
                               const MarginalTransitionGrid& within,
                               const MarginalTransitionGrid& between,
                               std::pair<int, int> grid_choice, const DiscreteGamma& dg,
                               const RateMatrix& rm, LikelihoodCache* cache);

// Non-marginalized likelihood using the topology's own branch lengths and
// exact matrix exponentials; the reference path for oracle comparisons.
double log_likelihood_exact(const Alignment& a, const Topology& t, const RateMatrix& rm,
                            const DiscreteGamma& dg);

std::uint64_t hash_grid_bytes(const MarginalTransitionGrid& grid);

}  // namespace dmphy
