#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dmphy/alignment.hpp"
#include "dmphy/cluster.hpp"
#include "dmphy/likelihood.hpp"
#include "dmphy/priors.hpp"
#include "dmphy/rng.hpp"
#include "dmphy/tree.hpp"

namespace dmphy {

// One split or merge reachable from an assignment. Splits cut a cluster of
// size >= 2 at the two children of its MRCA; merges join two clusters whose
// MRCAs are siblings.
struct Move {
  enum class Kind { split, merge };
  Kind kind = Kind::split;
  int cluster_a = 0;
  int cluster_b = 0;  // merge partner; unused for splits
  ClusterAssignment result;
};

// Exhaustive, deterministic-ordered move list. Every move's reverse appears
// in the list enumerated from its result.
std::vector<Move> enumerate_moves(const Topology& t, const ClusterAssignment& c);

struct ChainState {
  ClusterAssignment assignment;
  double alpha = 1.0;
  int within_idx = 0;
  int between_idx = 0;
  // Cached posterior parts; log_posterior() is their sum.
  double log_likelihood = 0.0;
  double log_prior_assignment = 0.0;
  double log_prior_alpha = 0.0;

  double log_posterior() const {
    return log_likelihood + log_prior_assignment + log_prior_alpha;
  }
};

struct ChainConfig {
  std::int64_t iterations = 55000;
  std::int64_t burn_in = 5000;
  std::int64_t thinning = 50;
  std::uint64_t seed = 1;
  double alpha_window = 0.5;  // uniform proposal of total length 1
  std::uint64_t cache_max_entries = std::uint64_t{1} << 22;
  std::int64_t wipe_every = 0;    // additionally wipe the cache every N iterations
  std::int64_t check_every = 1000;  // recompute the posterior and compare
  std::int64_t log_every = 0;       // progress lines to the run log, 0 = quiet
};

struct ChainInputs {
  const Alignment* alignment = nullptr;  // pattern-compressed
  const Topology* topology = nullptr;
  const RateMatrix* rate_matrix = nullptr;
  const DiscreteGamma* rates = nullptr;
  const MarginalTransitionGrid* within = nullptr;
  const MarginalTransitionGrid* between = nullptr;
  ClusterPriorParams prior;
  ClusterAssignment start_assignment;
  double start_alpha = 10.0;
  int start_within_idx = 0;
  int start_between_idx = 0;
};

struct TraceSample {
  std::int64_t iteration = 0;
  double log_posterior = 0.0;
  double alpha = 0.0;
  int within_idx = 0;
  int between_idx = 0;
  std::vector<int> assignment;
};

struct Trace {
  std::vector<std::string> labels;  // tip labels in slot order
  std::vector<TraceSample> samples;
};

struct KernelStats {
  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct ChainDiagnostics {
  KernelStats cluster_kernel;
  KernelStats alpha_kernel;
  KernelStats within_grid_kernel;
  KernelStats between_grid_kernel;
  LikelihoodCache::Stats cache;
};

struct ChainResult {
  Trace trace;
  ChainDiagnostics diagnostics;
};

// Drives the three Metropolis-Hastings kernels (cluster split-merge, then
// the concentration parameter, then the two grid indices) over a fixed
// topology. Each kernel draws from its own Rng sub-stream, so traces are
// reproducible across platforms for a given seed.
class ChainRunner {
 public:
  ChainRunner(const ChainInputs& inputs, const ChainConfig& config);

  const ChainState& state() const { return state_; }
  const ChainDiagnostics& diagnostics() const;

  // One full iteration (all kernels once, in order).
  void step();

  // Runs config.iterations steps, collecting the thinned post-burn-in trace.
  ChainResult run(std::ostream* log = nullptr);

  // Posterior of the current state recomputed from its definition; used by
  // the periodic drift check and exposed for tests.
  double recompute_log_posterior();

 private:
  double assignment_log_likelihood(const ClusterAssignment& c);

  const ChainInputs inputs_;
  ChainConfig config_;
  PruningEvaluator evaluator_;
  LikelihoodCache cache_;
  std::uint64_t grids_salt_;
  Rng cluster_rng_, alpha_rng_, grid_rng_;
  ChainState state_;
  ChainDiagnostics diagnostics_;
  std::int64_t iteration_ = 0;
};

ChainResult run_chain(const ChainInputs& inputs, const ChainConfig& config,
                      std::ostream* log = nullptr);

// Greedy nearest-neighbour-interchange hill climb around the input topology,
// interleaved with short bursts of the regular kernels so the assignment and
// concentration adapt between topology moves. Each candidate-neighbor
// posterior evaluation consumes one unit of budget; budget 0 returns the
// inputs unchanged. Neighbors on which the current assignment stops being a
// clade partition score -inf and are skipped.
struct TopologySearchResult {
  Topology topology;
  ChainState state;
  std::int64_t evaluations_used = 0;
};

TopologySearchResult preliminary_topology_search(const ChainInputs& inputs,
                                                 const ChainConfig& config, std::int64_t budget,
                                                 std::int64_t burst_iterations = 50);

// Mean branch length per regime under a labeling; a regime with no edges
// reports NaN.
struct RegimeMeans {
  double within = std::numeric_limits<double>::quiet_NaN();
  double between = std::numeric_limits<double>::quiet_NaN();
};
RegimeMeans regime_mean_lengths(const Topology& t, const RegimeLabeling& regimes);

}  // namespace dmphy
