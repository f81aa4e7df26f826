#include "dmphy/likelihood.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "dmphy/errors.hpp"

namespace dmphy {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

using Digest = LikelihoodCache::Digest;

Digest digest_words(std::initializer_list<std::uint64_t> words) {
  Digest d{0x6a09e667f3bcc909ull, 0xbb67ae8584caa73bull};
  for (const std::uint64_t w : words) {
    d.lo = mix64(d.lo ^ w);
    d.hi = mix64(d.hi + (w ^ 0x9e3779b97f4a7c15ull));
  }
  return d;
}

struct ByteHasher {
  std::uint64_t state = 0xcbf29ce484222325ull;
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 0x100000001b3ull;
    }
  }
};

}  // namespace

RegimeLabeling label_regimes(const Topology& t, const ClusterAssignment& c) {
  if (!is_clade_partition(t, c))
    throw ValidationError("label_regimes: assignment is not a clade partition of the topology");
  RegimeLabeling labeling;
  labeling.edge_regime.assign(t.node_count(), Regime::between);
  labeling.edge_cluster.assign(t.node_count(), 0);
  const auto mrcas = cluster_mrcas(t, c);
  for (int k = 0; k < c.cluster_count(); ++k) {
    std::vector<int> stack;
    if (!t.node(mrcas[k]).is_tip()) stack.push_back(mrcas[k]);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const int ch : t.node(v).children) {
        labeling.edge_regime[ch] = Regime::within;
        labeling.edge_cluster[ch] = k + 1;
        if (!t.node(ch).is_tip()) stack.push_back(ch);
      }
    }
  }
  return labeling;
}

std::shared_ptr<const PartialBlock> LikelihoodCache::find(const Digest& digest,
                                                          const FullKey& key) {
  const auto it = store_.find(digest);
  if (it == store_.end() || !(it->second.key == key)) {
    ++stats_.misses;
    return nullptr;
  }
  ++stats_.hits;
  return it->second.block;
}

void LikelihoodCache::insert(const Digest& digest, const FullKey& key,
                             std::shared_ptr<const PartialBlock> block,
                             std::uint64_t entry_count) {
  if (entry_count > max_entries_) return;  // larger than the whole budget
  if (stats_.entries + entry_count > max_entries_) wipe();
  auto [it, inserted] = store_.try_emplace(digest);
  if (!inserted) stats_.entries -= it->second.entry_count;  // digest collision: replace
  it->second = Entry{key, std::move(block), entry_count};
  stats_.entries += entry_count;
  ++stats_.inserts;
}

void LikelihoodCache::wipe() {
  store_.clear();
  stats_.entries = 0;
  ++stats_.wipes;
}

PruningEvaluator::PruningEvaluator(const Alignment& compressed, const Topology& t,
                                   const Eigen::Vector4d& pi, int n_categories)
    : topology_(t), pi_(pi), n_categories_(n_categories) {
  if (n_categories < 1) throw ValidationError("PruningEvaluator: need at least one category");
  if (!t.strictly_binary())
    throw ValidationError("PruningEvaluator: topology must be strictly binary");
  if (compressed.pattern_count() == 0)
    throw ValidationError("PruningEvaluator: alignment has no site patterns");

  const int patterns = compressed.pattern_count();
  weights_ = compressed.weights.cast<double>();
  postorder_ = t.postorder();
  tip_slot_of_node_.assign(t.node_count(), -1);
  for (int s = 0; s < t.tip_count(); ++s) tip_slot_of_node_[t.tips()[s]] = s;

  tip_blocks_.resize(t.tip_count());
  ByteHasher context;
  context.add_bytes(pi.data(), 4 * sizeof(double));
  const std::int64_t cats = n_categories;
  context.add_bytes(&cats, sizeof cats);
  for (int s = 0; s < t.tip_count(); ++s) {
    const int row = compressed.row_of(t.tip_label(s));
    auto block = std::make_shared<PartialBlock>();
    Eigen::Matrix4Xd indicators(4, patterns);
    for (int p = 0; p < patterns; ++p)
      indicators.col(p) = NucleotideVector(compressed.patterns(row, p)).indicator();
    block->values.assign(n_categories, indicators);
    block->log_scale = Eigen::ArrayXXd::Zero(n_categories, patterns);
    tip_blocks_[s] = std::move(block);
    context.add_bytes(compressed.patterns.row(row).data(),
                      static_cast<std::size_t>(patterns));
  }
  context.add_bytes(compressed.weights.data(), static_cast<std::size_t>(patterns) * sizeof(int));
  context_salt_ = context.state;
}

namespace {

// Site log-likelihood at the root: log of the category-averaged dot product
// with the limiting probabilities, combined across categories in log space.
double root_log_likelihood(const PartialBlock& root, const Eigen::Vector4d& pi,
                           const Eigen::VectorXd& weights, int n_categories) {
  const auto patterns = root.values[0].cols();
  double total = 0.0;
  std::vector<double> terms(n_categories);
  for (Eigen::Index p = 0; p < patterns; ++p) {
    double max_term = kNegInf;
    for (int m = 0; m < n_categories; ++m) {
      const double dot = pi.dot(root.values[m].col(p));
      terms[m] = dot > 0.0 ? std::log(dot) + root.log_scale(m, p) : kNegInf;
      max_term = std::max(max_term, terms[m]);
    }
    if (max_term == kNegInf) return kNegInf;  // impossible data; flagged as -inf
    double sum = 0.0;
    for (const double term : terms) sum += std::exp(term - max_term);
    total += weights(p) * (max_term + std::log(sum) - std::log(double(n_categories)));
  }
  return total;
}

// L_parent = (P_left * L_left) .* (P_right * L_right), rescaled per column.
std::shared_ptr<PartialBlock> combine_children(
    const PartialBlock& left, const PartialBlock& right,
    const std::function<const Eigen::Matrix4d&(int category)>& left_matrix,
    const std::function<const Eigen::Matrix4d&(int category)>& right_matrix, int n_categories) {
  const auto patterns = left.values[0].cols();
  auto block = std::make_shared<PartialBlock>();
  block->values.resize(n_categories);
  block->log_scale.resize(n_categories, patterns);
  for (int m = 0; m < n_categories; ++m) {
    Eigen::Matrix4Xd vals =
        (left_matrix(m) * left.values[m]).cwiseProduct(right_matrix(m) * right.values[m]);
    for (Eigen::Index p = 0; p < patterns; ++p) {
      const double top = vals.col(p).maxCoeff();
      if (top > 0.0) {
        vals.col(p) /= top;
        block->log_scale(m, p) =
            left.log_scale(m, p) + right.log_scale(m, p) + std::log(top);
      } else {
        block->log_scale(m, p) = 0.0;  // impossible column; zeros propagate
      }
    }
    block->values[m] = std::move(vals);
  }
  return block;
}

}  // namespace

double PruningEvaluator::log_likelihood(
    const std::function<const Eigen::Matrix4d&(int child_node, int category)>& matrix_of) const {
  std::vector<std::shared_ptr<const PartialBlock>> blocks(topology_.node_count());
  for (const int v : postorder_) {
    if (topology_.node(v).is_tip()) {
      blocks[v] = tip_blocks_[tip_slot_of_node_[v]];
      continue;
    }
    const int lc = topology_.node(v).children[0];
    const int rc = topology_.node(v).children[1];
    blocks[v] = combine_children(
        *blocks[lc], *blocks[rc], [&](int m) -> const Eigen::Matrix4d& { return matrix_of(lc, m); },
        [&](int m) -> const Eigen::Matrix4d& { return matrix_of(rc, m); }, n_categories_);
    blocks[lc].reset();
    blocks[rc].reset();
  }

  return root_log_likelihood(*blocks[topology_.root()], pi_, weights_, n_categories_);
}

double PruningEvaluator::marginal_log_likelihood(const RegimeLabeling& regimes,
                                                 const MarginalTransitionGrid& within,
                                                 const MarginalTransitionGrid& between,
                                                 int within_idx, int between_idx,
                                                 std::uint64_t grids_salt,
                                                 LikelihoodCache* cache) const {
  if (within.n_categories != n_categories_ || between.n_categories != n_categories_)
    throw ValidationError("marginal_log_likelihood: grid category count mismatch");
  if (within_idx < 0 || within_idx >= within.size() || between_idx < 0 ||
      between_idx >= between.size())
    throw ValidationError("marginal_log_likelihood: grid index out of range");
  if (static_cast<int>(regimes.edge_regime.size()) != topology_.node_count())
    throw ValidationError("marginal_log_likelihood: regime labeling shape mismatch");

  const auto edge_code = [&](int child) {
    const bool is_within = regimes.edge_regime[child] == Regime::within;
    return (std::uint64_t{is_within ? 0u : 1u} << 32) |
           static_cast<std::uint32_t>(is_within ? within_idx : between_idx);
  };
  const auto edge_matrix = [&](int child, int m) -> const Eigen::Matrix4d& {
    return regimes.edge_regime[child] == Regime::within ? within.matrix(within_idx, m)
                                                        : between.matrix(between_idx, m);
  };

  // Recursive structural digests; tips fold in the evaluation context.
  std::vector<Digest> digests(topology_.node_count());
  std::vector<LikelihoodCache::FullKey> keys(topology_.node_count());
  for (const int v : postorder_) {
    if (topology_.node(v).is_tip()) {
      digests[v] = digest_words({0x7469705f6b657931ull, context_salt_, grids_salt,
                                 static_cast<std::uint64_t>(tip_slot_of_node_[v])});
      continue;
    }
    int lc = topology_.node(v).children[0];
    int rc = topology_.node(v).children[1];
    // Canonical child order: the partial is symmetric in the children, so
    // mirrored subtrees share one digest.
    if (std::tie(digests[rc].hi, digests[rc].lo, rc) <
        std::tie(digests[lc].hi, digests[lc].lo, lc))
      std::swap(lc, rc);
    keys[v] = LikelihoodCache::FullKey{digests[lc], digests[rc], edge_code(lc), edge_code(rc)};
    digests[v] = digest_words({0x696e7465726e616cull, digests[lc].hi, digests[lc].lo,
                               edge_code(lc), digests[rc].hi, digests[rc].lo, edge_code(rc)});
  }

  // Top-down descent with cache short-circuiting: a hit at a node spares its
  // whole subtree.
  const std::uint64_t block_entries =
      static_cast<std::uint64_t>(n_categories_) * weights_.size();
  std::vector<std::shared_ptr<const PartialBlock>> blocks(topology_.node_count());
  std::vector<std::pair<int, bool>> stack{{topology_.root(), false}};
  while (!stack.empty()) {
    const auto [v, expanded] = stack.back();
    stack.pop_back();
    if (blocks[v]) continue;
    if (topology_.node(v).is_tip()) {
      blocks[v] = tip_blocks_[tip_slot_of_node_[v]];
      continue;
    }
    const int lc = topology_.node(v).children[0];
    const int rc = topology_.node(v).children[1];
    if (!expanded) {
      if (cache) {
        if (auto hit = cache->find(digests[v], keys[v])) {
          blocks[v] = std::move(hit);
          continue;
        }
      }
      stack.emplace_back(v, true);
      stack.emplace_back(rc, false);
      stack.emplace_back(lc, false);
      continue;
    }
    auto block = combine_children(
        *blocks[lc], *blocks[rc],
        [&](int m) -> const Eigen::Matrix4d& { return edge_matrix(lc, m); },
        [&](int m) -> const Eigen::Matrix4d& { return edge_matrix(rc, m); }, n_categories_);
    if (cache) cache->insert(digests[v], keys[v], block, block_entries);
    blocks[v] = std::move(block);
    blocks[lc].reset();
    blocks[rc].reset();
  }

  return root_log_likelihood(*blocks[topology_.root()], pi_, weights_, n_categories_);
}

double marginal_log_likelihood(const Alignment& a, const Topology& t, const ClusterAssignment& c,
                               const MarginalTransitionGrid& within,
                               const MarginalTransitionGrid& between,
                               std::pair<int, int> grid_choice, const DiscreteGamma& dg,
                               const RateMatrix& rm, LikelihoodCache* cache) {
  if (within.n_categories != dg.n_categories || between.n_categories != dg.n_categories)
    throw ValidationError("marginal_log_likelihood: grids disagree with the rate model");
  const RegimeLabeling regimes = label_regimes(t, c);
  PruningEvaluator evaluator(a, t, rm.pi(), dg.n_categories);
  const std::uint64_t salt = hash_grid_bytes(within) ^ (hash_grid_bytes(between) << 1);
  return evaluator.marginal_log_likelihood(regimes, within, between, grid_choice.first,
                                           grid_choice.second, salt, cache);
}

double log_likelihood_exact(const Alignment& a, const Topology& t, const RateMatrix& rm,
                            const DiscreteGamma& dg) {
  if (!t.has_branch_lengths())
    throw ValidationError("log_likelihood_exact: tree is missing branch lengths");
  const int n_cat = dg.n_categories;
  std::vector<Eigen::Matrix4d> matrices(static_cast<std::size_t>(t.node_count()) * n_cat);
  for (int v = 0; v < t.node_count(); ++v) {
    if (v == t.root()) continue;
    for (int m = 0; m < n_cat; ++m)
      matrices[static_cast<std::size_t>(v) * n_cat + m] =
          rm.transition_matrix(dg.scalers[m] * t.node(v).length);
  }
  PruningEvaluator evaluator(a, t, rm.pi(), n_cat);
  return evaluator.log_likelihood([&](int child, int m) -> const Eigen::Matrix4d& {
    return matrices[static_cast<std::size_t>(child) * n_cat + m];
  });
}

std::uint64_t hash_grid_bytes(const MarginalTransitionGrid& grid) {
  ByteHasher hasher;
  hasher.add_bytes(grid.means.data(), static_cast<std::size_t>(grid.means.size()) * sizeof(double));
  const std::int64_t k = grid.mc_samples;
  hasher.add_bytes(&k, sizeof k);
  for (const auto& mat : grid.matrices) hasher.add_bytes(mat.data(), 16 * sizeof(double));
  return hasher.state;
}

}  // namespace dmphy
