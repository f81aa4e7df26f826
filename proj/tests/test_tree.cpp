#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "dmphy/errors.hpp"
#include "dmphy/rng.hpp"
#include "dmphy/tree.hpp"
#include "test_util.hpp"

using namespace dmphy;
namespace dt = dmphy::testing;

namespace {

// Random rooted binary tree over n labeled tips with uniform lengths.
Topology random_tree(int n, Rng& rng, bool with_supports = false) {
  std::vector<TreeNode> nodes(1);
  nodes[0].label = "t0";
  int root = 0;
  for (int i = 1; i < n; ++i) {
    std::vector<int> edges;  // candidate attachment points: every non-root node
    for (int v = 0; v < static_cast<int>(nodes.size()); ++v)
      if (v != root) edges.push_back(v);
    const std::uint64_t pick = rng.uniform_int(edges.size() + 1);
    const int tip = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[tip].label = "t" + std::to_string(i);
    nodes[tip].length = rng.uniform(0.01, 1.0);
    const int joint = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (pick == edges.size()) {  // new root above the old one
      nodes[joint].children = {root, tip};
      nodes[root].parent = joint;
      nodes[root].length = rng.uniform(0.01, 1.0);
      nodes[tip].parent = joint;
      root = joint;
    } else {
      const int below = edges[pick];
      const int parent = nodes[below].parent;
      nodes[joint].parent = parent;
      nodes[joint].length = rng.uniform(0.01, 1.0);
      nodes[joint].children = {below, tip};
      if (with_supports) nodes[joint].support = rng.uniform(0.0, 1.0);
      for (int& c : nodes[parent].children)
        if (c == below) c = joint;
      nodes[below].parent = joint;
      nodes[tip].parent = joint;
    }
  }
  return Topology(std::move(nodes), root);
}

}  // namespace

TEST_CASE("basic newick parse") {
  const auto t = parse_newick("((A:1,B:1):1,C:2);");
  CHECK(t.tip_count() == 3);
  CHECK(t.node_count() == 5);
  CHECK(t.strictly_binary());
  CHECK(t.has_branch_lengths());
  const int a = t.tips()[t.tip_slot("A")];
  CHECK(t.node(a).length == 1.0);
  CHECK(t.node(t.node(a).parent).length == 1.0);
}

TEST_CASE("internal numeric labels become supports") {
  const auto t = parse_newick("((A,B)0.98,C);");
  const int a = t.tips()[t.tip_slot("A")];
  CHECK(t.node(t.node(a).parent).support == doctest::Approx(0.98));
}

TEST_CASE("percentage supports are rescaled to fractions") {
  const auto t = parse_newick("(((A,B)98,C)75,D);");
  const int a = t.tips()[t.tip_slot("A")];
  CHECK(t.node(t.node(a).parent).support == doctest::Approx(0.98));
}

TEST_CASE("parse rejects malformed input") {
  CHECK_THROWS_AS(parse_newick("((A,B),C)"), ParseError);           // missing ';'
  CHECK_THROWS_AS(parse_newick("((A,B,C,D),E);"), ParseError);      // polytomy
  CHECK_THROWS_AS(parse_newick("((A,B),(C,B));"), std::logic_error);  // duplicate tip
  CHECK_NOTHROW(parse_newick("((A,B,C,D),E);", NewickOptions{.resolve_polytomies = true}));
}

TEST_CASE("trifurcating root is binarized with a zero-length edge") {
  const auto t = parse_newick("(A:1,B:1,C:1);");
  CHECK(t.tip_count() == 3);
  CHECK(t.strictly_binary());
  const auto d = patristic_distances(t);
  CHECK(d(t.tip_slot("A"), t.tip_slot("B")) == doctest::Approx(2.0));
  CHECK(d(t.tip_slot("A"), t.tip_slot("C")) == doctest::Approx(2.0));
}

TEST_CASE("quoted labels round-trip") {
  const auto t = parse_newick("(('taxon one':1,'it''s':1):1,C:1);");
  CHECK_NOTHROW(t.tip_slot("taxon one"));
  CHECK_NOTHROW(t.tip_slot("it's"));
  const auto again = parse_newick(write_newick(t));
  CHECK_NOTHROW(again.tip_slot("it's"));
}

TEST_CASE("parse-write-parse is the identity on random trees") {
  Rng rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(10));
    const auto t = random_tree(n, rng, /*with_supports=*/true);
    const std::string text = write_newick(t);
    const auto u = parse_newick(text);
    CHECK(write_newick(u) == text);
    CHECK(clade_label_sets(u) == clade_label_sets(t));
  }
}

TEST_CASE("root_with_outgroup puts the outgroup directly under the root") {
  // Unrooted 4-tip input.
  const auto t = parse_newick("(A:1,B:2,(C:1,O:4):1);");
  const auto rooted = root_with_outgroup(t, "O");
  CHECK(rooted.strictly_binary());
  const int o = rooted.tips()[rooted.tip_slot("O")];
  CHECK(rooted.node(o).parent == rooted.root());
  CHECK(rooted.node(o).length == doctest::Approx(2.0));  // half of 4
}

TEST_CASE("rooting at the existing outgroup preserves the topology") {
  const auto t = parse_newick("(O:1,((A:1,B:1):1,C:2):1);");
  const auto rooted = root_with_outgroup(t, "O");
  CHECK(clade_label_sets(rooted) == clade_label_sets(t));
}

TEST_CASE("rooting then removing the outgroup preserves ingroup clades") {
  Rng rng(41);
  for (int rep = 0; rep < 20; ++rep) {
    const auto t = random_tree(8, rng);
    const auto rooted = root_with_outgroup(t, "t3");
    const auto pruned = remove_tip(rooted, "t3");
    // Ingroup clade sets of the re-rooted tree, restricted to surviving
    // clades, must appear unchanged. Compare pairwise path distances instead,
    // which pin the whole unrooted ingroup structure.
    const auto d_before = patristic_distances(t);
    const auto d_after = patristic_distances(pruned);
    for (const auto& a : {std::string("t0"), std::string("t1")})
      for (const auto& b : {std::string("t5"), std::string("t7")}) {
        CHECK(d_after(pruned.tip_slot(a), pruned.tip_slot(b)) ==
              doctest::Approx(d_before(t.tip_slot(a), t.tip_slot(b))).epsilon(1e-12));
      }
  }
}

TEST_CASE("root_with_outgroup rejects unknown labels") {
  const auto t = parse_newick("((A,B),C);");
  CHECK_THROWS_AS(root_with_outgroup(t, "Z"), ValidationError);
}

TEST_CASE("patristic distances on a worked example") {
  const auto t = parse_newick("((A:1,B:1):1,C:2);");
  const auto d = patristic_distances(t);
  CHECK(d(t.tip_slot("A"), t.tip_slot("B")) == doctest::Approx(2.0));
  CHECK(d(t.tip_slot("A"), t.tip_slot("C")) == doctest::Approx(4.0));
  CHECK(d(t.tip_slot("B"), t.tip_slot("C")) == doctest::Approx(4.0));
  CHECK(d.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("all-zero branch lengths give the zero matrix") {
  const auto t = parse_newick("((A:0,B:0):0,C:0);");
  CHECK(patristic_distances(t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("patristic matches the root-path oracle on random trees") {
  Rng rng(51);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(11));  // up to 12 tips
    const auto t = random_tree(n, rng);
    const auto fast = patristic_distances(t);
    const auto brute = dt::path_patristic(t);
    CHECK((fast - brute).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fast - fast.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("patristic requires branch lengths") {
  const auto t = parse_newick("((A,B),C);");
  CHECK_THROWS_AS(patristic_distances(t), ValidationError);
}

TEST_CASE("nni neighborhood size and involution") {
  Rng rng(61);
  const auto t4 = parse_newick("((A:1,B:1):1,(C:1,D:1):1);");
  const auto neighbors = nni_neighbors(t4);
  CHECK(neighbors.size() == 4);  // two internal edges, two swaps each

  for (int n = 4; n <= 9; ++n) {
    const auto t = random_tree(n, rng);
    CHECK(nni_neighbors(t).size() == 2 * static_cast<std::size_t>(n - 2));
  }

  CHECK(nni_neighbors(parse_newick("((A,B),C);")).empty());
  CHECK(nni_neighbors(parse_newick("(A,B);")).empty());
}

TEST_CASE("each nni neighbor differs in exactly one clade") {
  Rng rng(71);
  for (int rep = 0; rep < 10; ++rep) {
    const auto t = random_tree(7, rng);
    const auto base = clade_label_sets(t);
    for (const auto& nb : nni_neighbors(t)) {
      const auto other = clade_label_sets(nb);
      std::vector<std::vector<std::string>> missing;
      std::set_difference(base.begin(), base.end(), other.begin(), other.end(),
                          std::back_inserter(missing));
      CHECK(missing.size() == 1);
    }
  }
}

TEST_CASE("applying the same nni twice returns the original tree") {
  Rng rng(81);
  const auto t = random_tree(8, rng);
  const auto once = nni_neighbors(t);
  for (std::size_t i = 0; i < once.size(); ++i) {
    const auto twice = nni_neighbors(once[i]);
    CHECK(clade_label_sets(twice[i]) == clade_label_sets(t));
  }
}

TEST_CASE("postorder visits children before parents") {
  Rng rng(91);
  const auto t = random_tree(10, rng);
  const auto order = t.postorder();
  std::vector<int> position(t.node_count());
  for (int i = 0; i < t.node_count(); ++i) position[order[i]] = i;
  for (int v = 0; v < t.node_count(); ++v)
    if (!t.node(v).is_tip())
      for (const int c : t.node(v).children) CHECK(position[c] < position[v]);
  CHECK(order.back() == t.root());
}
