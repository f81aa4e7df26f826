#include "dmphy/tree.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "dmphy/errors.hpp"

namespace dmphy {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Topology::Topology(std::vector<TreeNode> nodes, int root) : nodes_(std::move(nodes)), root_(root) {
  index_tips();
  validate();
}

void Topology::index_tips() {
  tips_.clear();
  for (int i = 0; i < node_count(); ++i)
    if (nodes_[i].is_tip()) tips_.push_back(i);
}

int Topology::tip_slot(const std::string& label) const {
  for (int t = 0; t < tip_count(); ++t)
    if (nodes_[tips_[t]].label == label) return t;
  throw ValidationError("tree has no tip labeled '" + label + "'");
}

bool Topology::strictly_binary() const {
  for (const auto& n : nodes_)
    if (!n.is_tip() && n.children[1] < 0) return false;
  return node_count() == 2 * tip_count() - 1;
}

bool Topology::has_branch_lengths() const {
  for (int i = 0; i < node_count(); ++i)
    if (i != root_ && !nodes_[i].has_length()) return false;
  return true;
}

std::vector<int> Topology::postorder() const {
  std::vector<int> order;
  order.reserve(nodes_.size());
  std::vector<std::pair<int, bool>> stack{{root_, false}};
  while (!stack.empty()) {
    auto [v, expanded] = stack.back();
    stack.pop_back();
    if (expanded || nodes_[v].is_tip()) {
      order.push_back(v);
      continue;
    }
    stack.emplace_back(v, true);
    stack.emplace_back(nodes_[v].children[1], false);
    stack.emplace_back(nodes_[v].children[0], false);
  }
  return order;
}

std::vector<std::vector<int>> Topology::clade_tip_slots() const {
  std::vector<std::vector<int>> clades(node_count());
  for (int t = 0; t < tip_count(); ++t) clades[tips_[t]] = {t};
  for (const int v : postorder()) {
    if (nodes_[v].is_tip()) continue;
    auto& out = clades[v];
    for (const int c : nodes_[v].children) {
      if (c < 0) continue;
      out.insert(out.end(), clades[c].begin(), clades[c].end());
    }
    std::sort(out.begin(), out.end());
  }
  return clades;
}

void Topology::validate() const {
  if (nodes_.empty() || root_ < 0 || root_ >= node_count())
    throw std::logic_error("topology: bad root index");
  if (nodes_[root_].parent != -1) throw std::logic_error("topology: root has a parent");
  int reached = 0;
  std::vector<int> stack{root_};
  std::vector<char> seen(nodes_.size(), 0);
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (seen[v]) throw std::logic_error("topology: cycle detected");
    seen[v] = 1;
    ++reached;
    const auto& n = nodes_[v];
    if (n.is_tip()) {
      if (n.label.empty()) throw std::logic_error("topology: unlabeled tip");
      continue;
    }
    if (n.children[1] < 0) throw std::logic_error("topology: internal node with one child");
    for (const int c : n.children) {
      if (c < 0 || c >= node_count() || nodes_[c].parent != v)
        throw std::logic_error("topology: parent/child links inconsistent");
      stack.push_back(c);
    }
  }
  if (reached != node_count()) throw std::logic_error("topology: unreachable nodes");
  std::unordered_set<std::string> labels;
  for (const int t : tips_)
    if (!labels.insert(nodes_[t].label).second)
      throw std::logic_error("topology: duplicate tip label '" + nodes_[t].label + "'");
}

// ---------------------------------------------------------------------------
// Newick I/O

namespace {

class NewickParser {
 public:
  NewickParser(std::string_view text, const NewickOptions& options)
      : text_(text), options_(options) {}

  Topology parse() {
    skip_space();
    const int root = parse_subtree(/*at_root=*/true);
    skip_space();
    if (!consume(';')) fail("expected ';'");
    finish_supports();
    return Topology(std::move(nodes_), root);
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError("Newick parse error at position " + std::to_string(pos_) + ": " + message);
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '[') {  // bracket comment
        const auto end = text_.find(']', pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 1;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool consume(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  std::string parse_label() {
    skip_space();
    std::string label;
    if (consume('\'')) {
      for (;;) {
        if (pos_ >= text_.size()) fail("unterminated quoted label");
        const char c = text_[pos_++];
        if (c == '\'') {
          if (consume('\'')) {
            label += '\'';  // doubled quote escape
          } else {
            break;
          }
        } else {
          label += c;
        }
      }
      return label;
    }
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' ||
          std::isspace(static_cast<unsigned char>(c)))
        break;
      label += c;
      ++pos_;
    }
    return label;
  }

  double parse_number() {
    skip_space();
    double value = 0.0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc()) fail("expected a number");
    pos_ += static_cast<std::size_t>(result.ptr - begin);
    return value;
  }

  int new_node() {
    nodes_.emplace_back();
    return static_cast<int>(nodes_.size()) - 1;
  }

  int parse_subtree(bool at_root) {
    skip_space();
    int v;
    if (consume('(')) {
      std::vector<int> children;
      do {
        children.push_back(parse_subtree(false));
      } while (consume(','));
      skip_space();
      if (!consume(')')) fail("expected ')'");

      const int max_children = at_root ? 3 : 2;
      if (static_cast<int>(children.size()) > max_children && !options_.resolve_polytomies)
        fail("polytomy with " + std::to_string(children.size()) + " children");
      if (static_cast<int>(children.size()) < 2) fail("internal node with a single child");
      // Fold extra children (including the customary trifurcation at the
      // root of an unrooted tree) under zero-length auxiliary nodes. The
      // zero-length edge is metrically neutral and dissolves into the
      // unrooted edge graph when the tree is re-rooted on an outgroup.
      while (children.size() > 2) {
        const int right = children[1];
        const int left = children[0];
        const int joint = new_node();
        nodes_[joint].length = 0.0;
        nodes_[joint].children = {left, right};
        nodes_[left].parent = joint;
        nodes_[right].parent = joint;
        children.erase(children.begin());
        children[0] = joint;
      }

      v = new_node();
      nodes_[v].children = {children[0], children[1]};
      for (const int c : children) nodes_[c].parent = v;

      const std::string label = parse_label();
      if (!label.empty()) {
        double numeric = 0.0;
        const auto* begin = label.data();
        const auto result = std::from_chars(begin, begin + label.size(), numeric);
        if (result.ec == std::errc() && result.ptr == begin + label.size()) {
          nodes_[v].support = numeric;
          support_nodes_.push_back(v);
        } else {
          nodes_[v].label = label;
        }
      }
    } else {
      v = new_node();
      nodes_[v].label = parse_label();
      if (nodes_[v].label.empty()) fail("expected a tip label");
    }
    skip_space();
    if (consume(':')) nodes_[v].length = parse_number();
    return v;
  }

  // Auto-scale supports quoted as percentages.
  void finish_supports() {
    if (support_nodes_.empty()) return;
    double max_support = 0.0;
    for (const int v : support_nodes_) max_support = std::max(max_support, nodes_[v].support);
    for (const int v : support_nodes_)
      if (nodes_[v].support < 0.0) fail("negative support value");
    if (max_support > 100.0) fail("support values must lie in [0,1] or [0,100]");
    if (max_support > 1.0)
      for (const int v : support_nodes_) nodes_[v].support /= 100.0;
  }

  std::string_view text_;
  NewickOptions options_;
  std::size_t pos_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<int> support_nodes_;
};

}  // namespace

Topology parse_newick(std::string_view text, const NewickOptions& options) {
  NewickParser parser(text, options);
  return parser.parse();
}

Topology parse_newick_file(const std::string& path, const NewickOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open Newick file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_newick(buffer.str(), options);
}

namespace {

void format_double(std::ostream& out, double v) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.write(buf, result.ptr - buf);
}

bool label_needs_quotes(const std::string& label) {
  return label.find_first_of("():;,[] \t\n'") != std::string::npos;
}

void write_label(std::ostream& out, const std::string& label) {
  if (!label_needs_quotes(label)) {
    out << label;
    return;
  }
  out << '\'';
  for (const char c : label) {
    out << c;
    if (c == '\'') out << c;  // doubled-quote escape
  }
  out << '\'';
}

void write_subtree(const Topology& t, int v, std::ostream& out) {
  const TreeNode& n = t.node(v);
  if (n.is_tip()) {
    write_label(out, n.label);
  } else {
    out << '(';
    write_subtree(t, n.children[0], out);
    out << ',';
    write_subtree(t, n.children[1], out);
    out << ')';
    if (n.has_support())
      format_double(out, n.support);
    else if (!n.label.empty())
      write_label(out, n.label);
  }
  if (n.has_length()) {
    out << ':';
    format_double(out, n.length);
  }
}

}  // namespace

std::string write_newick(const Topology& t) {
  std::ostringstream out;
  write_subtree(t, t.root(), out);
  out << ';';
  return out.str();
}

// ---------------------------------------------------------------------------
// Re-rooting and tip removal via the undirected edge graph

namespace {

struct UndirectedEdge {
  int a = -1, b = -1;
  double length = kNaN;
  double support = kNaN;
  int other(int v) const { return v == a ? b : a; }
};

struct EdgeGraph {
  std::vector<std::string> labels;         // per original node (tips carry labels)
  std::vector<char> is_tip;                // per original node
  std::vector<UndirectedEdge> edges;
  std::vector<std::vector<int>> adjacency;  // node -> edge ids
  std::vector<char> removed;               // suppressed nodes

  int edge_between(int u, int v) const {
    for (const int e : adjacency[u])
      if (edges[e].other(u) == v) return e;
    return -1;
  }
};

double add_lengths(double x, double y) {
  if (std::isnan(x)) return y;
  if (std::isnan(y)) return x;
  return x + y;
}

EdgeGraph make_edge_graph(const Topology& t) {
  EdgeGraph g;
  const int n = t.node_count();
  g.labels.resize(n);
  g.is_tip.assign(n, 0);
  g.adjacency.resize(n);
  g.removed.assign(n, 0);
  for (int v = 0; v < n; ++v) {
    g.labels[v] = t.node(v).label;
    g.is_tip[v] = t.node(v).is_tip();
    if (v == t.root()) continue;
    UndirectedEdge e;
    e.a = v;
    e.b = t.node(v).parent;
    e.length = t.node(v).length;
    e.support = t.node(v).is_tip() ? kNaN : t.node(v).support;
    const int id = static_cast<int>(g.edges.size());
    g.edges.push_back(e);
    g.adjacency[e.a].push_back(id);
    g.adjacency[e.b].push_back(id);
  }
  return g;
}

// Suppresses a degree-two node by merging its incident edges.
void suppress_node(EdgeGraph& g, int v) {
  if (g.adjacency[v].size() != 2) return;
  const int e1 = g.adjacency[v][0];
  const int e2 = g.adjacency[v][1];
  const int u = g.edges[e1].other(v);
  const int w = g.edges[e2].other(v);
  UndirectedEdge merged;
  merged.a = u;
  merged.b = w;
  merged.length = add_lengths(g.edges[e1].length, g.edges[e2].length);
  merged.support = std::isnan(g.edges[e1].support) ? g.edges[e2].support : g.edges[e1].support;
  const int id = static_cast<int>(g.edges.size());
  g.edges.push_back(merged);
  auto detach = [&](int node, int edge) {
    auto& adj = g.adjacency[node];
    adj.erase(std::find(adj.begin(), adj.end(), edge));
  };
  detach(u, e1);
  detach(w, e2);
  g.adjacency[v].clear();
  g.adjacency[u].push_back(id);
  g.adjacency[w].push_back(id);
  g.removed[v] = 1;
}

// Rebuilds a rooted Topology from the graph, directing edges away from
// new_root. Children order follows adjacency order.
Topology build_rooted(const EdgeGraph& g, int new_root) {
  std::vector<int> new_id(g.labels.size(), -1);
  std::vector<TreeNode> nodes;
  // Map reachable original nodes.
  std::vector<std::pair<int, int>> stack{{new_root, -1}};  // (node, via edge)
  std::vector<std::tuple<int, int, int>> links;            // (parent old, child old, edge)
  std::vector<int> order;
  while (!stack.empty()) {
    auto [v, via] = stack.back();
    stack.pop_back();
    new_id[v] = static_cast<int>(order.size());
    order.push_back(v);
    for (const int e : g.adjacency[v]) {
      if (e == via) continue;
      const int w = g.edges[e].other(v);
      links.emplace_back(v, w, e);
      stack.emplace_back(w, e);
    }
  }
  nodes.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) nodes[i].label = g.labels[order[i]];
  for (const auto& [parent_old, child_old, e] : links) {
    const int p = new_id[parent_old];
    const int c = new_id[child_old];
    nodes[c].parent = p;
    nodes[c].length = g.edges[e].length;
    if (!g.is_tip[child_old]) nodes[c].support = g.edges[e].support;
    if (nodes[p].children[0] < 0)
      nodes[p].children[0] = c;
    else if (nodes[p].children[1] < 0)
      nodes[p].children[1] = c;
    else
      throw std::logic_error("build_rooted: node with more than two children");
  }
  return Topology(std::move(nodes), new_id[new_root]);
}

}  // namespace

Topology root_with_outgroup(const Topology& t, const std::string& outgroup_label) {
  const int out_tip = t.tips()[t.tip_slot(outgroup_label)];
  if (t.tip_count() < 3)
    throw ValidationError("root_with_outgroup: need at least three tips");

  EdgeGraph g = make_edge_graph(t);
  // Unroot: the old root position must not linger as a degree-two node.
  if (g.adjacency[t.root()].size() == 2) suppress_node(g, t.root());

  const int stem = g.adjacency[out_tip][0];
  const int neighbor = g.edges[stem].other(out_tip);
  // Split the outgroup edge in half around the new root.
  const int root_id = static_cast<int>(g.labels.size());
  g.labels.emplace_back();
  g.is_tip.push_back(0);
  g.adjacency.emplace_back();
  g.removed.push_back(0);
  const double half = std::isnan(g.edges[stem].length) ? kNaN : 0.5 * g.edges[stem].length;
  const double stem_support = g.edges[stem].support;
  auto detach = [&](int node, int edge) {
    auto& adj = g.adjacency[node];
    adj.erase(std::find(adj.begin(), adj.end(), edge));
  };
  detach(out_tip, stem);
  detach(neighbor, stem);
  UndirectedEdge to_out{out_tip, root_id, half, kNaN};
  UndirectedEdge to_rest{neighbor, root_id, half, stem_support};
  const int e1 = static_cast<int>(g.edges.size());
  g.edges.push_back(to_out);
  g.adjacency[out_tip].push_back(e1);
  g.adjacency[root_id].push_back(e1);
  const int e2 = static_cast<int>(g.edges.size());
  g.edges.push_back(to_rest);
  g.adjacency[neighbor].push_back(e2);
  g.adjacency[root_id].push_back(e2);

  return build_rooted(g, root_id);
}

Topology remove_tip(const Topology& t, const std::string& label) {
  if (t.tip_count() < 3) throw ValidationError("remove_tip: need at least three tips");
  const int tip = t.tips()[t.tip_slot(label)];
  const int parent = t.node(tip).parent;

  std::vector<TreeNode> nodes(t.node_count());
  for (int v = 0; v < t.node_count(); ++v) nodes[v] = t.node(v);

  int new_root = t.root();
  if (parent == t.root() && nodes[parent].children[1] >= 0) {
    const int sibling = nodes[parent].children[0] == tip ? nodes[parent].children[1]
                                                         : nodes[parent].children[0];
    nodes[sibling].parent = -1;
    nodes[sibling].length = kNaN;
    new_root = sibling;
  } else {
    const int grand = nodes[parent].parent;
    const int sibling = nodes[parent].children[0] == tip ? nodes[parent].children[1]
                                                         : nodes[parent].children[0];
    nodes[sibling].parent = grand;
    nodes[sibling].length = add_lengths(nodes[sibling].length, nodes[parent].length);
    for (int& c : nodes[grand].children)
      if (c == parent) c = sibling;
  }

  // Compact away the two dropped nodes.
  std::vector<int> new_id(nodes.size(), -1);
  std::vector<TreeNode> compact;
  for (int v = 0; v < static_cast<int>(nodes.size()); ++v) {
    if (v == tip || v == parent) continue;
    new_id[v] = static_cast<int>(compact.size());
    compact.push_back(nodes[v]);
  }
  for (auto& n : compact) {
    if (n.parent >= 0) n.parent = new_id[n.parent];
    for (int& c : n.children)
      if (c >= 0) c = new_id[c];
  }
  return Topology(std::move(compact), new_id[new_root]);
}

Eigen::MatrixXd patristic_distances(const Topology& t) {
  if (!t.has_branch_lengths())
    throw ValidationError("patristic_distances: tree is missing branch lengths");
  const int n = t.tip_count();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> slot_of_node(t.node_count(), -1);
  for (int s = 0; s < n; ++s) slot_of_node[t.tips()[s]] = s;

  for (int s = 0; s < n; ++s) {
    std::vector<std::tuple<int, int, double>> stack{{t.tips()[s], -1, 0.0}};
    while (!stack.empty()) {
      auto [v, from, d] = stack.back();
      stack.pop_back();
      // Fill the upper triangle only; mirroring keeps the matrix exactly
      // symmetric despite order-dependent rounding.
      if (slot_of_node[v] > s) {
        dist(s, slot_of_node[v]) = d;
        dist(slot_of_node[v], s) = d;
      }
      const auto& node = t.node(v);
      if (node.parent >= 0 && node.parent != from)
        stack.emplace_back(node.parent, v, d + node.length);
      for (const int c : node.children)
        if (c >= 0 && c != from) stack.emplace_back(c, v, d + t.node(c).length);
    }
  }
  return dist;
}

std::vector<Topology> nni_neighbors(const Topology& t) {
  std::vector<Topology> result;
  if (t.tip_count() < 4) return result;
  if (!t.strictly_binary())
    throw ValidationError("nni_neighbors: tree must be strictly binary (root the tree first)");

  for (int v = 0; v < t.node_count(); ++v) {
    const auto& node = t.node(v);
    if (node.is_tip() || node.parent < 0) continue;
    const int u = node.parent;
    const int sibling = t.node(u).children[0] == v ? t.node(u).children[1] : t.node(u).children[0];
    for (const int child_pos : {0, 1}) {
      std::vector<TreeNode> nodes(t.node_count());
      for (int i = 0; i < t.node_count(); ++i) nodes[i] = t.node(i);
      const int moved = nodes[v].children[child_pos];
      for (int& c : nodes[u].children)
        if (c == sibling) c = moved;
      nodes[moved].parent = u;
      nodes[v].children[child_pos] = sibling;
      nodes[sibling].parent = v;
      result.emplace_back(std::move(nodes), t.root());
    }
  }
  return result;
}

std::vector<std::vector<std::string>> clade_label_sets(const Topology& t) {
  const auto clades = t.clade_tip_slots();
  std::vector<std::vector<std::string>> result;
  for (int v = 0; v < t.node_count(); ++v) {
    if (t.node(v).is_tip()) continue;
    std::vector<std::string> labels;
    labels.reserve(clades[v].size());
    for (const int slot : clades[v]) labels.push_back(t.tip_label(slot));
    std::sort(labels.begin(), labels.end());
    result.push_back(std::move(labels));
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace dmphy
