#include "doceval/tree_edit.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>

#include "doceval/error.hpp"
#include "utf8.hpp"

namespace doceval {

PostorderIndex::PostorderIndex(const TableNode& root) {
  // Iterative postorder: (node, next child to visit).
  std::vector<std::pair<const TableNode*, std::size_t>> stack{{&root, 0}};
  std::vector<std::size_t> first_leaf_stack;  // postorder id of leftmost leaf per open frame
  first_leaf_stack.push_back(std::numeric_limits<std::size_t>::max());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->children.size()) {
      const TableNode* child = &node->children[next++];
      stack.emplace_back(child, 0);
      first_leaf_stack.push_back(std::numeric_limits<std::size_t>::max());
      continue;
    }
    const std::size_t id = nodes.size();
    nodes.push_back(node);
    std::size_t lml = first_leaf_stack.back();
    if (lml == std::numeric_limits<std::size_t>::max()) lml = id;
    leftmost.push_back(lml);
    stack.pop_back();
    first_leaf_stack.pop_back();
    if (!first_leaf_stack.empty() &&
        first_leaf_stack.back() == std::numeric_limits<std::size_t>::max()) {
      first_leaf_stack.back() = lml;
    }
  }
  // A keyroot is the highest node for its leftmost leaf.
  std::vector<bool> seen(nodes.size(), false);
  for (std::size_t i = nodes.size(); i-- > 0;) {
    if (!seen[leftmost[i]]) {
      seen[leftmost[i]] = true;
      keyroots.push_back(i);
    }
  }
  std::sort(keyroots.begin(), keyroots.end());
}

EditDistanceResult tree_edit_distance(const TableNode& left, const TableNode& right,
                                      const EditCostModel& costs) {
  const PostorderIndex a(left);
  const PostorderIndex b(right);
  const auto n1 = static_cast<Eigen::Index>(a.size());
  const auto n2 = static_cast<Eigen::Index>(b.size());

  Eigen::VectorXd del(n1), ins(n2);
  for (Eigen::Index i = 0; i < n1; ++i) del(i) = costs.delete_cost(*a.nodes[i]);
  for (Eigen::Index j = 0; j < n2; ++j) ins(j) = costs.insert_cost(*b.nodes[j]);

  Eigen::MatrixXd tree_dist(n1, n2);
  Eigen::MatrixXd forest(n1 + 1, n2 + 1);

  for (std::size_t ki : a.keyroots) {
    for (std::size_t kj : b.keyroots) {
      const auto li = static_cast<Eigen::Index>(a.leftmost[ki]);
      const auto lj = static_cast<Eigen::Index>(b.leftmost[kj]);
      const auto rows = static_cast<Eigen::Index>(ki) - li + 1;
      const auto cols = static_cast<Eigen::Index>(kj) - lj + 1;

      forest(0, 0) = 0.0;
      for (Eigen::Index x = 1; x <= rows; ++x) forest(x, 0) = forest(x - 1, 0) + del(li + x - 1);
      for (Eigen::Index y = 1; y <= cols; ++y) forest(0, y) = forest(0, y - 1) + ins(lj + y - 1);

      for (Eigen::Index x = 1; x <= rows; ++x) {
        const Eigen::Index i = li + x - 1;
        const auto lx = static_cast<Eigen::Index>(a.leftmost[i]);
        for (Eigen::Index y = 1; y <= cols; ++y) {
          const Eigen::Index j = lj + y - 1;
          const auto ly = static_cast<Eigen::Index>(b.leftmost[j]);
          const double drop = forest(x - 1, y) + del(i);
          const double add = forest(x, y - 1) + ins(j);
          if (lx == li && ly == lj) {
            const double swap =
                forest(x - 1, y - 1) + costs.substitute_cost(*a.nodes[i], *b.nodes[j]);
            forest(x, y) = std::min({drop, add, swap});
            tree_dist(i, j) = forest(x, y);
          } else {
            const double graft = forest(lx - li, ly - lj) + tree_dist(i, j);
            forest(x, y) = std::min({drop, add, graft});
          }
        }
      }
    }
  }
  return {tree_dist(n1 - 1, n2 - 1), a.size(), b.size()};
}

EditDistanceResult tree_edit_distance(const TableTree& left, const TableTree& right,
                                      const EditCostModel& costs) {
  return tree_edit_distance(left.root, right.root, costs);
}

namespace {

// Flat view for the exhaustive search: preorder numbering with ancestor masks.
struct SmallTree {
  std::vector<const TableNode*> nodes;  // preorder
  std::vector<std::uint32_t> ancestors;  // bit k set => node k is a proper ancestor

  void add(const TableNode& node, std::uint32_t ancestor_mask) {
    const std::size_t id = nodes.size();
    nodes.push_back(&node);
    ancestors.push_back(ancestor_mask);
    for (const auto& child : node.children) add(child, ancestor_mask | (1u << id));
  }

  bool is_ancestor(std::size_t a, std::size_t d) const { return (ancestors[d] >> a) & 1u; }

  // a precedes d in document order without containing it.
  bool is_left_of(std::size_t a, std::size_t d) const { return a < d && !is_ancestor(a, d); }
};

struct MappingSearch {
  const SmallTree& left;
  const SmallTree& right;
  const EditCostModel& costs;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<bool> right_used;
  double best = std::numeric_limits<double>::infinity();

  bool consistent(std::size_t i, std::size_t j) const {
    for (const auto& [pi, pj] : pairs) {
      if (left.is_ancestor(pi, i) != right.is_ancestor(pj, j)) return false;
      if (left.is_ancestor(i, pi) != right.is_ancestor(j, pj)) return false;
      if (left.is_left_of(pi, i) != right.is_left_of(pj, j)) return false;
      if (left.is_left_of(i, pi) != right.is_left_of(j, pj)) return false;
    }
    return true;
  }

  double cost_of_mapping() const {
    double total = 0.0;
    std::vector<bool> left_mapped(left.nodes.size(), false);
    for (const auto& [i, j] : pairs) {
      left_mapped[i] = true;
      total += costs.substitute_cost(*left.nodes[i], *right.nodes[j]);
    }
    for (std::size_t i = 0; i < left.nodes.size(); ++i) {
      if (!left_mapped[i]) total += costs.delete_cost(*left.nodes[i]);
    }
    for (std::size_t j = 0; j < right.nodes.size(); ++j) {
      if (!right_used[j]) total += costs.insert_cost(*right.nodes[j]);
    }
    return total;
  }

  void search(std::size_t i) {
    if (i == left.nodes.size()) {
      best = std::min(best, cost_of_mapping());
      return;
    }
    search(i + 1);  // i left unmapped
    for (std::size_t j = 0; j < right.nodes.size(); ++j) {
      if (right_used[j] || !consistent(i, j)) continue;
      right_used[j] = true;
      pairs.emplace_back(i, j);
      search(i + 1);
      pairs.pop_back();
      right_used[j] = false;
    }
  }
};

}  // namespace

EditDistanceResult brute_force_distance(const TableTree& left, const TableTree& right,
                                        const EditCostModel& costs) {
  const std::size_t n1 = node_count(left);
  const std::size_t n2 = node_count(right);
  if (n1 > kBruteForceMaxNodes || n2 > kBruteForceMaxNodes) {
    throw Error(ErrorCode::TreeTooLarge, "brute force limited to " +
                                             std::to_string(kBruteForceMaxNodes) +
                                             " nodes, got " + std::to_string(n1) + " and " +
                                             std::to_string(n2));
  }
  SmallTree a, b;
  a.add(left.root, 0);
  b.add(right.root, 0);
  MappingSearch search{a, b, costs, {}, std::vector<bool>(b.nodes.size(), false)};
  search.search(0);
  return {search.best, n1, n2};
}

double normalized_levenshtein(std::string_view a, std::string_view b) {
  const auto s = utf8::decode(a);
  const auto t = utf8::decode(b);
  const std::size_t denom = std::max({s.size(), t.size(), std::size_t{1}});
  if (s.empty() || t.empty()) return static_cast<double>(std::max(s.size(), t.size())) / denom;

  std::vector<std::size_t> prev(t.size() + 1), cur(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[t.size()]) / static_cast<double>(denom);
}

EditCostModel teds_cost_model() {
  EditCostModel m;
  m.insert_cost = [](const TableNode&) { return 1.0; };
  m.delete_cost = [](const TableNode&) { return 1.0; };
  m.substitute_cost = [](const TableNode& x, const TableNode& y) {
    if (x.tag != y.tag || x.rowspan != y.rowspan || x.colspan != y.colspan) return 1.0;
    if (is_cell(x.tag)) return normalized_levenshtein(x.text, y.text);
    return 0.0;
  };
  return m;
}

}  // namespace doceval
