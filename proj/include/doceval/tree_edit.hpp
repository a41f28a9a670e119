#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "doceval/table_model.hpp"

namespace doceval {

/// Costs driving the ordered tree edit distance.
///
/// Must be stateless, non-negative and symmetric, with substitute(a, a) == 0
/// and substitute(a, b) <= delete(a) + insert(b).
struct EditCostModel {
  std::function<double(const TableNode&)> insert_cost;
  std::function<double(const TableNode&)> delete_cost;
  std::function<double(const TableNode&, const TableNode&)> substitute_cost;
};

struct EditDistanceResult {
  double distance = 0.0;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
};

/// Postorder index of a tree: node payloads plus leftmost-leaf links and the
/// keyroots used by the Zhang-Shasha recursion. Built without recursion.
struct PostorderIndex {
  std::vector<const TableNode*> nodes;
  std::vector<std::size_t> leftmost;
  std::vector<std::size_t> keyroots;

  explicit PostorderIndex(const TableNode& root);
  std::size_t size() const noexcept { return nodes.size(); }
};

EditDistanceResult tree_edit_distance(const TableTree& left, const TableTree& right,
                                      const EditCostModel& costs);
EditDistanceResult tree_edit_distance(const TableNode& left, const TableNode& right,
                                      const EditCostModel& costs);

inline constexpr std::size_t kBruteForceMaxNodes = 8;

// Exhaustive search over every valid ordered mapping. Test oracle only;
// throws Error{TreeTooLarge} past kBruteForceMaxNodes nodes per tree.
EditDistanceResult brute_force_distance(const TableTree& left, const TableTree& right,
                                        const EditCostModel& costs);

// Code-point Levenshtein distance over max(len(a), len(b), 1).
double normalized_levenshtein(std::string_view a, std::string_view b);

EditCostModel teds_cost_model();

}  // namespace doceval
