#pragma once

#include <cstdint>
#include <vector>

#include "kc/constraint.hpp"

namespace kc {

// Rooted binary tree with leaves labeled bijectively by variables.
struct Vtree {
  struct Node {
    int left = -1, right = -1;  // leaf iff left < 0
    Var var = 0;                // leaf label
  };
  std::vector<Node> nodes;
  int root = -1;

  bool is_leaf(int t) const { return nodes[t].left < 0; }
  size_t num_nodes() const { return nodes.size(); }

  int add_leaf(Var v) {
    nodes.push_back({-1, -1, v});
    return static_cast<int>(nodes.size()) - 1;
  }
  int add_internal(int l, int r) {
    nodes.push_back({l, r, 0});
    return static_cast<int>(nodes.size()) - 1;
  }

  std::vector<Var> leaves_in_order() const;
  std::vector<int> parents() const;                 // -1 at root
  std::vector<std::vector<Var>> vars_below() const;  // sorted, per node

  static Vtree right_linear(const std::vector<Var>& order);
  static Vtree balanced(const std::vector<Var>& order);
};

}  // namespace kc
