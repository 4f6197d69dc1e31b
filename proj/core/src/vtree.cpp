#include "kc/vtree.hpp"

#include <algorithm>
#include <functional>

#include "kc/error.hpp"

namespace kc {

std::vector<Var> Vtree::leaves_in_order() const {
  std::vector<Var> out;
  if (root < 0) return out;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int t = stack.back();
    stack.pop_back();
    if (is_leaf(t)) {
      out.push_back(nodes[t].var);
    } else {
      stack.push_back(nodes[t].right);
      stack.push_back(nodes[t].left);
    }
  }
  return out;
}

std::vector<int> Vtree::parents() const {
  std::vector<int> par(nodes.size(), -1);
  for (size_t t = 0; t < nodes.size(); ++t)
    if (!is_leaf(static_cast<int>(t))) {
      par[nodes[t].left] = static_cast<int>(t);
      par[nodes[t].right] = static_cast<int>(t);
    }
  return par;
}

std::vector<std::vector<Var>> Vtree::vars_below() const {
  std::vector<std::vector<Var>> below(nodes.size());
  // children have smaller ids only if built bottom-up; recurse to be safe
  std::vector<int> order;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int t = stack.back();
    stack.pop_back();
    order.push_back(t);
    if (!is_leaf(t)) {
      stack.push_back(nodes[t].left);
      stack.push_back(nodes[t].right);
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int t = *it;
    if (is_leaf(t)) {
      below[t] = {nodes[t].var};
    } else {
      const auto& l = below[nodes[t].left];
      const auto& r = below[nodes[t].right];
      below[t].resize(l.size() + r.size());
      std::merge(l.begin(), l.end(), r.begin(), r.end(), below[t].begin());
    }
  }
  return below;
}

Vtree Vtree::right_linear(const std::vector<Var>& order) {
  Vtree vt;
  if (order.empty()) throw Error("vtree needs at least one variable");
  int acc = vt.add_leaf(order.back());
  for (size_t i = order.size() - 1; i-- > 0;) {
    int leaf = vt.add_leaf(order[i]);
    acc = vt.add_internal(leaf, acc);
  }
  vt.root = acc;
  return vt;
}

Vtree Vtree::balanced(const std::vector<Var>& order) {
  Vtree vt;
  if (order.empty()) throw Error("vtree needs at least one variable");
  struct Range {
    size_t lo, hi;
  };
  std::function<int(size_t, size_t)> build = [&](size_t lo, size_t hi) -> int {
    if (hi - lo == 1) return vt.add_leaf(order[lo]);
    size_t mid = lo + (hi - lo + 1) / 2;
    int l = build(lo, mid);
    int r = build(mid, hi);
    return vt.add_internal(l, r);
  };
  vt.root = build(0, order.size());
  return vt;
}

}  // namespace kc
