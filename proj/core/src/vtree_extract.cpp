#include "kc/vtree_extract.hpp"

#include <algorithm>
#include <unordered_map>

#include "kc/error.hpp"

namespace kc {

namespace {

bool bag_contains(const std::vector<uint32_t>& bag, uint32_t v) {
  return std::binary_search(bag.begin(), bag.end(), v);
}

// Mutable rooted tree with stable node ids.
struct MutTree {
  std::vector<std::vector<uint32_t>> bags;  // sorted
  std::vector<int> parent;
  std::vector<std::vector<int>> children;
  int root = -1;

  int insert_clone_above(int t) {
    int id = static_cast<int>(bags.size());
    bags.push_back(bags[t]);
    parent.push_back(parent[t]);
    children.push_back({t});
    if (parent[t] >= 0) {
      auto& sib = children[parent[t]];
      *std::find(sib.begin(), sib.end(), t) = id;
    } else {
      root = id;
    }
    parent[t] = id;
    return id;
  }

  std::vector<int> preorder() const {
    std::vector<int> order, stack{root};
    while (!stack.empty()) {
      int t = stack.back();
      stack.pop_back();
      order.push_back(t);
      for (int ch : children[t]) stack.push_back(ch);
    }
    return order;
  }
};

}  // namespace

VtreeExtraction extract_vtrees(const ConstraintSystem& f, const TreeDecomposition& td) {
  const Graph g = incidence_graph(f);
  {
    auto rep = validate_td(g, td);
    if (!rep.ok()) throw Error("extract_vtrees: input decomposition is invalid");
  }
  NiceTd ntd = make_nice(td);

  MutTree t;
  t.bags.reserve(ntd.nodes.size());
  t.parent.assign(ntd.nodes.size(), -1);
  t.children.assign(ntd.nodes.size(), {});
  for (size_t i = 0; i < ntd.nodes.size(); ++i) {
    t.bags.push_back(ntd.nodes[i].bag);
    for (int ch : {ntd.nodes[i].child1, ntd.nodes[i].child2})
      if (ch >= 0) {
        t.parent[ch] = static_cast<int>(i);
        t.children[i].push_back(ch);
      }
  }
  t.root = ntd.root;

  const uint32_t num_vertices = g.num_vertices;
  // highest node holding each vertex: first hit in preorder
  std::vector<int> top_of(num_vertices + 1, -1);
  for (int node : t.preorder())
    for (uint32_t v : t.bags[node])
      if (top_of[v] < 0) top_of[v] = node;

  // clone parents over join-topped variables so every variable top has at
  // most one child
  for (Var x = 1; x <= f.num_vars; ++x) {
    if (top_of[x] < 0) continue;
    if (t.children[top_of[x]].size() >= 2) top_of[x] = t.insert_clone_above(top_of[x]);
  }

  // per-constraint witness nodes t^x_c, stacking clones above the constraint top
  std::vector<std::unordered_map<Var, int>> witness(f.constraints.size());
  for (size_t ci = 0; ci < f.constraints.size(); ++ci) {
    const uint32_t cv = constraint_vertex(f, ci);
    const int tc = top_of[cv];
    if (tc < 0) throw Error("extract_vtrees: constraint missing from every bag");
    auto scope = f.constraints[ci].vars();
    std::sort(scope.begin(), scope.end());
    std::vector<Var> in_top, below;
    for (Var x : scope)
      (bag_contains(t.bags[tc], x) ? in_top : below).push_back(x);
    for (Var x : in_top) witness[ci][x] = t.insert_clone_above(tc);
    for (Var x : below) {
      const int tx = top_of[x];
      if (tx < 0 || !bag_contains(t.bags[tx], cv))
        throw Error("extract_vtrees: internal invariant broken (variable top misses constraint)");
      witness[ci][x] = tx;
    }
  }

  const size_t nn = t.bags.size();
  auto order = t.preorder();
  std::vector<uint32_t> depth(nn, 0);
  for (int node : order)
    if (t.parent[node] >= 0) depth[node] = depth[t.parent[node]] + 1;

  VtreeExtraction out;
  out.first_fresh_id = num_vertices + 1;
  uint32_t fresh = out.first_fresh_id;

  out.transformed.bags = t.bags;
  for (size_t i = 0; i < nn; ++i)
    if (t.parent[i] >= 0)
      out.transformed.tree_edges.emplace_back(static_cast<uint32_t>(t.parent[i]),
                                              static_cast<uint32_t>(i));

  for (size_t ci = 0; ci < f.constraints.size(); ++ci) {
    VtreeExtraction::PerConstraint pc;
    pc.bags.bags.assign(nn, {});
    pc.bags.tree_edges = out.transformed.tree_edges;
    auto scope = f.constraints[ci].vars();
    std::sort(scope.begin(), scope.end());

    if (scope.empty()) {
      pc.empty_scope = true;
      pc.vtree.root = pc.vtree.add_leaf(0);
      pc.vnode_global = {0};
      out.per_constraint.push_back(std::move(pc));
      continue;
    }

    // Steiner tree of the witness nodes
    std::vector<int> vc_of_node(nn, -1);  // witness x per node, -1 otherwise
    for (auto [x, node] : witness[ci]) vc_of_node[node] = static_cast<int>(x);
    std::vector<uint32_t> desc(nn, 0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int node = *it;
      if (vc_of_node[node] >= 0) ++desc[node];
      if (t.parent[node] >= 0) desc[t.parent[node]] += desc[node];
    }
    // deepest node covering all witnesses
    int lca = t.root;
    for (;;) {
      int next = -1;
      for (int ch : t.children[lca])
        if (desc[ch] == scope.size()) next = ch;
      if (next < 0 || vc_of_node[lca] >= 0) break;
      lca = next;
    }

    std::vector<uint8_t> in_t1(nn, 0);
    std::vector<int> t1_nodes;
    {
      std::vector<int> stack{lca};
      while (!stack.empty()) {
        int node = stack.back();
        stack.pop_back();
        if (desc[node] == 0) continue;
        in_t1[node] = 1;
        t1_nodes.push_back(node);
        for (int ch : t.children[node]) stack.push_back(ch);
      }
    }
    // T2: witnesses and branch points survive
    auto t1_child_count = [&](int node) {
      size_t k = 0;
      for (int ch : t.children[node])
        if (in_t1[ch] && desc[ch] > 0) ++k;
      return k;
    };
    std::vector<uint8_t> in_t2(nn, 0);
    for (int node : t1_nodes)
      if (vc_of_node[node] >= 0 || t1_child_count(node) >= 2) in_t2[node] = 1;

    // sigma: vtree node per T2 node, built bottom-up (t1_nodes is in preorder)
    std::vector<int> sigma(nn, -1);
    for (auto it = t1_nodes.rbegin(); it != t1_nodes.rend(); ++it) {
      int node = *it;
      if (!in_t2[node]) continue;
      std::vector<int> t2_kids;
      for (int ch : t.children[node]) {
        int walk = ch;
        while (walk >= 0 && in_t1[walk] && !in_t2[walk]) {
          int next = -1;
          for (int cc : t.children[walk])
            if (in_t1[cc]) next = cc;
          walk = next;
        }
        if (walk >= 0 && in_t1[walk] && in_t2[walk]) t2_kids.push_back(walk);
      }
      if (vc_of_node[node] >= 0) {
        const Var x = static_cast<Var>(vc_of_node[node]);
        if (t2_kids.empty()) {
          sigma[node] = pc.vtree.add_leaf(x);
        } else {
          if (t2_kids.size() != 1)
            throw Error("extract_vtrees: witness node with several pruned children");
          int leaf = pc.vtree.add_leaf(x);
          sigma[node] = pc.vtree.add_internal(leaf, sigma[t2_kids[0]]);
        }
      } else {
        if (t2_kids.size() != 2)
          throw Error("extract_vtrees: branch node lost its children");
        sigma[node] = pc.vtree.add_internal(sigma[t2_kids[0]], sigma[t2_kids[1]]);
      }
    }
    pc.vtree.root = sigma[lca];
    if (!in_t2[lca]) throw Error("extract_vtrees: steiner root not kept");

    // global ids: leaves are the variables themselves, internal nodes fresh
    pc.vnode_global.assign(pc.vtree.num_nodes(), 0);
    for (size_t vn = 0; vn < pc.vtree.num_nodes(); ++vn)
      pc.vnode_global[vn] =
          pc.vtree.is_leaf(static_cast<int>(vn)) ? pc.vtree.nodes[vn].var : fresh++;

    pc.vtree_graph.vertex_ids = pc.vnode_global;
    for (size_t vn = 0; vn < pc.vtree.num_nodes(); ++vn)
      if (!pc.vtree.is_leaf(static_cast<int>(vn))) {
        pc.vtree_graph.add_edge(pc.vnode_global[vn], pc.vnode_global[pc.vtree.nodes[vn].left]);
        pc.vtree_graph.add_edge(pc.vnode_global[vn], pc.vnode_global[pc.vtree.nodes[vn].right]);
      }

    // bags: T2 nodes carry their sigma plus the parent link; bypassed chain
    // nodes carry the two chain endpoints
    auto t2_parent_sigma = [&](int node) -> int {
      int walk = t.parent[node];
      while (walk >= 0 && (!in_t1[walk] || !in_t2[walk])) {
        if (!in_t1[walk]) return -1;  // above the steiner root
        walk = t.parent[walk];
      }
      return walk >= 0 ? sigma[walk] : -1;
    };
    for (int node : t1_nodes) {
      std::vector<uint32_t> bag;
      if (in_t2[node]) {
        bag.push_back(pc.vnode_global[sigma[node]]);
        if (vc_of_node[node] >= 0) bag.push_back(static_cast<uint32_t>(vc_of_node[node]));
        if (node != lca) {
          int ps = t2_parent_sigma(node);
          if (ps < 0) throw Error("extract_vtrees: missing parent witness");
          bag.push_back(pc.vnode_global[ps]);
        }
      } else {
        // on a bypassed chain: nearest kept ancestor and descendant
        int up = t.parent[node];
        while (up >= 0 && !in_t2[up]) up = t.parent[up];
        int down = node;
        while (down >= 0 && !in_t2[down]) {
          int next = -1;
          for (int cc : t.children[down])
            if (in_t1[cc]) next = cc;
          down = next;
        }
        if (up < 0 || down < 0) throw Error("extract_vtrees: broken chain");
        bag.push_back(pc.vnode_global[sigma[up]]);
        bag.push_back(pc.vnode_global[sigma[down]]);
      }
      std::sort(bag.begin(), bag.end());
      bag.erase(std::unique(bag.begin(), bag.end()), bag.end());
      pc.bags.bags[node] = std::move(bag);
    }
    out.per_constraint.push_back(std::move(pc));
  }
  return out;
}

}  // namespace kc
