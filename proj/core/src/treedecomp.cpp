#include "kc/treedecomp.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "kc/error.hpp"

namespace kc {

namespace {

bool bag_contains(const std::vector<uint32_t>& bag, uint32_t v) {
  return std::binary_search(bag.begin(), bag.end(), v);
}

std::vector<uint32_t> sorted_unique(std::vector<uint32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

int TreeDecomposition::width() const {
  size_t m = 0;
  for (const auto& b : bags) m = std::max(m, b.size());
  return static_cast<int>(m) - 1;
}

std::vector<std::vector<uint32_t>> TreeDecomposition::adjacency() const {
  std::vector<std::vector<uint32_t>> adj(bags.size());
  for (auto [a, b] : tree_edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

TdReport validate_td(const Graph& g, const TreeDecomposition& td) {
  TdReport rep;
  rep.width = td.width();
  if (td.bags.empty()) {
    rep.issues.push_back("decomposition has no nodes");
    return rep;
  }
  for (const auto& b : td.bags)
    if (!std::is_sorted(b.begin(), b.end()))
      throw Error("validate_td: bags must be sorted");

  // tree check: connected and |E| = |V| - 1
  rep.is_tree = td.tree_edges.size() + 1 == td.bags.size();
  if (rep.is_tree) {
    std::vector<uint32_t> stack{0};
    std::vector<bool> seen(td.bags.size(), false);
    seen[0] = true;
    auto adj = td.adjacency();
    size_t cnt = 1;
    while (!stack.empty()) {
      uint32_t t = stack.back();
      stack.pop_back();
      for (uint32_t u : adj[t])
        if (!seen[u]) {
          seen[u] = true;
          ++cnt;
          stack.push_back(u);
        }
    }
    rep.is_tree = cnt == td.bags.size();
  }
  if (!rep.is_tree) rep.issues.push_back("node graph is not a tree");

  // condition 1: every vertex in some bag
  std::unordered_set<uint32_t> in_bags;
  for (const auto& b : td.bags) in_bags.insert(b.begin(), b.end());
  rep.covers_vertices = true;
  for (uint32_t v : g.vertex_list())
    if (!in_bags.count(v)) {
      rep.covers_vertices = false;
      rep.issues.push_back("vertex " + std::to_string(v) + " is in no bag");
    }

  // condition 2: every edge inside some bag
  rep.covers_edges = true;
  for (auto [u, v] : g.edges) {
    bool found = false;
    for (const auto& b : td.bags)
      if (bag_contains(b, u) && bag_contains(b, v)) {
        found = true;
        break;
      }
    if (!found) {
      rep.covers_edges = false;
      rep.issues.push_back("edge {" + std::to_string(u) + "," + std::to_string(v) +
                           "} is in no bag");
    }
  }

  // condition 3: nodes holding a vertex induce a connected subtree
  rep.connected = true;
  if (rep.is_tree) {
    auto adj = td.adjacency();
    for (uint32_t v : g.vertex_list()) {
      int first = -1;
      size_t holding = 0;
      for (size_t t = 0; t < td.bags.size(); ++t)
        if (bag_contains(td.bags[t], v)) {
          ++holding;
          if (first < 0) first = static_cast<int>(t);
        }
      if (holding == 0) continue;
      std::vector<uint32_t> stack{static_cast<uint32_t>(first)};
      std::unordered_set<uint32_t> seen{static_cast<uint32_t>(first)};
      size_t reached = 1;
      while (!stack.empty()) {
        uint32_t t = stack.back();
        stack.pop_back();
        for (uint32_t u : adj[t])
          if (bag_contains(td.bags[u], v) && seen.insert(u).second) {
            ++reached;
            stack.push_back(u);
          }
      }
      if (reached != holding) {
        rep.connected = false;
        rep.issues.push_back("vertex " + std::to_string(v) + " spans a disconnected set of bags");
      }
    }
  }
  return rep;
}

namespace {

// Adjacency sets on dense indices 0..n-1.
struct FillGraph {
  std::vector<std::set<uint32_t>> adj;

  explicit FillGraph(size_t n) : adj(n) {}
  void connect(uint32_t a, uint32_t b) {
    if (a == b) return;
    adj[a].insert(b);
    adj[b].insert(a);
  }
  size_t fill_in(uint32_t v) const {
    size_t missing = 0;
    for (auto it = adj[v].begin(); it != adj[v].end(); ++it)
      for (auto jt = std::next(it); jt != adj[v].end(); ++jt)
        if (!adj[*it].count(*jt)) ++missing;
    return missing;
  }
  void eliminate(uint32_t v) {
    for (uint32_t a : adj[v])
      for (uint32_t b : adj[v]) connect(a, b);
    for (uint32_t a : adj[v]) adj[a].erase(v);
    adj[v].clear();
  }
};

std::vector<uint32_t> min_fill_order(const std::vector<std::set<uint32_t>>& adj0) {
  const size_t n = adj0.size();
  FillGraph fg(n);
  fg.adj = adj0;
  std::vector<bool> gone(n, false);
  std::vector<uint32_t> order;
  order.reserve(n);
  for (size_t step = 0; step < n; ++step) {
    uint32_t best = 0;
    size_t best_fill = SIZE_MAX, best_deg = SIZE_MAX;
    for (uint32_t v = 0; v < n; ++v) {
      if (gone[v]) continue;
      size_t fill = fg.fill_in(v);
      size_t deg = fg.adj[v].size();
      if (fill < best_fill || (fill == best_fill && deg < best_deg)) {
        best = v;
        best_fill = fill;
        best_deg = deg;
      }
    }
    order.push_back(best);
    gone[best] = true;
    fg.eliminate(best);
  }
  return order;
}

// Exact treewidth via the elimination-order subset DP; n <= ~14.
std::vector<uint32_t> exact_order(const std::vector<std::set<uint32_t>>& adj, size_t n) {
  // q(S, v): neighbors of v in V \ S \ {v} reachable through S.
  auto q_value = [&](uint32_t mask, uint32_t v) {
    uint32_t seen = 1u << v;
    std::vector<uint32_t> stack{v};
    uint32_t result = 0;
    while (!stack.empty()) {
      uint32_t u = stack.back();
      stack.pop_back();
      for (uint32_t w : adj[u]) {
        if (seen & (1u << w)) continue;
        seen |= 1u << w;
        if (mask & (1u << w))
          stack.push_back(w);  // pass through eliminated vertex
        else
          result |= 1u << w;
      }
    }
    return static_cast<size_t>(__builtin_popcount(result));
  };
  const uint32_t full = (n == 32) ? 0xffffffffu : ((1u << n) - 1);
  std::vector<int8_t> dp(full + 1, -1);
  std::vector<int8_t> choice(full + 1, -1);
  dp[0] = -1;  // width of eliminating nothing
  for (uint32_t mask = 1; mask <= full; ++mask) {
    int best = INT8_MAX;
    int best_v = -1;
    for (uint32_t v = 0; v < n; ++v) {
      if (!(mask & (1u << v))) continue;
      uint32_t prev = mask & ~(1u << v);
      int cand = std::max<int>(dp[prev], static_cast<int>(q_value(prev, v)));
      if (cand < best) {
        best = cand;
        best_v = static_cast<int>(v);
      }
    }
    dp[mask] = static_cast<int8_t>(best);
    choice[mask] = static_cast<int8_t>(best_v);
  }
  std::vector<uint32_t> order(n);
  uint32_t mask = full;
  for (size_t i = n; i-- > 0;) {
    uint32_t v = static_cast<uint32_t>(choice[mask]);
    order[i] = v;
    mask &= ~(1u << v);
  }
  return order;
}

}  // namespace

TreeDecomposition heuristic_td(const Graph& g, uint32_t exact_limit) {
  const auto vertices = g.vertex_list();
  const size_t n = vertices.size();
  TreeDecomposition td;
  if (n == 0) {
    td.bags.push_back({});
    return td;
  }
  std::unordered_map<uint32_t, uint32_t> dense;
  for (uint32_t i = 0; i < n; ++i) dense[vertices[i]] = i;
  std::vector<std::set<uint32_t>> adj(n);
  for (auto [u, v] : g.edges) {
    if (u == v) continue;
    adj[dense.at(u)].insert(dense.at(v));
    adj[dense.at(v)].insert(dense.at(u));
  }

  std::vector<uint32_t> order =
      (n <= exact_limit && n <= 20) ? exact_order(adj, n) : min_fill_order(adj);

  // Bags from the elimination order; parent = earliest-later-eliminated bag neighbor.
  std::vector<uint32_t> pos(n);
  for (uint32_t i = 0; i < n; ++i) pos[order[i]] = i;
  FillGraph fg(n);
  fg.adj = adj;
  std::vector<int> node_of(n, -1);
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t v = order[i];
    std::vector<uint32_t> bag{vertices[v]};
    for (uint32_t u : fg.adj[v]) bag.push_back(vertices[u]);
    std::sort(bag.begin(), bag.end());
    node_of[v] = static_cast<int>(td.bags.size());
    td.bags.push_back(std::move(bag));
    fg.eliminate(v);
  }
  // Tree edges: each bag hangs off the earliest-later-eliminated fill neighbor.
  FillGraph fg2(n);
  fg2.adj = adj;
  int last_root = -1;
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t v = order[i];
    uint32_t parent_pos = UINT32_MAX;
    int parent_vertex = -1;
    for (uint32_t u : fg2.adj[v])
      if (pos[u] < parent_pos) {
        parent_pos = pos[u];
        parent_vertex = static_cast<int>(u);
      }
    fg2.eliminate(v);
    if (parent_vertex >= 0)
      td.tree_edges.emplace_back(node_of[v], node_of[parent_vertex]);
    else {
      if (last_root >= 0) td.tree_edges.emplace_back(node_of[v], last_root);
      last_root = node_of[v];
    }
  }
  return td;
}

namespace {

struct NiceBuilder {
  NiceTd out;

  int add(NodeKind kind, uint32_t vertex, int c1, int c2, std::vector<uint32_t> bag) {
    out.nodes.push_back({kind, vertex, c1, c2, std::move(bag)});
    return static_cast<int>(out.nodes.size()) - 1;
  }

  // Chain of forgets/introduces turning `from`'s bag into `to`.
  int morph(int node, const std::vector<uint32_t>& to) {
    std::vector<uint32_t> cur = out.nodes[node].bag;
    std::vector<uint32_t> drop, add_back;
    for (uint32_t v : cur)
      if (!bag_contains(to, v)) drop.push_back(v);
    for (uint32_t v : to)
      if (!bag_contains(cur, v)) add_back.push_back(v);
    for (auto it = drop.rbegin(); it != drop.rend(); ++it) {
      cur.erase(std::find(cur.begin(), cur.end(), *it));
      node = add(NodeKind::Forget, *it, node, -1, cur);
    }
    for (uint32_t v : add_back) {
      cur.insert(std::upper_bound(cur.begin(), cur.end(), v), v);
      node = add(NodeKind::Introduce, v, node, -1, cur);
    }
    return node;
  }

  int leaf_chain(const std::vector<uint32_t>& bag) {
    int node = add(NodeKind::Leaf, 0, -1, -1, {});
    std::vector<uint32_t> cur;
    for (uint32_t v : bag) {
      cur.push_back(v);
      node = add(NodeKind::Introduce, v, node, -1, cur);
    }
    return node;
  }
};

}  // namespace

NiceTd make_nice(const TreeDecomposition& td) {
  if (td.bags.empty()) throw Error("make_nice: empty decomposition");
  const size_t n = td.bags.size();
  auto adj = td.adjacency();

  // Rooted orientation at node 0, children lists in post order.
  std::vector<int> parent(n, -1);
  std::vector<std::vector<uint32_t>> children(n);
  std::vector<uint32_t> dfs{0};
  std::vector<bool> seen(n, false);
  seen[0] = true;
  std::vector<uint32_t> topo;
  while (!dfs.empty()) {
    uint32_t t = dfs.back();
    dfs.pop_back();
    topo.push_back(t);
    for (uint32_t u : adj[t])
      if (!seen[u]) {
        seen[u] = true;
        parent[u] = static_cast<int>(t);
        children[t].push_back(u);
        dfs.push_back(u);
      }
  }
  if (topo.size() != n) throw Error("make_nice: decomposition tree is disconnected");

  NiceBuilder b;
  std::vector<int> built(n, -1);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    uint32_t t = *it;
    const auto& bag = td.bags[t];
    if (children[t].empty()) {
      built[t] = b.leaf_chain(bag);
      continue;
    }
    int acc = b.morph(built[children[t][0]], bag);
    for (size_t i = 1; i < children[t].size(); ++i) {
      int rhs = b.morph(built[children[t][i]], bag);
      acc = b.add(NodeKind::Join, 0, acc, rhs, bag);
    }
    built[t] = acc;
  }
  int top = b.morph(built[0], {});
  b.out.root = top;
  return b.out;
}

void check_nice(const NiceTd& ntd) {
  if (ntd.root < 0 || ntd.root >= static_cast<int>(ntd.nodes.size()))
    throw Error("nice td: bad root");
  if (!ntd.nodes[ntd.root].bag.empty()) throw Error("nice td: root bag not empty");
  for (size_t i = 0; i < ntd.nodes.size(); ++i) {
    const auto& nd = ntd.nodes[i];
    if (nd.child1 >= static_cast<int>(i) || nd.child2 >= static_cast<int>(i))
      throw Error("nice td: children must precede parents");
    switch (nd.kind) {
      case NodeKind::Leaf:
        if (nd.child1 >= 0 || nd.child2 >= 0) throw Error("nice td: leaf with children");
        break;
      case NodeKind::Introduce: {
        if (nd.child1 < 0 || nd.child2 >= 0) throw Error("nice td: introduce arity");
        auto child = ntd.nodes[nd.child1].bag;
        if (bag_contains(child, nd.vertex)) throw Error("nice td: introduce of present vertex");
        child.insert(std::upper_bound(child.begin(), child.end(), nd.vertex), nd.vertex);
        if (child != nd.bag) throw Error("nice td: introduce bag mismatch");
        break;
      }
      case NodeKind::Forget: {
        if (nd.child1 < 0 || nd.child2 >= 0) throw Error("nice td: forget arity");
        auto child = ntd.nodes[nd.child1].bag;
        auto pos = std::find(child.begin(), child.end(), nd.vertex);
        if (pos == child.end()) throw Error("nice td: forget of absent vertex");
        child.erase(pos);
        if (child != nd.bag) throw Error("nice td: forget bag mismatch");
        break;
      }
      case NodeKind::Join:
        if (nd.child1 < 0 || nd.child2 < 0) throw Error("nice td: join arity");
        if (ntd.nodes[nd.child1].bag != nd.bag || ntd.nodes[nd.child2].bag != nd.bag)
          throw Error("nice td: join bags differ");
        break;
    }
  }
}

TreeDecomposition NiceTd::to_td() const {
  TreeDecomposition td;
  td.bags.reserve(nodes.size());
  for (const auto& nd : nodes) td.bags.push_back(nd.bag);
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].child1 >= 0) td.tree_edges.emplace_back(i, nodes[i].child1);
    if (nodes[i].child2 >= 0) td.tree_edges.emplace_back(i, nodes[i].child2);
  }
  return td;
}

TreeDecomposition merge_tds(const TreeDecomposition& base, const Graph& base_graph,
                            const std::vector<const TreeDecomposition*>& overlays,
                            const std::vector<const Graph*>& overlay_graphs) {
  if (overlays.size() != overlay_graphs.size()) throw Error("merge_tds: size mismatch");
  TreeDecomposition merged = base;
  std::unordered_set<uint32_t> merged_vertices;
  for (uint32_t v : base_graph.vertex_list()) merged_vertices.insert(v);

  for (size_t oi = 0; oi < overlays.size(); ++oi) {
    const TreeDecomposition& ov = *overlays[oi];
    if (ov.bags.size() != merged.bags.size() || ov.tree_edges != merged.tree_edges)
      throw Error("merge_tds: overlay " + std::to_string(oi) + " uses a different tree");
    // Shared vertices need overlapping bag regions on the two sides, otherwise
    // the union breaks the connectivity condition.
    {
      std::unordered_map<uint32_t, int> overlap;  // shared vertex -> first overlay node
      for (size_t t = 0; t < ov.bags.size(); ++t)
        for (uint32_t v : ov.bags[t])
          if (merged_vertices.count(v)) {
            auto [it, fresh] = overlap.emplace(v, static_cast<int>(t));
            if (bag_contains(merged.bags[t], v)) it->second = -1;  // regions meet here
          }
      for (auto [v, node] : overlap)
        if (node >= 0)
          throw Error("merge_tds: shared vertex " + std::to_string(v) +
                      " never co-occurs with the base (overlay node " + std::to_string(node) +
                      ")");
    }
    for (size_t t = 0; t < ov.bags.size(); ++t) {
      auto& bag = merged.bags[t];
      bag.insert(bag.end(), ov.bags[t].begin(), ov.bags[t].end());
      bag = sorted_unique(std::move(bag));
    }
    for (uint32_t v : overlay_graphs[oi]->vertex_list()) merged_vertices.insert(v);
  }
  return merged;
}

std::string write_td(const TreeDecomposition& td, uint32_t num_vertices) {
  std::ostringstream out;
  size_t maxbag = 0;
  for (const auto& b : td.bags) maxbag = std::max(maxbag, b.size());
  out << "s td " << td.bags.size() << ' ' << maxbag << ' ' << num_vertices << '\n';
  for (size_t i = 0; i < td.bags.size(); ++i) {
    out << "b " << (i + 1);
    for (uint32_t v : td.bags[i]) out << ' ' << v;
    out << '\n';
  }
  for (auto [a, c] : td.tree_edges) out << (a + 1) << ' ' << (c + 1) << '\n';
  return out.str();
}

TreeDecomposition read_td(std::string_view text) {
  TreeDecomposition td;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  size_t declared = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok == "c") continue;
    if (tok == "s") {
      std::string td_tok;
      size_t maxbag, nverts;
      if (!(ls >> td_tok >> declared >> maxbag >> nverts) || td_tok != "td")
        throw ParseError(line_no, "malformed .td header");
      td.bags.assign(declared, {});
      saw_header = true;
    } else if (tok == "b") {
      if (!saw_header) throw ParseError(line_no, "bag before header");
      size_t id;
      if (!(ls >> id) || id == 0 || id > declared) throw ParseError(line_no, "bad bag id");
      uint32_t v;
      std::vector<uint32_t> bag;
      while (ls >> v) bag.push_back(v);
      std::sort(bag.begin(), bag.end());
      td.bags[id - 1] = std::move(bag);
    } else {
      if (!saw_header) throw ParseError(line_no, "edge before header");
      size_t a = std::stoull(tok), b;
      if (!(ls >> b) || a == 0 || b == 0 || a > declared || b > declared)
        throw ParseError(line_no, "bad tree edge");
      td.tree_edges.emplace_back(a - 1, b - 1);
    }
  }
  if (!saw_header) throw ParseError(line_no, "missing .td header");
  return td;
}

void save_td(const TreeDecomposition& td, uint32_t num_vertices, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << write_td(td, num_vertices);
}

TreeDecomposition load_td(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_td(buf.str());
}

}  // namespace kc
