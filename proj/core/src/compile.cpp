#include "kc/compile.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <unordered_map>

#include "kc/graph.hpp"
#include "kc/obdd.hpp"

namespace kc {

namespace {

using Clock = std::chrono::steady_clock;
double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr size_t kBlockBudget = size_t{1} << 22;

using Key = unsigned __int128;
struct KeyHash {
  size_t operator()(Key k) const {
    uint64_t lo = static_cast<uint64_t>(k);
    uint64_t hi = static_cast<uint64_t>(k >> 64);
    uint64_t h = lo * 0x9e3779b97f4a7c15ull ^ (hi + 0x9e3779b97f4a7c15ull + (lo << 6));
    return static_cast<size_t>(h ^ (h >> 29));
  }
};
using BlockMap = std::unordered_map<Key, uint32_t, KeyHash>;

uint64_t insert_bit(uint64_t bits, uint32_t pos, uint64_t value) {
  uint64_t low = bits & ((uint64_t{1} << pos) - 1);
  uint64_t high = bits >> pos;
  return low | (value << pos) | (high << (pos + 1));
}
uint64_t remove_bit(uint64_t bits, uint32_t pos) {
  uint64_t low = bits & ((uint64_t{1} << pos) - 1);
  uint64_t high = bits >> (pos + 1);
  return low | (high << pos);
}
uint64_t get_bit(uint64_t bits, uint32_t pos) { return (bits >> pos) & 1; }

uint32_t index_of(const std::vector<uint32_t>& sorted, uint32_t v) {
  return static_cast<uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), v) -
                               sorted.begin());
}

// One vtree node per distinct forgotten-variable set, grown bottom-up along
// the decomposition.
struct VtreeAssembly {
  Vtree vt;
  std::vector<int> leaf_of_var;

  explicit VtreeAssembly(uint32_t num_vars) : leaf_of_var(num_vars + 1, -1) {}

  int leaf(Var v) {
    if (leaf_of_var[v] < 0) leaf_of_var[v] = vt.add_leaf(v);
    return leaf_of_var[v];
  }
  int combine(int a, int b) {
    if (a < 0) return b;
    if (b < 0) return a;
    return vt.add_internal(a, b);
  }
};

// Reorders maximal introduce chains so that clause vertices follow their
// variables as closely as possible; keeps the block tables narrow on Tseitin
// encodings. Bags along the chain are rebuilt accordingly.
NiceTd reorder_introductions(NiceTd ntd, const Cnf& h) {
  std::vector<std::vector<Var>> clause_vars(h.clauses.size());
  for (size_t i = 0; i < h.clauses.size(); ++i)
    for (const Lit& l : h.clauses[i]) clause_vars[i].push_back(l.var());

  std::vector<int> parent(ntd.nodes.size(), -1);
  for (size_t i = 0; i < ntd.nodes.size(); ++i)
    for (int ch : {ntd.nodes[i].child1, ntd.nodes[i].child2})
      if (ch >= 0) parent[ch] = static_cast<int>(i);

  for (size_t i = 0; i < ntd.nodes.size(); ++i) {
    // bottom of a maximal introduce chain?
    if (ntd.nodes[i].kind != NodeKind::Introduce) continue;
    int below = ntd.nodes[i].child1;
    if (below >= 0 && ntd.nodes[below].kind == NodeKind::Introduce) continue;
    std::vector<int> chain;  // bottom to top
    int walk = static_cast<int>(i);
    while (walk >= 0 && ntd.nodes[walk].kind == NodeKind::Introduce) {
      chain.push_back(walk);
      walk = parent[walk];
    }
    if (chain.size() < 2) continue;

    std::vector<uint32_t> vars, clauses;
    for (int node : chain) {
      uint32_t v = ntd.nodes[node].vertex;
      (v <= h.num_vars ? vars : clauses).push_back(v);
    }
    std::sort(vars.begin(), vars.end());
    std::sort(clauses.begin(), clauses.end());

    std::vector<uint8_t> present(h.num_vars + 1, 0);
    const auto& base = below >= 0 ? ntd.nodes[below].bag : std::vector<uint32_t>{};
    for (uint32_t v : base)
      if (v <= h.num_vars) present[v] = 1;
    std::vector<uint8_t> placed_var(h.num_vars + 1, 0);

    std::vector<uint32_t> order;
    std::vector<uint8_t> clause_done(clauses.size(), 0);
    size_t vi = 0;
    auto flush_clauses = [&]() {
      for (size_t ci = 0; ci < clauses.size(); ++ci) {
        if (clause_done[ci]) continue;
        const uint32_t idx = clauses[ci] - h.num_vars - 1;
        bool ready = true;
        for (Var v : clause_vars[idx])
          if (!present[v] && std::binary_search(vars.begin(), vars.end(), v) && !placed_var[v]) {
            ready = false;
            break;
          }
        if (ready) {
          order.push_back(clauses[ci]);
          clause_done[ci] = 1;
        }
      }
    };
    flush_clauses();
    while (vi < vars.size()) {
      order.push_back(vars[vi]);
      placed_var[vars[vi]] = 1;
      present[vars[vi]] = 1;
      ++vi;
      flush_clauses();
    }
    for (size_t ci = 0; ci < clauses.size(); ++ci)
      if (!clause_done[ci]) order.push_back(clauses[ci]);

    // rebuild the chain with the new order
    std::vector<uint32_t> bag = base;
    for (size_t k = 0; k < chain.size(); ++k) {
      auto& nd = ntd.nodes[chain[k]];
      nd.vertex = order[k];
      bag.insert(std::upper_bound(bag.begin(), bag.end(), order[k]), order[k]);
      nd.bag = bag;
    }
  }
  return ntd;
}

// ---------------------------------------------------------------------------
// CNF compiler: blocks keyed by (bag assignment, satisfied pending clauses)

struct CnfCompiler {
  const Cnf& h;
  const NiceTd& ntd;
  CircuitBuilder cb;
  VtreeAssembly va;
  size_t peak_blocks = 0;

  std::vector<std::vector<Var>> clause_vars;  // sorted scope per clause

  struct NodeState {
    std::vector<uint32_t> bag_vars;     // sorted
    std::vector<uint32_t> bag_clauses;  // sorted clause indices
    std::vector<uint32_t> seen;         // per bag clause: vars already in V_t
    std::vector<uint8_t> pending;       // per bag clause: some var still unseen
    std::vector<uint32_t> pending_idx;  // bag clause position -> key bit
    int vnode = -1;
    BlockMap blocks;

    void rebuild_pending() {
      pending_idx.assign(bag_clauses.size(), UINT32_MAX);
      uint32_t next = 0;
      for (size_t i = 0; i < bag_clauses.size(); ++i)
        if (pending[i]) pending_idx[i] = next++;
    }
    Key key(uint64_t alpha, uint64_t sat) const {
      return (Key{sat} << bag_vars.size()) | alpha;
    }
    uint64_t alpha_of(Key k) const {
      return static_cast<uint64_t>(k & ((Key{1} << bag_vars.size()) - 1));
    }
    uint64_t sat_of(Key k) const { return static_cast<uint64_t>(k >> bag_vars.size()); }
  };

  CnfCompiler(const Cnf& hh, const NiceTd& nn) : h(hh), ntd(nn), va(hh.num_vars) {
    clause_vars.resize(h.clauses.size());
    for (size_t i = 0; i < h.clauses.size(); ++i) {
      for (const Lit& l : h.clauses[i]) clause_vars[i].push_back(l.var());
      std::sort(clause_vars[i].begin(), clause_vars[i].end());
    }
  }

  bool clause_has_var(uint32_t cl, Var v) const {
    return std::binary_search(clause_vars[cl].begin(), clause_vars[cl].end(), v);
  }
  bool literal_satisfies(uint32_t cl, Var v, bool value) const {
    for (const Lit& l : h.clauses[cl])
      if (l.var() == v && l.positive() == value) return true;
    return false;
  }

  void guard(const NodeState& ns) {
    peak_blocks = std::max(peak_blocks, ns.blocks.size());
    if (ns.blocks.size() > kBlockBudget) throw Error("compile_cnf: block budget exceeded");
    size_t pend = 0;
    for (uint8_t p : ns.pending) pend += p;
    if (ns.bag_vars.size() + pend > 120)
      throw Error("compile_cnf: bag too wide for packed keys");
  }

  SdnnfCircuit run(CompileStats* stats) {
    std::vector<NodeState> states(ntd.nodes.size());
    for (size_t ni = 0; ni < ntd.nodes.size(); ++ni) {
      const auto& nd = ntd.nodes[ni];
      NodeState& ns = states[ni];
      for (uint32_t v : nd.bag)
        (v <= h.num_vars ? ns.bag_vars : ns.bag_clauses).push_back(v);
      for (auto& c : ns.bag_clauses) c -= h.num_vars + 1;

      switch (nd.kind) {
        case NodeKind::Leaf:
          if (!nd.bag.empty()) throw Error("compile_cnf: nonempty leaf bag");
          ns.blocks.emplace(Key{0}, cb.tru());
          ns.rebuild_pending();
          break;
        case NodeKind::Introduce:
          if (nd.vertex <= h.num_vars)
            introduce_var(states[nd.child1], ns, nd.vertex);
          else
            introduce_clause(states[nd.child1], ns, nd.vertex - h.num_vars - 1);
          states[nd.child1].blocks = BlockMap{};
          break;
        case NodeKind::Forget:
          if (nd.vertex <= h.num_vars)
            forget_var(states[nd.child1], ns, nd.vertex);
          else
            forget_clause(states[nd.child1], ns, nd.vertex - h.num_vars - 1);
          states[nd.child1].blocks = BlockMap{};
          break;
        case NodeKind::Join:
          join(states[nd.child1], states[nd.child2], ns);
          states[nd.child1].blocks = BlockMap{};
          states[nd.child2].blocks = BlockMap{};
          break;
      }
      guard(ns);
    }
    NodeState& root = states[ntd.root];
    uint32_t out = root.blocks.empty() ? cb.fls() : root.blocks.begin()->second;
    if (stats) stats->peak_blocks = std::max(stats->peak_blocks, peak_blocks);
    const int vroot = root.vnode;
    const bool constant = out <= 1;
    SdnnfCircuit d = cb.take(out);
    if (vroot >= 0) {
      va.vt.root = vroot;
      d.vtree = std::move(va.vt);
    }
    d.decomposable_hint = true;
    d.deterministic_hint = true;
    d.complete_hint = !constant;
    return d;
  }

  static std::vector<uint32_t> positions(const std::vector<uint32_t>& child,
                                         const std::vector<uint32_t>& parent) {
    std::vector<uint32_t> map(parent.size());
    for (size_t i = 0; i < parent.size(); ++i) map[i] = index_of(child, parent[i]);
    return map;
  }

  void introduce_var(NodeState& ch, NodeState& ns, Var v) {
    ns.vnode = ch.vnode;
    const uint32_t vpos = index_of(ns.bag_vars, v);
    auto cpos = positions(ch.bag_clauses, ns.bag_clauses);
    ns.seen.assign(ns.bag_clauses.size(), 0);
    ns.pending.assign(ns.bag_clauses.size(), 0);
    for (size_t i = 0; i < ns.bag_clauses.size(); ++i) {
      ns.seen[i] = ch.seen[cpos[i]] + (clause_has_var(ns.bag_clauses[i], v) ? 1 : 0);
      ns.pending[i] = ns.seen[i] < clause_vars[ns.bag_clauses[i]].size();
    }
    ns.rebuild_pending();
    for (auto [key, gate] : ch.blocks) {
      uint64_t alpha = ch.alpha_of(key);
      uint64_t sat = ch.sat_of(key);
      for (uint64_t b = 0; b < 2; ++b) {
        uint64_t alpha2 = insert_bit(alpha, vpos, b);
        uint64_t sat2 = 0;
        bool dead = false;
        for (size_t i = 0; i < ns.bag_clauses.size() && !dead; ++i) {
          const uint32_t cl = ns.bag_clauses[i];
          bool was = ch.pending[cpos[i]] ? get_bit(sat, ch.pending_idx[cpos[i]]) != 0 : true;
          bool now = was || (clause_has_var(cl, v) && literal_satisfies(cl, v, b != 0));
          if (ns.pending[i])
            sat2 |= uint64_t{now} << ns.pending_idx[i];
          else if (!now)
            dead = true;  // just became fully seen, unsatisfied
        }
        if (dead) continue;
        auto [slot, fresh] = ns.blocks.emplace(ns.key(alpha2, sat2), gate);
        if (!fresh) slot->second = cb.or_gate(slot->second, gate, ns.vnode);
      }
    }
  }

  void introduce_clause(NodeState& ch, NodeState& ns, uint32_t cl) {
    ns.vnode = ch.vnode;
    const uint32_t ipos = index_of(ns.bag_clauses, cl);
    uint32_t in_bag = 0;
    for (Var v : clause_vars[cl])
      if (std::binary_search(ns.bag_vars.begin(), ns.bag_vars.end(), v)) ++in_bag;
    ns.seen.assign(ns.bag_clauses.size(), 0);
    ns.pending.assign(ns.bag_clauses.size(), 0);
    for (size_t i = 0; i < ns.bag_clauses.size(); ++i) {
      ns.seen[i] = i == ipos ? in_bag : ch.seen[i < ipos ? i : i - 1];
      ns.pending[i] = ns.seen[i] < clause_vars[ns.bag_clauses[i]].size();
    }
    ns.rebuild_pending();
    for (auto [key, gate] : ch.blocks) {
      uint64_t alpha = ch.alpha_of(key);
      uint64_t sat_old = ch.sat_of(key);
      bool sat_now = false;
      for (const Lit& l : h.clauses[cl]) {
        uint32_t p = index_of(ns.bag_vars, l.var());
        if (p < ns.bag_vars.size() && ns.bag_vars[p] == l.var() &&
            get_bit(alpha, p) == (l.positive() ? 1u : 0u)) {
          sat_now = true;
          break;
        }
      }
      if (!ns.pending[ipos] && !sat_now) continue;  // complete and falsified
      uint64_t sat2 = 0;
      for (size_t i = 0; i < ns.bag_clauses.size(); ++i) {
        if (!ns.pending[i]) continue;
        bool bit;
        if (i == ipos) {
          bit = sat_now;
        } else {
          const uint32_t old = i < ipos ? i : i - 1;
          bit = ch.pending[old] ? get_bit(sat_old, ch.pending_idx[old]) != 0 : true;
        }
        sat2 |= uint64_t{bit} << ns.pending_idx[i];
      }
      ns.blocks.emplace(ns.key(alpha, sat2), gate);
    }
  }

  void forget_var(NodeState& ch, NodeState& ns, Var v) {
    const uint32_t vpos = index_of(ch.bag_vars, v);
    const int leaf = va.leaf(v);
    ns.vnode = va.combine(leaf, ch.vnode);
    ns.seen = ch.seen;
    ns.pending = ch.pending;
    ns.rebuild_pending();
    for (auto [key, gate] : ch.blocks) {
      uint64_t alpha = ch.alpha_of(key);
      uint64_t sat = ch.sat_of(key);
      const bool value = get_bit(alpha, vpos) != 0;
      uint64_t alpha2 = remove_bit(alpha, vpos);
      Lit l = value ? Lit::pos(v) : Lit::neg(v);
      uint32_t branch =
          gate == cb.tru() ? cb.lit(l, leaf) : cb.and_gate(cb.lit(l, leaf), gate, ns.vnode);
      auto [slot, fresh] = ns.blocks.emplace(ns.key(alpha2, sat), branch);
      if (!fresh) slot->second = cb.or_gate(slot->second, branch, ns.vnode);
    }
  }

  void forget_clause(NodeState& ch, NodeState& ns, uint32_t cl) {
    const uint32_t cpos = index_of(ch.bag_clauses, cl);
    if (ch.pending[cpos]) throw Error("compile_cnf: clause forgotten before fully seen");
    ns.vnode = ch.vnode;
    ns.seen = ch.seen;
    ns.seen.erase(ns.seen.begin() + cpos);
    ns.pending = ch.pending;
    ns.pending.erase(ns.pending.begin() + cpos);
    ns.rebuild_pending();
    // complete satisfied clauses hold no key bit: keys carry over unchanged
    ns.blocks = std::move(ch.blocks);
  }

  void join(NodeState& c1, NodeState& c2, NodeState& ns) {
    ns.vnode = va.combine(c1.vnode, c2.vnode);
    auto p1 = positions(c1.bag_clauses, ns.bag_clauses);
    ns.seen.assign(ns.bag_clauses.size(), 0);
    ns.pending.assign(ns.bag_clauses.size(), 0);
    for (size_t i = 0; i < ns.bag_clauses.size(); ++i) {
      uint32_t in_bag = 0;
      for (Var v : clause_vars[ns.bag_clauses[i]])
        if (std::binary_search(ns.bag_vars.begin(), ns.bag_vars.end(), v)) ++in_bag;
      ns.seen[i] = c1.seen[p1[i]] + c2.seen[p1[i]] - in_bag;
      ns.pending[i] = ns.seen[i] < clause_vars[ns.bag_clauses[i]].size();
    }
    ns.rebuild_pending();
    std::unordered_map<uint64_t, std::vector<std::pair<uint64_t, uint32_t>>> by_alpha;
    for (auto [key, gate] : c2.blocks)
      by_alpha[c2.alpha_of(key)].emplace_back(c2.sat_of(key), gate);
    for (auto [key, gate1] : c1.blocks) {
      uint64_t alpha = c1.alpha_of(key);
      uint64_t sat1 = c1.sat_of(key);
      auto it = by_alpha.find(alpha);
      if (it == by_alpha.end()) continue;
      for (auto [sat2, gate2] : it->second) {
        uint64_t sat_final = 0;
        bool dead = false;
        for (size_t i = 0; i < ns.bag_clauses.size() && !dead; ++i) {
          bool b1 = c1.pending[p1[i]] ? get_bit(sat1, c1.pending_idx[p1[i]]) != 0 : true;
          bool b2 = c2.pending[p1[i]] ? get_bit(sat2, c2.pending_idx[p1[i]]) != 0 : true;
          bool now = b1 || b2;
          if (ns.pending[i])
            sat_final |= uint64_t{now} << ns.pending_idx[i];
          else if (!now)
            dead = true;
        }
        if (dead) continue;
        uint32_t prod = gate1 == cb.tru()   ? gate2
                        : gate2 == cb.tru() ? gate1
                                            : cb.and_gate(gate1, gate2, ns.vnode);
        auto [slot, fresh] = ns.blocks.emplace(ns.key(alpha, sat_final), prod);
        if (!fresh) slot->second = cb.or_gate(slot->second, prod, ns.vnode);
      }
    }
  }
};

}  // namespace

SdnnfCircuit compile_cnf(const Cnf& h, const TreeDecomposition& td_h, CompileStats* stats) {
  {
    auto rep = validate_td(cnf_incidence(h), td_h);
    if (!rep.ok()) throw Error("compile_cnf: invalid decomposition for the CNF");
  }
  NiceTd ntd = reorder_introductions(make_nice(td_h), h);
  check_nice(ntd);
  CnfCompiler comp(h, ntd);
  auto t0 = Clock::now();
  auto d = comp.run(stats);
  if (stats) {
    stats->ms_compile += ms_since(t0);
    stats->cnf_vars = h.num_vars;
    stats->cnf_clauses = h.clauses.size();
    stats->compiled_gates = d.gates.size();
  }
  return d;
}

namespace {

// ---------------------------------------------------------------------------
// Direct compiler: blocks keyed by (bag assignment, per-constraint OBDD state)

struct DirectCompiler {
  const ConstraintSystem& f;
  const NiceTd& ntd;
  CircuitBuilder cb;
  VtreeAssembly va;
  size_t peak_blocks = 0;

  std::vector<std::vector<Var>> scope;  // sorted per constraint
  std::vector<std::vector<Var>> pi;     // consumption order per constraint
  std::vector<CompleteObdd> obdd;
  std::vector<std::vector<std::vector<uint8_t>>> reach1;  // [c][level][state]

  struct NodeState {
    std::vector<uint32_t> bag_vars;
    std::vector<uint32_t> bag_cons;
    std::vector<uint32_t> consumed;  // per bag constraint
    std::vector<uint64_t> radix;     // per bag constraint: states at its level
    int vnode = -1;
    BlockMap blocks;

    uint64_t alpha_of(Key k) const {
      return static_cast<uint64_t>(k & ((Key{1} << bag_vars.size()) - 1));
    }
    uint64_t tuple_of(Key k) const { return static_cast<uint64_t>(k >> bag_vars.size()); }
    Key key(uint64_t alpha, uint64_t tuple) const {
      return (Key{tuple} << bag_vars.size()) | alpha;
    }
  };

  DirectCompiler(const ConstraintSystem& ff, const NiceTd& nn) : f(ff), ntd(nn), va(ff.num_vars) {
    scope.resize(f.constraints.size());
    pi.resize(f.constraints.size());
    for (size_t ci = 0; ci < f.constraints.size(); ++ci) {
      scope[ci] = f.constraints[ci].vars();
      std::sort(scope[ci].begin(), scope[ci].end());
      pi[ci].assign(scope[ci].size(), 0);
    }
    plan_orders();
    obdd.resize(f.constraints.size());
    reach1.resize(f.constraints.size());
    for (size_t ci = 0; ci < f.constraints.size(); ++ci) {
      obdd[ci] = build_obdd(f.constraints[ci], pi[ci]);
      compute_reach(ci);
    }
  }

  bool in_scope(size_t ci, Var v) const {
    return std::binary_search(scope[ci].begin(), scope[ci].end(), v);
  }

  void plan_orders() {
    // consumed counts per node, matched to bag constraint lists
    std::vector<std::vector<uint32_t>> bag_cons(ntd.nodes.size());
    std::vector<std::vector<uint32_t>> consumed(ntd.nodes.size());
    auto child_count = [&](int ch, uint32_t ci) -> uint32_t {
      if (ch < 0) return 0;
      uint32_t idx = index_of(bag_cons[ch], ci);
      if (idx < bag_cons[ch].size() && bag_cons[ch][idx] == ci) return consumed[ch][idx];
      return 0;
    };
    for (size_t ni = 0; ni < ntd.nodes.size(); ++ni) {
      const auto& nd = ntd.nodes[ni];
      for (uint32_t v : nd.bag)
        if (v > f.num_vars) bag_cons[ni].push_back(v - f.num_vars - 1);
      consumed[ni].assign(bag_cons[ni].size(), 0);
      for (size_t bi = 0; bi < bag_cons[ni].size(); ++bi) {
        const uint32_t ci = bag_cons[ni][bi];
        uint32_t base = child_count(nd.child1, ci) + child_count(nd.child2, ci);
        if (nd.kind == NodeKind::Join && child_count(nd.child1, ci) != 0 &&
            child_count(nd.child2, ci) != 0)
          throw Error("compile_direct: constraint consumed in both join branches");
        if (nd.kind == NodeKind::Forget && nd.vertex <= f.num_vars && in_scope(ci, nd.vertex)) {
          pi[ci][base] = nd.vertex;
          ++base;
        }
        consumed[ni][bi] = base;
      }
      if (nd.kind == NodeKind::Forget && nd.vertex > f.num_vars) {
        const uint32_t ci = nd.vertex - f.num_vars - 1;
        uint32_t base = child_count(nd.child1, ci);
        for (uint32_t v : nd.bag)
          if (v <= f.num_vars && in_scope(ci, v)) pi[ci][base++] = v;
        if (base != scope[ci].size())
          throw Error("compile_direct: consumption order incomplete");
      }
    }
  }

  void compute_reach(size_t ci) {
    const auto& b = obdd[ci];
    const size_t n = b.order.size();
    auto& r = reach1[ci];
    r.assign(n + 1, {});
    r[n] = {0, 1};
    for (size_t lvl = n; lvl-- > 0;) {
      r[lvl].assign(b.levels[lvl].size(), 0);
      for (size_t j = 0; j < b.levels[lvl].size(); ++j) {
        const auto& nd = b.levels[lvl][j];
        uint8_t lo = lvl + 1 < n ? r[lvl + 1][nd.lo] : static_cast<uint8_t>(nd.lo == 1);
        uint8_t hi = lvl + 1 < n ? r[lvl + 1][nd.hi] : static_cast<uint8_t>(nd.hi == 1);
        r[lvl][j] = lo | hi;
      }
    }
  }

  uint64_t states_at(size_t ci, uint32_t level) const {
    const auto& b = obdd[ci];
    if (b.order.empty()) return 2;
    return level < b.order.size() ? b.levels[level].size() : 2;
  }

  void guard(const NodeState& ns) {
    peak_blocks = std::max(peak_blocks, ns.blocks.size());
    if (ns.blocks.size() > kBlockBudget) throw Error("compile_direct: block budget exceeded");
    long double prod = 1;
    for (uint64_t r : ns.radix) prod *= static_cast<long double>(r);
    if (ns.bag_vars.size() > 60 || prod > 1e18L)
      throw Error("compile_direct: key space too wide");
  }

  SdnnfCircuit run(CompileStats* stats) {
    std::vector<NodeState> states(ntd.nodes.size());
    for (size_t ni = 0; ni < ntd.nodes.size(); ++ni) {
      const auto& nd = ntd.nodes[ni];
      NodeState& ns = states[ni];
      for (uint32_t v : nd.bag)
        (v <= f.num_vars ? ns.bag_vars : ns.bag_cons).push_back(v);
      for (auto& c : ns.bag_cons) c -= f.num_vars + 1;
      fill_consumed(ni, states);

      switch (nd.kind) {
        case NodeKind::Leaf:
          if (!nd.bag.empty()) throw Error("compile_direct: nonempty leaf bag");
          ns.blocks.emplace(Key{0}, cb.tru());
          break;
        case NodeKind::Introduce:
          if (nd.vertex <= f.num_vars)
            introduce_var(states[nd.child1], ns, nd.vertex);
          else
            introduce_con(states[nd.child1], ns, nd.vertex - f.num_vars - 1);
          states[nd.child1].blocks = BlockMap{};
          break;
        case NodeKind::Forget:
          if (nd.vertex <= f.num_vars)
            forget_var(states[nd.child1], ns, nd.vertex);
          else
            forget_con(states[nd.child1], ns, nd.vertex - f.num_vars - 1);
          states[nd.child1].blocks = BlockMap{};
          break;
        case NodeKind::Join:
          join(states[nd.child1], states[nd.child2], ns);
          states[nd.child1].blocks = BlockMap{};
          states[nd.child2].blocks = BlockMap{};
          break;
      }
      guard(ns);
    }
    NodeState& root = states[ntd.root];
    uint32_t out = root.blocks.empty() ? cb.fls() : root.blocks.begin()->second;
    if (stats) stats->peak_blocks = std::max(stats->peak_blocks, peak_blocks);
    const int vroot = root.vnode;
    const bool constant = out <= 1;
    SdnnfCircuit d = cb.take(out);
    if (vroot >= 0) {
      va.vt.root = vroot;
      d.vtree = std::move(va.vt);
    }
    d.decomposable_hint = true;
    d.deterministic_hint = true;
    d.complete_hint = !constant;
    return d;
  }

  void fill_consumed(size_t ni, std::vector<NodeState>& states) {
    const auto& nd = ntd.nodes[ni];
    NodeState& ns = states[ni];
    auto from_child = [&](int ch, uint32_t ci) -> uint32_t {
      if (ch < 0) return 0;
      const NodeState& cs = states[ch];
      uint32_t idx = index_of(cs.bag_cons, ci);
      if (idx < cs.bag_cons.size() && cs.bag_cons[idx] == ci) return cs.consumed[idx];
      return 0;
    };
    ns.consumed.assign(ns.bag_cons.size(), 0);
    ns.radix.assign(ns.bag_cons.size(), 1);
    for (size_t bi = 0; bi < ns.bag_cons.size(); ++bi) {
      const uint32_t ci = ns.bag_cons[bi];
      uint32_t c = from_child(nd.child1, ci) + from_child(nd.child2, ci);
      if (nd.kind == NodeKind::Forget && nd.vertex <= f.num_vars && in_scope(ci, nd.vertex)) ++c;
      ns.consumed[bi] = c;
      ns.radix[bi] = states_at(ci, c);
    }
  }

  void introduce_var(NodeState& ch, NodeState& ns, Var v) {
    ns.vnode = ch.vnode;
    const uint32_t vpos = index_of(ns.bag_vars, v);
    for (auto [key, gate] : ch.blocks) {
      uint64_t alpha = ch.alpha_of(key);
      uint64_t tuple = ch.tuple_of(key);
      for (uint64_t b = 0; b < 2; ++b)
        ns.blocks.emplace(ns.key(insert_bit(alpha, vpos, b), tuple), gate);
    }
  }

  void introduce_con(NodeState& ch, NodeState& ns, uint32_t ci) {
    ns.vnode = ch.vnode;
    const uint32_t ipos = index_of(ns.bag_cons, ci);
    uint64_t root_state = obdd[ci].order.empty() ? (obdd[ci].const_value ? 1 : 0) : 0;
    uint64_t lowprod = 1;
    for (size_t k = 0; k < ipos; ++k) lowprod *= ch.radix[k];
    for (auto [key, gate] : ch.blocks) {
      uint64_t alpha = ch.alpha_of(key);
      uint64_t tuple = ch.tuple_of(key);
      uint64_t low = tuple % lowprod;
      uint64_t high = tuple / lowprod;
      uint64_t tuple2 = low + lowprod * (root_state + states_at(ci, 0) * high);
      ns.blocks.emplace(ns.key(alpha, tuple2), gate);
    }
  }

  void forget_var(NodeState& ch, NodeState& ns, Var v) {
    const uint32_t vpos = index_of(ch.bag_vars, v);
    const int leaf = va.leaf(v);
    ns.vnode = va.combine(leaf, ch.vnode);
    for (auto [key, gate] : ch.blocks) {
      uint64_t alpha = ch.alpha_of(key);
      const bool value = get_bit(alpha, vpos) != 0;
      uint64_t alpha2 = remove_bit(alpha, vpos);
      uint64_t rest = ch.tuple_of(key);
      uint64_t new_tuple = 0, mul = 1;
      bool dead = false;
      for (size_t bi = 0; bi < ch.bag_cons.size() && !dead; ++bi) {
        uint64_t digit = rest % ch.radix[bi];
        rest /= ch.radix[bi];
        const uint32_t ci = ch.bag_cons[bi];
        uint32_t new_level = ch.consumed[bi];
        if (in_scope(ci, v)) {
          const auto& nd = obdd[ci].levels[ch.consumed[bi]][digit];
          uint64_t next = value ? nd.hi : nd.lo;
          new_level = ch.consumed[bi] + 1;
          if (new_level < obdd[ci].order.size()) {
            if (!reach1[ci][new_level][next]) dead = true;
          } else if (next == 0) {
            dead = true;
          }
          digit = next;
        }
        new_tuple += digit * mul;
        mul *= states_at(ci, new_level);
      }
      if (dead) continue;
      Lit l = value ? Lit::pos(v) : Lit::neg(v);
      uint32_t branch =
          gate == cb.tru() ? cb.lit(l, leaf) : cb.and_gate(cb.lit(l, leaf), gate, ns.vnode);
      auto [slot, fresh] = ns.blocks.emplace(ns.key(alpha2, new_tuple), branch);
      if (!fresh) slot->second = cb.or_gate(slot->second, branch, ns.vnode);
    }
  }

  void forget_con(NodeState& ch, NodeState& ns, uint32_t ci) {
    const uint32_t cpos = index_of(ch.bag_cons, ci);
    ns.vnode = ch.vnode;
    std::vector<std::pair<uint32_t, Var>> fold;  // alpha position, variable
    for (uint32_t p = 0; p < ch.bag_vars.size(); ++p)
      if (in_scope(ci, ch.bag_vars[p])) fold.emplace_back(p, ch.bag_vars[p]);
    uint64_t lowprod = 1;
    for (size_t k = 0; k < cpos; ++k) lowprod *= ch.radix[k];
    const auto& b = obdd[ci];
    for (auto [key, gate] : ch.blocks) {
      uint64_t alpha = ch.alpha_of(key);
      uint64_t tuple = ch.tuple_of(key);
      uint64_t digit = (tuple / lowprod) % ch.radix[cpos];
      uint64_t tuple2 = tuple % lowprod + (tuple / (lowprod * ch.radix[cpos])) * lowprod;
      bool accepted;
      if (b.order.empty()) {
        accepted = digit == 1;
      } else {
        uint32_t lvl = ch.consumed[cpos];
        uint64_t st = digit;
        if (lvl == b.order.size()) {
          accepted = st == 1;
        } else {
          for (auto [p, v] : fold) {
            (void)v;
            const auto& nd = b.levels[lvl][st];
            st = get_bit(alpha, p) ? nd.hi : nd.lo;
            ++lvl;
          }
          if (lvl != b.order.size()) throw Error("compile_direct: constraint folded early");
          accepted = st == 1;
        }
      }
      if (!accepted) continue;
      auto [slot, fresh] = ns.blocks.emplace(ns.key(alpha, tuple2), gate);
      if (!fresh) slot->second = cb.or_gate(slot->second, gate, ns.vnode);
    }
  }

  void join(NodeState& c1, NodeState& c2, NodeState& ns) {
    ns.vnode = va.combine(c1.vnode, c2.vnode);
    std::unordered_map<uint64_t, std::vector<std::pair<uint64_t, uint32_t>>> by_alpha;
    for (auto [key, gate] : c2.blocks)
      by_alpha[c2.alpha_of(key)].emplace_back(c2.tuple_of(key), gate);
    for (auto [key, gate1] : c1.blocks) {
      uint64_t alpha = c1.alpha_of(key);
      uint64_t t1 = c1.tuple_of(key);
      auto it = by_alpha.find(alpha);
      if (it == by_alpha.end()) continue;
      for (auto [t2, gate2] : it->second) {
        uint64_t tuple = 0, mul = 1, r1 = t1, r2 = t2;
        bool ok = true;
        for (size_t bi = 0; bi < ns.bag_cons.size() && ok; ++bi) {
          uint64_t d1 = r1 % c1.radix[bi];
          uint64_t d2 = r2 % c2.radix[bi];
          r1 /= c1.radix[bi];
          r2 /= c2.radix[bi];
          uint64_t digit;
          if (c2.consumed[bi] == 0) {
            digit = d1;
            if (c1.consumed[bi] == 0 && d1 != d2) ok = false;
          } else if (c1.consumed[bi] == 0) {
            digit = d2;
          } else {
            throw Error("compile_direct: join with two consuming branches");
          }
          tuple += digit * mul;
          mul *= ns.radix[bi];
        }
        if (!ok) continue;
        uint32_t prod = gate1 == cb.tru()   ? gate2
                        : gate2 == cb.tru() ? gate1
                                            : cb.and_gate(gate1, gate2, ns.vnode);
        auto [slot, fresh] = ns.blocks.emplace(ns.key(alpha, tuple), prod);
        if (!fresh) slot->second = cb.or_gate(slot->second, prod, ns.vnode);
      }
    }
  }
};

}  // namespace

namespace {

// Interval path decomposition over ascending variable order: bag t holds
// variable t plus every constraint whose scope positions span t. Width is at
// most the constraint count plus one, but the direct compiler's tables stay
// bounded by the realized assignments, which is what matters here.
TreeDecomposition interval_path_td(const ConstraintSystem& f) {
  TreeDecomposition td;
  if (f.num_vars == 0) {
    std::vector<uint32_t> bag;
    for (size_t ci = 0; ci < f.constraints.size(); ++ci)
      bag.push_back(constraint_vertex(f, ci));
    td.bags.push_back(std::move(bag));
    return td;
  }
  std::vector<std::pair<Var, Var>> span(f.constraints.size(), {f.num_vars + 1, 0});
  for (size_t ci = 0; ci < f.constraints.size(); ++ci)
    for (Var v : f.constraints[ci].vars()) {
      span[ci].first = std::min(span[ci].first, v);
      span[ci].second = std::max(span[ci].second, v);
    }
  for (Var v = 1; v <= f.num_vars; ++v) {
    std::vector<uint32_t> bag{v};
    for (size_t ci = 0; ci < f.constraints.size(); ++ci) {
      const bool empty_scope = span[ci].second == 0;
      if ((span[ci].first <= v && v <= span[ci].second) || (empty_scope && v == 1))
        bag.push_back(constraint_vertex(f, ci));
    }
    std::sort(bag.begin(), bag.end());
    td.bags.push_back(std::move(bag));
    if (v > 1) td.tree_edges.emplace_back(v - 2, v - 1);
  }
  return td;
}

}  // namespace

bool direct_compile_applicable(const ConstraintSystem& f, const NiceTd& ntd) {
  std::vector<std::vector<Var>> scope(f.constraints.size());
  for (size_t ci = 0; ci < f.constraints.size(); ++ci) {
    scope[ci] = f.constraints[ci].vars();
    std::sort(scope[ci].begin(), scope[ci].end());
  }
  std::vector<std::unordered_map<uint32_t, uint32_t>> consumed(ntd.nodes.size());
  for (size_t ni = 0; ni < ntd.nodes.size(); ++ni) {
    const auto& nd = ntd.nodes[ni];
    if (nd.kind == NodeKind::Join) {
      for (uint32_t v : nd.bag) {
        if (v <= f.num_vars) continue;
        uint32_t ci = v - f.num_vars - 1;
        auto& a = consumed[nd.child1];
        auto& b = consumed[nd.child2];
        if (a.count(ci) && a.at(ci) && b.count(ci) && b.at(ci)) return false;
      }
    }
    auto& mine = consumed[ni];
    for (int ch : {nd.child1, nd.child2})
      if (ch >= 0)
        for (auto [ci, c] : consumed[ch]) mine[ci] += c;
    if (nd.kind == NodeKind::Forget && nd.vertex <= f.num_vars) {
      for (size_t ci = 0; ci < f.constraints.size(); ++ci)
        if (std::binary_search(scope[ci].begin(), scope[ci].end(), nd.vertex))
          ++mine[static_cast<uint32_t>(ci)];
    }
    if (nd.kind == NodeKind::Forget && nd.vertex > f.num_vars)
      mine.erase(nd.vertex - f.num_vars - 1);
  }
  return true;
}

SdnnfCircuit compile_direct(const ConstraintSystem& f, const NiceTd& ntd, CompileStats* stats) {
  auto t0 = Clock::now();
  DirectCompiler comp(f, ntd);
  if (stats) {
    stats->route = "direct";
    for (const auto& b : comp.obdd)
      stats->max_obdd_width = std::max(stats->max_obdd_width, b.width());
  }
  auto d = comp.run(stats);
  if (stats) {
    stats->ms_compile += ms_since(t0);
    stats->compiled_gates = d.gates.size();
    stats->final_gates = d.gates.size();
  }
  return d;
}

SdnnfCircuit compile_system(const ConstraintSystem& f, const std::optional<TreeDecomposition>& td,
                            CompileStats* stats) {
  TreeDecomposition base = td ? *td : heuristic_td(incidence_graph(f));
  {
    auto rep = validate_td(incidence_graph(f), base);
    if (!rep.ok()) throw Error("compile_system: invalid decomposition");
  }
  if (stats) stats->base_td_width = base.width();

  // Wide per-constraint circuits produce encodings whose block tables cannot
  // be enumerated; route those through the direct compiler: first over the
  // given decomposition, else over an interval path, where the per-constraint
  // consumption is always chain-shaped. The width bound mirrors the
  // packed-key limit of the clause-block compiler.
  constexpr int kEncodingBagBudget = 120;
  auto run_direct = [&]() -> SdnnfCircuit {
    NiceTd ntd_f = make_nice(base);
    if (direct_compile_applicable(f, ntd_f)) return compile_direct(f, ntd_f, stats);
    return compile_direct(f, make_nice(interval_path_td(f)), stats);
  };

  auto t0 = Clock::now();
  EncodedSystem enc = encode_system(f, base);
  if (stats) {
    stats->ms_encode = ms_since(t0);
    stats->encoding_td_width = enc.td_h.width();
    stats->max_circuit_width = enc.max_circuit_width;
    for (const auto& d : enc.circuits)
      for (uint32_t per : gates_per_vnode(d))
        stats->max_circuit_width = std::max(stats->max_circuit_width, per);
  }
  if (enc.td_h.width() + 1 > kEncodingBagBudget) return run_direct();

  if (stats) stats->route = "tseitin";
  SdnnfCircuit compiled;
  try {
    compiled = compile_cnf(enc.cnf, enc.td_h, stats);
  } catch (const Error&) {
    return run_direct();
  }
  auto t1 = Clock::now();
  std::unordered_set<Var> forget;
  for (const auto& zs : enc.z_of_constraint) forget.insert(zs.begin(), zs.end());
  auto out = exist_forget(compiled, forget, true);
  if (stats) {
    stats->ms_forget = ms_since(t1);
    stats->final_gates = out.gates.size();
  }
  return out;
}

BigInt count_via_compilation(const ConstraintSystem& f, const std::optional<TreeDecomposition>& td,
                             CompileStats* stats) {
  auto d = compile_system(f, td, stats);
  return count_dsdnnf(d, f.num_vars);
}

std::string stats_json(const CompileStats& s) {
  std::ostringstream out;
  out << "{\n"
      << "  \"route\": \"" << s.route << "\",\n"
      << "  \"base_td_width\": " << s.base_td_width << ",\n"
      << "  \"encoding_td_width\": " << s.encoding_td_width << ",\n"
      << "  \"max_obdd_width\": " << s.max_obdd_width << ",\n"
      << "  \"max_circuit_width\": " << s.max_circuit_width << ",\n"
      << "  \"cnf_vars\": " << s.cnf_vars << ",\n"
      << "  \"cnf_clauses\": " << s.cnf_clauses << ",\n"
      << "  \"compiled_gates\": " << s.compiled_gates << ",\n"
      << "  \"final_gates\": " << s.final_gates << ",\n"
      << "  \"peak_blocks\": " << s.peak_blocks << ",\n"
      << "  \"ms_encode\": " << s.ms_encode << ",\n"
      << "  \"ms_compile\": " << s.ms_compile << ",\n"
      << "  \"ms_forget\": " << s.ms_forget << "\n"
      << "}\n";
  return out.str();
}

}  // namespace kc
