#include "kc/sdnnf.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace kc {

size_t SdnnfCircuit::num_gates(GateKind k) const {
  size_t n = 0;
  for (const auto& g : gates)
    if (g.kind == k) ++n;
  return n;
}

std::vector<Var> SdnnfCircuit::variables() const {
  std::vector<Var> vs;
  for (const auto& g : gates)
    if (g.kind == GateKind::Literal) vs.push_back(g.lit.var());
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

bool SdnnfCircuit::evaluate(const Assignment& a) const {
  std::vector<uint8_t> val(gates.size());
  for (size_t i = 0; i < gates.size(); ++i) {
    const Gate& g = gates[i];
    switch (g.kind) {
      case GateKind::False: val[i] = 0; break;
      case GateKind::True: val[i] = 1; break;
      case GateKind::Literal:
        val[i] = a.value(g.lit.var()) == g.lit.positive();
        break;
      case GateKind::And: val[i] = val[g.a] & val[g.b]; break;
      case GateKind::Or: val[i] = val[g.a] | val[g.b]; break;
    }
  }
  return val[output] != 0;
}

CircuitBuilder::CircuitBuilder() {
  c_.gates.push_back({GateKind::False, {}, 0, 0, -1});
  c_.gates.push_back({GateKind::True, {}, 0, 0, -1});
}

namespace {
unsigned __int128 cons_key(uint64_t kind, uint64_t a, uint64_t b, int32_t vnode) {
  unsigned __int128 k = kind;
  k = (k << 34) | static_cast<uint32_t>(vnode + 1);
  k = (k << 32) | a;
  k = (k << 32) | b;
  return k;
}
}  // namespace

uint32_t CircuitBuilder::lit(Lit l, int32_t vnode) {
  auto key = cons_key(2, static_cast<uint32_t>(l.code), 0, vnode);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  c_.gates.push_back({GateKind::Literal, l, 0, 0, vnode});
  uint32_t id = static_cast<uint32_t>(c_.gates.size()) - 1;
  cache_.emplace(key, id);
  return id;
}

uint32_t CircuitBuilder::and_gate(uint32_t x, uint32_t y, int32_t vnode) {
  if (x == fls() || y == fls()) return fls();
  if (x == tru()) return y;
  if (y == tru()) return x;
  if (x == y) return x;
  auto key = cons_key(3, x, y, vnode);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  c_.gates.push_back({GateKind::And, {}, x, y, vnode});
  uint32_t id = static_cast<uint32_t>(c_.gates.size()) - 1;
  cache_.emplace(key, id);
  return id;
}

uint32_t CircuitBuilder::or_gate(uint32_t x, uint32_t y, int32_t vnode) {
  if (x == tru() || y == tru()) return tru();
  if (x == fls()) return y;
  if (y == fls()) return x;
  if (x == y) return x;
  auto key = cons_key(4, x, y, vnode);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  c_.gates.push_back({GateKind::Or, {}, x, y, vnode});
  uint32_t id = static_cast<uint32_t>(c_.gates.size()) - 1;
  cache_.emplace(key, id);
  return id;
}

uint32_t CircuitBuilder::or_chain(const std::vector<uint32_t>& xs, int32_t vnode) {
  if (xs.empty()) return fls();
  uint32_t acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) acc = or_gate(acc, xs[i], vnode);
  return acc;
}

// Consing can leave orphan gates behind folded terms; keep only what the
// output reaches (constants 0/1 keep their slots).
SdnnfCircuit CircuitBuilder::take(uint32_t output) {
  std::vector<uint8_t> reach(c_.gates.size(), 0);
  reach[output] = 1;
  for (size_t i = c_.gates.size(); i-- > 2;) {
    if (!reach[i]) continue;
    const auto& g = c_.gates[i];
    if (g.kind == GateKind::And || g.kind == GateKind::Or) reach[g.a] = reach[g.b] = 1;
  }
  std::vector<uint32_t> remap(c_.gates.size(), 0);
  SdnnfCircuit out;
  out.gates.reserve(c_.gates.size());
  for (size_t i = 0; i < c_.gates.size(); ++i) {
    if (!reach[i]) continue;
    remap[i] = static_cast<uint32_t>(out.gates.size());
    auto g = c_.gates[i];
    if (g.kind == GateKind::And || g.kind == GateKind::Or) {
      g.a = remap[g.a];
      g.b = remap[g.b];
    }
    out.gates.push_back(g);
  }
  out.output = remap[output];
  c_ = SdnnfCircuit{};
  cache_.clear();
  return out;
}

namespace {

struct SliceKey {
  uint32_t pos, node, sink;
  bool operator==(const SliceKey&) const = default;
};
struct SliceKeyHash {
  size_t operator()(const SliceKey& k) const {
    return (uint64_t{k.pos} << 42) ^ (uint64_t{k.node} << 21) ^ k.sink;
  }
};

struct SdnnfBuilderCtx {
  const CompleteObdd& b;
  const Vtree& vt;
  CircuitBuilder cb;
  std::vector<int> interval_lo, interval_hi;  // leaf positions per vtree node
  std::vector<int> leaf_of_pos;               // vtree leaf id per position
  std::vector<uint8_t> right_linear;
  std::unordered_map<SliceKey, uint32_t, SliceKeyHash> slice_memo;

  explicit SdnnfBuilderCtx(const CompleteObdd& bb, const Vtree& v) : b(bb), vt(v) {}

  size_t sink_count(size_t j) const {
    return j + 1 < b.levels.size() ? b.levels[j + 1].size() : 2;
  }

  // Base-case circuit: from `node` at position pos, accept assignments of the
  // slice [pos, j] whose run ends at `sink` of level j+1. Chain gates are
  // mapped to the right-linear vtree chain below `chain_vnode`.
  uint32_t slice_circuit(uint32_t pos, uint32_t node, uint32_t sink, uint32_t j,
                         int32_t chain_vnode) {
    SliceKey key{pos, node, sink};
    auto it = slice_memo.find(key);
    if (it != slice_memo.end()) return it->second;
    const Var x = b.order[pos];
    const auto& nd = b.levels[pos][node];
    uint32_t result;
    int32_t leaf_vnode = leaf_of_pos[pos];
    if (pos == j) {
      bool lo_hit = nd.lo == sink, hi_hit = nd.hi == sink;
      if (lo_hit && hi_hit)
        result = cb.or_gate(cb.lit(Lit::neg(x), leaf_vnode), cb.lit(Lit::pos(x), leaf_vnode),
                            leaf_vnode);
      else if (lo_hit)
        result = cb.lit(Lit::neg(x), leaf_vnode);
      else if (hi_hit)
        result = cb.lit(Lit::pos(x), leaf_vnode);
      else
        result = cb.fls();
    } else {
      int32_t sub_vnode = vt.nodes[chain_vnode].right;
      uint32_t r0 = slice_circuit(pos + 1, nd.lo, sink, j, sub_vnode);
      uint32_t r1 = slice_circuit(pos + 1, nd.hi, sink, j, sub_vnode);
      uint32_t t0 = r0 == cb.fls()
                        ? cb.fls()
                        : cb.and_gate(cb.lit(Lit::neg(x), leaf_vnode), r0, chain_vnode);
      uint32_t t1 = r1 == cb.fls()
                        ? cb.fls()
                        : cb.and_gate(cb.lit(Lit::pos(x), leaf_vnode), r1, chain_vnode);
      result = cb.or_gate(t0, t1, chain_vnode);
    }
    slice_memo.emplace(key, result);
    return result;
  }

  // Returns the collection handle for vtree node t: gate of D_{k -> sink}.
  // Memoized through slice_memo for base slices and and/or consing above.
  uint32_t piece(int t, uint32_t k, uint32_t sink) {
    const uint32_t i = static_cast<uint32_t>(interval_lo[t]);
    const uint32_t j = static_cast<uint32_t>(interval_hi[t]);
    if (right_linear[t]) return slice_circuit(i, k, sink, j, t);
    const int ta = vt.nodes[t].left, tb = vt.nodes[t].right;
    const uint32_t mid = static_cast<uint32_t>(sink_count(interval_hi[ta]));
    std::vector<uint32_t> terms;
    for (uint32_t h = 0; h < mid; ++h) {
      uint32_t left = piece(ta, k, h);
      if (left == cb.fls()) continue;
      uint32_t right = piece(tb, h, sink);
      if (right == cb.fls()) continue;
      terms.push_back(cb.and_gate(left, right, t));
    }
    return cb.or_chain(terms, t);
  }
};

}  // namespace

SdnnfCircuit obdd_to_sdnnf(const CompleteObdd& b, const Vtree& vt) {
  if (vt.leaves_in_order() != b.order)
    throw Error("obdd_to_sdnnf: vtree leaf order must match the OBDD ordering");
  const size_t n = b.order.size();
  if (n == 0) {
    CircuitBuilder cb;
    SdnnfCircuit out = cb.take(b.const_value ? cb.tru() : cb.fls());
    out.decomposable_hint = out.deterministic_hint = true;
    return out;
  }
  SdnnfBuilderCtx ctx(b, vt);
  ctx.interval_lo.assign(vt.num_nodes(), 0);
  ctx.interval_hi.assign(vt.num_nodes(), 0);
  ctx.right_linear.assign(vt.num_nodes(), 0);
  ctx.leaf_of_pos.assign(n, -1);
  // leaf positions and intervals, bottom-up
  {
    std::vector<int> order, stack{vt.root};
    while (!stack.empty()) {
      int t = stack.back();
      stack.pop_back();
      order.push_back(t);
      if (!vt.is_leaf(t)) {
        stack.push_back(vt.nodes[t].left);
        stack.push_back(vt.nodes[t].right);
      }
    }
    int next_pos = 0;
    std::vector<int> pos_of_leaf(vt.num_nodes(), -1);
    // left-to-right positions: walk again in leaf order
    std::vector<int> s2{vt.root};
    while (!s2.empty()) {
      int t = s2.back();
      s2.pop_back();
      if (vt.is_leaf(t)) {
        pos_of_leaf[t] = next_pos;
        ctx.leaf_of_pos[next_pos] = t;
        ++next_pos;
      } else {
        s2.push_back(vt.nodes[t].right);
        s2.push_back(vt.nodes[t].left);
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int t = *it;
      if (vt.is_leaf(t)) {
        ctx.interval_lo[t] = ctx.interval_hi[t] = pos_of_leaf[t];
        ctx.right_linear[t] = 1;
      } else {
        ctx.interval_lo[t] = ctx.interval_lo[vt.nodes[t].left];
        ctx.interval_hi[t] = ctx.interval_hi[vt.nodes[t].right];
        ctx.right_linear[t] =
            vt.is_leaf(vt.nodes[t].left) && ctx.right_linear[vt.nodes[t].right];
      }
    }
  }

  uint32_t out_gate = ctx.piece(vt.root, 0, 1);
  SdnnfCircuit out = ctx.cb.take(out_gate);
  out.vtree = vt;
  out.decomposable_hint = true;
  out.deterministic_hint = true;
  out.complete_hint = out_gate > 1;  // constants are not complete circuits
  return out;
}

namespace {

// Dense bitset over variables 1..max_var, packed per gate.
struct VarSets {
  size_t words;
  std::vector<uint64_t> bits;  // gates * words
  std::vector<uint32_t> count;

  VarSets(const SdnnfCircuit& d, Var max_var) {
    words = (max_var + 64) / 64;
    bits.assign(d.gates.size() * words, 0);
    count.assign(d.gates.size(), 0);
    for (size_t i = 0; i < d.gates.size(); ++i) {
      const auto& g = d.gates[i];
      uint64_t* w = &bits[i * words];
      if (g.kind == GateKind::Literal) {
        w[g.lit.var() / 64] |= uint64_t{1} << (g.lit.var() % 64);
        count[i] = 1;
      } else if (g.kind == GateKind::And || g.kind == GateKind::Or) {
        const uint64_t* wa = &bits[g.a * words];
        const uint64_t* wb = &bits[g.b * words];
        uint32_t c = 0;
        for (size_t k = 0; k < words; ++k) {
          w[k] = wa[k] | wb[k];
          c += static_cast<uint32_t>(__builtin_popcountll(w[k]));
        }
        count[i] = c;
      }
    }
  }
  bool disjoint(uint32_t a, uint32_t b) const {
    const uint64_t* wa = &bits[a * words];
    const uint64_t* wb = &bits[b * words];
    for (size_t k = 0; k < words; ++k)
      if (wa[k] & wb[k]) return false;
    return true;
  }
  bool subset(uint32_t a, const std::vector<uint64_t>& other) const {
    const uint64_t* wa = &bits[a * words];
    for (size_t k = 0; k < words; ++k)
      if (wa[k] & ~other[k]) return false;
    return true;
  }
  bool equal(uint32_t a, const std::vector<uint64_t>& other) const {
    const uint64_t* wa = &bits[a * words];
    for (size_t k = 0; k < words; ++k)
      if (wa[k] != other[k]) return false;
    return true;
  }
};

}  // namespace

SdnnfReport validate_sdnnf(const SdnnfCircuit& d, uint32_t exact_limit, uint32_t samples,
                           uint64_t seed) {
  SdnnfReport rep;
  auto vars = d.variables();
  const Var max_var = vars.empty() ? 0 : vars.back();
  VarSets vs(d, max_var);

  rep.decomposable = true;
  for (size_t i = 0; i < d.gates.size(); ++i) {
    const auto& g = d.gates[i];
    if (g.kind == GateKind::And && !vs.disjoint(g.a, g.b)) {
      rep.decomposable = false;
      rep.issues.push_back("and-gate " + std::to_string(i) + " shares variables");
      break;
    }
  }

  // structure and completeness against the vtree
  rep.structured = false;
  rep.complete = false;
  if (d.vtree) {
    const Vtree& vt = *d.vtree;
    auto below = vt.vars_below();
    auto parent = vt.parents();
    // packed var sets per vtree node
    std::vector<std::vector<uint64_t>> node_bits(vt.num_nodes(),
                                                 std::vector<uint64_t>(vs.words, 0));
    for (size_t t = 0; t < vt.num_nodes(); ++t)
      for (Var v : below[t])
        if (v <= max_var) node_bits[t][v / 64] |= uint64_t{1} << (v % 64);
    auto is_below = [&](int32_t node, int32_t anc) {
      while (node >= 0 && node != anc) node = parent[node];
      return node == anc;
    };
    rep.structured = true;
    rep.complete = true;
    for (size_t i = 0; i < d.gates.size(); ++i) {
      const auto& g = d.gates[i];
      if (g.kind == GateKind::False || g.kind == GateKind::True) {
        if (i == d.output && d.gates.size() == 1) continue;  // constant circuit
        rep.complete = false;
        continue;
      }
      if (g.vnode < 0) {
        rep.structured = false;
        rep.issues.push_back("gate " + std::to_string(i) + " has no vtree label");
        break;
      }
      if (!vs.subset(static_cast<uint32_t>(i), node_bits[g.vnode])) {
        rep.structured = false;
        rep.issues.push_back("gate " + std::to_string(i) + " escapes its vtree node");
        break;
      }
      if (!vs.equal(static_cast<uint32_t>(i), node_bits[g.vnode])) rep.complete = false;
      if (g.kind == GateKind::Or) {
        for (uint32_t ch : {g.a, g.b}) {
          const auto& cg = d.gates[ch];
          if (cg.kind == GateKind::And || cg.kind == GateKind::Or ||
              cg.kind == GateKind::Literal) {
            if (cg.vnode != g.vnode) {
              rep.structured = false;
              rep.issues.push_back("or-gate " + std::to_string(i) + " mixes vtree labels");
            }
          }
        }
      } else if (g.kind == GateKind::And) {
        if (vt.is_leaf(g.vnode)) {
          rep.structured = false;
          rep.issues.push_back("and-gate " + std::to_string(i) + " at a vtree leaf");
        } else {
          auto constant = [&](uint32_t ch) {
            return d.gates[ch].kind == GateKind::True || d.gates[ch].kind == GateKind::False;
          };
          auto label = [&](uint32_t ch) { return d.gates[ch].vnode; };
          if ((!constant(g.a) && !is_below(label(g.a), vt.nodes[g.vnode].left)) ||
              (!constant(g.b) && !is_below(label(g.b), vt.nodes[g.vnode].right))) {
            rep.structured = false;
            rep.issues.push_back("and-gate " + std::to_string(i) +
                                 " children not under distinct vtree children");
          }
        }
      }
      if (!rep.structured) break;
    }
  } else {
    rep.issues.push_back("no vtree attached");
  }

  // determinism: no or-gate sees both children true under any assignment
  const size_t nv = vars.size();
  rep.determinism_exact = nv <= exact_limit;
  rep.deterministic = true;
  std::vector<uint64_t> val(d.gates.size());
  std::vector<uint64_t> var_pattern(nv);
  std::mt19937_64 rng(seed);
  static constexpr uint64_t kStripes[6] = {0xaaaaaaaaaaaaaaaaull, 0xccccccccccccccccull,
                                           0xf0f0f0f0f0f0f0f0ull, 0xff00ff00ff00ff00ull,
                                           0xffff0000ffff0000ull, 0xffffffff00000000ull};
  const uint64_t blocks =
      rep.determinism_exact ? ((uint64_t{1} << nv) + 63) / 64 : (samples + 63) / 64;
  for (uint64_t blk = 0; blk < blocks && rep.deterministic; ++blk) {
    for (size_t vi = 0; vi < nv; ++vi) {
      if (rep.determinism_exact)
        var_pattern[vi] = vi < 6 ? kStripes[vi] : ((blk >> (vi - 6)) & 1 ? ~uint64_t{0} : 0);
      else
        var_pattern[vi] = rng();
    }
    for (size_t i = 0; i < d.gates.size(); ++i) {
      const auto& g = d.gates[i];
      switch (g.kind) {
        case GateKind::False: val[i] = 0; break;
        case GateKind::True: val[i] = ~uint64_t{0}; break;
        case GateKind::Literal: {
          size_t vi = std::lower_bound(vars.begin(), vars.end(), g.lit.var()) - vars.begin();
          val[i] = g.lit.positive() ? var_pattern[vi] : ~var_pattern[vi];
          break;
        }
        case GateKind::And: val[i] = val[g.a] & val[g.b]; break;
        case GateKind::Or:
          if (val[g.a] & val[g.b]) {
            rep.deterministic = false;
            rep.issues.push_back("or-gate " + std::to_string(i) + " children overlap");
          }
          val[i] = val[g.a] | val[g.b];
          break;
      }
      if (!rep.deterministic) break;
    }
  }
  return rep;
}

BigInt count_dsdnnf(const SdnnfCircuit& d, uint32_t num_vars, bool force) {
  if (!d.deterministic_hint && !force)
    throw Error("count_dsdnnf: circuit not flagged deterministic");
  auto vars = d.variables();
  if (!vars.empty() && vars.back() > num_vars)
    throw Error("count_dsdnnf: circuit mentions variables beyond the counting set");
  VarSets vs(d, vars.empty() ? 0 : vars.back());
  std::vector<BigInt> cnt(d.gates.size());
  for (size_t i = 0; i < d.gates.size(); ++i) {
    const auto& g = d.gates[i];
    switch (g.kind) {
      case GateKind::False: cnt[i] = 0; break;
      case GateKind::True: cnt[i] = 1; break;
      case GateKind::Literal: cnt[i] = 1; break;
      case GateKind::And: cnt[i] = cnt[g.a] * cnt[g.b]; break;
      case GateKind::Or:
        cnt[i] = cnt[g.a] * pow2(vs.count[i] - vs.count[g.a]) +
                 cnt[g.b] * pow2(vs.count[i] - vs.count[g.b]);
        break;
    }
  }
  return cnt[d.output] * pow2(num_vars - vs.count[d.output]);
}

SdnnfCircuit exist_forget(const SdnnfCircuit& d, const std::unordered_set<Var>& forget,
                          bool assume_definable) {
  // literal replacement only: every gate stays in place, so the structuring
  // pair survives untouched
  SdnnfCircuit out = d;
  for (auto& g : out.gates)
    if (g.kind == GateKind::Literal && forget.count(g.lit.var())) {
      g.kind = GateKind::True;
      g.lit = Lit{};
    }
  out.deterministic_hint = d.deterministic_hint && assume_definable;
  out.complete_hint = false;  // var sets shrink under the labels
  return out;
}

SdnnfCircuit propagate_constants(const SdnnfCircuit& d) {
  CircuitBuilder cb;
  std::vector<uint32_t> map(d.gates.size());
  for (size_t i = 0; i < d.gates.size(); ++i) {
    const auto& g = d.gates[i];
    switch (g.kind) {
      case GateKind::False: map[i] = cb.fls(); break;
      case GateKind::True: map[i] = cb.tru(); break;
      case GateKind::Literal: map[i] = cb.lit(g.lit, g.vnode); break;
      case GateKind::And: map[i] = cb.and_gate(map[g.a], map[g.b], g.vnode); break;
      case GateKind::Or: map[i] = cb.or_gate(map[g.a], map[g.b], g.vnode); break;
    }
  }
  SdnnfCircuit out = cb.take(map[d.output]);
  out.vtree = d.vtree;
  out.decomposable_hint = d.decomposable_hint;
  out.deterministic_hint = d.deterministic_hint;
  out.complete_hint = false;
  return out;
}

std::vector<uint32_t> gates_per_vnode(const SdnnfCircuit& d) {
  size_t n = d.vtree ? d.vtree->num_nodes() : 0;
  std::vector<uint32_t> cnt(n, 0);
  for (const auto& g : d.gates)
    if ((g.kind == GateKind::And || g.kind == GateKind::Or) && g.vnode >= 0 &&
        static_cast<size_t>(g.vnode) < n)
      ++cnt[g.vnode];
  return cnt;
}

std::string write_nnf(const SdnnfCircuit& d) {
  std::ostringstream out;
  size_t edges = 0;
  for (const auto& g : d.gates)
    if (g.kind == GateKind::And || g.kind == GateKind::Or) edges += 2;
  auto vars = d.variables();
  out << "nnf " << d.gates.size() << ' ' << edges << ' ' << (vars.empty() ? 0 : vars.back())
      << '\n';
  for (const auto& g : d.gates) {
    switch (g.kind) {
      case GateKind::False: out << "O 0 0\n"; break;
      case GateKind::True: out << "A 0\n"; break;
      case GateKind::Literal: out << "L " << g.lit.code << '\n'; break;
      case GateKind::And: out << "A 2 " << g.a << ' ' << g.b << '\n'; break;
      case GateKind::Or: out << "O 0 2 " << g.a << ' ' << g.b << '\n'; break;
    }
  }
  return out.str();
}

std::string write_vtree(const Vtree& vt) {
  std::ostringstream out;
  out << "vtree " << vt.num_nodes() << '\n';
  for (size_t t = 0; t < vt.num_nodes(); ++t) {
    if (vt.is_leaf(static_cast<int>(t)))
      out << "L " << t << ' ' << vt.nodes[t].var << '\n';
    else
      out << "I " << t << ' ' << vt.nodes[t].left << ' ' << vt.nodes[t].right << '\n';
  }
  return out.str();
}

std::string write_vtree_map(const SdnnfCircuit& d) {
  std::ostringstream out;
  for (size_t i = 0; i < d.gates.size(); ++i)
    if (d.gates[i].vnode >= 0) out << "map " << i << ' ' << d.gates[i].vnode << '\n';
  return out.str();
}

}  // namespace kc
