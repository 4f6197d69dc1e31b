#include "kc/obdd.hpp"

#include <algorithm>
#include <unordered_map>

namespace kc {

namespace {

constexpr size_t kLevelBudget = 1u << 22;

// Uniform automaton view of a constraint: state is a uint64, fed one scope
// variable at a time. Positions index into c.lits.
struct ConstraintAutomaton {
  const Constraint& c;
  int64_t weight_offset = 0;  // Threshold: shift running sum to be nonnegative

  explicit ConstraintAutomaton(const Constraint& cc) : c(cc) {
    if (c.kind == Kind::Threshold) {
      int64_t neg = 0;
      for (int64_t w : c.weights)
        if (w < 0) neg += w;
      weight_offset = -neg;
    }
  }

  uint64_t start() const {
    if (c.kind == Kind::Opaque) return c.opaque->start_state();
    if (c.kind == Kind::Threshold) return static_cast<uint64_t>(weight_offset);
    return 0;
  }

  uint64_t step(uint64_t s, size_t pos, bool value) const {
    const bool lit_true = value == c.lits[pos].positive();
    switch (c.kind) {
      case Kind::Clause:
        return s | (lit_true ? 1 : 0);
      case Kind::Xor:
        return s ^ (lit_true ? 1 : 0);
      case Kind::SumModulo:
        return (s + (lit_true ? 1 : 0)) % c.modulus;
      case Kind::Cardinality:
        return std::min<uint64_t>(s + (lit_true ? 1 : 0), c.card_bound);
      case Kind::Threshold:
        return s + (lit_true ? c.weights[pos] : 0);
      case Kind::SmallScope:
        return s | (value ? uint64_t{1} << pos : 0);
      case Kind::Opaque:
        return c.opaque->step(s, pos, value);
    }
    return 0;
  }

  bool accepts(uint64_t s) const {
    switch (c.kind) {
      case Kind::Clause:
        return s != 0;
      case Kind::Xor:
        return s == (c.xor_parity ? 1u : 0u);
      case Kind::SumModulo:
        return s == c.residue;
      case Kind::Cardinality:
        return s >= c.card_bound;
      case Kind::Threshold:
        return static_cast<int64_t>(s) - weight_offset >= c.threshold_bound;
      case Kind::SmallScope:
        return c.table_bit(s);
      case Kind::Opaque:
        return c.opaque->accepts(s);
    }
    return false;
  }
};

// Merge equal (lo, hi) nodes per level bottom-up, then drop unreachable nodes.
void reduce(CompleteObdd& b) {
  const size_t n = b.levels.size();
  if (n == 0) return;
  std::vector<uint32_t> remap_next;  // new index of node j at level i+1
  for (size_t i = n; i-- > 0;) {
    auto& level = b.levels[i];
    std::unordered_map<uint64_t, uint32_t> seen;
    std::vector<uint32_t> remap(level.size());
    std::vector<CompleteObdd::Node> merged;
    for (size_t j = 0; j < level.size(); ++j) {
      CompleteObdd::Node nd = level[j];
      if (i + 1 < n) {
        nd.lo = remap_next[nd.lo];
        nd.hi = remap_next[nd.hi];
      }
      uint64_t key = (uint64_t{nd.lo} << 32) | nd.hi;
      auto [it, fresh] = seen.emplace(key, static_cast<uint32_t>(merged.size()));
      if (fresh) merged.push_back(nd);
      remap[j] = it->second;
    }
    remap_next = std::move(remap);
    level = std::move(merged);
  }
  // remap_next now maps old root index; root is always 0 and level 0 keeps
  // one node after merging, so nothing else to fix.

  // Forward reachability prune.
  std::vector<uint32_t> live{0};
  for (size_t i = 0; i + 1 < n; ++i) {
    std::vector<uint32_t> next_new(b.levels[i + 1].size(), UINT32_MAX);
    std::vector<CompleteObdd::Node> kept;
    std::vector<uint32_t> next_live;
    for (uint32_t j : live) {
      for (uint32_t t : {b.levels[i][j].lo, b.levels[i][j].hi}) {
        if (next_new[t] == UINT32_MAX) {
          next_new[t] = static_cast<uint32_t>(kept.size());
          kept.push_back(b.levels[i + 1][t]);
          next_live.push_back(next_new[t]);
        }
      }
    }
    std::vector<CompleteObdd::Node> lvl;
    lvl.reserve(live.size());
    for (uint32_t j : live) {
      auto nd = b.levels[i][j];
      nd.lo = next_new[nd.lo];
      nd.hi = next_new[nd.hi];
      lvl.push_back(nd);
    }
    b.levels[i] = std::move(lvl);
    b.levels[i + 1] = std::move(kept);
    live.resize(next_live.size());
    for (size_t k = 0; k < next_live.size(); ++k) live[k] = static_cast<uint32_t>(k);
  }
}

}  // namespace

uint32_t CompleteObdd::width() const {
  size_t w = order.empty() ? 1 : 0;
  for (const auto& l : levels) w = std::max(w, l.size());
  return static_cast<uint32_t>(w);
}

bool CompleteObdd::evaluate_scope_bits(uint64_t bits) const {
  if (order.empty()) return const_value;
  uint32_t at = 0;
  for (size_t i = 0; i < levels.size(); ++i) {
    const Node& nd = levels[i][at];
    at = ((bits >> i) & 1) ? nd.hi : nd.lo;
  }
  return at == 1;
}

bool CompleteObdd::evaluate(const Assignment& a) const {
  if (order.empty()) return const_value;
  uint32_t at = 0;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (!a.assigned(order[i])) throw Error("obdd evaluate: unassigned variable");
    const Node& nd = levels[i][at];
    at = a.value(order[i]) ? nd.hi : nd.lo;
  }
  return at == 1;
}

CompleteObdd build_obdd(const Constraint& c, const std::vector<Var>& pi) {
  auto scope = c.vars();
  {
    auto a = scope, b = pi;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw Error("build_obdd: ordering is not a permutation of the scope");
  }
  const size_t n = scope.size();
  ConstraintAutomaton aut(c);
  CompleteObdd b;
  b.order = pi;
  if (n == 0) {
    b.const_value = aut.accepts(aut.start());
    return b;
  }
  std::unordered_map<Var, size_t> pos;
  for (size_t i = 0; i < n; ++i) pos[scope[i]] = i;

  b.levels.resize(n);
  std::vector<uint64_t> states{aut.start()};
  for (size_t i = 0; i < n; ++i) {
    const size_t p = pos.at(pi[i]);
    std::unordered_map<uint64_t, uint32_t> index;
    std::vector<uint64_t> next;
    auto intern = [&](uint64_t s) {
      auto [it, fresh] = index.emplace(s, static_cast<uint32_t>(next.size()));
      if (fresh) next.push_back(s);
      return it->second;
    };
    b.levels[i].reserve(states.size());
    for (uint64_t s : states) {
      uint64_t s0 = aut.step(s, p, false);
      uint64_t s1 = aut.step(s, p, true);
      if (i + 1 < n)
        b.levels[i].push_back({intern(s0), intern(s1)});
      else
        b.levels[i].push_back({aut.accepts(s0) ? 1u : 0u, aut.accepts(s1) ? 1u : 0u});
    }
    if (next.size() > kLevelBudget) throw Error("build_obdd: state budget exceeded");
    states = std::move(next);
  }
  reduce(b);
  return b;
}

CompleteObdd obdd_apply(BoolOp op, const CompleteObdd& b1, const CompleteObdd& b2) {
  if (b1.order != b2.order) throw Error("obdd_apply: orderings differ");
  auto combine = [op](bool x, bool y) { return op == BoolOp::And ? (x && y) : (x || y); };
  CompleteObdd out;
  out.order = b1.order;
  const size_t n = b1.order.size();
  if (n == 0) {
    out.const_value = combine(b1.const_value, b2.const_value);
    return out;
  }
  out.levels.resize(n);
  std::vector<std::pair<uint32_t, uint32_t>> pairs{{0, 0}};
  for (size_t i = 0; i < n; ++i) {
    std::unordered_map<uint64_t, uint32_t> index;
    std::vector<std::pair<uint32_t, uint32_t>> next;
    auto intern = [&](uint32_t x, uint32_t y) {
      uint64_t key = (uint64_t{x} << 32) | y;
      auto [it, fresh] = index.emplace(key, static_cast<uint32_t>(next.size()));
      if (fresh) next.emplace_back(x, y);
      return it->second;
    };
    out.levels[i].reserve(pairs.size());
    for (auto [x, y] : pairs) {
      const auto& n1 = b1.levels[i][x];
      const auto& n2 = b2.levels[i][y];
      if (i + 1 < n)
        out.levels[i].push_back({intern(n1.lo, n2.lo), intern(n1.hi, n2.hi)});
      else
        out.levels[i].push_back(
            {combine(n1.lo, n2.lo) ? 1u : 0u, combine(n1.hi, n2.hi) ? 1u : 0u});
    }
    pairs = std::move(next);
  }
  reduce(out);
  return out;
}

BigInt obdd_count(const CompleteObdd& b) {
  const size_t n = b.order.size();
  if (n == 0) return b.const_value ? 1 : 0;
  std::vector<BigInt> below(b.levels[n - 1].size());
  for (size_t j = 0; j < below.size(); ++j)
    below[j] = (b.levels[n - 1][j].lo == 1 ? 1 : 0) + (b.levels[n - 1][j].hi == 1 ? 1 : 0);
  for (size_t i = n - 1; i-- > 0;) {
    std::vector<BigInt> cur(b.levels[i].size());
    for (size_t j = 0; j < cur.size(); ++j)
      cur[j] = below[b.levels[i][j].lo] + below[b.levels[i][j].hi];
    below = std::move(cur);
  }
  return below[0];
}

namespace {

struct Dsu {
  std::vector<uint32_t> parent;
  explicit Dsu(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = static_cast<uint32_t>(i);
  }
  uint32_t find(uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(uint32_t a, uint32_t b) { parent[find(a)] = find(b); }
};

bool symmetric_by_enumeration(const CompleteObdd& b) {
  const size_t n = b.order.size();
  std::vector<int8_t> by_count(n + 1, -1);
  for (uint64_t bits = 0; bits < (uint64_t{1} << n); ++bits) {
    int pc = __builtin_popcountll(bits);
    bool v = b.evaluate_scope_bits(bits);
    if (by_count[pc] < 0)
      by_count[pc] = v;
    else if (by_count[pc] != static_cast<int8_t>(v))
      return false;
  }
  return true;
}

}  // namespace

CompleteObdd commutative_quotient(const CompleteObdd& b, bool trust_symmetric) {
  const size_t n = b.order.size();
  if (n <= 12) {
    if (!symmetric_by_enumeration(b))
      throw Error("commutative_quotient: function is not symmetric");
  } else if (!trust_symmetric) {
    throw Error("commutative_quotient: cannot verify symmetry beyond 12 variables");
  }
  if (n <= 2) {
    CompleteObdd out = b;
    reduce(out);
    return out;
  }

  std::vector<Dsu> dsu;
  dsu.reserve(n);
  for (size_t i = 0; i < n; ++i) dsu.emplace_back(b.levels[i].size());

  auto f = [&](size_t level, uint32_t node, bool one) {
    return one ? b.levels[level][node].hi : b.levels[level][node].lo;
  };

  // Sinks are never merged; a union that lands on unequal sinks disproves
  // symmetry outright.
  auto unite_at = [&](size_t level, uint32_t x, uint32_t y) {
    if (level < n) {
      dsu[level].unite(x, y);
    } else if (x != y) {
      throw Error("commutative_quotient: sink conflict, function is not symmetric");
    }
  };

  for (size_t tgt = 2; tgt <= n; ++tgt) {
    // congruence through the final classes one level down
    const size_t mid = tgt - 1;
    std::unordered_map<uint32_t, uint32_t> repr;
    for (uint32_t j = 0; j < b.levels[mid].size(); ++j) {
      uint32_t r = dsu[mid].find(j);
      auto [it, fresh] = repr.emplace(r, j);
      if (!fresh) {
        unite_at(tgt, f(mid, it->second, false), f(mid, j, false));
        unite_at(tgt, f(mid, it->second, true), f(mid, j, true));
      }
    }
    // commutation squares from two levels down
    const size_t src = tgt - 2;
    for (uint32_t j = 0; j < b.levels[src].size(); ++j) {
      uint32_t via0 = f(src, j, false), via1 = f(src, j, true);
      unite_at(tgt, f(src + 1, via1, false), f(src + 1, via0, true));
    }
    // unions at tgt may have merged classes whose images at tgt+1 must then
    // merge too; the congruence pass at the next iteration picks that up.
  }

  CompleteObdd out;
  out.order = b.order;
  out.levels.resize(n);
  std::vector<std::vector<uint32_t>> new_idx(n);
  for (size_t i = 0; i < n; ++i) {
    new_idx[i].assign(b.levels[i].size(), UINT32_MAX);
    for (uint32_t j = 0; j < b.levels[i].size(); ++j) {
      uint32_t r = dsu[i].find(j);
      if (new_idx[i][r] == UINT32_MAX)
        new_idx[i][r] = static_cast<uint32_t>(out.levels[i].size()), out.levels[i].push_back({0, 0});
      new_idx[i][j] = new_idx[i][r];
    }
  }
  for (size_t i = 0; i < n; ++i)
    for (uint32_t j = 0; j < b.levels[i].size(); ++j) {
      uint32_t lo = b.levels[i][j].lo, hi = b.levels[i][j].hi;
      if (i + 1 < n) {
        lo = new_idx[i + 1][lo];
        hi = new_idx[i + 1][hi];
      }
      out.levels[i][new_idx[i][j]] = {lo, hi};
    }
  reduce(out);
  return out;
}

namespace {

// State (node index) at level `depth` after q1 ones then q0 zeros, q1+q0 = depth.
uint32_t state_after_prefix(const CompleteObdd& b, uint32_t q1, uint32_t q0) {
  uint32_t at = 0;
  for (uint32_t i = 0; i < q1; ++i) at = b.levels[i][at].hi;
  for (uint32_t i = 0; i < q0; ++i) at = b.levels[q1 + i][at].lo;
  return at;
}

}  // namespace

ModuloPattern find_modulo_pattern(const CompleteObdd& b) {
  const uint32_t w = b.width();
  const uint32_t n = static_cast<uint32_t>(b.order.size());
  if (w > n) throw Error("find_modulo_pattern: width exceeds variable count");
  if (w == n) return {w, 0, 0};
  for (uint32_t m = 1; m <= w; ++m)
    for (uint32_t a = 0; a + m <= w; ++a) {
      const uint32_t bb = w - m - a;
      if (state_after_prefix(b, a, m + bb) == state_after_prefix(b, a + m, bb))
        return {a, m, bb};
    }
  throw Error("find_modulo_pattern: no witness found (input not commutative?)");
}

FlippedCsts obdd_to_csts(const CompleteObdd& b, std::vector<Var> scope,
                         std::vector<uint8_t> flipped) {
  const uint32_t n = static_cast<uint32_t>(b.order.size());
  if (scope.size() != n || flipped.size() != n) throw Error("obdd_to_csts: flip map size mismatch");
  auto eval_count = [&](uint32_t q1) {
    return b.evaluate_scope_bits(q1 >= 64 ? ~uint64_t{0} : (uint64_t{1} << q1) - 1);
  };

  Csts m;
  const ModuloPattern pat = find_modulo_pattern(b);
  if (pat.m == 0) {
    // width == n: saturating ones counter, n+1 states
    m.num_states = n + 1;
    m.f0.resize(m.num_states);
    m.f1.resize(m.num_states);
    m.accepting.assign(m.num_states, 0);
    m.witness.assign(m.num_states, {kNoWitness, kNoWitness});
    for (uint32_t j = 0; j <= n; ++j) {
      m.f0[j] = j;
      m.f1[j] = std::min(j + 1, n);
      m.accepting[j] = eval_count(j);
      m.witness[j] = {j, 0};
    }
  } else {
    const uint32_t A = pat.a, M = pat.m, B = pat.b;
    const uint32_t cols = A + M;  // j ranges over [0, A+M-1]
    m.num_states = (B + 1) * cols;
    m.f0.resize(m.num_states);
    m.f1.resize(m.num_states);
    m.accepting.assign(m.num_states, 0);
    m.witness.assign(m.num_states, {kNoWitness, kNoWitness});
    auto id = [&](uint32_t i, uint32_t j) { return i * cols + j; };
    auto window = [&](uint64_t q1) -> uint32_t {
      return q1 < cols ? static_cast<uint32_t>(q1) : A + static_cast<uint32_t>((q1 - A) % M);
    };
    for (uint32_t i = 0; i <= B; ++i)
      for (uint32_t j = 0; j < cols; ++j) {
        m.f0[id(i, j)] = id(std::min(i + 1, B), j);
        m.f1[id(i, j)] = id(i, j + 1 < cols ? j + 1 : A);
        m.witness[id(i, j)] = {j, i};
        // full-length representative, if the state is hit by one
        bool acc = false;
        if (j < A) {
          if (j <= n && i == std::min<uint64_t>(n - j, B)) acc = eval_count(j);
        } else if (i < B) {
          if (n >= i && n - i >= A && window(n - i) == j) acc = eval_count(n - i);
        } else {
          for (uint64_t q1 = A; q1 + B <= n; ++q1)
            if (window(q1) == j) {
              acc = eval_count(static_cast<uint32_t>(q1));
              break;
            }
        }
        m.accepting[id(i, j)] = acc;
      }
  }

  // the machine must reproduce the OBDD on every count split
  for (uint32_t q1 = 0; q1 <= n; ++q1) {
    uint32_t s = m.start;
    for (uint32_t k = 0; k < q1; ++k) s = m.f1[s];
    for (uint32_t k = 0; k < n - q1; ++k) s = m.f0[s];
    if ((m.accepting[s] != 0) != eval_count(q1))
      throw Error("obdd_to_csts: machine does not describe the function");
  }

  FlippedCsts out;
  out.machine = std::move(m);
  out.scope = std::move(scope);
  out.flipped = std::move(flipped);
  return out;
}

}  // namespace kc
