#include "kc/dpcount.hpp"

#include <algorithm>

#include "kc/convolve.hpp"
#include "kc/graph.hpp"

namespace kc {

namespace {

constexpr size_t kTableBudget = size_t{1} << 24;

uint32_t index_of(const std::vector<uint32_t>& sorted, uint32_t v) {
  return static_cast<uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), v) -
                               sorted.begin());
}

uint64_t insert_bit(uint64_t bits, uint32_t pos, uint64_t value) {
  uint64_t low = bits & ((uint64_t{1} << pos) - 1);
  uint64_t high = bits >> pos;
  return low | (value << pos) | (high << (pos + 1));
}

}  // namespace

DpContext DpContext::build(const ConstraintSystem& f) {
  DpContext ctx;
  ctx.f = &f;
  const size_t m = f.constraints.size();
  ctx.machines.reserve(m);
  ctx.add_table.resize(m);
  ctx.scope.resize(m);
  ctx.progress_state.resize(m);
  ctx.state_progress.resize(m);
  ctx.one_sided.assign(m, 0);
  ctx.cyclic.assign(m, 0);
  for (size_t ci = 0; ci < m; ++ci) {
    const Constraint& c = f.constraints[ci];
    ctx.machines.push_back(csts_for_constraint(c));
    const Csts& mc = ctx.machines.back().machine;
    ctx.scope[ci] = c.vars();
    std::sort(ctx.scope[ci].begin(), ctx.scope[ci].end());

    ctx.add_table[ci].assign(size_t{mc.num_states} * mc.num_states, 0);
    for (uint32_t a = 0; a < mc.num_states; ++a)
      for (uint32_t b = 0; b < mc.num_states; ++b)
        ctx.add_table[ci][a * mc.num_states + b] = state_add(mc, a, b);

    ctx.cyclic[ci] = c.kind == Kind::Xor || c.kind == Kind::SumModulo;
    if (mc.one_sided()) {
      // progress enumeration along the moving side must visit every state
      const bool ones = mc.one_only();
      std::vector<uint32_t> seq;
      std::vector<uint32_t> inv(mc.num_states, UINT32_MAX);
      uint32_t s = mc.start;
      for (uint32_t i = 0; i < mc.num_states; ++i) {
        if (inv[s] != UINT32_MAX) break;
        inv[s] = i;
        seq.push_back(s);
        s = ones ? mc.f1[s] : mc.f0[s];
      }
      if (seq.size() == mc.num_states) {
        // extend to doubled range for index sums
        for (uint32_t i = 0; i + 1 < mc.num_states; ++i) {
          seq.push_back(s);
          s = ones ? mc.f1[s] : mc.f0[s];
        }
        ctx.one_sided[ci] = 1;
        ctx.progress_state[ci] = std::move(seq);
        ctx.state_progress[ci] = std::move(inv);
      }
    }
  }
  return ctx;
}

bool DpContext::flipped(uint32_t ci, Var v) const { return machines[ci].is_flipped(v); }

uint64_t DpTable::states_total() const {
  uint64_t t = 1;
  for (uint64_t r : radix) t *= r;
  return t;
}

void DpTable::init(const DpContext& ctx, std::vector<uint32_t> vars, std::vector<uint32_t> cons) {
  bag_vars = std::move(vars);
  bag_cons = std::move(cons);
  radix.clear();
  for (uint32_t ci : bag_cons) radix.push_back(ctx.machines[ci].machine.num_states);
  if (bag_vars.size() > 40) throw Error("dp table: too many bag variables");
  uint64_t total = states_total() << bag_vars.size();
  if (total > kTableBudget) throw Error("dp table: size budget exceeded");
  values.assign(total, BigInt(0));
}

namespace {

void split_bag(const ConstraintSystem& f, const std::vector<uint32_t>& bag,
               std::vector<uint32_t>& vars, std::vector<uint32_t>& cons) {
  for (uint32_t v : bag)
    (v <= f.num_vars ? vars : cons).push_back(v <= f.num_vars ? v : v - f.num_vars - 1);
}

// state of c after reading the bag assignment restricted to its scope
uint32_t delta_alpha(const DpContext& ctx, uint32_t ci, const std::vector<uint32_t>& bag_vars,
                     uint64_t alpha) {
  const Csts& m = ctx.machines[ci].machine;
  uint32_t s = m.start;
  for (size_t p = 0; p < bag_vars.size(); ++p) {
    if (!ctx.in_scope(ci, bag_vars[p])) continue;
    bool value = (alpha >> p) & 1;
    s = m.step(s, value != ctx.flipped(ci, bag_vars[p]));
  }
  return s;
}

DpTable leaf_table(const DpContext& ctx, const std::vector<uint32_t>& bag_vars,
                   const std::vector<uint32_t>& bag_cons) {
  DpTable t;
  t.init(ctx, bag_vars, bag_cons);
  const uint64_t st = t.states_total();
  // start states only, value one, for every assignment
  uint64_t start_idx = 0, mul = 1;
  for (size_t i = 0; i < t.bag_cons.size(); ++i) {
    start_idx += ctx.machines[t.bag_cons[i]].machine.start * mul;
    mul *= t.radix[i];
  }
  for (uint64_t alpha = 0; alpha < (uint64_t{1} << t.bag_vars.size()); ++alpha)
    t.values[alpha * st + start_idx] = 1;
  return t;
}

DpTable introduce_var(const DpContext& ctx, const DpTable& ch, Var v,
                      const std::vector<uint32_t>& vars, const std::vector<uint32_t>& cons) {
  DpTable t;
  t.init(ctx, vars, cons);
  const uint64_t st = t.states_total();
  const uint32_t vpos = index_of(t.bag_vars, v);
  for (uint64_t alpha = 0; alpha < (uint64_t{1} << ch.bag_vars.size()); ++alpha)
    for (uint64_t s = 0; s < st; ++s) {
      const BigInt& val = ch.values[alpha * st + s];
      if (val == 0) continue;
      t.values[insert_bit(alpha, vpos, 0) * st + s] = val;
      t.values[insert_bit(alpha, vpos, 1) * st + s] = val;
    }
  return t;
}

DpTable introduce_con(const DpContext& ctx, const DpTable& ch, uint32_t ci,
                      const std::vector<uint32_t>& vars, const std::vector<uint32_t>& cons) {
  DpTable t;
  t.init(ctx, vars, cons);
  const uint32_t ipos = index_of(t.bag_cons, ci);
  uint64_t lowprod = 1;
  for (size_t k = 0; k < ipos; ++k) lowprod *= ch.radix[k];
  const uint64_t ch_st = ch.states_total();
  const uint64_t start = ctx.machines[ci].machine.start;
  for (uint64_t alpha = 0; alpha < (uint64_t{1} << t.bag_vars.size()); ++alpha)
    for (uint64_t s = 0; s < ch_st; ++s) {
      const BigInt& val = ch.values[alpha * ch_st + s];
      if (val == 0) continue;
      uint64_t low = s % lowprod, high = s / lowprod;
      uint64_t s2 = low + lowprod * (start + t.radix[ipos] * high);
      t.values[alpha * t.states_total() + s2] = val;
    }
  return t;
}

DpTable forget_var(const DpContext& ctx, const DpTable& ch, Var v,
                   const std::vector<uint32_t>& vars, const std::vector<uint32_t>& cons) {
  DpTable t;
  t.init(ctx, vars, cons);
  const uint64_t st = t.states_total();
  const uint32_t vpos = index_of(ch.bag_vars, v);
  // affected constraints advance f0/f1 according to value and flip
  for (uint64_t alpha = 0; alpha < (uint64_t{1} << ch.bag_vars.size()); ++alpha) {
    const bool value = (alpha >> vpos) & 1;
    uint64_t low = alpha & ((uint64_t{1} << vpos) - 1);
    uint64_t alpha2 = low | ((alpha >> (vpos + 1)) << vpos);
    for (uint64_t s = 0; s < st; ++s) {
      const BigInt& val = ch.values[alpha * st + s];
      if (val == 0) continue;
      uint64_t s2 = 0, mul = 1, rest = s;
      for (size_t k = 0; k < ch.bag_cons.size(); ++k) {
        uint64_t digit = rest % ch.radix[k];
        rest /= ch.radix[k];
        const uint32_t ci = ch.bag_cons[k];
        if (ctx.in_scope(ci, v)) {
          const Csts& m = ctx.machines[ci].machine;
          digit = m.step(static_cast<uint32_t>(digit), value != ctx.flipped(ci, v));
        }
        s2 += digit * mul;
        mul *= ch.radix[k];
      }
      t.values[alpha2 * st + s2] += val;
    }
  }
  return t;
}

DpTable forget_con(const DpContext& ctx, const DpTable& ch, uint32_t ci,
                   const std::vector<uint32_t>& vars, const std::vector<uint32_t>& cons) {
  DpTable t;
  t.init(ctx, vars, cons);
  const uint64_t st = t.states_total();
  const uint32_t cpos = index_of(ch.bag_cons, ci);
  uint64_t lowprod = 1;
  for (size_t k = 0; k < cpos; ++k) lowprod *= ch.radix[k];
  const Csts& m = ctx.machines[ci].machine;
  for (uint64_t alpha = 0; alpha < (uint64_t{1} << ch.bag_vars.size()); ++alpha) {
    const uint32_t da = delta_alpha(ctx, ci, ch.bag_vars, alpha);
    for (uint64_t s = 0; s < ch.states_total(); ++s) {
      const BigInt& val = ch.values[alpha * ch.states_total() + s];
      if (val == 0) continue;
      uint64_t digit = (s / lowprod) % ch.radix[cpos];
      if (!m.accepting[ctx.add(ci, da, static_cast<uint32_t>(digit))]) continue;
      uint64_t s2 = s % lowprod + (s / (lowprod * ch.radix[cpos])) * lowprod;
      t.values[alpha * st + s2] += val;
    }
  }
  return t;
}

}  // namespace

DpTable dp_join_naive(const DpContext& ctx, const DpTable& a, const DpTable& b) {
  DpTable t;
  t.init(ctx, a.bag_vars, a.bag_cons);
  const uint64_t st = t.states_total();
  std::vector<uint32_t> d1(a.bag_cons.size()), d2(a.bag_cons.size());
  for (uint64_t alpha = 0; alpha < (uint64_t{1} << t.bag_vars.size()); ++alpha) {
    const BigInt* va = &a.values[alpha * st];
    const BigInt* vb = &b.values[alpha * st];
    BigInt* vt = &t.values[alpha * st];
    for (uint64_t s1 = 0; s1 < st; ++s1) {
      if (va[s1] == 0) continue;
      {
        uint64_t r = s1;
        for (size_t k = 0; k < a.bag_cons.size(); ++k) {
          d1[k] = r % a.radix[k];
          r /= a.radix[k];
        }
      }
      for (uint64_t s2 = 0; s2 < st; ++s2) {
        if (vb[s2] == 0) continue;
        uint64_t target = 0, mul = 1, r = s2;
        for (size_t k = 0; k < a.bag_cons.size(); ++k) {
          d2[k] = r % a.radix[k];
          r /= a.radix[k];
          target += ctx.add(a.bag_cons[k], d1[k], d2[k]) * mul;
          mul *= a.radix[k];
        }
        vt[target] += va[s1] * vb[s2];
      }
    }
  }
  return t;
}

DpTable dp_join_onesided(const DpContext& ctx, const DpTable& a, const DpTable& b) {
  for (uint32_t ci : a.bag_cons)
    if (!ctx.one_sided[ci])
      throw Error("dp_join_onesided: bag holds a constraint without one-sided progress");
  DpTable t;
  t.init(ctx, a.bag_vars, a.bag_cons);
  const uint64_t st = t.states_total();
  const size_t d = a.bag_cons.size();
  // carry-free embedding strides over doubled progress ranges
  std::vector<size_t> stride(d + 1);
  stride[0] = 1;
  for (size_t k = 0; k < d; ++k) stride[k + 1] = stride[k] * (2 * a.radix[k] - 1);
  for (uint64_t alpha = 0; alpha < (uint64_t{1} << t.bag_vars.size()); ++alpha) {
    std::vector<BigInt> fa(stride[d], BigInt(0)), fb(stride[d], BigInt(0));
    auto embed = [&](const DpTable& src, std::vector<BigInt>& dst) {
      for (uint64_t s = 0; s < st; ++s) {
        const BigInt& val = src.values[alpha * st + s];
        if (val == 0) continue;
        uint64_t r = s;
        size_t pos = 0;
        for (size_t k = 0; k < d; ++k) {
          uint32_t state = r % src.radix[k];
          r /= src.radix[k];
          pos += ctx.state_progress[src.bag_cons[k]][state] * stride[k];
        }
        dst[pos] += val;
      }
    };
    embed(a, fa);
    embed(b, fb);
    auto conv = linear_convolve(fa, fb);
    for (size_t pos = 0; pos < conv.size(); ++pos) {
      if (conv[pos] == 0) continue;
      uint64_t target = 0, mul = 1, r = pos;
      for (size_t k = 0; k < d; ++k) {
        size_t idx = r % (2 * a.radix[k] - 1);
        r /= 2 * a.radix[k] - 1;
        target += ctx.progress_state[a.bag_cons[k]][idx] * mul;
        mul *= a.radix[k];
      }
      t.values[alpha * st + target] += conv[pos];
    }
  }
  return t;
}

DpTable dp_join_clause_modulo(const DpContext& ctx, const DpTable& a, const DpTable& b) {
  // split bag constraints into clause dimensions (subset algebra) and cyclic
  // modulo dimensions (group algebra)
  std::vector<size_t> clause_pos, mod_pos;
  std::vector<uint32_t> moduli;
  for (size_t k = 0; k < a.bag_cons.size(); ++k) {
    const uint32_t ci = a.bag_cons[k];
    if (ctx.f->constraints[ci].kind == Kind::Clause)
      clause_pos.push_back(k);
    else if (ctx.cyclic[ci])
      mod_pos.push_back(k), moduli.push_back(static_cast<uint32_t>(a.radix[k]));
    else
      throw Error("dp_join_clause_modulo: bag holds a non-clause non-modulo constraint");
  }
  DpTable t;
  t.init(ctx, a.bag_vars, a.bag_cons);
  const uint64_t st = t.states_total();
  const size_t nc = clause_pos.size();
  uint64_t mod_size = 1;
  for (uint32_t m : moduli) mod_size *= m;

  auto reshape = [&](const DpTable& src, uint64_t alpha) {
    // [subset mask][group index]
    std::vector<std::vector<BigInt>> grid(size_t{1} << nc,
                                          std::vector<BigInt>(mod_size, BigInt(0)));
    for (uint64_t s = 0; s < st; ++s) {
      const BigInt& val = src.values[alpha * st + s];
      if (val == 0) continue;
      uint64_t r = s, mask = 0, gidx = 0, gmul = 1;
      size_t cli = 0, mi = 0;
      for (size_t k = 0; k < src.bag_cons.size(); ++k) {
        uint64_t digit = r % src.radix[k];
        r /= src.radix[k];
        if (cli < clause_pos.size() && clause_pos[cli] == k) {
          if (digit) mask |= uint64_t{1} << cli;
          ++cli;
        } else {
          gidx += digit * gmul;
          gmul *= moduli[mi];
          ++mi;
        }
      }
      grid[mask][gidx] += val;
    }
    return grid;
  };

  for (uint64_t alpha = 0; alpha < (uint64_t{1} << t.bag_vars.size()); ++alpha) {
    auto fa = reshape(a, alpha);
    auto fb = reshape(b, alpha);
    // zeta over the subset dimension, pointwise in the group index
    for (size_t bpos = 0; bpos < nc; ++bpos)
      for (size_t mask = 0; mask < fa.size(); ++mask)
        if (mask & (size_t{1} << bpos))
          for (uint64_t gi = 0; gi < mod_size; ++gi) {
            fa[mask][gi] += fa[mask ^ (size_t{1} << bpos)][gi];
            fb[mask][gi] += fb[mask ^ (size_t{1} << bpos)][gi];
          }
    // group convolution pointwise in the subset mask
    std::vector<std::vector<BigInt>> fh(fa.size());
    for (size_t mask = 0; mask < fa.size(); ++mask)
      fh[mask] = group_convolve(fa[mask], fb[mask], moduli);
    // moebius back
    for (size_t bpos = 0; bpos < nc; ++bpos)
      for (size_t mask = 0; mask < fh.size(); ++mask)
        if (mask & (size_t{1} << bpos))
          for (uint64_t gi = 0; gi < mod_size; ++gi)
            fh[mask][gi] -= fh[mask ^ (size_t{1} << bpos)][gi];
    // scatter back into mixed-radix rows
    for (size_t mask = 0; mask < fh.size(); ++mask)
      for (uint64_t gi = 0; gi < mod_size; ++gi) {
        if (fh[mask][gi] == 0) continue;
        uint64_t s = 0, mul = 1, g = gi;
        size_t cli = 0, mi = 0;
        for (size_t k = 0; k < t.bag_cons.size(); ++k) {
          uint64_t digit;
          if (cli < clause_pos.size() && clause_pos[cli] == k) {
            digit = (mask >> cli) & 1;
            ++cli;
          } else {
            digit = g % moduli[mi];
            g /= moduli[mi];
            ++mi;
          }
          s += digit * mul;
          mul *= t.radix[k];
        }
        t.values[alpha * st + s] += fh[mask][gi];
      }
  }
  return t;
}

namespace {

JoinMode pick_mode(const DpContext& ctx, const DpTable& a, JoinMode requested) {
  if (requested != JoinMode::Auto) return requested;
  bool clause_mod = true, onesided = true;
  for (uint32_t ci : a.bag_cons) {
    const Kind k = ctx.f->constraints[ci].kind;
    if (!(k == Kind::Clause || ctx.cyclic[ci])) clause_mod = false;
    if (!ctx.one_sided[ci]) onesided = false;
  }
  if (clause_mod) return JoinMode::ClauseModulo;
  if (onesided) return JoinMode::OneSided;
  return JoinMode::Naive;
}

}  // namespace

DpTable table_transition(const DpContext& ctx, const NiceTd& ntd, size_t node,
                         const DpTable* child1, const DpTable* child2, JoinMode mode) {
  const auto& nd = ntd.nodes[node];
  std::vector<uint32_t> vars, cons;
  split_bag(*ctx.f, nd.bag, vars, cons);
  switch (nd.kind) {
    case NodeKind::Leaf:
      return leaf_table(ctx, vars, cons);
    case NodeKind::Introduce:
      if (nd.vertex <= ctx.f->num_vars) return introduce_var(ctx, *child1, nd.vertex, vars, cons);
      return introduce_con(ctx, *child1, nd.vertex - ctx.f->num_vars - 1, vars, cons);
    case NodeKind::Forget:
      if (nd.vertex <= ctx.f->num_vars) return forget_var(ctx, *child1, nd.vertex, vars, cons);
      return forget_con(ctx, *child1, nd.vertex - ctx.f->num_vars - 1, vars, cons);
    case NodeKind::Join: {
      switch (pick_mode(ctx, *child1, mode)) {
        case JoinMode::Naive: return dp_join_naive(ctx, *child1, *child2);
        case JoinMode::OneSided: return dp_join_onesided(ctx, *child1, *child2);
        case JoinMode::ClauseModulo: return dp_join_clause_modulo(ctx, *child1, *child2);
        case JoinMode::Auto: break;
      }
      return dp_join_naive(ctx, *child1, *child2);
    }
  }
  throw Error("table_transition: unknown node kind");
}

BigInt dp_count(const ConstraintSystem& f, const NiceTd& ntd, JoinMode mode) {
  f.validate();
  check_nice(ntd);
  DpContext ctx = DpContext::build(f);
  std::vector<DpTable> tables(ntd.nodes.size());
  for (size_t ni = 0; ni < ntd.nodes.size(); ++ni) {
    const auto& nd = ntd.nodes[ni];
    const DpTable* c1 = nd.child1 >= 0 ? &tables[nd.child1] : nullptr;
    const DpTable* c2 = nd.child2 >= 0 ? &tables[nd.child2] : nullptr;
    tables[ni] = table_transition(ctx, ntd, ni, c1, c2, mode);
    if (nd.child1 >= 0) tables[nd.child1] = DpTable{};
    if (nd.child2 >= 0) tables[nd.child2] = DpTable{};
  }
  const DpTable& root = tables[ntd.root];
  if (root.size() != 1) throw Error("dp_count: root bag not empty");
  return root.values[0];
}

BigInt count_cnf_xor(const ConstraintSystem& f, const TreeDecomposition& td) {
  for (const Constraint& c : f.constraints)
    if (c.kind != Kind::Clause && c.kind != Kind::Xor)
      throw Error("count_cnf_xor: system must contain only clauses and parity constraints");
  return dp_count(f, make_nice(td), JoinMode::ClauseModulo);
}

}  // namespace kc
