#include "kc/toolkit.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "kc/graph.hpp"
#include "kc/obdd.hpp"

namespace kc {

namespace {

// States that there is a vertex owning exactly k-1 set variables while
// everything else stays zero: the i-th clique slot is some u with edges to
// the k-1 other slots.
class CliqueVertexConstraint : public OpaqueConstraint {
 public:
  CliqueVertexConstraint(uint32_t k, uint32_t slot, std::vector<Var> vars,
                         std::vector<uint32_t> group)
      : k_(k), slot_(slot), vars_(std::move(vars)), group_(std::move(group)) {}

  std::vector<Var> scope() const override { return vars_; }
  uint64_t start_state() const override { return kNone; }
  uint64_t step(uint64_t state, size_t pos, bool value) const override {
    if (!value || state == kDead) return state;
    const uint64_t g = group_[pos];
    if (state == kNone) return 2 + g * (k_ + 1) + 1;
    uint64_t owner = (state - 2) / (k_ + 1);
    uint64_t cnt = (state - 2) % (k_ + 1);
    if (owner != g) return kDead;
    return 2 + owner * (k_ + 1) + std::min<uint64_t>(cnt + 1, k_);
  }
  bool accepts(uint64_t state) const override {
    if (state == kNone) return k_ == 1;  // zero ones wanted when k-1 == 0
    if (state == kDead) return false;
    return (state - 2) % (k_ + 1) == k_ - 1;
  }
  std::string tag() const override { return "cliquevertex"; }
  std::vector<std::string> params() const override {
    std::vector<std::string> out{std::to_string(k_), std::to_string(slot_)};
    for (size_t i = 0; i < vars_.size(); ++i) {
      out.push_back(std::to_string(vars_[i]));
      out.push_back(std::to_string(group_[i]));
    }
    return out;
  }
  bool same_as(const OpaqueConstraint& other) const override {
    auto* o = dynamic_cast<const CliqueVertexConstraint*>(&other);
    return o && o->k_ == k_ && o->slot_ == slot_ && o->vars_ == vars_ && o->group_ == group_;
  }

 private:
  static constexpr uint64_t kNone = 0, kDead = 1;
  uint32_t k_, slot_;
  std::vector<Var> vars_;
  std::vector<uint32_t> group_;  // owning graph vertex per scope position
};

// Either the edge joins the clique (one slot in each direction) or it stays
// entirely unused.
class CliqueEdgeConstraint : public OpaqueConstraint {
 public:
  CliqueEdgeConstraint(uint32_t u, uint32_t v, std::vector<Var> vars, std::vector<uint8_t> dir)
      : u_(u), v_(v), vars_(std::move(vars)), dir_(std::move(dir)) {}

  std::vector<Var> scope() const override { return vars_; }
  uint64_t start_state() const override { return 0; }  // (a, b) packed as a*3+b
  uint64_t step(uint64_t state, size_t pos, bool value) const override {
    if (!value) return state;
    uint64_t a = state / 3, b = state % 3;
    if (dir_[pos] == 0)
      a = std::min<uint64_t>(a + 1, 2);
    else
      b = std::min<uint64_t>(b + 1, 2);
    return a * 3 + b;
  }
  bool accepts(uint64_t state) const override { return state == 0 || state == 4; }
  std::string tag() const override { return "cliqueedge"; }
  std::vector<std::string> params() const override {
    std::vector<std::string> out{std::to_string(u_), std::to_string(v_)};
    for (size_t i = 0; i < vars_.size(); ++i) {
      out.push_back(std::to_string(vars_[i]));
      out.push_back(std::to_string(static_cast<int>(dir_[i])));
    }
    return out;
  }
  bool same_as(const OpaqueConstraint& other) const override {
    auto* o = dynamic_cast<const CliqueEdgeConstraint*>(&other);
    return o && o->u_ == u_ && o->v_ == v_ && o->vars_ == vars_ && o->dir_ == dir_;
  }

 private:
  uint32_t u_, v_;
  std::vector<Var> vars_;
  std::vector<uint8_t> dir_;  // 0: u-side, 1: v-side
};

uint64_t param_int(const std::vector<std::string>& params, size_t i) {
  if (i >= params.size()) throw Error("opaque constraint: missing parameter");
  return std::stoull(params[i]);
}

}  // namespace

const OpaqueRegistry& toolkit_registry() {
  static const OpaqueRegistry reg = [] {
    OpaqueRegistry r;
    r.factories["cliquevertex"] = [](const std::vector<std::string>& p) {
      uint32_t k = static_cast<uint32_t>(param_int(p, 0));
      uint32_t slot = static_cast<uint32_t>(param_int(p, 1));
      std::vector<Var> vars;
      std::vector<uint32_t> group;
      for (size_t i = 2; i + 1 < p.size(); i += 2) {
        vars.push_back(static_cast<Var>(param_int(p, i)));
        group.push_back(static_cast<uint32_t>(param_int(p, i + 1)));
      }
      return std::make_shared<const CliqueVertexConstraint>(k, slot, std::move(vars),
                                                            std::move(group));
    };
    r.factories["cliqueedge"] = [](const std::vector<std::string>& p) {
      uint32_t u = static_cast<uint32_t>(param_int(p, 0));
      uint32_t v = static_cast<uint32_t>(param_int(p, 1));
      std::vector<Var> vars;
      std::vector<uint8_t> dir;
      for (size_t i = 2; i + 1 < p.size(); i += 2) {
        vars.push_back(static_cast<Var>(param_int(p, i)));
        dir.push_back(static_cast<uint8_t>(param_int(p, i + 1)));
      }
      return std::make_shared<const CliqueEdgeConstraint>(u, v, std::move(vars), std::move(dir));
    };
    return r;
  }();
  return reg;
}

CliqueInstance gen_clique_system(uint32_t graph_vertices,
                                 std::vector<std::pair<uint32_t, uint32_t>> edges, uint32_t k) {
  if (k < 1) throw Error("gen_clique_system: k must be at least 1");
  for (auto& [u, v] : edges) {
    if (u == v || u == 0 || v == 0 || u > graph_vertices || v > graph_vertices)
      throw Error("gen_clique_system: bad edge");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  CliqueInstance inst;
  inst.graph_vertices = graph_vertices;
  inst.graph_edges = edges;
  inst.k = k;
  const uint32_t ne = static_cast<uint32_t>(edges.size());
  inst.system.num_vars = 2 * k * ne;

  auto var_id = [&](uint32_t slot, uint32_t e, uint32_t d) {
    return 2 * ((slot - 1) * ne + e) + d + 1;
  };

  for (uint32_t i = 1; i <= k; ++i) {
    std::vector<Var> vars;
    std::vector<uint32_t> group;
    for (uint32_t e = 0; e < ne; ++e) {
      vars.push_back(var_id(i, e, 0));
      group.push_back(edges[e].first);
      vars.push_back(var_id(i, e, 1));
      group.push_back(edges[e].second);
    }
    inst.system.constraints.push_back(Constraint::opaque_of(
        std::make_shared<const CliqueVertexConstraint>(k, i, std::move(vars), std::move(group))));
  }
  for (uint32_t e = 0; e < ne; ++e) {
    std::vector<Var> vars;
    std::vector<uint8_t> dir;
    for (uint32_t i = 1; i <= k; ++i) {
      vars.push_back(var_id(i, e, 0));
      dir.push_back(0);
      vars.push_back(var_id(i, e, 1));
      dir.push_back(1);
    }
    inst.system.constraints.push_back(Constraint::opaque_of(std::make_shared<const CliqueEdgeConstraint>(
        edges[e].first, edges[e].second, std::move(vars), std::move(dir))));
  }

  // path decomposition: per edge, one bag per variable, holding every slot
  // constraint, the edge constraint, and that variable
  const uint32_t nv = inst.system.num_vars;
  std::vector<uint32_t> slot_vertices;
  for (uint32_t i = 0; i < k; ++i) slot_vertices.push_back(nv + 1 + i);
  for (uint32_t e = 0; e < ne; ++e) {
    const uint32_t edge_vertex = nv + 1 + k + e;
    for (uint32_t i = 1; i <= k; ++i)
      for (uint32_t d = 0; d < 2; ++d) {
        std::vector<uint32_t> bag = slot_vertices;
        bag.push_back(edge_vertex);
        bag.push_back(var_id(i, e, d));
        std::sort(bag.begin(), bag.end());
        inst.td.bags.push_back(std::move(bag));
      }
  }
  if (inst.td.bags.empty()) inst.td.bags.push_back(slot_vertices);
  for (size_t t = 0; t + 1 < inst.td.bags.size(); ++t)
    inst.td.tree_edges.emplace_back(static_cast<uint32_t>(t), static_cast<uint32_t>(t + 1));
  return inst;
}

CliqueInstance gen_clique_complete(uint32_t n, uint32_t k) {
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  for (uint32_t u = 1; u <= n; ++u)
    for (uint32_t v = u + 1; v <= n; ++v) edges.emplace_back(u, v);
  return gen_clique_system(n, std::move(edges), k);
}

WidthReport obdd_width_report(const CliqueInstance& inst, uint32_t orderings, uint64_t seed) {
  WidthReport rep;
  std::mt19937_64 rng(seed);
  const uint32_t n = inst.graph_vertices;
  for (size_t ci = 0; ci < inst.system.constraints.size(); ++ci) {
    const Constraint& c = inst.system.constraints[ci];
    const bool slot = ci < inst.k;
    WidthReport::Entry entry;
    entry.name = slot ? "slot-" + std::to_string(ci + 1)
                      : "edge-" + std::to_string(ci - inst.k);
    entry.bound = slot ? n * inst.k + 2 : 8;
    auto pi = c.vars();
    entry.max_width = build_obdd(c, pi).width();  // natural ordering first
    for (uint32_t it = 0; it < orderings; ++it) {
      for (size_t i = pi.size(); i > 1; --i) std::swap(pi[i - 1], pi[rng() % i]);
      entry.max_width = std::max(entry.max_width, build_obdd(c, pi).width());
    }
    rep.entries.push_back(std::move(entry));
  }
  return rep;
}

KindMix KindMix::parse(const std::string& tokens) {
  KindMix mix;
  std::istringstream in(tokens);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    if (tok == "clause") mix.clause = true;
    else if (tok == "xor") mix.parity = true;
    else if (tok == "card") mix.cardinality = true;
    else if (tok == "threshold") mix.threshold = true;
    else if (tok == "smallscope") mix.small_scope = true;
    else if (tok.rfind("mod", 0) == 0) mix.moduli.push_back(std::stoul(tok.substr(3)));
    else throw Error("unknown kind token '" + tok + "'");
  }
  return mix;
}

ConstraintSystem gen_random_system(uint64_t seed, uint32_t num_vars, uint32_t num_cons,
                                   const KindMix& mix) {
  std::vector<int> kinds;  // 0 clause, 1 xor, 2 modulo, 3 card, 4 threshold, 5 smallscope
  if (mix.clause) kinds.push_back(0);
  if (mix.parity) kinds.push_back(1);
  if (!mix.moduli.empty()) kinds.push_back(2);
  if (mix.cardinality) kinds.push_back(3);
  if (mix.threshold) kinds.push_back(4);
  if (mix.small_scope) kinds.push_back(5);
  if (kinds.empty()) throw Error("gen_random_system: empty kind mix");
  if (num_vars == 0 && num_cons > 0) throw Error("gen_random_system: no variables to draw from");

  std::mt19937_64 rng(seed);
  auto below = [&](uint64_t n) { return n == 0 ? uint64_t{0} : rng() % n; };
  ConstraintSystem f;
  f.num_vars = num_vars;
  for (uint32_t i = 0; i < num_cons; ++i) {
    const size_t arity = 1 + below(std::min<uint32_t>(num_vars, 5));
    std::vector<Var> pool(num_vars);
    for (uint32_t v = 0; v < num_vars; ++v) pool[v] = v + 1;
    std::vector<Lit> scope;
    for (size_t j = 0; j < arity; ++j) {
      size_t p = below(pool.size());
      Var v = pool[p];
      pool.erase(pool.begin() + p);
      scope.push_back((rng() & 1) ? Lit::neg(v) : Lit::pos(v));
    }
    switch (kinds[below(kinds.size())]) {
      case 0:
        f.constraints.push_back(Constraint::clause(scope));
        break;
      case 1:
        f.constraints.push_back(Constraint::xor_of(scope, rng() & 1));
        break;
      case 2: {
        uint32_t m = mix.moduli[below(mix.moduli.size())];
        f.constraints.push_back(Constraint::sum_modulo(scope, m, static_cast<uint32_t>(below(m))));
        break;
      }
      case 3:
        f.constraints.push_back(
            Constraint::cardinality(scope, static_cast<uint32_t>(below(scope.size() + 2))));
        break;
      case 4: {
        std::vector<int64_t> w;
        int64_t total = 0;
        for (size_t j = 0; j < scope.size(); ++j) {
          int64_t x = 1 + static_cast<int64_t>(below(3));
          if (rng() & 1) x = -x;
          w.push_back(x);
          total += x > 0 ? x : -x;
        }
        f.constraints.push_back(
            Constraint::threshold(scope, std::move(w), static_cast<int64_t>(below(total + 1)) - total / 2));
        break;
      }
      default: {
        std::vector<Var> vars;
        for (const Lit& l : scope) vars.push_back(l.var());
        std::vector<uint64_t> table(std::max<size_t>(1, (size_t{1} << vars.size()) >> 6));
        for (auto& word : table) word = rng();
        if (vars.size() < 6) table[0] &= (uint64_t{1} << (uint64_t{1} << vars.size())) - 1;
        f.constraints.push_back(Constraint::small_scope(std::move(vars), std::move(table)));
        break;
      }
    }
  }
  return f;
}

std::string CheckResult::summary() const {
  std::ostringstream out;
  for (const auto& e : engines) {
    out << e.name << ": ";
    if (e.ran) out << e.count;
    else out << "skipped (" << e.note << ")";
    out << '\n';
  }
  out << (agree ? "AGREE " + count : "DISAGREE") << '\n';
  return out.str();
}

CheckResult check_all(const ConstraintSystem& f, const std::optional<TreeDecomposition>& td,
                      uint32_t brute_limit) {
  CheckResult res;
  auto run = [&](const std::string& name, auto&& fn) {
    CheckResult::EngineRun er;
    er.name = name;
    try {
      er.count = fn().get_str();
      er.ran = true;
    } catch (const Error& e) {
      er.note = e.what();
    }
    res.engines.push_back(std::move(er));
  };

  bool dp_ok = true;
  for (const Constraint& c : f.constraints)
    dp_ok = dp_ok && (c.kind == Kind::Clause || c.kind == Kind::Xor ||
                      c.kind == Kind::SumModulo || c.kind == Kind::Cardinality);
  bool cnf_xor_ok = true;
  for (const Constraint& c : f.constraints)
    cnf_xor_ok = cnf_xor_ok && (c.kind == Kind::Clause || c.kind == Kind::Xor);

  if (f.num_vars <= brute_limit)
    run("brute", [&] { return brute_force_count(f, brute_limit); });
  else
    res.engines.push_back({"brute", "", "variable count above limit", false});

  run("compiled", [&] { return count_via_compilation(f, td); });

  TreeDecomposition base = td ? *td : heuristic_td(incidence_graph(f));
  if (dp_ok) {
    NiceTd ntd = make_nice(base);
    run("dp-naive", [&] { return dp_count(f, ntd, JoinMode::Naive); });
    run("dp-auto", [&] { return dp_count(f, ntd, JoinMode::Auto); });
  } else {
    res.engines.push_back({"dp", "", "constraint kinds outside the state-machine fragment", false});
  }
  if (cnf_xor_ok) run("dp-clause-modulo", [&] { return count_cnf_xor(f, base); });

  res.agree = true;
  std::string value;
  size_t ran = 0;
  for (const auto& e : res.engines) {
    if (!e.ran) continue;
    ++ran;
    if (value.empty()) value = e.count;
    else if (value != e.count) res.agree = false;
  }
  if (ran == 0) res.agree = false;
  if (res.agree) res.count = value;
  return res;
}

}  // namespace kc
