#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "kc/compile.hpp"
#include "kc/convolve.hpp"
#include "kc/dpcount.hpp"

using namespace kc;

namespace {

std::vector<Lit> pos_lits(uint32_t n) {
  std::vector<Lit> v;
  for (uint32_t i = 1; i <= n; ++i) v.push_back(Lit::pos(i));
  return v;
}

Constraint random_symmetric(std::mt19937_64& rng, uint32_t n) {
  auto scope = kct::random_scope(rng, n, 1 + kct::rnd_below(rng, std::min<uint32_t>(n, 5)));
  switch (kct::rnd_below(rng, 4)) {
    case 0: return Constraint::clause(scope);
    case 1: return Constraint::xor_of(scope, rng() & 1);
    case 2: {
      uint32_t m = 2 + kct::rnd_below(rng, 4);
      return Constraint::sum_modulo(scope, m, kct::rnd_below(rng, m));
    }
    default: return Constraint::cardinality(scope, kct::rnd_below(rng, scope.size() + 2));
  }
}

ConstraintSystem random_dp_system(std::mt19937_64& rng, uint32_t n, size_t m) {
  ConstraintSystem f;
  f.num_vars = n;
  for (size_t i = 0; i < m; ++i) f.constraints.push_back(random_symmetric(rng, n));
  return f;
}

NiceTd nice_of(const ConstraintSystem& f) {
  return make_nice(heuristic_td(incidence_graph(f)));
}

// random bag structure plus two random tables over it
struct TablePair {
  ConstraintSystem f;
  DpContext ctx;
  DpTable a, b;
};

TablePair random_tables(std::mt19937_64& rng, bool clause_mod_only) {
  TablePair tp;
  tp.f.num_vars = 2;
  size_t m = 1 + kct::rnd_below(rng, 3);
  for (size_t i = 0; i < m; ++i) {
    switch (clause_mod_only ? kct::rnd_below(rng, 3) : kct::rnd_below(rng, 4)) {
      case 0: tp.f.constraints.push_back(Constraint::clause(pos_lits(2))); break;
      case 1: tp.f.constraints.push_back(Constraint::xor_of(pos_lits(2), rng() & 1)); break;
      case 2: {
        uint32_t mm = 2 + kct::rnd_below(rng, 3);
        tp.f.constraints.push_back(Constraint::sum_modulo(pos_lits(2), mm, 0));
        break;
      }
      default:
        tp.f.constraints.push_back(Constraint::cardinality(pos_lits(2), 1 + kct::rnd_below(rng, 3)));
    }
  }
  tp.ctx = DpContext::build(tp.f);
  std::vector<uint32_t> vars{1};
  std::vector<uint32_t> cons;
  for (uint32_t ci = 0; ci < m; ++ci) cons.push_back(ci);
  tp.a.init(tp.ctx, vars, cons);
  tp.b.init(tp.ctx, vars, cons);
  for (auto& v : tp.a.values) v = kct::rnd_below(rng, 20);
  for (auto& v : tp.b.values) v = kct::rnd_below(rng, 20);
  return tp;
}

}  // namespace

TEST_CASE("dp_count basics") {
  ConstraintSystem x5;
  x5.num_vars = 5;
  x5.constraints.push_back(Constraint::xor_of(pos_lits(5), true));
  CHECK(dp_count(x5, nice_of(x5)) == 16);

  auto fig = kct::figure_system();
  CHECK(dp_count(fig, nice_of(fig)) == kct::kFigureModelCount);
  CHECK(dp_count(fig, nice_of(fig), JoinMode::Naive) == kct::kFigureModelCount);

  ConstraintSystem two;
  two.num_vars = 4;
  two.constraints.push_back(Constraint::clause({Lit::pos(1), Lit::pos(2)}));
  two.constraints.push_back(Constraint::clause({Lit::pos(3), Lit::pos(4)}));
  CHECK(dp_count(two, nice_of(two)) == 9);

  ConstraintSystem thr;
  thr.num_vars = 2;
  thr.constraints.push_back(Constraint::threshold({Lit::pos(1), Lit::pos(2)}, {1, 1}, 2));
  CHECK_THROWS_WITH_AS(dp_count(thr, nice_of(thr)), doctest::Contains("compilation"), Error);
}

TEST_CASE("leaf and forget transitions match the table rules") {
  // leaf whose bag holds one xor constraint: value 1 exactly at the start state
  ConstraintSystem f;
  f.num_vars = 2;
  f.constraints.push_back(Constraint::xor_of(pos_lits(2), true));
  DpContext ctx = DpContext::build(f);
  NiceTd ntd;
  ntd.nodes.push_back({NodeKind::Leaf, 0, -1, -1, {3}});  // constraint vertex only
  ntd.root = 0;
  auto t = table_transition(ctx, ntd, 0, nullptr, nullptr, JoinMode::Auto);
  REQUIRE(t.values.size() == 2);
  CHECK(t.values[ctx.machines[0].machine.start] == 1);
  CHECK(t.values[1 - ctx.machines[0].machine.start] == 0);
}

TEST_CASE("join of two single-row tables multiplies counts") {
  ConstraintSystem f;
  f.num_vars = 1;
  f.constraints.push_back(Constraint::xor_of(pos_lits(1), true));
  DpContext ctx = DpContext::build(f);
  DpTable a, b;
  a.init(ctx, {}, {0});
  b.init(ctx, {}, {0});
  a.values[ctx.machines[0].machine.start] = 2;
  b.values[ctx.machines[0].machine.start] = 3;
  auto j = dp_join_naive(ctx, a, b);
  CHECK(j.values[ctx.machines[0].machine.start] == 6);
}

TEST_CASE("fast joins equal the naive join on random tables") {
  std::mt19937_64 rng(101);
  int onesided_checked = 0, clausemod_checked = 0;
  for (int it = 0; it < 200; ++it) {
    auto tp = random_tables(rng, false);
    auto naive = dp_join_naive(tp.ctx, tp.a, tp.b);
    bool onesided_ok = true;
    for (uint32_t ci : tp.a.bag_cons) onesided_ok = onesided_ok && tp.ctx.one_sided[ci];
    if (onesided_ok) {
      auto fast = dp_join_onesided(tp.ctx, tp.a, tp.b);
      CHECK(fast.values == naive.values);
      ++onesided_checked;
    }
  }
  for (int it = 0; it < 200; ++it) {
    auto tp = random_tables(rng, true);
    auto naive = dp_join_naive(tp.ctx, tp.a, tp.b);
    auto fast = dp_join_clause_modulo(tp.ctx, tp.a, tp.b);
    CHECK(fast.values == naive.values);
    ++clausemod_checked;
  }
  CHECK(onesided_checked >= 150);
  CHECK(clausemod_checked == 200);
}

TEST_CASE("subset transforms") {
  // V = {a}: f = (1,2) -> zeta (1,3) -> moebius back
  std::vector<BigInt> f{1, 2};
  auto zf = subset_zeta(f, 1);
  CHECK(zf[0] == 1);
  CHECK(zf[1] == 3);
  CHECK(subset_moebius(zf, 1) == f);

  std::vector<BigInt> ind_empty{1, 0};
  auto up = union_product(ind_empty, ind_empty, 1);
  CHECK(up[0] == 1);
  CHECK(up[1] == 0);

  std::vector<BigInt> ones{1, 1};
  CHECK(union_product(ones, ones, 1)[1] == 3);

  std::mt19937_64 rng(103);
  for (int it = 0; it < 20; ++it) {
    uint32_t n = 1 + kct::rnd_below(rng, 10);
    std::vector<BigInt> g(size_t{1} << n);
    for (auto& x : g) x = static_cast<long>(kct::rnd_below(rng, 1000)) - 500;
    CHECK(subset_moebius(subset_zeta(g, n), n) == g);
  }
}

TEST_CASE("group convolution") {
  std::vector<BigInt> f{1, 2}, g{3, 4};
  auto h = group_convolve(f, g, {2});
  CHECK(h[0] == 11);
  CHECK(h[1] == 10);

  std::vector<BigInt> delta{1, 0, 0}, any{5, 7, 9};
  CHECK(group_convolve(delta, any, {3}) == any);

  std::mt19937_64 rng(107);
  for (int it = 0; it < 30; ++it) {
    std::vector<uint32_t> moduli{2, 3};
    std::vector<BigInt> x(6), y(6), z(6);
    for (auto& v : x) v = kct::rnd_below(rng, 100);
    for (auto& v : y) v = kct::rnd_below(rng, 100);
    for (auto& v : z) v = kct::rnd_below(rng, 100);
    // quadratic oracle
    std::vector<BigInt> oracle(6, BigInt(0));
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        int ra = ((a % 2) + (b % 2)) % 2;
        int rb = ((a / 2) + (b / 2)) % 3;
        oracle[ra + 2 * rb] += x[a] * y[b];
      }
    CHECK(group_convolve(x, y, moduli) == oracle);
    CHECK(group_convolve(x, y, moduli) == group_convolve(y, x, moduli));
    CHECK(group_convolve(group_convolve(x, y, moduli), z, moduli) ==
          group_convolve(x, group_convolve(y, z, moduli), moduli));
  }
}

TEST_CASE("linear convolution basics and ntt path") {
  std::vector<BigInt> a{1, 1}, b{1, 1};
  auto c = linear_convolve(a, b);
  CHECK(c == std::vector<BigInt>{1, 2, 1});

  // force the ntt path with large arrays and big values
  std::mt19937_64 rng(109);
  std::vector<BigInt> x(300), y(200);
  for (auto& v : x) v = BigInt(rng()) * BigInt(rng());
  for (auto& v : y) v = BigInt(rng()) * BigInt(rng());
  auto fast = linear_convolve(x, y);
  for (size_t probe : {size_t{0}, size_t{57}, size_t{255}, size_t{498}}) {
    BigInt expect = 0;
    for (size_t i = 0; i < x.size(); ++i)
      if (probe >= i && probe - i < y.size()) expect += x[i] * y[probe - i];
    CHECK(fast[probe] == expect);
  }
}

TEST_CASE("count_cnf_xor") {
  ConstraintSystem f;
  f.num_vars = 3;
  f.constraints.push_back(Constraint::clause({Lit::pos(1), Lit::pos(2)}));
  f.constraints.push_back(Constraint::xor_of(pos_lits(3), true));
  CHECK(count_cnf_xor(f, heuristic_td(incidence_graph(f))) == 3);

  ConstraintSystem chain;
  chain.num_vars = 8;
  for (Var v = 1; v < 8; ++v)
    chain.constraints.push_back(Constraint::xor_of({Lit::pos(v), Lit::pos(v + 1)}, false));
  CHECK(count_cnf_xor(chain, heuristic_td(incidence_graph(chain))) == 2);

  ConstraintSystem cnf;
  cnf.num_vars = 5;
  cnf.constraints.push_back(Constraint::clause({Lit::pos(1), Lit::neg(2), Lit::pos(3)}));
  cnf.constraints.push_back(Constraint::clause({Lit::neg(3), Lit::pos(4)}));
  cnf.constraints.push_back(Constraint::clause({Lit::pos(4), Lit::pos(5)}));
  CHECK(count_cnf_xor(cnf, heuristic_td(incidence_graph(cnf))) == count_via_compilation(cnf));

  ConstraintSystem bad;
  bad.num_vars = 2;
  bad.constraints.push_back(Constraint::cardinality(pos_lits(2), 1));
  CHECK_THROWS_AS(count_cnf_xor(bad, heuristic_td(incidence_graph(bad))), Error);
}

TEST_CASE("dp_count equals brute force over all join modes") {
  std::mt19937_64 rng(113);
  for (int it = 0; it < 60; ++it) {
    auto f = random_dp_system(rng, 3 + kct::rnd_below(rng, 10), 1 + kct::rnd_below(rng, 6));
    auto ntd = nice_of(f);
    BigInt expect = brute_force_count(f);
    CHECK(dp_count(f, ntd, JoinMode::Auto) == expect);
    CHECK(dp_count(f, ntd, JoinMode::Naive) == expect);
    bool onesided = true, clausemod = true;
    for (const auto& c : f.constraints) {
      if (!(c.kind == Kind::Clause || c.kind == Kind::Xor || c.kind == Kind::SumModulo))
        clausemod = false;
    }
    DpContext ctx = DpContext::build(f);
    for (size_t ci = 0; ci < f.constraints.size(); ++ci)
      if (!ctx.one_sided[ci]) onesided = false;
    if (onesided) CHECK(dp_count(f, ntd, JoinMode::OneSided) == expect);
    if (clausemod) CHECK(dp_count(f, ntd, JoinMode::ClauseModulo) == expect);
  }
}

TEST_CASE("dp handles empty scopes and tautologies") {
  ConstraintSystem f;
  f.num_vars = 3;
  f.constraints.push_back(Constraint::xor_of({}, false));   // true
  f.constraints.push_back(Constraint::cardinality({}, 0));  // true
  CHECK(dp_count(f, nice_of(f)) == 8);
  f.constraints.push_back(Constraint::clause({}));  // false
  CHECK(dp_count(f, nice_of(f)) == 0);
}

TEST_CASE("dp and compiled agree beyond the enumeration limit") {
  std::mt19937_64 rng(137);
  for (int it = 0; it < 15; ++it) {
    auto f = random_dp_system(rng, 18 + kct::rnd_below(rng, 3), 4 + kct::rnd_below(rng, 5));
    auto ntd = nice_of(f);
    CHECK(dp_count(f, ntd, JoinMode::Auto) == count_via_compilation(f));
  }
}

TEST_CASE("state split identity behind the forget rule") {
  // delta over a full assignment equals delta over the bag part plus delta
  // over the forgotten part
  std::mt19937_64 rng(127);
  for (int it = 0; it < 50; ++it) {
    uint32_t n = 2 + kct::rnd_below(rng, 8);
    auto c = random_symmetric(rng, n);
    auto fm = csts_for_constraint(c);
    const auto& m = fm.machine;
    const size_t arity = fm.scope.size();
    uint64_t bits = rng() & ((uint64_t{1} << arity) - 1);
    uint64_t split = rng() & ((uint64_t{1} << arity) - 1);  // bag membership mask
    auto run_part = [&](uint64_t members) {
      uint32_t s = m.start;
      for (size_t i = 0; i < arity; ++i)
        if ((members >> i) & 1) s = m.step(s, (((bits >> i) & 1) != 0) != (fm.flipped[i] != 0));
      return s;
    };
    uint32_t whole = run_part((uint64_t{1} << arity) - 1);
    uint32_t bag_part = run_part(split);
    uint32_t rest_part = run_part(~split & ((uint64_t{1} << arity) - 1));
    CHECK(whole == state_add(m, bag_part, rest_part));
  }
}
