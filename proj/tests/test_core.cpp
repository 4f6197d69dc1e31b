#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "kc/constraint.hpp"
#include "kc/graph.hpp"
#include "kc/sysio.hpp"

using namespace kc;

TEST_CASE("eval_constraint per kind") {
  Assignment a(3);
  a.set(1, false);
  a.set(2, true);
  CHECK_FALSE(eval_constraint(Constraint::clause({Lit::pos(1), Lit::neg(2)}), a));

  Assignment ones = Assignment::total_from_bits(0b111, 3);
  CHECK(eval_constraint(Constraint::xor_of({Lit::pos(1), Lit::pos(2), Lit::pos(3)}, true), ones));

  Assignment mixed = Assignment::total_from_bits(0b101, 3);
  CHECK(eval_constraint(Constraint::cardinality({Lit::pos(1), Lit::pos(2), Lit::pos(3)}, 2), mixed));

  Assignment partial(3);
  partial.set(1, true);
  CHECK_THROWS_AS(eval_constraint(Constraint::clause({Lit::pos(1), Lit::pos(2)}), partial), Error);
}

TEST_CASE("eval threshold and small scope") {
  // 2*x1 - 3*(not x2) >= 1
  auto t = Constraint::threshold({Lit::pos(1), Lit::neg(2)}, {2, -3}, 1);
  CHECK(eval_constraint_bits(t, 0b11));       // x1=1 lit true (+2), x2=1 lit false: 2 >= 1
  CHECK_FALSE(eval_constraint_bits(t, 0b01)); // 2 - 3 = -1
  CHECK_THROWS_AS(Constraint::threshold({Lit::pos(1)}, {0}, 0), Error);

  // AND of x1,x2: table bit 3 only
  auto s = Constraint::small_scope({1, 2}, {0x8});
  CHECK(eval_constraint_bits(s, 0b11));
  CHECK_FALSE(eval_constraint_bits(s, 0b01));
}

TEST_CASE("xor canonicalization folds negative literals") {
  auto c = Constraint::xor_of({Lit::neg(1), Lit::pos(2)}, true);
  CHECK(c.lits == std::vector<Lit>{Lit::pos(1), Lit::pos(2)});
  CHECK(c.xor_parity == false);
  // (1-x1) + x2 odd  <=>  x1 + x2 even
  CHECK(eval_constraint_bits(c, 0b00));
  CHECK(eval_constraint_bits(c, 0b11));
  CHECK_FALSE(eval_constraint_bits(c, 0b01));
}

TEST_CASE("incidence graph shapes") {
  auto f = kct::figure_system();
  Graph g = incidence_graph(f);
  CHECK(g.num_vertices == 10);
  CHECK(g.edges.size() == 11);

  ConstraintSystem empty;
  empty.num_vars = 3;
  Graph ge = incidence_graph(empty);
  CHECK(ge.num_vertices == 3);
  CHECK(ge.edges.empty());

  ConstraintSystem one;
  one.num_vars = 2;
  one.constraints.push_back(Constraint::clause({Lit::pos(1), Lit::pos(2)}));
  CHECK(incidence_graph(one).edges.size() == 2);
}

TEST_CASE("incidence edge count equals total scope size") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 20; ++it) {
    ConstraintSystem f;
    f.num_vars = 4 + kct::rnd_below(rng, 6);
    size_t total = 0;
    for (size_t i = 0, m = 1 + kct::rnd_below(rng, 5); i < m; ++i) {
      auto scope = kct::random_scope(rng, f.num_vars, 1 + kct::rnd_below(rng, 4));
      total += scope.size();
      f.constraints.push_back(Constraint::clause(scope));
    }
    CHECK(incidence_graph(f).edges.size() == total);
  }
}

TEST_CASE("brute force oracle") {
  ConstraintSystem x3;
  x3.num_vars = 3;
  x3.constraints.push_back(Constraint::xor_of({Lit::pos(1), Lit::pos(2), Lit::pos(3)}, true));
  CHECK(brute_force_count(x3) == 4);

  CHECK(brute_force_count(kct::figure_system()) == kct::kFigureModelCount);

  ConstraintSystem unsat;
  unsat.num_vars = 1;
  unsat.constraints.push_back(Constraint::clause({Lit::pos(1)}));
  unsat.constraints.push_back(Constraint::clause({Lit::neg(1)}));
  CHECK(brute_force_count(unsat) == 0);

  ConstraintSystem big;
  big.num_vars = 30;
  CHECK_THROWS_AS(brute_force_count(big), Error);

  ConstraintSystem free_vars;
  free_vars.num_vars = 5;
  CHECK(brute_force_count(free_vars) == 32);

  ConstraintSystem empty_clause;
  empty_clause.num_vars = 2;
  empty_clause.constraints.push_back(Constraint::clause({}));
  CHECK(brute_force_count(empty_clause) == 0);
}

TEST_CASE("xor systems have 2^(n-1) models") {
  for (uint32_t n = 1; n <= 12; ++n) {
    ConstraintSystem f;
    f.num_vars = n;
    std::vector<Lit> lits;
    for (uint32_t v = 1; v <= n; ++v) lits.push_back(v % 2 ? Lit::pos(v) : Lit::neg(v));
    f.constraints.push_back(Constraint::xor_of(lits, n % 2 == 0));
    CHECK(brute_force_count(f) == pow2(n - 1));
  }
}

TEST_CASE("csys parsing") {
  auto f1 = parse_system("p csys 3 1\nx 1 2 3 0\n");
  REQUIRE(f1.constraints.size() == 1);
  CHECK(f1.constraints[0].kind == Kind::Xor);
  CHECK(f1.constraints[0].xor_parity == true);

  auto f2 = parse_system("p csys 3 1\nd 3 2 1 2 3 0\n");
  CHECK(f2.constraints[0].kind == Kind::SumModulo);
  CHECK(f2.constraints[0].modulus == 3);
  CHECK(f2.constraints[0].residue == 2);

  auto f3 = parse_system("p csys 2 1\n1 -2 0\n");
  CHECK(f3.constraints[0].kind == Kind::Clause);
  CHECK(f3.constraints[0].lits == std::vector<Lit>{Lit::pos(1), Lit::neg(2)});
}

TEST_CASE("csys parse errors carry line numbers") {
  CHECK_THROWS_AS(parse_system("p csys\n"), ParseError);
  try {
    parse_system("p csys 2 1\n1 -3 0\n");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  // residue >= modulus
  CHECK_THROWS_AS(parse_system("p csys 3 1\nd 3 3 1 2 0\n"), ParseError);
  // wrong constraint count
  CHECK_THROWS_AS(parse_system("p csys 2 2\n1 2 0\n"), ParseError);
}

TEST_CASE("csys round trip") {
  ConstraintSystem f;
  f.num_vars = 6;
  f.constraints.push_back(Constraint::clause({Lit::pos(1), Lit::neg(2)}));
  f.constraints.push_back(Constraint::xor_of({Lit::pos(2), Lit::pos(3)}, false));
  f.constraints.push_back(Constraint::sum_modulo({Lit::neg(4), Lit::pos(5)}, 3, 1));
  f.constraints.push_back(Constraint::cardinality({Lit::pos(1), Lit::neg(6)}, 1));
  f.constraints.push_back(Constraint::threshold({Lit::pos(5), Lit::pos(6)}, {2, -1}, 1));
  f.constraints.push_back(Constraint::small_scope({2, 4, 6}, {0xb6}));
  f.constraints.push_back(Constraint::clause({}));

  auto text = serialize_system(f);
  auto g = parse_system(text);
  REQUIRE(g.constraints.size() == f.constraints.size());
  CHECK(g.num_vars == f.num_vars);
  for (size_t i = 0; i < f.constraints.size(); ++i) CHECK(g.constraints[i] == f.constraints[i]);
  CHECK(serialize_system(g) == text);

  // semantic agreement on all assignments
  for (uint64_t bits = 0; bits < (1u << 6); ++bits)
    CHECK(eval_system_bits(f, bits) == eval_system_bits(g, bits));
}

TEST_CASE("constraint constructors reject bad input") {
  CHECK_THROWS_AS(Constraint::clause({Lit::pos(1), Lit::neg(1)}), Error);
  CHECK_THROWS_AS(Constraint::sum_modulo({Lit::pos(1)}, 1, 0), Error);
  CHECK_THROWS_AS(Constraint::sum_modulo({Lit::pos(1)}, 3, 3), Error);
  CHECK_THROWS_AS(Constraint::small_scope({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16,
                                           17, 18, 19, 20, 21},
                                          {}),
                  Error);
}
