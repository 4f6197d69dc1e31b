#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "kc/obdd.hpp"

using namespace kc;

namespace {

std::vector<Var> iota_vars(uint32_t n) {
  std::vector<Var> v(n);
  for (uint32_t i = 0; i < n; ++i) v[i] = i + 1;
  return v;
}

std::vector<Lit> pos_lits(uint32_t n) {
  std::vector<Lit> v;
  for (uint32_t i = 1; i <= n; ++i) v.push_back(Lit::pos(i));
  return v;
}

}  // namespace

TEST_CASE("commutative_quotient on symmetric constraints") {
  SUBCASE("xor is already commutative") {
    auto b = build_obdd(Constraint::xor_of(pos_lits(5), true), iota_vars(5));
    auto q = commutative_quotient(b);
    CHECK(q.width() == 2);
    for (uint64_t bits = 0; bits < 32; ++bits)
      CHECK(q.evaluate_scope_bits(bits) == b.evaluate_scope_bits(bits));
  }
  SUBCASE("cardinality from any ordering") {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 20; ++it) {
      auto pi = iota_vars(4);
      for (size_t i = pi.size(); i > 1; --i) std::swap(pi[i - 1], pi[kct::rnd_below(rng, i)]);
      auto b = build_obdd(Constraint::cardinality(pos_lits(4), 2), pi);
      auto q = commutative_quotient(b);
      CHECK(q.width() <= 3);
      for (uint64_t bits = 0; bits < 16; ++bits)
        CHECK(q.evaluate_scope_bits(bits) == b.evaluate_scope_bits(bits));
      // composable states commute
      for (size_t lvl = 0; lvl + 2 < q.levels.size(); ++lvl)
        for (const auto& nd : q.levels[lvl]) {
          CHECK(q.levels[lvl + 1][nd.lo].hi == q.levels[lvl + 1][nd.hi].lo);
        }
    }
  }
  SUBCASE("constant function") {
    auto b = build_obdd(Constraint::cardinality(pos_lits(3), 0), iota_vars(3));
    auto q = commutative_quotient(b);
    CHECK(q.width() == 1);
  }
  SUBCASE("non-symmetric input is rejected") {
    auto b = build_obdd(Constraint::clause({Lit::pos(1), Lit::neg(2)}), iota_vars(2));
    CHECK_THROWS_AS(commutative_quotient(b), Error);
  }
}

TEST_CASE("find_modulo_pattern") {
  auto xb = commutative_quotient(build_obdd(Constraint::xor_of(pos_lits(5), true), iota_vars(5)));
  auto xp = find_modulo_pattern(xb);
  CHECK(xp.a == 0);
  CHECK(xp.m == 2);
  CHECK(xp.b == 0);

  auto ob = commutative_quotient(build_obdd(Constraint::clause(pos_lits(5)), iota_vars(5)));
  auto op = find_modulo_pattern(ob);
  CHECK(op.a == 1);
  CHECK(op.m == 1);
  CHECK(op.b == 0);

  // width == n degenerate case
  auto idb = build_obdd(Constraint::cardinality(pos_lits(1), 1), iota_vars(1));
  CHECK(find_modulo_pattern(idb).m == 0);
}

TEST_CASE("obdd_to_csts state bounds and figure machines") {
  SUBCASE("xor gives the 2-state parity machine") {
    auto b = commutative_quotient(build_obdd(Constraint::xor_of(pos_lits(6), true), iota_vars(6)));
    auto fm = obdd_to_csts(b, iota_vars(6), std::vector<uint8_t>(6, 0));
    CHECK(fm.machine.num_states == 2);
    CHECK(fm.machine.commutes());
    auto rep = validate_csts(fm, Constraint::xor_of(pos_lits(6), true));
    CHECK(rep.ok());
  }
  SUBCASE("cardinality >= 2 gives a 3-state machine") {
    auto c = Constraint::cardinality(pos_lits(5), 2);
    auto b = commutative_quotient(build_obdd(c, iota_vars(5)));
    auto fm = obdd_to_csts(b, iota_vars(5), std::vector<uint8_t>(5, 0));
    CHECK(fm.machine.num_states <= 3);
    CHECK(validate_csts(fm, c).ok());
  }
  SUBCASE("state count bound (w+1)^2/4 for w < n") {
    std::mt19937_64 rng(13);
    for (int it = 0; it < 40; ++it) {
      uint32_t n = 3 + kct::rnd_below(rng, 8);
      Constraint c = (it % 3 == 0)
                         ? Constraint::cardinality(pos_lits(n), kct::rnd_below(rng, n + 1))
                         : (it % 3 == 1)
                               ? Constraint::sum_modulo(pos_lits(n), 2 + kct::rnd_below(rng, 4),
                                                        0)
                               : Constraint::xor_of(pos_lits(n), it & 1);
      auto b = commutative_quotient(build_obdd(c, iota_vars(n)));
      uint32_t w = b.width();
      if (w == n) continue;
      auto fm = obdd_to_csts(b, iota_vars(n), std::vector<uint8_t>(n, 0));
      CHECK(fm.machine.num_states <= (w + 1) * (w + 1) / 4);
      CHECK(validate_csts(fm, c).ok());
    }
  }
}

TEST_CASE("csts_for_constraint direct machines") {
  SUBCASE("xor matches the two-state picture") {
    auto fm = csts_for_constraint(Constraint::xor_of(pos_lits(4), true));
    CHECK(fm.machine.num_states == 2);
    CHECK(fm.machine.one_only());
    CHECK(validate_csts(fm, Constraint::xor_of(pos_lits(4), true)).ok());
  }
  SUBCASE("clause flips negative literals") {
    auto c = Constraint::clause({Lit::neg(1), Lit::pos(2)});
    auto fm = csts_for_constraint(c);
    CHECK(fm.machine.num_states == 2);
    CHECK(fm.is_flipped(1));
    CHECK_FALSE(fm.is_flipped(2));
    CHECK(validate_csts(fm, c).ok());
  }
  SUBCASE("cardinality state counts") {
    auto c2 = Constraint::cardinality(pos_lits(6), 2);
    CHECK(csts_for_constraint(c2).machine.num_states == 3);
    auto c5 = Constraint::cardinality(pos_lits(6), 5);  // zeros side: 6-5+2 = 3
    CHECK(csts_for_constraint(c5).machine.num_states == 3);
    CHECK(validate_csts(csts_for_constraint(c5), c5).ok());
    auto c9 = Constraint::cardinality(pos_lits(6), 9);  // unsatisfiable
    CHECK(csts_for_constraint(c9).machine.num_states == 1);
    CHECK(validate_csts(csts_for_constraint(c9), c9).ok());
  }
  SUBCASE("unsupported kinds are rejected") {
    CHECK_THROWS_AS(csts_for_constraint(Constraint::threshold({Lit::pos(1)}, {2}, 1)), Error);
    CHECK_THROWS_AS(csts_for_constraint(Constraint::small_scope({1, 2}, {0x8})), Error);
  }
}

TEST_CASE("delta_counts and state_add") {
  auto xm = csts_for_constraint(Constraint::xor_of(pos_lits(8), true)).machine;
  CHECK(delta_counts(xm, 3, 5) == 1);  // odd number of ones
  CHECK(state_add(xm, 1, 1) == 0);
  CHECK(state_add(xm, 1, 0) == 1);

  auto om = csts_for_constraint(Constraint::clause(pos_lits(7))).machine;
  CHECK(delta_counts(om, 0, 7) == 0);

  auto cm = csts_for_constraint(Constraint::cardinality(pos_lits(7), 2)).machine;
  CHECK(cm.accepting[delta_counts(cm, 2, 0)] == 1);

  auto mm = csts_for_constraint(Constraint::sum_modulo(pos_lits(5), 3, 0)).machine;
  CHECK(state_add(mm, 1, 2) == 0);
  for (uint32_t s = 0; s < mm.num_states; ++s) CHECK(state_add(mm, s, mm.start) == s);
}

TEST_CASE("state_add is commutative and associative on reachable states") {
  std::mt19937_64 rng(17);
  std::vector<Csts> machines;
  machines.push_back(csts_for_constraint(Constraint::cardinality(pos_lits(9), 4)).machine);
  machines.push_back(csts_for_constraint(Constraint::sum_modulo(pos_lits(9), 5, 2)).machine);
  auto card = Constraint::cardinality(pos_lits(7), 3);
  auto b = commutative_quotient(build_obdd(card, iota_vars(7)));
  machines.push_back(obdd_to_csts(b, iota_vars(7), std::vector<uint8_t>(7, 0)).machine);
  for (const auto& m : machines) {
    for (uint32_t a = 0; a < m.num_states; ++a)
      for (uint32_t bb = 0; bb < m.num_states; ++bb) {
        CHECK(state_add(m, a, bb) == state_add(m, bb, a));
        for (uint32_t c = 0; c < m.num_states; ++c)
          CHECK(state_add(m, state_add(m, a, bb), c) == state_add(m, a, state_add(m, bb, c)));
      }
  }
}

TEST_CASE("direct and obdd-derived machines agree as functions") {
  std::mt19937_64 rng(19);
  for (int it = 0; it < 25; ++it) {
    uint32_t n = 2 + kct::rnd_below(rng, 8);
    Constraint c = (it % 3 == 0) ? Constraint::xor_of(pos_lits(n), it & 1)
                   : (it % 3 == 1)
                       ? Constraint::sum_modulo(pos_lits(n), 2 + kct::rnd_below(rng, 3),
                                                kct::rnd_below(rng, 2))
                       : Constraint::cardinality(pos_lits(n), kct::rnd_below(rng, n + 1));
    auto direct = csts_for_constraint(c);
    auto derived = obdd_to_csts(commutative_quotient(build_obdd(c, iota_vars(n))), iota_vars(n),
                                std::vector<uint8_t>(n, 0));
    for (uint32_t q1 = 0; q1 <= n; ++q1) {
      bool a = direct.machine.accepting[delta_counts(direct.machine, q1, n - q1)];
      bool d = derived.machine.accepting[delta_counts(derived.machine, q1, n - q1)];
      CHECK(a == d);
    }
  }
}

TEST_CASE("validate_csts catches a broken machine") {
  auto fm = csts_for_constraint(Constraint::xor_of(pos_lits(4), true));
  auto broken = fm;
  std::swap(broken.machine.accepting[0], broken.machine.accepting[1]);
  CHECK_FALSE(validate_csts(broken, Constraint::xor_of(pos_lits(4), true)).ok());

  auto noncomm = fm;
  noncomm.machine.f0 = {1, 1};  // f0(f1(0)) != f1(f0(0))
  noncomm.machine.f1 = {1, 0};
  CHECK_FALSE(validate_csts(noncomm, Constraint::xor_of(pos_lits(4), true)).commutative);
}
