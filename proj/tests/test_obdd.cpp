#include "doctest.h"

#include <algorithm>
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

// exhaustive agreement between an OBDD and its constraint
void check_equiv(const CompleteObdd& b, const Constraint& c) {
  const size_t n = b.order.size();
  REQUIRE(n <= 16);
  for (uint64_t bits = 0; bits < (uint64_t{1} << n); ++bits) {
    uint64_t var_bits = 0;
    for (size_t i = 0; i < n; ++i)
      if ((bits >> i) & 1) var_bits |= uint64_t{1} << (b.order[i] - 1);
    CHECK(b.evaluate_scope_bits(bits) == eval_constraint_bits(c, var_bits));
  }
}

Constraint random_constraint(std::mt19937_64& rng, uint32_t n) {
  auto scope = kct::random_scope(rng, n, 1 + kct::rnd_below(rng, n));
  switch (kct::rnd_below(rng, 6)) {
    case 0:
      return Constraint::clause(scope);
    case 1:
      return Constraint::xor_of(scope, rng() & 1);
    case 2: {
      uint32_t m = 2 + kct::rnd_below(rng, 4);
      return Constraint::sum_modulo(scope, m, kct::rnd_below(rng, m));
    }
    case 3:
      return Constraint::cardinality(scope, kct::rnd_below(rng, scope.size() + 2));
    case 4: {
      std::vector<int64_t> w;
      int64_t sum = 0;
      for (size_t i = 0; i < scope.size(); ++i) {
        int64_t x = 1 + kct::rnd_below(rng, 4);
        if (rng() & 1) x = -x;
        w.push_back(x);
        sum += x > 0 ? x : -x;
      }
      return Constraint::threshold(scope, w, static_cast<int64_t>(kct::rnd_below(rng, sum + 2)) -
                                                 sum / 2);
    }
    default: {
      std::vector<Var> vars;
      for (const Lit& l : scope) vars.push_back(l.var());
      size_t words = std::max<size_t>(1, (size_t{1} << vars.size()) >> 6);
      std::vector<uint64_t> table(words);
      for (auto& wrd : table) wrd = rng();
      if (vars.size() < 6) table[0] &= (uint64_t{1} << (uint64_t{1} << vars.size())) - 1;
      return Constraint::small_scope(vars, table);
    }
  }
}

}  // namespace

TEST_CASE("build_obdd widths per kind") {
  // clause and xor have width 2 regardless of ordering
  std::vector<Var> rev{5, 4, 3, 2, 1};
  auto cl = Constraint::clause({Lit::pos(1), Lit::neg(2), Lit::pos(3), Lit::neg(4), Lit::pos(5)});
  CHECK(build_obdd(cl, rev).width() == 2);
  auto xr = Constraint::xor_of({Lit::pos(1), Lit::pos(2), Lit::pos(3), Lit::pos(4), Lit::pos(5)},
                               true);
  CHECK(build_obdd(xr, rev).width() == 2);

  auto sm = Constraint::sum_modulo({Lit::pos(1), Lit::pos(2), Lit::pos(3), Lit::pos(4)}, 3, 2);
  CHECK(build_obdd(sm, iota_vars(4)).width() <= 3);

  auto cd = Constraint::cardinality({Lit::pos(1), Lit::pos(2), Lit::pos(3)}, 2);
  CHECK(build_obdd(cd, iota_vars(3)).width() <= 3);  // min(k+1, n-k+2)
}

TEST_CASE("table width bounds hold on all orderings up to n=6") {
  for (uint32_t n = 1; n <= 6; ++n) {
    std::vector<Var> pi = iota_vars(n);
    std::vector<Lit> lits;
    for (uint32_t v = 1; v <= n; ++v) lits.push_back(v % 2 ? Lit::pos(v) : Lit::neg(v));
    do {
      CHECK(build_obdd(Constraint::clause(lits), pi).width() <= 2);
      CHECK(build_obdd(Constraint::xor_of(lits, n % 2), pi).width() <= 2);
      for (uint32_t m = 2; m <= 4; ++m)
        CHECK(build_obdd(Constraint::sum_modulo(lits, m, m - 1), pi).width() <= m);
      for (uint32_t k = 0; k <= n + 1; ++k) {
        uint32_t bound = std::min<uint32_t>(k + 1, k > n + 1 ? 1 : n - k + 2);
        CHECK(build_obdd(Constraint::cardinality(lits, k), pi).width() <= bound);
      }
    } while (std::next_permutation(pi.begin(), pi.end()));
  }
}

TEST_CASE("width bounds on sampled orderings up to n=10") {
  std::mt19937_64 rng(31);
  for (int it = 0; it < 100; ++it) {
    uint32_t n = 7 + kct::rnd_below(rng, 4);
    auto pi = iota_vars(n);
    for (uint32_t i = n; i > 1; --i) std::swap(pi[i - 1], pi[kct::rnd_below(rng, i)]);
    auto scope = kct::random_scope(rng, n, n);
    std::sort(scope.begin(), scope.end(), [](Lit a, Lit b) { return a.var() < b.var(); });
    CHECK(build_obdd(Constraint::clause(scope), pi).width() <= 2);
    CHECK(build_obdd(Constraint::xor_of(scope, it & 1), pi).width() <= 2);
    uint32_t m = 2 + kct::rnd_below(rng, 4);
    CHECK(build_obdd(Constraint::sum_modulo(scope, m, 0), pi).width() <= m);
    uint32_t k = kct::rnd_below(rng, n + 2);
    CHECK(build_obdd(Constraint::cardinality(scope, k), pi).width() <=
          std::min<uint32_t>(k + 1, n - k + 2 > n + 2 ? 1 : n - k + 2));
    uint64_t K = 0;
    std::vector<int64_t> w;
    for (uint32_t i = 0; i < n; ++i) {
      int64_t x = 1 + kct::rnd_below(rng, 3);
      if (rng() & 1) x = -x;
      w.push_back(x);
      K += static_cast<uint64_t>(x > 0 ? x : -x);
    }
    CHECK(build_obdd(Constraint::threshold(scope, w, 0), pi).width() <= 2 * K + 1);
  }
}

TEST_CASE("build_obdd equals eval_constraint on random pairs") {
  std::mt19937_64 rng(37);
  for (int it = 0; it < 50; ++it) {
    uint32_t n = 2 + kct::rnd_below(rng, 9);
    auto c = random_constraint(rng, n);
    auto pi = c.vars();
    for (size_t i = pi.size(); i > 1; --i) std::swap(pi[i - 1], pi[kct::rnd_below(rng, i)]);
    check_equiv(build_obdd(c, pi), c);
  }
}

TEST_CASE("build_obdd rejects a non-permutation") {
  auto c = Constraint::clause({Lit::pos(1), Lit::pos(2)});
  CHECK_THROWS_AS(build_obdd(c, {1, 3}), Error);
  CHECK_THROWS_AS(build_obdd(c, {1}), Error);
}

TEST_CASE("obdd_apply") {
  auto pi = iota_vars(3);
  auto cl = Constraint::clause({Lit::pos(1), Lit::pos(2), Lit::neg(3)});
  auto b = build_obdd(cl, pi);

  SUBCASE("idempotence") {
    auto bb = obdd_apply(BoolOp::And, b, b);
    CHECK(bb.width() <= 2);
    CHECK(obdd_count(bb) == obdd_count(b));
  }
  SUBCASE("contradiction gives constant zero") {
    auto x = build_obdd(Constraint::cardinality({Lit::pos(1), Lit::pos(2), Lit::pos(3)}, 1), pi);
    auto nx = build_obdd(Constraint::cardinality({Lit::neg(1), Lit::neg(2), Lit::neg(3)}, 3), pi);
    auto z = obdd_apply(BoolOp::And, x, nx);
    CHECK(obdd_count(z) == 0);
    CHECK(z.width() == 1);
  }
  SUBCASE("inclusion exclusion on counts") {
    std::mt19937_64 rng(41);
    for (int it = 0; it < 30; ++it) {
      uint32_t n = 2 + kct::rnd_below(rng, 6);
      auto c1 = random_constraint(rng, n);
      std::vector<Var> full = iota_vars(n);
      // widen both constraints onto the same scope through small-scope tables
      auto widen = [&](const Constraint& c) {
        size_t words = std::max<size_t>(1, (size_t{1} << n) >> 6);
        std::vector<uint64_t> table(words, 0);
        for (uint64_t bits = 0; bits < (uint64_t{1} << n); ++bits)
          if (eval_constraint_bits(c, bits)) table[bits >> 6] |= uint64_t{1} << (bits & 63);
        return Constraint::small_scope(full, table);
      };
      auto c2 = random_constraint(rng, n);
      auto b1 = build_obdd(widen(c1), full);
      auto b2 = build_obdd(widen(c2), full);
      auto band = obdd_apply(BoolOp::And, b1, b2);
      auto bor = obdd_apply(BoolOp::Or, b1, b2);
      CHECK(obdd_count(bor) == obdd_count(b1) + obdd_count(b2) - obdd_count(band));
      CHECK(band.width() <= b1.width() * b2.width());
    }
  }
  SUBCASE("ordering mismatch is an error") {
    auto other = build_obdd(cl, {2, 1, 3});
    CHECK_THROWS_AS(obdd_apply(BoolOp::And, b, other), Error);
  }
}

TEST_CASE("obdd_count basics") {
  auto x4 = Constraint::xor_of({Lit::pos(1), Lit::pos(2), Lit::pos(3), Lit::pos(4)}, true);
  CHECK(obdd_count(build_obdd(x4, iota_vars(4))) == 8);

  auto taut = Constraint::cardinality({Lit::pos(1), Lit::pos(2), Lit::pos(3)}, 0);
  CHECK(obdd_count(build_obdd(taut, iota_vars(3))) == 8);

  auto card = Constraint::cardinality({Lit::pos(1), Lit::pos(2), Lit::pos(3)}, 2);
  CHECK(obdd_count(build_obdd(card, iota_vars(3))) == 4);
}
