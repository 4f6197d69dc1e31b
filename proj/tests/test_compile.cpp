#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "kc/compile.hpp"

using namespace kc;

namespace {

TreeDecomposition trivial_td(const Graph& g) {
  TreeDecomposition td;
  td.bags.push_back(g.vertex_list());
  std::sort(td.bags[0].begin(), td.bags[0].end());
  return td;
}

Constraint random_mixed(std::mt19937_64& rng, uint32_t n) {
  auto scope = kct::random_scope(rng, n, 1 + kct::rnd_below(rng, std::min<uint32_t>(n, 5)));
  switch (kct::rnd_below(rng, 6)) {
    case 0: return Constraint::clause(scope);
    case 1: return Constraint::xor_of(scope, rng() & 1);
    case 2: {
      uint32_t m = 2 + kct::rnd_below(rng, 4);
      return Constraint::sum_modulo(scope, m, kct::rnd_below(rng, m));
    }
    case 3: return Constraint::cardinality(scope, kct::rnd_below(rng, scope.size() + 2));
    case 4: {
      std::vector<int64_t> w;
      for (size_t i = 0; i < scope.size(); ++i)
        w.push_back((rng() & 1 ? 1 : -1) * static_cast<int64_t>(1 + kct::rnd_below(rng, 3)));
      return Constraint::threshold(scope, w, 0);
    }
    default: {
      std::vector<Var> vars;
      for (const Lit& l : scope) vars.push_back(l.var());
      std::vector<uint64_t> table(std::max<size_t>(1, (size_t{1} << vars.size()) >> 6));
      for (auto& word : table) word = rng();
      if (vars.size() < 6) table[0] &= (uint64_t{1} << (uint64_t{1} << vars.size())) - 1;
      return Constraint::small_scope(vars, table);
    }
  }
}

ConstraintSystem random_system(std::mt19937_64& rng, uint32_t n, size_t m) {
  ConstraintSystem f;
  f.num_vars = n;
  for (size_t i = 0; i < m; ++i) f.constraints.push_back(random_mixed(rng, n));
  return f;
}

}  // namespace

TEST_CASE("compile_cnf basics") {
  Cnf h;
  h.num_vars = 2;
  h.clauses = {{Lit::pos(1), Lit::pos(2)}};
  auto d = compile_cnf(h, trivial_td(cnf_incidence(h)));
  CHECK(count_dsdnnf(d, 2) == 3);
  CHECK(validate_sdnnf(d).ok());

  Cnf h2;
  h2.num_vars = 3;
  h2.clauses = {{Lit::pos(1), Lit::pos(2)}, {Lit::neg(1), Lit::pos(3)}};
  auto d2 = compile_cnf(h2, trivial_td(cnf_incidence(h2)));
  CHECK(count_dsdnnf(d2, 3) == 4);
  CHECK(validate_sdnnf(d2).ok());

  Cnf h3;
  h3.num_vars = 1;
  h3.clauses = {{Lit::pos(1)}, {Lit::neg(1)}};
  auto d3 = compile_cnf(h3, trivial_td(cnf_incidence(h3)));
  CHECK(count_dsdnnf(d3, 1, true) == 0);
}

TEST_CASE("compile_cnf with empty clause") {
  Cnf h;
  h.num_vars = 2;
  h.clauses = {{Lit::pos(1)}, {}};
  auto d = compile_cnf(h, trivial_td(cnf_incidence(h)));
  CHECK(count_dsdnnf(d, 2, true) == 0);
}

TEST_CASE("compile_cnf equals brute force on random CNFs") {
  std::mt19937_64 rng(71);
  for (int it = 0; it < 60; ++it) {
    uint32_t n = 2 + kct::rnd_below(rng, 9);
    ConstraintSystem f;
    f.num_vars = n;
    size_t m = 1 + kct::rnd_below(rng, 6);
    Cnf h;
    h.num_vars = n;
    for (size_t i = 0; i < m; ++i) {
      auto scope = kct::random_scope(rng, n, 1 + kct::rnd_below(rng, 3));
      f.constraints.push_back(Constraint::clause(scope));
      h.clauses.push_back(scope);
    }
    auto td = heuristic_td(cnf_incidence(h));
    auto d = compile_cnf(h, td);
    CHECK(count_dsdnnf(d, n) == brute_force_count(f));
    auto rep = validate_sdnnf(d);
    CHECK(rep.decomposable);
    CHECK(rep.deterministic);
    CHECK(rep.structured);
  }
}

TEST_CASE("compile_system on the worked example") {
  auto f = kct::figure_system();
  CompileStats stats;
  auto d = compile_system(f, std::nullopt, &stats);
  CHECK(count_dsdnnf(d, f.num_vars) == kct::kFigureModelCount);
  auto rep = validate_sdnnf(d);
  CHECK(rep.decomposable);
  CHECK(rep.deterministic);
  CHECK(rep.determinism_exact);
  CHECK(stats.route == "tseitin");
}

TEST_CASE("compile_system single xor") {
  ConstraintSystem f;
  f.num_vars = 6;
  std::vector<Lit> lits;
  for (Var v = 1; v <= 6; ++v) lits.push_back(Lit::pos(v));
  f.constraints.push_back(Constraint::xor_of(lits, true));
  CHECK(count_via_compilation(f) == 32);
}

TEST_CASE("count_via_compilation on empty system") {
  ConstraintSystem f;
  f.num_vars = 5;
  CHECK(count_via_compilation(f) == 32);
}

TEST_CASE("count_via_compilation equals brute force on random mixed systems") {
  std::mt19937_64 rng(73);
  for (int it = 0; it < 40; ++it) {
    auto f = random_system(rng, 3 + kct::rnd_below(rng, 10), 1 + kct::rnd_below(rng, 6));
    CAPTURE(it);
    CHECK(count_via_compilation(f) == brute_force_count(f));
  }
}

TEST_CASE("compiled circuits validate on random systems") {
  std::mt19937_64 rng(79);
  for (int it = 0; it < 15; ++it) {
    auto f = random_system(rng, 3 + kct::rnd_below(rng, 7), 1 + kct::rnd_below(rng, 4));
    auto d = compile_system(f);
    auto rep = validate_sdnnf(d);
    CHECK(rep.decomposable);
    CHECK(rep.deterministic);
    CHECK(rep.structured);
  }
}

TEST_CASE("direct route agrees with the tseitin route") {
  std::mt19937_64 rng(83);
  for (int it = 0; it < 25; ++it) {
    auto f = random_system(rng, 3 + kct::rnd_below(rng, 8), 1 + kct::rnd_below(rng, 4));
    auto base = heuristic_td(incidence_graph(f));
    auto ntd = make_nice(base);
    if (!direct_compile_applicable(f, ntd)) continue;
    auto d = compile_direct(f, ntd);
    CHECK(count_dsdnnf(d, f.num_vars) == brute_force_count(f));
    auto rep = validate_sdnnf(d);
    CHECK(rep.decomposable);
    CHECK(rep.deterministic);
    CHECK(rep.structured);
  }
}

TEST_CASE("degenerate systems compile") {
  ConstraintSystem f;
  f.num_vars = 3;
  f.constraints.push_back(Constraint::xor_of({}, false));   // constant true
  f.constraints.push_back(Constraint::cardinality({}, 0));  // constant true
  CHECK(count_via_compilation(f) == 8);

  f.constraints.push_back(Constraint::clause({}));  // empty clause
  CHECK(count_via_compilation(f) == 0);

  ConstraintSystem dup;
  dup.num_vars = 2;
  dup.constraints.push_back(Constraint::clause({Lit::pos(1), Lit::pos(2)}));
  dup.constraints.push_back(Constraint::clause({Lit::pos(1), Lit::pos(2)}));
  CHECK(count_via_compilation(dup) == 3);
}

TEST_CASE("direct route over the interval path agrees with brute force") {
  // exercises the always-applicable fallback plus joins avoided entirely
  std::mt19937_64 rng(89);
  for (int it = 0; it < 40; ++it) {
    auto f = random_system(rng, 3 + kct::rnd_below(rng, 9), 1 + kct::rnd_below(rng, 6));
    // interval path: one bag per variable, spanning constraints attached
    TreeDecomposition td;
    std::vector<std::pair<Var, Var>> span(f.constraints.size(), {f.num_vars + 1, 0});
    for (size_t ci = 0; ci < f.constraints.size(); ++ci)
      for (Var v : f.constraints[ci].vars()) {
        span[ci].first = std::min(span[ci].first, v);
        span[ci].second = std::max(span[ci].second, v);
      }
    for (Var v = 1; v <= f.num_vars; ++v) {
      std::vector<uint32_t> bag{v};
      for (size_t ci = 0; ci < f.constraints.size(); ++ci)
        if ((span[ci].first <= v && v <= span[ci].second) || (span[ci].second == 0 && v == 1))
          bag.push_back(constraint_vertex(f, ci));
      std::sort(bag.begin(), bag.end());
      td.bags.push_back(std::move(bag));
      if (v > 1) td.tree_edges.emplace_back(v - 2, v - 1);
    }
    REQUIRE(validate_td(incidence_graph(f), td).ok());
    auto ntd = make_nice(td);
    REQUIRE(direct_compile_applicable(f, ntd));
    auto d = compile_direct(f, ntd);
    CHECK(count_dsdnnf(d, f.num_vars) == brute_force_count(f));
    auto rep = validate_sdnnf(d);
    CHECK(rep.decomposable);
    CHECK(rep.deterministic);
    CHECK(rep.structured);
  }
}

TEST_CASE("xor chain compile scales roughly linearly") {
  auto chain = [](uint32_t n) {
    ConstraintSystem f;
    f.num_vars = n;
    for (Var v = 1; v + 1 <= n; ++v)
      f.constraints.push_back(Constraint::xor_of({Lit::pos(v), Lit::pos(v + 1)}, false));
    return f;
  };
  CompileStats s1, s2;
  auto d1 = compile_system(chain(16), std::nullopt, &s1);
  auto d2 = compile_system(chain(32), std::nullopt, &s2);
  CHECK(count_dsdnnf(d1, 16) == 2);
  CHECK(count_dsdnnf(d2, 32) == 2);
  CHECK(d2.gates.size() <= 3 * d1.gates.size());
}
