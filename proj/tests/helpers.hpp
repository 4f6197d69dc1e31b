#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kc/constraint.hpp"

namespace kct {

// c1: x1 v x2 v x3,  c2: x2^x3^x4^x5 = 1,  c3: x4+x5+x6+x7 >= 2
inline kc::ConstraintSystem figure_system() {
  using kc::Constraint;
  using kc::Lit;
  kc::ConstraintSystem f;
  f.num_vars = 7;
  f.constraints.push_back(Constraint::clause({Lit::pos(1), Lit::pos(2), Lit::pos(3)}));
  f.constraints.push_back(
      Constraint::xor_of({Lit::pos(2), Lit::pos(3), Lit::pos(4), Lit::pos(5)}, true));
  f.constraints.push_back(
      Constraint::cardinality({Lit::pos(4), Lit::pos(5), Lit::pos(6), Lit::pos(7)}, 2));
  return f;
}

constexpr int64_t kFigureModelCount = 38;  // brute-force over 2^7, frozen

// Deterministic bounded integer, independent of libstdc++ distribution details.
inline uint64_t rnd_below(std::mt19937_64& rng, uint64_t n) {
  return n == 0 ? 0 : rng() % n;
}

inline std::vector<kc::Lit> random_scope(std::mt19937_64& rng, uint32_t num_vars, size_t arity,
                                         bool signs = true) {
  std::vector<kc::Var> pool(num_vars);
  for (uint32_t i = 0; i < num_vars; ++i) pool[i] = i + 1;
  std::vector<kc::Lit> out;
  for (size_t i = 0; i < arity && !pool.empty(); ++i) {
    size_t j = rnd_below(rng, pool.size());
    kc::Var v = pool[j];
    pool.erase(pool.begin() + j);
    bool neg = signs && (rng() & 1);
    out.push_back(neg ? kc::Lit::neg(v) : kc::Lit::pos(v));
  }
  return out;
}

}  // namespace kct
