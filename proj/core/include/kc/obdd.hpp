#pragma once

#include <cstdint>
#include <vector>

#include "kc/constraint.hpp"
#include "kc/csts.hpp"

namespace kc {

// Leveled complete OBDD: every root-to-sink path reads order[0], order[1], ...
// in sequence. Nodes at the last level point at sink values 0/1; other nodes
// index into the next level. Always kept reduced level-wise (no two nodes of a
// level share (lo, hi)) with unreachable nodes pruned, so width is the minimal
// complete width for the ordering.
struct CompleteObdd {
  struct Node {
    uint32_t lo, hi;
  };
  std::vector<Var> order;
  std::vector<std::vector<Node>> levels;  // levels.size() == order.size(); root = levels[0][0]
  bool const_value = false;               // function value when order is empty

  uint32_t width() const;
  size_t num_vars() const { return order.size(); }
  // bit i of `bits` is the value of order[i]
  bool evaluate_scope_bits(uint64_t bits) const;
  bool evaluate(const Assignment& a) const;
};

enum class BoolOp : uint8_t { And, Or };

// Complete OBDD for c under variable ordering pi (a permutation of c's scope).
CompleteObdd build_obdd(const Constraint& c, const std::vector<Var>& pi);

// Product construction; both sides must share the same ordering.
CompleteObdd obdd_apply(BoolOp op, const CompleteObdd& b1, const CompleteObdd& b2);

// Number of accepting assignments to the OBDD's own variables.
BigInt obdd_count(const CompleteObdd& b);

// Level-wise quotient that enforces f0/f1 commutation. Input must compute a
// symmetric function of its scope; verified by enumeration up to 12 variables,
// beyond that the caller vouches with trust_symmetric.
CompleteObdd commutative_quotient(const CompleteObdd& b, bool trust_symmetric = false);

struct ModuloPattern {
  uint32_t a = 0, m = 0, b = 0;
};

// Smallest-m witness (a, m, b) with a+m+b = width such that after a ones, m
// further ones act like m zeros (states at level `width` coincide). Requires a
// commutative OBDD; returns m = 0 when width == num_vars.
ModuloPattern find_modulo_pattern(const CompleteObdd& b);

// Wraps the symmetric function of `b` into a counting machine with at most
// floor((w+1)^2/4) states (w < n), attaching the caller's flip map.
FlippedCsts obdd_to_csts(const CompleteObdd& b, std::vector<Var> scope,
                         std::vector<uint8_t> flipped);

}  // namespace kc
