#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kc/constraint.hpp"

namespace kc {

constexpr uint64_t kNoWitness = UINT64_MAX;

// Commutative state transition system. States are ids 0..num_states-1; f0/f1
// must commute pointwise. Each reachable state carries a witness (q1, q0):
// feeding q1 ones then q0 zeros from the start reaches it.
struct Csts {
  uint32_t num_states = 0;
  std::vector<uint32_t> f0, f1;
  uint32_t start = 0;
  std::vector<uint8_t> accepting;
  std::vector<std::pair<uint64_t, uint64_t>> witness;  // (ones, zeros); kNoWitness if none

  uint32_t step(uint32_t s, bool one) const { return one ? f1[s] : f0[s]; }
  bool commutes() const;
  bool zero_only() const;  // f1 is the identity
  bool one_only() const;   // f0 is the identity
  bool one_sided() const { return zero_only() || one_only(); }
};

// Per scope position, `flipped` marks variables read through negation: a
// flipped variable set to 1 feeds a 0 into the machine and vice versa.
struct FlippedCsts {
  Csts machine;
  std::vector<Var> scope;
  std::vector<uint8_t> flipped;

  bool is_flipped(Var v) const;
};

// Direct machines for the literal-symmetric kinds (Clause, Xor, SumModulo,
// Cardinality). Other kinds are rejected; they go through compilation.
FlippedCsts csts_for_constraint(const Constraint& c);

// State reached from `from` after q1 ones and q0 zeros, by linear application.
uint32_t run_counts(const Csts& m, uint32_t from, uint64_t q1, uint64_t q0);
inline uint32_t delta_counts(const Csts& m, uint64_t q1, uint64_t q0) {
  return run_counts(m, m.start, q1, q0);
}

// Composition of reachable states via witnesses. Well defined because delta
// factors through state equality on commutative systems.
uint32_t state_add(const Csts& m, uint32_t a, uint32_t b);

struct CstsReport {
  bool commutative = false;
  bool describes = false;
  uint32_t num_states = 0;
  std::vector<std::string> issues;
  bool ok() const { return commutative && describes; }
};

// Exhaustive check (scope <= 20) that the machine describes c modulo the flip.
CstsReport validate_csts(const FlippedCsts& m, const Constraint& c);

}  // namespace kc
