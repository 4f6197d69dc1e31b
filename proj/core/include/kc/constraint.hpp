#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kc/bigint.hpp"
#include "kc/error.hpp"

namespace kc {

using Var = uint32_t;  // 1-based

// DIMACS-style literal: positive code = variable, negative = negated variable.
struct Lit {
  int32_t code = 0;

  Lit() = default;
  explicit Lit(int32_t c) : code(c) {}
  static Lit pos(Var v) { return Lit(static_cast<int32_t>(v)); }
  static Lit neg(Var v) { return Lit(-static_cast<int32_t>(v)); }

  Var var() const { return static_cast<Var>(code < 0 ? -code : code); }
  bool positive() const { return code > 0; }
  Lit negated() const { return Lit(-code); }
  bool operator==(const Lit&) const = default;
};

// Total or partial assignment over variables 1..n.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(uint32_t num_vars) : val_(num_vars + 1, -1) {}
  static Assignment total_from_bits(uint64_t bits, uint32_t n) {
    Assignment a(n);
    for (uint32_t v = 1; v <= n; ++v) a.val_[v] = (bits >> (v - 1)) & 1;
    return a;
  }

  uint32_t num_vars() const { return val_.empty() ? 0 : static_cast<uint32_t>(val_.size() - 1); }
  bool assigned(Var v) const { return v < val_.size() && val_[v] >= 0; }
  bool value(Var v) const { return val_[v] == 1; }
  void set(Var v, bool b) {
    if (v >= val_.size()) val_.resize(v + 1, -1);
    val_[v] = b ? 1 : 0;
  }
  void unset(Var v) {
    if (v < val_.size()) val_[v] = -1;
  }

 private:
  std::vector<int8_t> val_;  // index by variable, -1 = unassigned
};

// A constraint whose semantics are given by a state automaton over its scope.
// The automaton must be order-insensitive in aggregate: feeding all scope
// positions exactly once, in any order, ends in states with equal acceptance.
class OpaqueConstraint {
 public:
  virtual ~OpaqueConstraint() = default;
  virtual std::vector<Var> scope() const = 0;
  virtual uint64_t start_state() const = 0;
  // scope_pos indexes into scope().
  virtual uint64_t step(uint64_t state, size_t scope_pos, bool value) const = 0;
  virtual bool accepts(uint64_t state) const = 0;

  // Registry tag plus parameter tokens, used by the `o` line of the .csys format.
  virtual std::string tag() const = 0;
  virtual std::vector<std::string> params() const = 0;
  virtual bool same_as(const OpaqueConstraint& other) const = 0;
};

enum class Kind : uint8_t { Clause, Xor, SumModulo, Cardinality, Threshold, SmallScope, Opaque };

struct Constraint {
  Kind kind = Kind::Clause;
  std::vector<Lit> lits;  // scope in order; SmallScope and Opaque use positive lits

  bool xor_parity = false;           // Xor: sum of scope values == parity (mod 2)
  uint32_t modulus = 0;              // SumModulo
  uint32_t residue = 0;              // SumModulo
  uint32_t card_bound = 0;           // Cardinality: sum of literal values >= bound
  std::vector<int64_t> weights;      // Threshold
  int64_t threshold_bound = 0;       // Threshold: sum w_i * lit_i >= bound
  std::vector<uint64_t> table;       // SmallScope truth table, little-endian bit order
  std::shared_ptr<const OpaqueConstraint> opaque;

  static Constraint clause(std::vector<Lit> lits);
  // Canonicalizes negative literals into the parity bit; stored scope is positive.
  static Constraint xor_of(std::vector<Lit> lits, bool parity);
  static Constraint sum_modulo(std::vector<Lit> lits, uint32_t m, uint32_t r);
  static Constraint cardinality(std::vector<Lit> lits, uint32_t k);
  static Constraint threshold(std::vector<Lit> lits, std::vector<int64_t> w, int64_t bound);
  static Constraint small_scope(std::vector<Var> vars, std::vector<uint64_t> table);
  static Constraint opaque_of(std::shared_ptr<const OpaqueConstraint> oc);

  size_t arity() const { return lits.size(); }
  std::vector<Var> vars() const;
  bool table_bit(uint64_t idx) const { return (table[idx >> 6] >> (idx & 63)) & 1; }

  bool operator==(const Constraint& other) const;
};

struct ConstraintSystem {
  uint32_t num_vars = 0;
  std::vector<Constraint> constraints;

  void validate() const;  // throws Error on broken invariants
};

// Truth value of c under a; every scope variable must be assigned.
bool eval_constraint(const Constraint& c, const Assignment& a);

// Fast path used by the enumeration oracle: bit i-1 of `bits` is variable i.
bool eval_constraint_bits(const Constraint& c, uint64_t bits);

bool eval_system_bits(const ConstraintSystem& f, uint64_t bits);

// Exact model count by enumeration of all 2^n assignments.
BigInt brute_force_count(const ConstraintSystem& f, uint32_t var_limit = 24);

}  // namespace kc
