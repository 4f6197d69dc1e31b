#include "kc/constraint.hpp"

#include <algorithm>
#include <unordered_set>

namespace kc {

namespace {

void check_distinct_vars(const std::vector<Lit>& lits) {
  std::unordered_set<Var> seen;
  for (const Lit& l : lits) {
    if (l.code == 0) throw Error("zero literal in scope");
    if (!seen.insert(l.var()).second) throw Error("duplicate variable in constraint scope");
  }
}

}  // namespace

Constraint Constraint::clause(std::vector<Lit> lits) {
  check_distinct_vars(lits);
  Constraint c;
  c.kind = Kind::Clause;
  c.lits = std::move(lits);
  return c;
}

Constraint Constraint::xor_of(std::vector<Lit> lits, bool parity) {
  check_distinct_vars(lits);
  Constraint c;
  c.kind = Kind::Xor;
  for (Lit& l : lits) {
    if (!l.positive()) {
      parity = !parity;  // (1 - x) folds into the target parity
      l = Lit::pos(l.var());
    }
  }
  c.lits = std::move(lits);
  c.xor_parity = parity;
  return c;
}

Constraint Constraint::sum_modulo(std::vector<Lit> lits, uint32_t m, uint32_t r) {
  check_distinct_vars(lits);
  if (m < 2) throw Error("sum-modulo needs modulus >= 2");
  if (r >= m) throw Error("sum-modulo residue must be < modulus");
  Constraint c;
  c.kind = Kind::SumModulo;
  c.lits = std::move(lits);
  c.modulus = m;
  c.residue = r;
  return c;
}

Constraint Constraint::cardinality(std::vector<Lit> lits, uint32_t k) {
  check_distinct_vars(lits);
  Constraint c;
  c.kind = Kind::Cardinality;
  c.lits = std::move(lits);
  c.card_bound = k;
  return c;
}

Constraint Constraint::threshold(std::vector<Lit> lits, std::vector<int64_t> w, int64_t bound) {
  check_distinct_vars(lits);
  if (w.size() != lits.size()) throw Error("threshold weight count mismatch");
  for (int64_t x : w)
    if (x == 0) throw Error("threshold weights must be nonzero");
  Constraint c;
  c.kind = Kind::Threshold;
  c.lits = std::move(lits);
  c.weights = std::move(w);
  c.threshold_bound = bound;
  return c;
}

Constraint Constraint::small_scope(std::vector<Var> vars, std::vector<uint64_t> table) {
  if (vars.size() > 20) throw Error("small-scope arity capped at 20");
  std::vector<Lit> lits;
  lits.reserve(vars.size());
  for (Var v : vars) lits.push_back(Lit::pos(v));
  check_distinct_vars(lits);
  const size_t want_words = std::max<size_t>(1, (size_t{1} << vars.size()) >> 6);
  if (table.size() != want_words) throw Error("small-scope truth table has wrong length");
  Constraint c;
  c.kind = Kind::SmallScope;
  c.lits = std::move(lits);
  c.table = std::move(table);
  return c;
}

Constraint Constraint::opaque_of(std::shared_ptr<const OpaqueConstraint> oc) {
  if (!oc) throw Error("null opaque constraint");
  Constraint c;
  c.kind = Kind::Opaque;
  for (Var v : oc->scope()) c.lits.push_back(Lit::pos(v));
  check_distinct_vars(c.lits);
  c.opaque = std::move(oc);
  return c;
}

std::vector<Var> Constraint::vars() const {
  std::vector<Var> vs;
  vs.reserve(lits.size());
  for (const Lit& l : lits) vs.push_back(l.var());
  return vs;
}

bool Constraint::operator==(const Constraint& other) const {
  if (kind != other.kind || lits != other.lits) return false;
  switch (kind) {
    case Kind::Clause:
      return true;
    case Kind::Xor:
      return xor_parity == other.xor_parity;
    case Kind::SumModulo:
      return modulus == other.modulus && residue == other.residue;
    case Kind::Cardinality:
      return card_bound == other.card_bound;
    case Kind::Threshold:
      return weights == other.weights && threshold_bound == other.threshold_bound;
    case Kind::SmallScope:
      return table == other.table;
    case Kind::Opaque:
      return opaque->same_as(*other.opaque);
  }
  return false;
}

void ConstraintSystem::validate() const {
  for (const Constraint& c : constraints)
    for (const Lit& l : c.lits)
      if (l.var() == 0 || l.var() > num_vars) throw Error("constraint variable out of range");
}

bool eval_constraint(const Constraint& c, const Assignment& a) {
  for (const Lit& l : c.lits)
    if (!a.assigned(l.var())) throw Error("eval_constraint: unassigned scope variable");
  uint64_t bits = 0;
  uint64_t count_true = 0;
  switch (c.kind) {
    case Kind::Clause:
      for (const Lit& l : c.lits)
        if (a.value(l.var()) == l.positive()) return true;
      return false;
    case Kind::Xor: {
      bool p = false;
      for (const Lit& l : c.lits) p ^= a.value(l.var());
      return p == c.xor_parity;
    }
    case Kind::SumModulo: {
      for (const Lit& l : c.lits)
        if (a.value(l.var()) == l.positive()) ++count_true;
      return count_true % c.modulus == c.residue;
    }
    case Kind::Cardinality: {
      for (const Lit& l : c.lits)
        if (a.value(l.var()) == l.positive()) ++count_true;
      return count_true >= c.card_bound;
    }
    case Kind::Threshold: {
      int64_t s = 0;
      for (size_t i = 0; i < c.lits.size(); ++i)
        if (a.value(c.lits[i].var()) == c.lits[i].positive()) s += c.weights[i];
      return s >= c.threshold_bound;
    }
    case Kind::SmallScope: {
      for (size_t i = 0; i < c.lits.size(); ++i)
        if (a.value(c.lits[i].var())) bits |= uint64_t{1} << i;
      return c.table_bit(bits);
    }
    case Kind::Opaque: {
      uint64_t s = c.opaque->start_state();
      for (size_t i = 0; i < c.lits.size(); ++i) s = c.opaque->step(s, i, a.value(c.lits[i].var()));
      return c.opaque->accepts(s);
    }
  }
  return false;
}

bool eval_constraint_bits(const Constraint& c, uint64_t bits) {
  auto val = [&](const Lit& l) { return (((bits >> (l.var() - 1)) & 1) != 0) == l.positive(); };
  uint64_t count_true = 0;
  switch (c.kind) {
    case Kind::Clause:
      for (const Lit& l : c.lits)
        if (val(l)) return true;
      return false;
    case Kind::Xor: {
      bool p = false;
      for (const Lit& l : c.lits) p ^= val(l);
      return p == c.xor_parity;
    }
    case Kind::SumModulo:
      for (const Lit& l : c.lits)
        if (val(l)) ++count_true;
      return count_true % c.modulus == c.residue;
    case Kind::Cardinality:
      for (const Lit& l : c.lits)
        if (val(l)) ++count_true;
      return count_true >= c.card_bound;
    case Kind::Threshold: {
      int64_t s = 0;
      for (size_t i = 0; i < c.lits.size(); ++i)
        if (val(c.lits[i])) s += c.weights[i];
      return s >= c.threshold_bound;
    }
    case Kind::SmallScope: {
      uint64_t idx = 0;
      for (size_t i = 0; i < c.lits.size(); ++i)
        if (val(c.lits[i])) idx |= uint64_t{1} << i;
      return c.table_bit(idx);
    }
    case Kind::Opaque: {
      uint64_t s = c.opaque->start_state();
      for (size_t i = 0; i < c.lits.size(); ++i) s = c.opaque->step(s, i, val(c.lits[i]));
      return c.opaque->accepts(s);
    }
  }
  return false;
}

bool eval_system_bits(const ConstraintSystem& f, uint64_t bits) {
  for (const Constraint& c : f.constraints)
    if (!eval_constraint_bits(c, bits)) return false;
  return true;
}

BigInt brute_force_count(const ConstraintSystem& f, uint32_t var_limit) {
  if (f.num_vars > var_limit)
    throw Error("brute_force_count: " + std::to_string(f.num_vars) + " variables exceeds limit " +
                std::to_string(var_limit));
  f.validate();
  BigInt n = 0;
  const uint64_t top = uint64_t{1} << f.num_vars;
  for (uint64_t bits = 0; bits < top; ++bits)
    if (eval_system_bits(f, bits)) ++n;
  return n;
}

}  // namespace kc
