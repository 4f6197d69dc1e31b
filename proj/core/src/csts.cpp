#include "kc/csts.hpp"

#include <algorithm>

namespace kc {

bool Csts::commutes() const {
  for (uint32_t s = 0; s < num_states; ++s)
    if (f0[f1[s]] != f1[f0[s]]) return false;
  return true;
}

bool Csts::zero_only() const {
  for (uint32_t s = 0; s < num_states; ++s)
    if (f1[s] != s) return false;
  return true;
}

bool Csts::one_only() const {
  for (uint32_t s = 0; s < num_states; ++s)
    if (f0[s] != s) return false;
  return true;
}

bool FlippedCsts::is_flipped(Var v) const {
  for (size_t i = 0; i < scope.size(); ++i)
    if (scope[i] == v) return flipped[i] != 0;
  throw Error("variable not in constraint scope");
}

namespace {

Csts counter_machine(uint32_t states, bool count_ones) {
  Csts m;
  m.num_states = states;
  m.f0.resize(states);
  m.f1.resize(states);
  m.accepting.assign(states, 0);
  m.witness.assign(states, {kNoWitness, kNoWitness});
  for (uint32_t s = 0; s < states; ++s) {
    uint32_t bump = std::min(s + 1, states - 1);
    m.f1[s] = count_ones ? bump : s;
    m.f0[s] = count_ones ? s : bump;
    m.witness[s] = count_ones ? std::pair<uint64_t, uint64_t>{s, 0}
                              : std::pair<uint64_t, uint64_t>{0, s};
  }
  return m;
}

Csts modulo_machine(uint32_t modulus, uint32_t residue) {
  Csts m;
  m.num_states = modulus;
  m.f0.resize(modulus);
  m.f1.resize(modulus);
  m.accepting.assign(modulus, 0);
  m.witness.assign(modulus, {kNoWitness, kNoWitness});
  for (uint32_t s = 0; s < modulus; ++s) {
    m.f0[s] = s;
    m.f1[s] = (s + 1) % modulus;
    m.witness[s] = {s, 0};
  }
  m.accepting[residue] = 1;
  return m;
}

}  // namespace

FlippedCsts csts_for_constraint(const Constraint& c) {
  FlippedCsts out;
  out.scope = c.vars();
  out.flipped.assign(out.scope.size(), 0);
  for (size_t i = 0; i < c.lits.size(); ++i) out.flipped[i] = c.lits[i].positive() ? 0 : 1;
  const uint32_t n = static_cast<uint32_t>(out.scope.size());

  switch (c.kind) {
    case Kind::Clause: {
      out.machine = counter_machine(2, true);  // saturating: any true literal accepts
      out.machine.accepting[1] = 1;
      break;
    }
    case Kind::Xor: {
      Csts m = modulo_machine(2, c.xor_parity ? 1 : 0);
      out.machine = std::move(m);
      break;
    }
    case Kind::SumModulo: {
      out.machine = modulo_machine(c.modulus, c.residue);
      break;
    }
    case Kind::Cardinality: {
      const uint32_t k = c.card_bound;
      const uint32_t ones_states = std::min<uint64_t>(uint64_t{k} + 1, uint64_t{n} + 2);
      const uint32_t zeros_states =
          k > n + 1 ? 1 : std::min<uint64_t>(uint64_t{n} - k + 2, uint64_t{n} + 2);
      if (ones_states <= zeros_states) {
        // count satisfied literals, saturating at k
        out.machine = counter_machine(k + 1, true);
        out.machine.accepting[k] = 1;
      } else {
        // count falsified literals, saturating at n-k+1; accept below the cap
        out.machine = counter_machine(zeros_states, false);
        for (uint32_t s = 0; s + 1 < zeros_states; ++s) out.machine.accepting[s] = 1;
      }
      break;
    }
    default:
      throw Error("csts_for_constraint: kind not literal-symmetric; use the compilation path");
  }
  return out;
}

uint32_t run_counts(const Csts& m, uint32_t from, uint64_t q1, uint64_t q0) {
  uint32_t s = from;
  for (uint64_t i = 0; i < q1; ++i) s = m.f1[s];
  for (uint64_t i = 0; i < q0; ++i) s = m.f0[s];
  return s;
}

uint32_t state_add(const Csts& m, uint32_t a, uint32_t b) {
  if (a >= m.num_states || b >= m.num_states) throw Error("state_add: state out of range");
  auto [a1, a0] = m.witness[a];
  auto [b1, b0] = m.witness[b];
  if (a1 == kNoWitness || b1 == kNoWitness) throw Error("state_add: state has no witness");
  return run_counts(m, m.start, a1 + b1, a0 + b0);
}

CstsReport validate_csts(const FlippedCsts& fm, const Constraint& c) {
  CstsReport rep;
  const Csts& m = fm.machine;
  rep.num_states = m.num_states;
  rep.commutative = m.commutes();
  if (!rep.commutative) rep.issues.push_back("f0 and f1 do not commute");

  auto scope = c.vars();
  if (scope != fm.scope) {
    rep.issues.push_back("scope mismatch");
    return rep;
  }
  const size_t n = scope.size();
  if (n > 20) {
    rep.issues.push_back("scope too large for exhaustive check");
    return rep;
  }
  rep.describes = true;
  Assignment a(n == 0 ? 0 : *std::max_element(scope.begin(), scope.end()));
  for (uint64_t bits = 0; bits < (uint64_t{1} << n); ++bits) {
    uint32_t s = m.start;
    for (size_t i = 0; i < n; ++i) {
      bool value = (bits >> i) & 1;
      a.set(scope[i], value);
      s = m.step(s, value != (fm.flipped[i] != 0));
    }
    if ((m.accepting[s] != 0) != eval_constraint(c, a)) {
      rep.describes = false;
      rep.issues.push_back("machine disagrees with constraint at pattern " + std::to_string(bits));
      break;
    }
  }
  return rep;
}

}  // namespace kc
