#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kc/bigint.hpp"
#include "kc/obdd.hpp"
#include "kc/vtree.hpp"

namespace kc {

enum class GateKind : uint8_t { False, True, Literal, And, Or };

// NNF circuit with binary and/or gates, optionally structured by a vtree via
// the per-gate vnode labels. Gates are stored children-before-parents.
struct SdnnfCircuit {
  struct Gate {
    GateKind kind = GateKind::False;
    Lit lit{};
    uint32_t a = 0, b = 0;
    int32_t vnode = -1;
  };
  std::vector<Gate> gates;
  uint32_t output = 0;
  std::optional<Vtree> vtree;  // may cover a superset of the circuit variables

  bool decomposable_hint = false;
  bool deterministic_hint = false;
  bool complete_hint = false;

  size_t num_gates(GateKind k) const;
  std::vector<Var> variables() const;  // sorted
  bool evaluate(const Assignment& a) const;
};

struct CircuitKeyHash {
  size_t operator()(unsigned __int128 k) const {
    uint64_t lo = static_cast<uint64_t>(k);
    uint64_t hi = static_cast<uint64_t>(k >> 64);
    uint64_t h = lo * 0x9e3779b97f4a7c15ull ^ (hi + 0x9e3779b97f4a7c15ull + (lo << 6));
    return static_cast<size_t>(h ^ (h >> 29));
  }
};

// Gate factory with hash consing and constant folding. Consing keys include
// the vtree label: equal structure under different labels stays distinct.
class CircuitBuilder {
 public:
  CircuitBuilder();
  uint32_t fls() const { return 0; }
  uint32_t tru() const { return 1; }
  uint32_t lit(Lit l, int32_t vnode);
  uint32_t and_gate(uint32_t x, uint32_t y, int32_t vnode);
  uint32_t or_gate(uint32_t x, uint32_t y, int32_t vnode);
  uint32_t or_chain(const std::vector<uint32_t>& xs, int32_t vnode);
  const SdnnfCircuit& peek() const { return c_; }
  SdnnfCircuit take(uint32_t output);

 private:
  SdnnfCircuit c_;
  std::unordered_map<unsigned __int128, uint32_t, struct CircuitKeyHash> cache_;
};

// Slice construction: rewrites a complete OBDD into a complete, deterministic
// circuit structured by an arbitrary vtree whose leaf order matches the OBDD
// ordering. Per-vtree-node gate count stays within 3*w^3 for OBDD width w.
SdnnfCircuit obdd_to_sdnnf(const CompleteObdd& b, const Vtree& vt);

struct SdnnfReport {
  bool decomposable = false;
  bool structured = false;
  bool complete = false;
  bool deterministic = false;
  bool determinism_exact = false;  // exact enumeration vs sampling
  std::vector<std::string> issues;
  bool ok() const { return decomposable && structured && complete && deterministic; }
};

// Structural and semantic checks. Determinism is exact when the circuit has at
// most `exact_limit` variables, otherwise sampled with `samples` assignments.
SdnnfReport validate_sdnnf(const SdnnfCircuit& d, uint32_t exact_limit = 16,
                           uint32_t samples = 10000, uint64_t seed = 1);

// Model count over variables 1..num_vars; smooths or-gates by powers of two.
// Refuses circuits not flagged deterministic unless force is set.
BigInt count_dsdnnf(const SdnnfCircuit& d, uint32_t num_vars, bool force = false);

// Replaces literals over `forget` with true and propagates constants. Keeps
// the vtree (over a superset) and gate labels. Determinism survives when the
// forgotten variables are functionally defined by the rest, which the caller
// asserts via assume_definable.
SdnnfCircuit exist_forget(const SdnnfCircuit& d, const std::unordered_set<Var>& forget,
                          bool assume_definable = true);

// Folds constant inputs away, rebuilding the circuit compactly. Structure
// labels are kept per gate, but or-children may end up labeled below their
// parent, so run this only where strict structuredness is not needed.
SdnnfCircuit propagate_constants(const SdnnfCircuit& d);

// Per-vtree-node gate counts (structured width profile).
std::vector<uint32_t> gates_per_vnode(const SdnnfCircuit& d);

std::string write_nnf(const SdnnfCircuit& d);
std::string write_vtree(const Vtree& vt);
std::string write_vtree_map(const SdnnfCircuit& d);

}  // namespace kc
