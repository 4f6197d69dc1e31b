#pragma once

#include <cstdint>
#include <vector>

#include "kc/csts.hpp"
#include "kc/treedecomp.hpp"

namespace kc {

enum class JoinMode : uint8_t { Naive, OneSided, ClauseModulo, Auto };

// Machines and derived lookup tables, fixed before the walk starts.
struct DpContext {
  const ConstraintSystem* f = nullptr;
  std::vector<FlippedCsts> machines;                    // per constraint
  std::vector<std::vector<uint32_t>> add_table;         // state addition, row-major
  std::vector<std::vector<Var>> scope;                  // sorted per constraint
  std::vector<std::vector<uint32_t>> progress_state;    // one-sided: index -> state (doubled)
  std::vector<std::vector<uint32_t>> state_progress;    // one-sided: state -> index
  std::vector<uint8_t> one_sided;                       // machine usable by the tensor join
  std::vector<uint8_t> cyclic;                          // pure modulo machine (xor, sum-mod)

  static DpContext build(const ConstraintSystem& f);
  uint32_t add(uint32_t ci, uint32_t a, uint32_t b) const {
    return add_table[ci][a * machines[ci].machine.num_states + b];
  }
  bool flipped(uint32_t ci, Var v) const;
  bool in_scope(uint32_t ci, Var v) const {
    return std::binary_search(scope[ci].begin(), scope[ci].end(), v);
  }
};

// Row values n(t, alpha, state tuple); index = alpha * prod|S^c| + mixed-radix
// states, first bag constraint fastest.
struct DpTable {
  std::vector<uint32_t> bag_vars;  // sorted
  std::vector<uint32_t> bag_cons;  // sorted constraint indices
  std::vector<uint64_t> radix;     // |S^c| per bag constraint
  std::vector<BigInt> values;

  uint64_t states_total() const;
  size_t size() const { return values.size(); }
  void init(const DpContext& ctx, std::vector<uint32_t> vars, std::vector<uint32_t> cons);
};

// Single-node transition; children tables as produced for the child nodes.
DpTable table_transition(const DpContext& ctx, const NiceTd& ntd, size_t node,
                         const DpTable* child1, const DpTable* child2, JoinMode mode);

// Join algebras, exposed for the equivalence property tests.
DpTable dp_join_naive(const DpContext& ctx, const DpTable& a, const DpTable& b);
DpTable dp_join_onesided(const DpContext& ctx, const DpTable& a, const DpTable& b);
DpTable dp_join_clause_modulo(const DpContext& ctx, const DpTable& a, const DpTable& b);

// Exact model count by dynamic programming over the nice decomposition.
// Every constraint must be literal-symmetric (clause, xor, sum-modulo,
// cardinality); others are rejected with a pointer to the compilation path.
BigInt dp_count(const ConstraintSystem& f, const NiceTd& ntd, JoinMode mode = JoinMode::Auto);

// Clause + parity systems through the subset/group transform join.
BigInt count_cnf_xor(const ConstraintSystem& f, const TreeDecomposition& td);

}  // namespace kc
