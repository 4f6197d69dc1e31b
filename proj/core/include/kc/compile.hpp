#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kc/encode.hpp"
#include "kc/sdnnf.hpp"
#include "kc/treedecomp.hpp"

namespace kc {

struct CompileStats {
  std::string route;          // "tseitin" or "direct"
  int base_td_width = -1;     // width of the decomposition of the system
  int encoding_td_width = -1; // width of the decomposition of H (tseitin route)
  uint32_t max_obdd_width = 0;
  uint32_t max_circuit_width = 0;  // structured width of per-constraint circuits
  size_t cnf_vars = 0;
  size_t cnf_clauses = 0;
  size_t compiled_gates = 0;   // before forgetting
  size_t final_gates = 0;
  size_t peak_blocks = 0;      // largest block table over all nodes
  double ms_encode = 0, ms_compile = 0, ms_forget = 0;
};

// Decomposition-guided CNF compiler. Produces a deterministic, structured,
// complete circuit over the CNF variables. Blocks are keyed by bag-variable
// assignments and exact satisfied-subsets of not-yet-complete bag clauses;
// blocks whose fully-seen clause went unsatisfied are dropped early.
SdnnfCircuit compile_cnf(const Cnf& h, const TreeDecomposition& td_h,
                         CompileStats* stats = nullptr);

// Direct compiler over per-constraint OBDD states. Applicable when, for every
// constraint, the forget nodes of its variables are chain-comparable (true on
// path decompositions, e.g. the generated clique instances).
SdnnfCircuit compile_direct(const ConstraintSystem& f, const NiceTd& ntd,
                            CompileStats* stats = nullptr);

bool direct_compile_applicable(const ConstraintSystem& f, const NiceTd& ntd);

// Encode, compile, forget the auxiliary variables. Falls back to the direct
// route when the encoding's decomposition grows past the block budget.
SdnnfCircuit compile_system(const ConstraintSystem& f,
                            const std::optional<TreeDecomposition>& td = std::nullopt,
                            CompileStats* stats = nullptr);

BigInt count_via_compilation(const ConstraintSystem& f,
                             const std::optional<TreeDecomposition>& td = std::nullopt,
                             CompileStats* stats = nullptr);

std::string stats_json(const CompileStats& s);

}  // namespace kc
