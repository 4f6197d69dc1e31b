#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kc/sdnnf.hpp"
#include "kc/treedecomp.hpp"
#include "kc/vtree_extract.hpp"

namespace kc {

struct Cnf {
  uint32_t num_vars = 0;
  std::vector<std::vector<Lit>> clauses;
};

std::string write_dimacs(const Cnf& cnf);
Cnf parse_dimacs(std::string_view text);

// Gate-consistency clauses plus a unit clause asserting the output. Inputs
// reuse their own literals; each internal gate gets one fresh variable,
// numbered from first_fresh in topological gate order.
struct TseitinCnf {
  Cnf cnf;                  // over X and Z
  std::vector<Var> z_vars;  // fresh variables in allocation order
  std::vector<Lit> gate_lit;  // per source gate: the literal standing for it
  std::vector<std::pair<uint32_t, uint32_t>> gate_clauses;  // clause range per gate
};

TseitinCnf tseitin_encode(const SdnnfCircuit& d, Var first_fresh);

// Expands a decomposition of the circuit's vtree into one of the encoding's
// incidence graph: a vtree node is replaced by the variables and clauses of
// the gates labeled with it. Clause index i becomes vertex clause_base + i.
// The circuit must be complete (var(D_g) = var(label(g))).
TreeDecomposition td_of_encoding(const SdnnfCircuit& d, const TseitinCnf& h,
                                 const TreeDecomposition& vtree_bags,
                                 const std::vector<uint32_t>& vnode_global, uint32_t clause_base);

struct EncodedSystem {
  Cnf cnf;                   // H(X, Z)
  uint32_t num_x_vars = 0;   // X keeps ids 1..num_x_vars
  TreeDecomposition td_h;    // decomposition of H's incidence graph
  std::vector<std::vector<Var>> z_of_constraint;
  std::vector<std::pair<uint32_t, uint32_t>> clauses_of_constraint;
  std::vector<SdnnfCircuit> circuits;  // per-constraint, for tests and stats
  int base_width = -1;
  int merged_width = -1;  // after overlaying the vtree decompositions
  uint32_t max_circuit_width = 0;
};

Graph cnf_incidence(const Cnf& cnf);

// Whole-system encoder: per-constraint vtrees, OBDDs in vtree leaf order,
// circuits, Tseitin clauses, and the bag-wise merged decomposition with the
// original constraint vertices dropped.
EncodedSystem encode_system(const ConstraintSystem& f, const TreeDecomposition& td);

std::string write_zmap(const EncodedSystem& enc);

}  // namespace kc
