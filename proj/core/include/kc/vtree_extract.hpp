#pragma once

#include <cstdint>
#include <vector>

#include "kc/graph.hpp"
#include "kc/treedecomp.hpp"
#include "kc/vtree.hpp"

namespace kc {

// Output of the clone-parent transform: a widened copy of the input
// decomposition plus, per constraint, a vtree over its scope together with a
// decomposition of that vtree over the *same* tree. Vtree leaves use the
// variable's incidence id as global id; internal vtree nodes get fresh ids
// past the incidence range, so the per-constraint decompositions can be
// merged into the base bag-wise.
struct VtreeExtraction {
  TreeDecomposition transformed;  // valid for the incidence graph, same width

  struct PerConstraint {
    bool empty_scope = false;
    Vtree vtree;                        // single dummy leaf when empty_scope
    std::vector<uint32_t> vnode_global;  // vtree node id -> global vertex id
    TreeDecomposition bags;              // (T, b_c); tree identical to `transformed`
    Graph vtree_graph;                   // the vtree as a graph over global ids
  };
  std::vector<PerConstraint> per_constraint;
  uint32_t first_fresh_id = 0;
};

// Requires a decomposition that validates against incidence_graph(f).
// Bags of each (T, b_c) never exceed 3 elements and meet the merge condition
// against the transformed base.
VtreeExtraction extract_vtrees(const ConstraintSystem& f, const TreeDecomposition& td);

}  // namespace kc
