#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kc/compile.hpp"
#include "kc/dpcount.hpp"
#include "kc/sysio.hpp"
#include "kc/treedecomp.hpp"

namespace kc {

// Hard instances whose models are the ordered k-cliques of a graph. Variables
// come in directed pairs per edge and slot: slot i of edge e gets ids
// 2*((i-1)*|E| + e) + {1, 2} for the two directions.
struct CliqueInstance {
  uint32_t graph_vertices = 0;
  std::vector<std::pair<uint32_t, uint32_t>> graph_edges;  // 1-based, u < v
  uint32_t k = 0;
  ConstraintSystem system;   // k slot constraints, then |E| edge constraints
  TreeDecomposition td;      // path decomposition of width k+1
};

CliqueInstance gen_clique_system(uint32_t graph_vertices,
                                 std::vector<std::pair<uint32_t, uint32_t>> edges, uint32_t k);
CliqueInstance gen_clique_complete(uint32_t n, uint32_t k);

// Parses the `o cliquevertex ...` / `o cliqueedge ...` lines the generator
// writes into .csys files.
const OpaqueRegistry& toolkit_registry();

struct WidthReport {
  struct Entry {
    std::string name;
    uint32_t bound = 0;
    uint32_t max_width = 0;
    bool ok() const { return max_width <= bound; }
  };
  std::vector<Entry> entries;
  bool ok() const {
    for (const auto& e : entries)
      if (!e.ok()) return false;
    return true;
  }
};

// Builds complete OBDDs for the instance's constraints under sampled
// orderings (slot constraints also under the natural one) and records the
// measured widths against the nk+2 / 8 ceilings.
WidthReport obdd_width_report(const CliqueInstance& inst, uint32_t orderings = 20,
                              uint64_t seed = 1);

struct KindMix {
  bool clause = false;
  bool parity = false;
  std::vector<uint32_t> moduli;  // one entry per allowed sum-modulo modulus
  bool cardinality = false;
  bool threshold = false;
  bool small_scope = false;

  static KindMix parse(const std::string& tokens);  // "clause,xor,mod3,card,..."
};

ConstraintSystem gen_random_system(uint64_t seed, uint32_t num_vars, uint32_t num_cons,
                                   const KindMix& mix);

struct CheckResult {
  struct EngineRun {
    std::string name;
    std::string count;  // decimal, empty when skipped or failed
    std::string note;   // skip/failure reason
    bool ran = false;
  };
  std::vector<EngineRun> engines;
  bool agree = false;
  std::string count;  // agreed value when agree

  std::string summary() const;
};

// Runs every applicable engine and compares exact counts.
CheckResult check_all(const ConstraintSystem& f,
                      const std::optional<TreeDecomposition>& td = std::nullopt,
                      uint32_t brute_limit = 16);

}  // namespace kc
