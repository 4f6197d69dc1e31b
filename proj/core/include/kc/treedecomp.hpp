#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kc/graph.hpp"

namespace kc {

struct TreeDecomposition {
  // Tree over node ids 0..bags.size()-1.
  std::vector<std::vector<uint32_t>> bags;  // sorted vertex ids
  std::vector<std::pair<uint32_t, uint32_t>> tree_edges;

  size_t num_nodes() const { return bags.size(); }
  // Conventional width: max bag size - 1 (empty decomposition: -1).
  int width() const;
  std::vector<std::vector<uint32_t>> adjacency() const;
};

struct TdReport {
  bool covers_vertices = false;
  bool covers_edges = false;
  bool connected = false;
  bool is_tree = false;
  int width = -1;
  std::vector<std::string> issues;
  bool ok() const { return covers_vertices && covers_edges && connected && is_tree; }
};

TdReport validate_td(const Graph& g, const TreeDecomposition& td);

// Min-fill elimination with min-degree tie break; exact subset DP below
// exact_limit vertices. No optimality promise above that.
TreeDecomposition heuristic_td(const Graph& g, uint32_t exact_limit = 12);

enum class NodeKind : uint8_t { Leaf, Introduce, Forget, Join };

struct NiceTd {
  struct Node {
    NodeKind kind = NodeKind::Leaf;
    uint32_t vertex = 0;  // introduced/forgotten vertex
    int child1 = -1;
    int child2 = -1;
    std::vector<uint32_t> bag;  // sorted
  };
  std::vector<Node> nodes;  // children precede parents
  int root = -1;

  TreeDecomposition to_td() const;
};

// Rooted nice form with an empty root bag; width is preserved exactly.
NiceTd make_nice(const TreeDecomposition& td);

// Checks nice-form structural invariants (bag deltas, join equality, empty root).
void check_nice(const NiceTd& ntd);

// Bag-wise union of overlay into base under the shared-vertex domination
// condition: every shared vertex in an overlay bag must be in the base bag at
// that node. Trees must match node-for-node.
TreeDecomposition merge_tds(const TreeDecomposition& base, const Graph& base_graph,
                            const std::vector<const TreeDecomposition*>& overlays,
                            const std::vector<const Graph*>& overlay_graphs);

// .td file format: `s td <num_bags> <max_bag_size> <num_vertices>`, bag lines
// `b <bag_id> <vertex>*` (1-based ids), then tree edges `<id> <id>`.
std::string write_td(const TreeDecomposition& td, uint32_t num_vertices);
TreeDecomposition read_td(std::string_view text);
void save_td(const TreeDecomposition& td, uint32_t num_vertices, const std::string& path);
TreeDecomposition load_td(const std::string& path);

}  // namespace kc
