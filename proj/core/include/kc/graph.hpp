#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kc/constraint.hpp"

namespace kc {

// Undirected graph. Vertices are ids 1..num_vertices unless an explicit
// sparse id list is given.
struct Graph {
  uint32_t num_vertices = 0;
  std::vector<uint32_t> vertex_ids;  // empty means 1..num_vertices
  std::vector<std::pair<uint32_t, uint32_t>> edges;

  void add_edge(uint32_t u, uint32_t v) { edges.emplace_back(u, v); }
  std::vector<uint32_t> vertex_list() const;
  uint32_t max_vertex_id() const;
  std::vector<std::vector<uint32_t>> adjacency() const;  // indexed by id
};

// Bipartite incidence graph: variables keep ids 1..n, constraint i (0-based)
// becomes vertex n+1+i.
Graph incidence_graph(const ConstraintSystem& f);

inline uint32_t constraint_vertex(const ConstraintSystem& f, size_t idx) {
  return f.num_vars + 1 + static_cast<uint32_t>(idx);
}
inline bool is_constraint_vertex(const ConstraintSystem& f, uint32_t v) { return v > f.num_vars; }

}  // namespace kc
