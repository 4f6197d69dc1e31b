#include "kc/graph.hpp"

#include <algorithm>

namespace kc {

std::vector<uint32_t> Graph::vertex_list() const {
  if (!vertex_ids.empty()) return vertex_ids;
  std::vector<uint32_t> vs(num_vertices);
  for (uint32_t i = 0; i < num_vertices; ++i) vs[i] = i + 1;
  return vs;
}

uint32_t Graph::max_vertex_id() const {
  if (vertex_ids.empty()) return num_vertices;
  uint32_t m = 0;
  for (uint32_t v : vertex_ids) m = std::max(m, v);
  return m;
}

std::vector<std::vector<uint32_t>> Graph::adjacency() const {
  std::vector<std::vector<uint32_t>> adj(max_vertex_id() + 1);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

Graph incidence_graph(const ConstraintSystem& f) {
  f.validate();
  Graph g;
  g.num_vertices = f.num_vars + static_cast<uint32_t>(f.constraints.size());
  for (size_t i = 0; i < f.constraints.size(); ++i) {
    const uint32_t cv = constraint_vertex(f, i);
    for (Var x : f.constraints[i].vars()) g.add_edge(cv, x);
  }
  return g;
}

}  // namespace kc
