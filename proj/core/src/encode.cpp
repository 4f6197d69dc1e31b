#include "kc/encode.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "kc/obdd.hpp"

namespace kc {

std::string write_dimacs(const Cnf& cnf) {
  std::ostringstream out;
  out << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
  for (const auto& cl : cnf.clauses) {
    for (const Lit& l : cl) out << l.code << ' ';
    out << "0\n";
  }
  return out.str();
}

Cnf parse_dimacs(std::string_view text) {
  Cnf cnf;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  size_t declared = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok == "c") continue;
    if (tok == "p") {
      std::string kind;
      if (!(ls >> kind >> cnf.num_vars >> declared) || kind != "cnf")
        throw ParseError(line_no, "malformed DIMACS header");
      saw_header = true;
      continue;
    }
    if (!saw_header) throw ParseError(line_no, "clause before header");
    std::vector<Lit> cl;
    int64_t v = std::stoll(tok);
    while (v != 0) {
      if (std::abs(v) > cnf.num_vars) throw ParseError(line_no, "literal out of range");
      cl.push_back(Lit(static_cast<int32_t>(v)));
      if (!(ls >> v)) throw ParseError(line_no, "clause not terminated by 0");
    }
    cnf.clauses.push_back(std::move(cl));
  }
  if (!saw_header) throw ParseError(line_no, "missing DIMACS header");
  if (cnf.clauses.size() != declared)
    throw ParseError(line_no, "clause count does not match header");
  return cnf;
}

TseitinCnf tseitin_encode(const SdnnfCircuit& d, Var first_fresh) {
  TseitinCnf h;
  h.gate_lit.assign(d.gates.size(), Lit{});
  h.gate_clauses.assign(d.gates.size(), {0, 0});
  Var next = first_fresh;
  for (size_t i = 0; i < d.gates.size(); ++i) {
    const auto& g = d.gates[i];
    const uint32_t lo = static_cast<uint32_t>(h.cnf.clauses.size());
    switch (g.kind) {
      case GateKind::False:
      case GateKind::True:
        if (i == d.output) {
          if (g.kind == GateKind::False) h.cnf.clauses.push_back({});
          // a true output needs no clause
        } else {
          throw Error("tseitin_encode: propagate constants away first");
        }
        break;
      case GateKind::Literal:
        h.gate_lit[i] = g.lit;
        break;
      case GateKind::And: {
        Lit zg = Lit::pos(next);
        h.z_vars.push_back(next++);
        Lit a = h.gate_lit[g.a], b = h.gate_lit[g.b];
        h.cnf.clauses.push_back({zg.negated(), a});
        h.cnf.clauses.push_back({zg.negated(), b});
        h.cnf.clauses.push_back({a.negated(), b.negated(), zg});
        h.gate_lit[i] = zg;
        break;
      }
      case GateKind::Or: {
        Lit zg = Lit::pos(next);
        h.z_vars.push_back(next++);
        Lit a = h.gate_lit[g.a], b = h.gate_lit[g.b];
        h.cnf.clauses.push_back({zg.negated(), a, b});
        h.cnf.clauses.push_back({a.negated(), zg});
        h.cnf.clauses.push_back({b.negated(), zg});
        h.gate_lit[i] = zg;
        break;
      }
    }
    h.gate_clauses[i] = {lo, static_cast<uint32_t>(h.cnf.clauses.size())};
  }
  const auto& og = d.gates[d.output];
  if (og.kind == GateKind::And || og.kind == GateKind::Or || og.kind == GateKind::Literal)
    h.cnf.clauses.push_back({h.gate_lit[d.output]});
  h.cnf.num_vars = next - 1;
  return h;
}

TreeDecomposition td_of_encoding(const SdnnfCircuit& d, const TseitinCnf& h,
                                 const TreeDecomposition& vtree_bags,
                                 const std::vector<uint32_t>& vnode_global, uint32_t clause_base) {
  if (!d.complete_hint) throw Error("td_of_encoding: circuit must be complete");
  if (!d.vtree) throw Error("td_of_encoding: circuit is unstructured");
  // bucket per vtree node: variables and clause vertices of gates labeled
  // there; leaves start out holding their variable
  std::vector<std::vector<uint32_t>> bucket(d.vtree->num_nodes());
  for (size_t vn = 0; vn < d.vtree->num_nodes(); ++vn)
    if (d.vtree->is_leaf(static_cast<int>(vn))) bucket[vn].push_back(d.vtree->nodes[vn].var);
  for (size_t i = 0; i < d.gates.size(); ++i) {
    const auto& g = d.gates[i];
    if (g.kind != GateKind::And && g.kind != GateKind::Or) continue;
    auto& slot = bucket[g.vnode];
    slot.push_back(h.gate_lit[i].var());
    slot.push_back(h.gate_lit[g.a].var());
    slot.push_back(h.gate_lit[g.b].var());
    for (uint32_t cl = h.gate_clauses[i].first; cl < h.gate_clauses[i].second; ++cl)
      slot.push_back(clause_base + cl);
  }
  // the unit output clause rides with the output gate's node
  if (!h.cnf.clauses.empty() && h.cnf.clauses.back().size() == 1 &&
      h.cnf.clauses.back()[0] == h.gate_lit[d.output]) {
    const auto& og = d.gates[d.output];
    int32_t node = og.vnode;
    if (node >= 0) {
      bucket[node].push_back(clause_base + static_cast<uint32_t>(h.cnf.clauses.size()) - 1);
      bucket[node].push_back(h.gate_lit[d.output].var());
    }
  }
  for (auto& slot : bucket) {
    std::sort(slot.begin(), slot.end());
    slot.erase(std::unique(slot.begin(), slot.end()), slot.end());
  }

  std::unordered_map<uint32_t, uint32_t> vnode_of_global;
  for (size_t vn = 0; vn < vnode_global.size(); ++vn) vnode_of_global[vnode_global[vn]] = vn;

  TreeDecomposition out;
  out.tree_edges = vtree_bags.tree_edges;
  out.bags.resize(vtree_bags.bags.size());
  for (size_t t = 0; t < vtree_bags.bags.size(); ++t) {
    std::vector<uint32_t> bag;
    for (uint32_t gid : vtree_bags.bags[t]) {
      auto it = vnode_of_global.find(gid);
      if (it == vnode_of_global.end()) throw Error("td_of_encoding: unknown vertex in vtree bag");
      const auto& slot = bucket[it->second];
      bag.insert(bag.end(), slot.begin(), slot.end());
    }
    std::sort(bag.begin(), bag.end());
    bag.erase(std::unique(bag.begin(), bag.end()), bag.end());
    out.bags[t] = std::move(bag);
  }
  return out;
}

Graph cnf_incidence(const Cnf& cnf) {
  Graph g;
  g.num_vertices = cnf.num_vars + static_cast<uint32_t>(cnf.clauses.size());
  for (size_t i = 0; i < cnf.clauses.size(); ++i)
    for (const Lit& l : cnf.clauses[i])
      g.add_edge(cnf.num_vars + 1 + static_cast<uint32_t>(i), l.var());
  return g;
}

EncodedSystem encode_system(const ConstraintSystem& f, const TreeDecomposition& td) {
  auto ex = extract_vtrees(f, td);
  EncodedSystem enc;
  enc.num_x_vars = f.num_vars;
  enc.base_width = ex.transformed.width();

  // stage one: per-constraint circuits and clauses (z variables first, clause
  // vertex ids need the total variable count)
  struct Piece {
    SdnnfCircuit circuit;
    TseitinCnf h;
    bool trivial_true = false;
  };
  std::vector<Piece> pieces(f.constraints.size());
  Var next_z = f.num_vars + 1;
  for (size_t ci = 0; ci < f.constraints.size(); ++ci) {
    const auto& pc = ex.per_constraint[ci];
    Piece& piece = pieces[ci];
    if (pc.empty_scope) {
      Assignment empty(f.num_vars);
      piece.trivial_true = eval_constraint(f.constraints[ci], empty);
      if (!piece.trivial_true) piece.h.cnf.clauses.push_back({});
      continue;
    }
    auto order = pc.vtree.leaves_in_order();
    auto b = build_obdd(f.constraints[ci], order);
    piece.circuit = obdd_to_sdnnf(b, pc.vtree);
    const GateKind out_kind = piece.circuit.gates[piece.circuit.output].kind;
    if (out_kind == GateKind::True || out_kind == GateKind::False) {
      // constant circuit: unsatisfiable or tautological constraint
      piece.trivial_true = out_kind == GateKind::True;
      if (!piece.trivial_true) piece.h.cnf.clauses.push_back({});
      continue;
    }
    piece.h = tseitin_encode(piece.circuit, next_z);
    next_z += static_cast<uint32_t>(piece.h.z_vars.size());
    uint32_t w = 0;
    for (uint32_t per : gates_per_vnode(piece.circuit)) w = std::max(w, per);
    enc.max_circuit_width = std::max(enc.max_circuit_width, w);
  }
  const uint32_t total_vars = next_z - 1;
  enc.cnf.num_vars = total_vars;

  // stage two: merge the vtree decompositions for the width telemetry and the
  // validity of the intermediate object
  {
    std::vector<const TreeDecomposition*> otds;
    std::vector<const Graph*> ogs;
    for (const auto& pc : ex.per_constraint)
      if (!pc.empty_scope) {
        otds.push_back(&pc.bags);
        ogs.push_back(&pc.vtree_graph);
      }
    Graph base_g = incidence_graph(f);
    auto merged = merge_tds(ex.transformed, base_g, otds, ogs);
    enc.merged_width = merged.width();
  }

  // stage three: global clause numbering, expanded bags, constraint vertices
  // dropped
  enc.td_h.tree_edges = ex.transformed.tree_edges;
  enc.td_h.bags.resize(ex.transformed.bags.size());
  for (size_t t = 0; t < ex.transformed.bags.size(); ++t) {
    auto& bag = enc.td_h.bags[t];
    for (uint32_t v : ex.transformed.bags[t])
      if (!is_constraint_vertex(f, v)) bag.push_back(v);
  }
  for (size_t ci = 0; ci < f.constraints.size(); ++ci) {
    Piece& piece = pieces[ci];
    const uint32_t clause_lo = static_cast<uint32_t>(enc.cnf.clauses.size());
    if (piece.h.cnf.clauses.empty() && piece.trivial_true) {
      enc.clauses_of_constraint.push_back({clause_lo, clause_lo});
      enc.z_of_constraint.push_back({});
      enc.circuits.push_back(std::move(piece.circuit));
      continue;
    }
    const uint32_t clause_base = total_vars + 1 + clause_lo;
    const bool has_circuit =
        !piece.circuit.gates.empty() &&
        piece.circuit.gates[piece.circuit.output].kind != GateKind::True &&
        piece.circuit.gates[piece.circuit.output].kind != GateKind::False;
    if (!ex.per_constraint[ci].empty_scope && has_circuit) {
      auto bc = td_of_encoding(piece.circuit, piece.h, ex.per_constraint[ci].bags,
                               ex.per_constraint[ci].vnode_global, clause_base);
      for (size_t t = 0; t < enc.td_h.bags.size(); ++t)
        enc.td_h.bags[t].insert(enc.td_h.bags[t].end(), bc.bags[t].begin(), bc.bags[t].end());
    } else {
      // empty clause from an unsatisfiable constraint: isolated vertex, park
      // it in the first bag
      for (size_t cl = 0; cl < piece.h.cnf.clauses.size(); ++cl)
        enc.td_h.bags[0].push_back(clause_base + static_cast<uint32_t>(cl));
    }
    for (auto& clause : piece.h.cnf.clauses) enc.cnf.clauses.push_back(std::move(clause));
    enc.clauses_of_constraint.push_back(
        {clause_lo, static_cast<uint32_t>(enc.cnf.clauses.size())});
    enc.z_of_constraint.push_back(piece.h.z_vars);
    enc.circuits.push_back(std::move(piece.circuit));
  }
  for (auto& bag : enc.td_h.bags) {
    std::sort(bag.begin(), bag.end());
    bag.erase(std::unique(bag.begin(), bag.end()), bag.end());
  }
  return enc;
}

std::string write_zmap(const EncodedSystem& enc) {
  std::ostringstream out;
  for (size_t ci = 0; ci < enc.z_of_constraint.size(); ++ci) {
    out << (ci + 1);
    for (Var z : enc.z_of_constraint[ci]) out << ' ' << z;
    out << '\n';
  }
  return out.str();
}

}  // namespace kc
