#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kc/compile.hpp"
#include "kc/dpcount.hpp"
#include "kc/encode.hpp"
#include "kc/sysio.hpp"
#include "kc/toolkit.hpp"

namespace {

kc::ConstraintSystem load(const std::string& path) {
  return kc::load_system(path, &kc::toolkit_registry());
}

std::optional<kc::TreeDecomposition> load_td_opt(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return kc::load_td(path);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw kc::Error("cannot write " + path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge compilation and exact counting for slim constraint systems"};
  app.require_subcommand(1);

  // ---- compile ----
  auto* cmd_compile = app.add_subcommand("compile", "compile a system to a d-SDNNF circuit");
  std::string in_path, td_path, out_nnf, out_vtree, out_stats, out_map, out_cnf, out_zmap;
  cmd_compile->add_option("-i,--input", in_path, "input .csys file")->required();
  cmd_compile->add_option("-t,--td", td_path, "tree decomposition (.td); heuristic otherwise");
  cmd_compile->add_option("-o,--output", out_nnf, "output circuit (.nnf)")->required();
  cmd_compile->add_option("--vtree", out_vtree, "output vtree file");
  cmd_compile->add_option("--map", out_map, "output gate-to-vtree map file");
  cmd_compile->add_option("--stats", out_stats, "write compilation stats as JSON");
  cmd_compile->add_option("--cnf", out_cnf, "write the Tseitin encoding as DIMACS");
  cmd_compile->add_option("--zmap", out_zmap, "write the per-constraint auxiliary variables");

  // ---- count ----
  auto* cmd_count = app.add_subcommand("count", "count models exactly");
  std::string count_in, count_td, engine = "compiled", join = "naive";
  cmd_count->add_option("-i,--input", count_in, "input .csys file")->required();
  cmd_count->add_option("-t,--td", count_td, "tree decomposition (.td)");
  cmd_count->add_option("--engine", engine, "compiled | dp | dp-fast | brute")
      ->check(CLI::IsMember({"compiled", "dp", "dp-fast", "brute"}));
  cmd_count->add_option("--join", join, "naive | onesided | clause-modulo | auto")
      ->check(CLI::IsMember({"naive", "onesided", "clause-modulo", "auto"}));

  // ---- gen ----
  auto* cmd_gen = app.add_subcommand("gen", "generate instances");
  cmd_gen->require_subcommand(1);
  auto* gen_clique = cmd_gen->add_subcommand("clique", "ordered k-clique system on K_n");
  uint32_t cl_n = 4, cl_k = 2;
  std::string gen_out, gen_td_out;
  gen_clique->add_option("--n", cl_n, "graph vertices (complete graph)")->required();
  gen_clique->add_option("--k", cl_k, "clique size")->required();
  gen_clique->add_option("-o,--output", gen_out, "output .csys")->required();
  gen_clique->add_option("--td", gen_td_out, "emit the path decomposition (.td)");

  auto* gen_random = cmd_gen->add_subcommand("random", "seeded random system");
  uint64_t seed = 1;
  uint32_t rn_vars = 8, rn_cons = 5;
  std::string mix_tokens = "clause,xor";
  std::string rnd_out;
  gen_random->add_option("--seed", seed, "rng seed")->required();
  gen_random->add_option("--vars", rn_vars, "variable count")->required();
  gen_random->add_option("--cons", rn_cons, "constraint count")->required();
  gen_random->add_option("--mix", mix_tokens, "kinds: clause,xor,mod<k>,card,threshold,smallscope");
  gen_random->add_option("-o,--output", rnd_out, "output .csys (stdout otherwise)");

  // ---- check ----
  auto* cmd_check = app.add_subcommand("check", "cross-engine consistency check");
  std::string check_in, check_td, engines = "all";
  cmd_check->add_option("-i,--input", check_in, "input .csys file")->required();
  cmd_check->add_option("--td", check_td, "tree decomposition (.td)");
  cmd_check->add_option("--engines", engines, "engine selection (all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_compile) {
      auto f = load(in_path);
      auto td = load_td_opt(td_path);
      kc::CompileStats stats;
      auto d = kc::compile_system(f, td, &stats);
      write_file(out_nnf, kc::write_nnf(d));
      if (!out_vtree.empty() && d.vtree) write_file(out_vtree, kc::write_vtree(*d.vtree));
      if (!out_map.empty()) write_file(out_map, kc::write_vtree_map(d));
      if (!out_stats.empty()) write_file(out_stats, kc::stats_json(stats));
      if (!out_cnf.empty() || !out_zmap.empty()) {
        auto base = td ? *td : kc::heuristic_td(kc::incidence_graph(f));
        auto enc = kc::encode_system(f, base);
        if (!out_cnf.empty()) write_file(out_cnf, kc::write_dimacs(enc.cnf));
        if (!out_zmap.empty()) write_file(out_zmap, kc::write_zmap(enc));
      }
      std::cout << "compiled " << d.gates.size() << " gates via " << stats.route << " route\n";
      return 0;
    }
    if (*cmd_count) {
      auto f = load(count_in);
      auto td = load_td_opt(count_td);
      kc::BigInt result;
      if (engine == "brute") {
        result = kc::brute_force_count(f);
      } else if (engine == "compiled") {
        kc::CompileStats stats;
        result = kc::count_via_compilation(f, td, &stats);
        std::cerr << "route: " << stats.route << ", gates: " << stats.final_gates
                  << ", peak blocks: " << stats.peak_blocks << "\n";
      } else {
        kc::JoinMode mode = kc::JoinMode::Naive;
        if (engine == "dp-fast")
          mode = kc::JoinMode::Auto;
        else if (join == "onesided")
          mode = kc::JoinMode::OneSided;
        else if (join == "clause-modulo")
          mode = kc::JoinMode::ClauseModulo;
        else if (join == "auto")
          mode = kc::JoinMode::Auto;
        auto base = td ? *td : kc::heuristic_td(kc::incidence_graph(f));
        auto ntd = kc::make_nice(base);
        auto t0 = std::chrono::steady_clock::now();
        result = kc::dp_count(f, ntd, mode);
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
        std::cerr << "width: " << base.width() << ", nodes: " << ntd.nodes.size() << ", ms: " << ms
                  << "\n";
      }
      std::cout << result.get_str() << "\n";
      return 0;
    }
    if (*gen_clique) {
      auto inst = kc::gen_clique_complete(cl_n, cl_k);
      kc::save_system(inst.system, gen_out);
      if (!gen_td_out.empty())
        kc::save_td(inst.td,
                    inst.system.num_vars + static_cast<uint32_t>(inst.system.constraints.size()),
                    gen_td_out);
      std::cout << "wrote " << gen_out << " with " << inst.system.num_vars << " variables\n";
      return 0;
    }
    if (*gen_random) {
      auto f = kc::gen_random_system(seed, rn_vars, rn_cons, kc::KindMix::parse(mix_tokens));
      if (rnd_out.empty())
        std::cout << kc::serialize_system(f);
      else
        kc::save_system(f, rnd_out);
      return 0;
    }
    if (*cmd_check) {
      auto f = load(check_in);
      auto res = kc::check_all(f, load_td_opt(check_td));
      std::cout << res.summary();
      return res.agree ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
