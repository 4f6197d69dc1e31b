#include <benchmark/benchmark.h>

#include "kc/compile.hpp"
#include "kc/dpcount.hpp"
#include "kc/toolkit.hpp"

namespace {

kc::ConstraintSystem xor_chain(uint32_t n) {
  kc::ConstraintSystem f;
  f.num_vars = n;
  for (kc::Var v = 1; v < n; ++v)
    f.constraints.push_back(kc::Constraint::xor_of({kc::Lit::pos(v), kc::Lit::pos(v + 1)}, false));
  return f;
}

kc::TreeDecomposition chain_path(const kc::ConstraintSystem& f) {
  kc::TreeDecomposition td;
  for (uint32_t i = 0; i < f.constraints.size(); ++i) {
    std::vector<uint32_t> bag{i + 1, i + 2, f.num_vars + 1 + i};
    std::sort(bag.begin(), bag.end());
    td.bags.push_back(std::move(bag));
    if (i) td.tree_edges.emplace_back(i - 1, i);
  }
  return td;
}

void BM_DpCountXorChain(benchmark::State& state) {
  const uint32_t n = static_cast<uint32_t>(state.range(0));
  auto f = xor_chain(n);
  auto ntd = kc::make_nice(chain_path(f));
  for (auto _ : state) {
    auto count = kc::dp_count(f, ntd, kc::JoinMode::ClauseModulo);
    benchmark::DoNotOptimize(count);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_DpCountXorChain)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_DpJoinModes(benchmark::State& state) {
  const auto mode = static_cast<kc::JoinMode>(state.range(0));
  auto f = kc::gen_random_system(17, 12, 7, kc::KindMix::parse("clause,xor,mod3"));
  auto ntd = kc::make_nice(kc::heuristic_td(kc::incidence_graph(f)));
  for (auto _ : state) {
    auto count = kc::dp_count(f, ntd, mode);
    benchmark::DoNotOptimize(count);
  }
}
BENCHMARK(BM_DpJoinModes)
    ->Arg(static_cast<int>(kc::JoinMode::Naive))
    ->Arg(static_cast<int>(kc::JoinMode::Auto));

void BM_CompileSystem(benchmark::State& state) {
  auto f = kc::gen_random_system(23, static_cast<uint32_t>(state.range(0)), 6,
                                 kc::KindMix::parse("clause,xor,mod3"));
  for (auto _ : state) {
    auto count = kc::count_via_compilation(f);
    benchmark::DoNotOptimize(count);
  }
}
BENCHMARK(BM_CompileSystem)->Arg(10)->Arg(14);

void BM_CliqueCompiled(benchmark::State& state) {
  auto inst = kc::gen_clique_complete(static_cast<uint32_t>(state.range(0)), 2);
  for (auto _ : state) {
    auto count = kc::count_via_compilation(inst.system, inst.td);
    benchmark::DoNotOptimize(count);
  }
}
BENCHMARK(BM_CliqueCompiled)->Arg(4)->Arg(5);

}  // namespace
