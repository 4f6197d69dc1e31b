#include <benchmark/benchmark.h>

#include "kc/obdd.hpp"
#include "kc/sdnnf.hpp"

namespace {

std::vector<kc::Lit> pos_lits(uint32_t n) {
  std::vector<kc::Lit> v;
  for (uint32_t i = 1; i <= n; ++i) v.push_back(kc::Lit::pos(i));
  return v;
}

std::vector<kc::Var> iota_vars(uint32_t n) {
  std::vector<kc::Var> v(n);
  for (uint32_t i = 0; i < n; ++i) v[i] = i + 1;
  return v;
}

void BM_BuildCardinalityObdd(benchmark::State& state) {
  const uint32_t n = static_cast<uint32_t>(state.range(0));
  auto c = kc::Constraint::cardinality(pos_lits(n), n / 2);
  auto pi = iota_vars(n);
  for (auto _ : state) {
    auto b = kc::build_obdd(c, pi);
    benchmark::DoNotOptimize(b);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_BuildCardinalityObdd)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_ObddApplyAnd(benchmark::State& state) {
  const uint32_t n = static_cast<uint32_t>(state.range(0));
  auto pi = iota_vars(n);
  auto b1 = kc::build_obdd(kc::Constraint::cardinality(pos_lits(n), n / 3), pi);
  auto b2 = kc::build_obdd(kc::Constraint::sum_modulo(pos_lits(n), 5, 2), pi);
  for (auto _ : state) {
    auto b = kc::obdd_apply(kc::BoolOp::And, b1, b2);
    benchmark::DoNotOptimize(b);
  }
}
BENCHMARK(BM_ObddApplyAnd)->Arg(32)->Arg(128);

void BM_ObddToSdnnf(benchmark::State& state) {
  const uint32_t n = static_cast<uint32_t>(state.range(0));
  auto c = kc::Constraint::sum_modulo(pos_lits(n), 5, 1);
  auto pi = iota_vars(n);
  auto b = kc::build_obdd(c, pi);
  auto vt = kc::Vtree::balanced(pi);
  for (auto _ : state) {
    auto d = kc::obdd_to_sdnnf(b, vt);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_ObddToSdnnf)->Arg(16)->Arg(64);

void BM_CountDsdnnf(benchmark::State& state) {
  const uint32_t n = static_cast<uint32_t>(state.range(0));
  auto c = kc::Constraint::cardinality(pos_lits(n), n / 2);
  auto b = kc::build_obdd(c, iota_vars(n));
  auto d = kc::obdd_to_sdnnf(b, kc::Vtree::balanced(iota_vars(n)));
  for (auto _ : state) {
    auto cnt = kc::count_dsdnnf(d, n);
    benchmark::DoNotOptimize(cnt);
  }
}
BENCHMARK(BM_CountDsdnnf)->Arg(32)->Arg(128);

}  // namespace
