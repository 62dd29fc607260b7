#include <benchmark/benchmark.h>

#include <random>

#include "etisac/experiments.h"

using namespace etisac;

namespace {

CMat random_psd(int n) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
  return a * a.adjoint() / static_cast<double>(n);
}

// Schur matrix of a problem with many outer-product rows on one block.
struct SchurCase {
  ConeProblem prob;
  ConePoint x, z;
};

SchurCase schur_case(int n, int rows) {
  SchurCase c;
  c.prob.herm_dims = {n};
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int i = 0; i < rows; ++i) {
    CVec u(n);
    for (auto& v : u) v = {g(rng), g(rng)};
    ConeExpr e;
    e.herm.push_back({0, c.prob.add_op(HermOp::outer(u)), 1.0});
    c.prob.add_equality(e);
  }
  c.x.herm = {random_psd(n) + CMat::Identity(n, n)};
  c.z.herm = {random_psd(n) + CMat::Identity(n, n)};
  return c;
}

void BM_SchurSerial(benchmark::State& st) {
  const SchurCase c = schur_case(64, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(schur_complement_serial(c.prob, c.x, c.z));
}
void BM_SchurParallel(benchmark::State& st) {
  const SchurCase c = schur_case(64, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(schur_complement_parallel(c.prob, c.x, c.z));
}
BENCHMARK(BM_SchurSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SchurParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Beampattern(benchmark::State& st) {
  const UpaConfig upa{8, 8, 0.5};
  const CMat r = random_psd(64);
  const bool parallel = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(make_pattern(r, upa, -60, 60, -60, 60, 0.5, parallel));
}
BENCHMARK(BM_Beampattern)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FisherBlocks(benchmark::State& st) {
  const Scenario s = default_scenario();
  const SensingScenario sens = s.sensing();
  const CMat r = random_psd(64);
  for (auto _ : st) benchmark::DoNotOptimize(fisher_blocks(sens, r));
}
BENCHMARK(BM_FisherBlocks)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
