#include <benchmark/benchmark.h>

#include "regmod/bilevel.hpp"
#include "regmod/cq.hpp"
#include "regmod/fixtures.hpp"
#include "regmod/numerics.hpp"
#include "regmod/projection.hpp"
#include "regmod/regularity.hpp"

using namespace regmod;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

void BM_ExprGrad(benchmark::State& state) {
  Expr e = Expr::parse("x2 - p1*x1 + abs(p1) + 1 + exp(sin(x1))*x2^3 / (2 + cos(p1))", 1, 2);
  Vec p = vec({0.3});
  Vec x = vec({0.2, -0.7});
  Vec g;
  for (auto _ : state) {
    benchmark::DoNotOptimize(e.eval_with_grad(p, x, g));
  }
}
BENCHMARK(BM_ExprGrad);

void BM_NumericalRank(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Mat A = Mat::Random(n, n);
  A.row(n - 1) = A.row(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(numerical_rank(A).rank);
  }
}
BENCHMARK(BM_NumericalRank)->Arg(2)->Arg(8)->Arg(32);

void BM_Project(benchmark::State& state) {
  static const char* names[] = {"SYS-BALL", "SYS-EX1", "SYS-RANKDROP"};
  const auto sys = load_fixture(names[state.range(0)]).system;
  state.SetLabel(names[state.range(0)]);
  Vec p = vec({0.1});
  Vec v = vec({0.1, -1.7});
  for (auto _ : state) {
    benchmark::DoNotOptimize(project(sys, p, v).distance);
  }
}
BENCHMARK(BM_Project)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

void BM_CheckRcrcq(benchmark::State& state) {
  const auto sys = load_fixture("SYS-EX1").system;
  RcrcqOptions o;
  o.n_samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_rcrcq(sys, vec({0}), vec({0, -1}), o).verdict);
  }
}
BENCHMARK(BM_CheckRcrcq)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_RModulus(benchmark::State& state) {
  const auto sys = load_fixture("SYS-EX1").system;
  ScheduleOptions o;
  o.schedule.steps = 6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_r_modulus(sys, vec({0}), vec({0, -1}), o).diverging);
  }
}
BENCHMARK(BM_RModulus)->Unit(benchmark::kMillisecond);

void BM_SolveLower(benchmark::State& state) {
  const auto blp = BilevelProblem::from_file(load_fixture("BLPP-BOX"));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_lower(blp, vec({0.3})).phi);
  }
}
BENCHMARK(BM_SolveLower)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
