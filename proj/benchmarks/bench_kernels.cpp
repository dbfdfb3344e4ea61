#include "tpsmg/dgop.hpp"
#include "tpsmg/fastdiag.hpp"
#include "tpsmg/tensor.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace tpsmg;

namespace
{

Vector random_vector(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1., 1.);
  Vector v(n);
  for (double &x : v)
    x = u(rng);
  return v;
}

// args: dimension, degree
void BM_apply_1d(benchmark::State &state)
{
  const int d = static_cast<int>(state.range(0)), n = static_cast<int>(state.range(1)) + 1;
  const std::size_t size = static_cast<std::size_t>(tensor::ipow(n, d));
  const Vector mat = random_vector(static_cast<std::size_t>(n * n), 1), in = random_vector(size, 2);
  Vector out(size);
  for (auto _ : state)
    for (int dir = 0; dir < d; ++dir)
      {
        tensor::apply_1d(d, n, dir, mat.data(), in.data(), out.data());
        benchmark::DoNotOptimize(out.data());
      }
  state.counters["flops"] = benchmark::Counter(static_cast<double>(d * tensor::apply_1d_flops(d, n)),
                                               benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_apply_1d)->ArgsProduct({{2, 3}, {3, 7, 15}});

// args: dimension, degree, level, distorted
void BM_vmult(benchmark::State &state)
{
  const int d = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1));
  const int level = static_cast<int>(state.range(2));
  MeshHierarchy mesh = build_hierarchy(d, 2, level);
  if (state.range(3) != 0)
    distort(mesh, 0.25, 2024);
  const DGOperator op(mesh, static_cast<std::size_t>(level), k, 4.);
  const Vector src = random_vector(op.n_dofs(), 3);
  Vector dst(op.n_dofs());
  for (auto _ : state)
    {
      op.vmult(dst, src);
      benchmark::DoNotOptimize(dst.data());
    }
  state.counters["DoF/s"] = benchmark::Counter(static_cast<double>(op.n_dofs()),
                                               benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_vmult)
  ->Args({2, 3, 6, 0})
  ->Args({2, 3, 6, 1})
  ->Args({2, 7, 5, 0})
  ->Args({3, 3, 3, 0})
  ->Args({3, 3, 3, 1})
  ->Unit(benchmark::kMillisecond);

// args: dimension, degree, vertex patch
void BM_apply_inverse(benchmark::State &state)
{
  const int d = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1));
  const MeshHierarchy mesh = build_hierarchy(d, 2, 1);
  const DGOperator op(mesh, 1, k, 1.);
  const LocalSolver solver = state.range(2) != 0
                               ? build_patch_solver(op, enumerate_vertex_patches(op.level()).front(), false)
                               : build_cell_solver(op, 0, false, false);
  const Vector r = random_vector(solver.size(), 4);
  Vector x(solver.size());
  for (auto _ : state)
    {
      solver.apply_inverse(r, x);
      benchmark::DoNotOptimize(x.data());
    }
  state.counters["flops"] = benchmark::Counter(static_cast<double>(solver.apply_inverse_flops()),
                                               benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_apply_inverse)->ArgsProduct({{2, 3}, {3, 7, 15}, {0, 1}});

} // namespace

BENCHMARK_MAIN();
