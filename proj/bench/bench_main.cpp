// Benchmark comparing the serial reference implementations against the
// production kernels (superposition grid solver, OpenMP-parallel E-step and
// Monte Carlo replicates).
//
// Usage: bds_bench [n_grid] [n_keys] [n_reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bds/em.hpp"
#include "bds/genfun.hpp"
#include "bds/sim.hpp"
#include "bds/spectral.hpp"

using namespace bds;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <class F>
double timed(F&& fn) {
  const double t0 = now_seconds();
  fn();
  return now_seconds() - t0;
}

}  // namespace

int main(int argc, char** argv) {
  const int n_grid = argc > 1 ? std::atoi(argv[1]) : 32;
  const int n_keys = argc > 2 ? std::atoi(argv[2]) : 24;
  const long n_reps = argc > 3 ? std::atol(argv[3]) : 20000;
#ifdef _OPENMP
  const int max_threads = omp_get_max_threads();
#else
  const int max_threads = 1;
#endif
  std::printf("grid %d, %d cache keys, %ld MC replicates, max threads %d\n\n", n_grid,
              n_keys, n_reps, max_threads);

  const RateTriple rates{0.0188, 0.00268, 0.0147};
  const GridSpec grid = GridSpec::make(n_grid);
  const OdeOptions ode;

  // 1. one generating-function grid: per-point reference vs superposition
  const double t_ref = timed([&] {
    (void)h1_solve_reference(GenFunKind::Probability, 1.0, 2.0, grid, rates, ode);
  });
  const double t_fast = timed([&] {
    for (int i = 0; i < 20; ++i)
      (void)h1_solve(GenFunKind::Probability, 1.0, 2.0, grid, rates, ode);
  }) / 20;
  std::printf("grid solve %-4d  reference %.4fs   production %.6fs   speedup %.0fx\n",
              n_grid, t_ref, t_fast, t_ref / t_fast);

  // 2. E-step style cache fill: 1 thread vs all threads
  std::vector<std::pair<RateTriple, double>> keys;
  for (int i = 0; i < n_keys; ++i)
    keys.push_back({RateTriple{0.05 + 0.001 * i, 0.01, 0.08 + 0.0005 * i}, 0.4});
  SpectralOptions sopt;
  sopt.n_grid = n_grid;
  const double t_serial = timed([&] {
    SpectralCache cache(sopt, true, 1);
    cache.prepare(keys);
  });
  const double t_par = timed([&] {
    SpectralCache cache(sopt, true, max_threads);
    cache.prepare(keys);
  });
  std::printf("cache fill %-4d  1 thread  %.4fs   %d threads  %.4fs   speedup %.2fx\n",
              n_keys, t_serial, max_threads, t_par, t_serial / t_par);

  // 3. Monte Carlo replicates: 1 thread vs all threads
  const double t_mc1 = timed([&] {
    (void)mc_transition(10, 2.0, rates, n_reps, 7, n_grid, 10000, 1);
  });
  const double t_mcp = timed([&] {
    (void)mc_transition(10, 2.0, rates, n_reps, 7, n_grid, 10000, max_threads);
  });
  std::printf("mc reps %-6ld  1 thread  %.4fs   %d threads  %.4fs   speedup %.2fx\n",
              n_reps, t_mc1, max_threads, t_mcp, t_mc1 / t_mcp);
  return 0;
}
