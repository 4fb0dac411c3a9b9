#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fex/optimize.hpp"
#include "fex/pde.hpp"
#include "fex/rng.hpp"
#include "fex/tree.hpp"
#include "fex/unary_ops.hpp"

using namespace fex;

namespace {

double time_ms(int reps, const std::function<void()>& fn) {
  fn();  // warm up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() /
         static_cast<double>(reps);
}

}  // namespace

// Races the tabulated OpenMP loss kernel against the serial direct-evaluation
// reference on a 60-D problem, across thread counts.
int main() {
  const PdeProblem problem = make_problem("poisson60");
  const TreeSkeleton skel = build_skeleton(2, problem.d);

  OperatorPool pool;
  for (const char* name : {"0", "1", "Id", "x^2", "x^3", "exp", "sin", "cos"})
    pool.unary.push_back(make_builtin_op(name));

  Rng rng(31);
  const SampleSet samples = sample_points(problem, 500, 1000, rng);
  const OperatorSequence e{3, 0, 3};  // x^2 leaves joined by addition
  Rng theta_rng = rng.child(rng_key("theta"));
  const ParamVector theta = random_init_theta(skel, theta_rng);

  const LossContext ctx(problem, skel, pool, samples);

  const double serial_ms = time_ms(20, [&] {
    loss_reference(problem, skel, pool, e, theta, samples);
  });
  std::printf("%-28s %10.3f ms/eval\n", "serial reference", serial_ms);

  const double table_build_ms = time_ms(5, [&] {
    LossContext rebuilt(problem, skel, pool, samples);
    (void)rebuilt;
  });
  std::printf("%-28s %10.3f ms (one-time)\n", "leaf table build", table_build_ms);

#ifdef _OPENMP
  const int max_threads = omp_get_max_threads();
#else
  const int max_threads = 1;
#endif
  const double base = serial_ms;
  for (int threads = 1; threads <= max_threads; threads *= 2) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    const double loss_ms = time_ms(50, [&] { ctx.loss(e, theta); });
    const double grad_ms = time_ms(50, [&] { ctx.loss_grad(e, theta); });
    std::printf("tabulated loss  %2d thr      %10.3f ms/eval   %6.1fx vs serial\n",
                threads, loss_ms, base / loss_ms);
    std::printf("tabulated grad  %2d thr      %10.3f ms/eval\n", threads,
                grad_ms);
  }

  const double a = ctx.loss(e, theta);
  const double b = loss_reference(problem, skel, pool, e, theta, samples);
  std::printf("agreement: |tabulated - reference| = %.3e\n", a - b < 0 ? b - a : a - b);
  return 0;
}
