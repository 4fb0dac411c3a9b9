#include <cmath>
#include <limits>

#include "doctest.h"
#include "fex/error.hpp"
#include "fex/optimize.hpp"
#include "fex/pde.hpp"
#include "helpers.hpp"

using namespace fex;
using namespace fex::testing;

namespace {

// f(x) = sum x_i, so the gradient is identically one; with bias-corrected
// moments the Adam step size then equals lr(t)/(1 + eps_hat) exactly, which
// exposes the learning-rate schedule through iterate differences.
Objective unit_slope(std::vector<std::vector<double>>* trace) {
  return [trace](const std::vector<double>& x, std::vector<double>& g) {
    g.assign(x.size(), 1.0);
    if (trace != nullptr) trace->push_back(x);
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  };
}

Objective quadratic(std::vector<double> center, std::vector<double> weight) {
  return [c = std::move(center), w = std::move(weight)](
             const std::vector<double>& x, std::vector<double>& g) {
    g.resize(x.size());
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i] - c[i];
      f += 0.5 * w[i] * r * r;
      g[i] = w[i] * r;
    }
    return f;
  };
}

}  // namespace

TEST_SUITE("optimize") {

TEST_CASE("adam first step applies the bias-corrected full rate") {
  // from x0 with gradient g0: mhat = g0, vhat = g0^2, so
  // x1 = x0 - lr * g0 / (|g0| + eps_hat) exactly
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.steps = 1;
  const auto obj = quadratic({0.0}, {1.0});
  const OptResult r = adam_run(obj, {1.0}, cfg);
  CHECK(r.theta[0] == 1.0 - 0.1 * 1.0 / (1.0 + cfg.eps_hat));
  CHECK(r.steps_taken == 1);
  CHECK_FALSE(r.aborted);
}

TEST_CASE("constant schedule takes equal steps on a linear objective") {
  std::vector<std::vector<double>> trace;
  AdamConfig cfg;
  cfg.lr = 0.25;
  cfg.steps = 4;
  (void)adam_run(unit_slope(&trace), {0.0}, cfg);
  REQUIRE(trace.size() == 5);  // initial point plus one call per step
  for (int t = 1; t <= 4; ++t) {
    const double delta = trace[static_cast<std::size_t>(t - 1)][0] -
                         trace[static_cast<std::size_t>(t)][0];
    CHECK(rel_err(delta, 0.25 / (1.0 + cfg.eps_hat)) < 1e-14);
  }
}

TEST_CASE("cosine schedule spans full rate down to one percent") {
  std::vector<std::vector<double>> trace;
  AdamConfig cfg;
  cfg.lr = 1.0;
  cfg.steps = 5;
  cfg.schedule = LrSchedule::cosine;
  (void)adam_run(unit_slope(&trace), {0.0}, cfg);
  REQUIRE(trace.size() == 6);
  auto delta = [&](int t) {
    return trace[static_cast<std::size_t>(t - 1)][0] -
           trace[static_cast<std::size_t>(t)][0];
  };
  const double denom = 1.0 + cfg.eps_hat;
  CHECK(rel_err(delta(1), 1.0 / denom) < 1e-14);    // progress 0: full lr
  CHECK(rel_err(delta(3), 0.505 / denom) < 1e-14);  // cos(pi/2) midpoint
  CHECK(rel_err(delta(5), 0.01 / denom) < 1e-14);   // progress 1: lr/100
}

TEST_CASE("cosine schedule with a single step degrades to the full rate") {
  std::vector<std::vector<double>> trace;
  AdamConfig cfg;
  cfg.lr = 0.5;
  cfg.steps = 1;
  cfg.schedule = LrSchedule::cosine;
  (void)adam_run(unit_slope(&trace), {0.0}, cfg);
  const double delta = trace[0][0] - trace[1][0];
  CHECK(rel_err(delta, 0.5 / (1.0 + cfg.eps_hat)) < 1e-14);
}

TEST_CASE("adam converges on an anisotropic quadratic") {
  AdamConfig cfg;
  cfg.lr = 0.05;
  cfg.steps = 3000;
  const auto obj = quadratic({1.5, -2.0, 0.25}, {4.0, 0.5, 1.0});
  const OptResult r = adam_run(obj, {0.0, 0.0, 0.0}, cfg);
  CHECK_FALSE(r.aborted);
  CHECK(r.value < 1e-8);
  CHECK(std::fabs(r.theta[0] - 1.5) < 1e-3);
  CHECK(std::fabs(r.theta[1] + 2.0) < 1e-3);
}

TEST_CASE("adam aborts on a non-finite value and keeps the best iterate") {
  int calls = 0;
  std::vector<double> best_theta;
  double best_f = 1e300;
  Objective obj = [&](const std::vector<double>& x, std::vector<double>& g) {
    ++calls;
    if (calls > 3) {
      g.assign(1, std::nan(""));
      return std::nan("");
    }
    g.assign(1, x[0]);
    const double f = 0.5 * x[0] * x[0];
    if (f < best_f) {
      best_f = f;
      best_theta = x;
    }
    return f;
  };
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.steps = 50;
  const OptResult r = adam_run(obj, {1.0}, cfg);
  CHECK(r.aborted);
  CHECK(r.value == best_f);
  CHECK(r.theta == best_theta);
}

TEST_CASE("bfgs solves a coupled quadratic to machine precision") {
  // 0.5*(x+y-1)^2 + 0.5*(x-y-3)^2, minimum 0 at (2, -1)
  Objective obj = [](const std::vector<double>& x, std::vector<double>& g) {
    const double a = x[0] + x[1] - 1.0;
    const double b = x[0] - x[1] - 3.0;
    g = {a + b, a - b};
    return 0.5 * (a * a + b * b);
  };
  BfgsConfig cfg;
  const OptResult r = bfgs_run(obj, {10.0, 10.0}, cfg);
  CHECK_FALSE(r.aborted);
  CHECK(r.value < 1e-16);
  CHECK(std::fabs(r.theta[0] - 2.0) < 1e-7);
  CHECK(std::fabs(r.theta[1] + 1.0) < 1e-7);
}

TEST_CASE("bfgs drives rosenbrock below 1e-6 from the classic start") {
  Objective obj = [](const std::vector<double>& x, std::vector<double>& g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g = {-2.0 * a - 400.0 * x[0] * b, 200.0 * b};
    return a * a + 100.0 * b * b;
  };
  BfgsConfig cfg;
  cfg.max_steps = 200;
  const OptResult r = bfgs_run(obj, {-1.2, 1.0}, cfg);
  CHECK_FALSE(r.aborted);
  CHECK(r.value < 1e-6);
  CHECK(r.steps_taken <= 200);
}

TEST_CASE("bfgs aborts when no step can decrease a flat objective") {
  Objective obj = [](const std::vector<double>&, std::vector<double>& g) {
    g.assign(1, 1.0);  // claims descent exists, but the value never drops
    return 1.0;
  };
  BfgsConfig cfg;
  const OptResult r = bfgs_run(obj, {0.0}, cfg);
  CHECK(r.aborted);
  CHECK(r.value == 1.0);
  CHECK(r.theta == std::vector<double>{0.0});
}

TEST_CASE("bfgs stops immediately at a stationary start") {
  const auto obj = quadratic({3.0}, {2.0});
  BfgsConfig cfg;
  const OptResult r = bfgs_run(obj, {3.0}, cfg);
  CHECK_FALSE(r.aborted);
  CHECK(r.steps_taken == 0);
  CHECK(r.value == 0.0);
}

TEST_CASE("both stages abort cleanly on a non-finite starting value") {
  Objective obj = [](const std::vector<double>&, std::vector<double>& g) {
    g.assign(1, 0.0);
    return std::numeric_limits<double>::infinity();
  };
  CHECK(adam_run(obj, {0.0}, AdamConfig{}).aborted);
  CHECK(bfgs_run(obj, {0.0}, BfgsConfig{}).aborted);
}

TEST_CASE("two-stage tuning improves the loss and reports its inverse score") {
  const PdeProblem p = make_problem("poisson60", {.d = 3});
  const TreeSkeleton skel = build_skeleton(2, 3);
  const OperatorPool pool = builtin_pool({"0", "1", "Id", "x^2"});
  Rng rng(411);
  const SampleSet samples = sample_points(p, 120, 120, rng);
  const LossContext ctx(p, skel, pool, samples);

  const OperatorSequence e = {3, 0, 3};  // x^2 + x^2 can represent u*
  ParamVector theta0 = random_init_theta(skel, rng);
  const double initial = ctx.loss(e, theta0);

  AdamConfig t1;
  t1.lr = 0.01;
  t1.steps = 40;
  BfgsConfig t2;
  t2.max_steps = 40;
  const ScoreResult r = compute_score(ctx, e, theta0, t1, t2);
  CHECK(r.final_loss < initial);
  CHECK(r.final_loss < 1e-6);
  CHECK(r.score == score_from_loss(r.final_loss));
  CHECK(r.theta.size() == skel.theta_size);

  ParamVector bad;
  bad.values.assign(3, 0.0);
  CHECK_THROWS_AS(compute_score(ctx, e, bad, t1, t2), FexError);
}

}  // TEST_SUITE
