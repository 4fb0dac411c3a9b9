#include <cmath>

#include "doctest.h"
#include "fex/error.hpp"
#include "fex/pde.hpp"
#include "helpers.hpp"

using namespace fex;
using namespace fex::testing;

namespace {

PdeProblem poisson5() {
  ProblemOverrides ov;
  ov.d = 5;
  return make_problem("poisson60", ov);
}

}  // namespace

TEST_SUITE("pde") {

TEST_CASE("solution jets match finite differences for all three families") {
  Rng rng(201);
  for (const char* name : {"poisson60", "reactdiff60", "semilinear55"}) {
    ProblemOverrides ov;
    ov.d = 4;
    const PdeProblem p = make_problem(name, ov);
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform(p.lo + 0.05, p.hi - 0.05);
    const Jet jet = p.solution.jet(x.data(), 4);
    CAPTURE(name);
    CHECK(jet.value == p.solution.value(x.data(), 4));
    const double h = 1e-5;
    double fd_lap = 0.0;
    for (int c = 0; c < 4; ++c) {
      std::vector<double> up = x, dn = x;
      up[static_cast<std::size_t>(c)] += h;
      dn[static_cast<std::size_t>(c)] -= h;
      const double vu = p.solution.value(up.data(), 4);
      const double vd = p.solution.value(dn.data(), 4);
      CHECK(rel_err(jet.grad[static_cast<std::size_t>(c)],
                    (vu - vd) / (2 * h)) < 1e-8);
      fd_lap += (vu - 2 * jet.value + vd) / (h * h);
    }
    CHECK(rel_err(jet.lap, fd_lap) < 1e-5);
  }
}

TEST_CASE("the manufactured right-hand side closes the equation") {
  Rng rng(202);
  for (const char* name : {"poisson60", "reactdiff60", "semilinear55"}) {
    ProblemOverrides ov;
    ov.d = 3;
    const PdeProblem p = make_problem(name, ov);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> x(3);
      for (auto& v : x) v = rng.uniform(p.lo, p.hi);
      const Jet u = p.solution.jet(x.data(), 3);
      double lhs = -p.nu * u.lap + p.mu * u.value;
      if (p.nonlinear_u2) lhs += u.value * u.value;
      CHECK(lhs == manufactured_rhs(p, x.data()));
    }
  }
}

TEST_CASE("problem catalog: fields, overrides, unknown names") {
  const PdeProblem poisson = make_problem("poisson60");
  CHECK(poisson.d == 60);
  CHECK(poisson.mu == 0.0);
  CHECK(poisson.lo == -1.0);
  CHECK(poisson.lambda == 100.0);
  const PdeProblem react = make_problem("reactdiff60");
  CHECK(react.lo == 0.0);
  CHECK(react.mu == 1.0);
  CHECK_FALSE(react.nonlinear_u2);
  const PdeProblem semi = make_problem("semilinear55");
  CHECK(semi.d == 55);
  CHECK(semi.nonlinear_u2);

  ProblemOverrides ov;
  ov.d = 7;
  ov.lambda = 3.0;
  const PdeProblem scaled = make_problem("poisson60", ov);
  CHECK(scaled.d == 7);
  CHECK(scaled.lambda == 3.0);

  CHECK_THROWS_WITH_AS(make_problem("heat"), doctest::Contains("heat"),
                       FexError);
}

TEST_CASE("interior samples are strictly inside, boundary samples pinned") {
  const PdeProblem p = poisson5();
  Rng rng(203);
  const SampleSet set = sample_points(p, 300, 300, rng);
  REQUIRE(set.n_interior() == 300);
  REQUIRE(set.n_boundary() == 300);
  for (double v : set.interior) {
    CHECK(v > p.lo);
    CHECK(v < p.hi);
  }
  int lo_hits = 0;
  std::vector<int> pinned_counts(5, 0);
  for (int j = 0; j < 300; ++j) {
    const double* pt = set.boundary.data() + j * 5;
    int on_face = 0;
    for (int i = 0; i < 5; ++i) {
      if (pt[i] == p.lo || pt[i] == p.hi) {
        ++on_face;
        ++pinned_counts[static_cast<std::size_t>(i)];
        if (pt[i] == p.lo) ++lo_hits;
      } else {
        CHECK(pt[i] > p.lo);
        CHECK(pt[i] < p.hi);
      }
    }
    CHECK(on_face == 1);
  }
  // pinned coordinate and face choice are roughly uniform
  for (int c : pinned_counts) CHECK(c > 20);
  CHECK(lo_hits > 90);
  CHECK(lo_hits < 210);
}

TEST_CASE("sampling is a pure function of the stream") {
  const PdeProblem p = poisson5();
  Rng a(204), b(204);
  const SampleSet s1 = sample_points(p, 50, 50, a);
  const SampleSet s2 = sample_points(p, 50, 50, b);
  CHECK(s1.interior == s2.interior);
  CHECK(s1.boundary == s2.boundary);
}

TEST_CASE("tabulated loss equals the serial reference") {
  const PdeProblem p = poisson5();
  Rng rng(205);
  OperatorPool pool = mixed_pool(rng);
  const SampleSet samples = sample_points(p, 120, 80, rng);
  for (int depth : {1, 2, 3}) {
    const TreeSkeleton skel = build_skeleton(depth, p.d);
    const LossContext ctx(p, skel, pool, samples);
    for (int trial = 0; trial < 10; ++trial) {
      const OperatorSequence e = random_sequence(skel, pool, rng);
      ParamVector theta = random_init_theta(skel, rng);
      for (auto& v : theta.values) v += 0.2 * rng.uniform(-1.0, 1.0);
      const double fast = ctx.loss(e, theta);
      const double ref = loss_reference(p, skel, pool, e, theta, samples);
      CAPTURE(depth);
      CAPTURE(trial);
      CHECK(std::fabs(fast - ref) <= 1e-12 * std::max(1.0, std::fabs(ref)));
    }
  }
}

TEST_CASE("loss gradient matches finite differences of the loss") {
  const PdeProblem p = poisson5();
  Rng rng(206);
  OperatorPool pool = mixed_pool(rng);
  const SampleSet samples = sample_points(p, 60, 40, rng);
  const TreeSkeleton skel = build_skeleton(3, p.d);
  const LossContext ctx(p, skel, pool, samples);
  for (int trial = 0; trial < 5; ++trial) {
    const OperatorSequence e = random_sequence(skel, pool, rng);
    ParamVector theta = random_init_theta(skel, rng);
    for (auto& v : theta.values) v += 0.2 * rng.uniform(-1.0, 1.0);
    const LossGradResult lg = ctx.loss_grad(e, theta);
    CHECK(lg.value == ctx.loss(e, theta));
    const double h = 1e-6;
    CAPTURE(trial);
    for (int q = 0; q < skel.theta_size; ++q) {
      ParamVector up = theta, dn = theta;
      up.values[static_cast<std::size_t>(q)] += h;
      dn.values[static_cast<std::size_t>(q)] -= h;
      const double fd = (ctx.loss(e, up) - ctx.loss(e, dn)) / (2 * h);
      CAPTURE(q);
      CHECK(rel_err(lg.grad[static_cast<std::size_t>(q)], fd) < 2e-4);
    }
  }
}

TEST_CASE("semilinear gradient includes the quadratic reaction term") {
  ProblemOverrides ov;
  ov.d = 3;
  const PdeProblem p = make_problem("semilinear55", ov);
  Rng rng(207);
  const OperatorPool pool = builtin_pool({"Id", "x^2", "cos"});
  const SampleSet samples = sample_points(p, 40, 30, rng);
  const TreeSkeleton skel = build_skeleton(2, p.d);
  const LossContext ctx(p, skel, pool, samples);
  const OperatorSequence e{2, 0, 1};
  ParamVector theta = random_init_theta(skel, rng);
  const LossGradResult lg = ctx.loss_grad(e, theta);
  const double h = 1e-6;
  for (int q = 0; q < skel.theta_size; ++q) {
    ParamVector up = theta, dn = theta;
    up.values[static_cast<std::size_t>(q)] += h;
    dn.values[static_cast<std::size_t>(q)] -= h;
    const double fd = (ctx.loss(e, up) - ctx.loss(e, dn)) / (2 * h);
    CHECK(rel_err(lg.grad[static_cast<std::size_t>(q)], fd) < 2e-4);
  }
}

TEST_CASE("an exactly representable solution zeroes the loss") {
  const PdeProblem p = poisson5();
  Rng rng(208);
  const OperatorPool pool = builtin_pool({"0", "x^2"});
  const SampleSet samples = sample_points(p, 200, 200, rng);
  const TreeSkeleton skel = build_skeleton(2, p.d);
  const LossContext ctx(p, skel, pool, samples);
  // 0.5 sum x^2 as one leaf, the other contributing exactly zero
  const OperatorSequence e{1, 0, 0};
  ParamVector theta;
  theta.values.assign(static_cast<std::size_t>(skel.theta_size), 0.0);
  for (int i = 0; i < 5; ++i) theta.values[static_cast<std::size_t>(i)] = 0.5;
  CHECK(ctx.loss(e, theta) < 1e-20);
  CHECK(loss_reference(p, skel, pool, e, theta, samples) < 1e-20);
}

TEST_CASE("the zero expression leaves exactly the squared source term") {
  Rng rng(209);
  const OperatorPool pool = builtin_pool({"0", "Id"});
  for (int d : {5, 60}) {
    ProblemOverrides ov;
    ov.d = d;
    const PdeProblem p = make_problem("poisson60", ov);
    // interior term isolated by sampling no boundary points
    Rng local = rng.child(static_cast<std::uint64_t>(d));
    const SampleSet samples = sample_points(p, 137, 0, local);
    const TreeSkeleton skel = build_skeleton(2, p.d);
    const LossContext ctx(p, skel, pool, samples);
    ParamVector theta;
    theta.values.assign(static_cast<std::size_t>(skel.theta_size), 0.0);
    const double expected = static_cast<double>(d) * static_cast<double>(d);
    CHECK(ctx.loss({0, 0, 0}, theta) == expected);
  }
}

TEST_CASE("the boundary weight enters the loss linearly") {
  Rng rng(210);
  OperatorPool pool = mixed_pool(rng);
  ProblemOverrides ov;
  ov.d = 4;
  PdeProblem p = make_problem("reactdiff60", ov);
  const SampleSet samples = sample_points(p, 80, 60, rng);
  const TreeSkeleton skel = build_skeleton(2, p.d);
  const OperatorSequence e = random_sequence(skel, pool, rng);
  ParamVector theta = random_init_theta(skel, rng);

  auto loss_at = [&](double lambda) {
    PdeProblem q = p;
    q.lambda = lambda;
    const LossContext ctx(q, skel, pool, samples);
    return ctx.loss(e, theta);
  };
  const double l1 = loss_at(1.0), l10 = loss_at(10.0), l100 = loss_at(100.0);
  const double boundary = (l10 - l1) / 9.0;
  const double interior = l1 - boundary;
  CHECK(std::fabs(l100 - (interior + 100.0 * boundary)) <=
        1e-12 * std::max(1.0, std::fabs(l100)));
}

TEST_CASE("a division-floored point contributes the fixed penalty") {
  ProblemOverrides ov;
  ov.d = 2;
  const PdeProblem p = make_problem("poisson60", ov);
  OperatorPool pool = builtin_pool({"0", "Id"});
  pool.binary = {BinaryOp::div};
  Rng rng(211);
  const SampleSet samples = sample_points(p, 33, 0, rng);
  const TreeSkeleton skel = build_skeleton(2, p.d);
  const LossContext ctx(p, skel, pool, samples);
  ParamVector theta;
  theta.values.assign(static_cast<std::size_t>(skel.theta_size), 0.0);
  theta.values[0] = 1.0;  // x_0 / 0: every point floors
  CHECK(ctx.loss({1, 0, 0}, theta) == kPenaltyLoss);
  const LossGradResult lg = ctx.loss_grad({1, 0, 0}, theta);
  CHECK(lg.value == kPenaltyLoss);
  for (double g : lg.grad) CHECK(g == 0.0);
}

TEST_CASE("dimension mismatches are rejected up front") {
  const PdeProblem p = poisson5();
  Rng rng(212);
  const OperatorPool pool = builtin_pool({"Id"});
  const SampleSet samples = sample_points(p, 10, 10, rng);
  const TreeSkeleton wrong = build_skeleton(2, 4);
  CHECK_THROWS_AS(LossContext(p, wrong, pool, samples), FexError);
}

}  // TEST_SUITE
