// Acceptance gate: every release criterion checked end to end at its stated
// tolerance, one pass/fail line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fex/controller.hpp"
#include "fex/error.hpp"
#include "fex/eval.hpp"
#include "fex/eval_report.hpp"
#include "fex/optimize.hpp"
#include "fex/pde.hpp"
#include "fex/rng.hpp"
#include "fex/run_config.hpp"
#include "fex/search.hpp"
#include "fex/serialize.hpp"
#include "fex/transnet.hpp"
#include "fex/tree.hpp"
#include "fex/unary_ops.hpp"
#include "helpers.hpp"

using namespace fex;
using namespace fex::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

// The grid-search shape optimum favors value fit alone (its curve is nearly
// flat past 1 and dips at the grid edge), while the PDE residual needs
// accurate second derivatives, which peak near 0.7 for these 1-D fits. The
// end-to-end runs therefore pin the shape; the tuning path is exercised by
// the fit-quality and tuning-fidelity criteria.
constexpr double kDeskGamma = 0.7;

// Trained operators shared across criteria: five targets fitted at the
// tuned shape for the fit-quality checks, plus the two fixed-shape desk
// operators used by the end-to-end runs.
struct TnFixture {
  bool ok = false;
  std::string error;
  double gamma = 0.0;  // tuned on the default grid
  double tune_seconds = 0.0;
  std::vector<TnOperator> ops;  // x^2, x^3, exp, sin, cos at the tuned shape
  TnOperator desk_x2, desk_sin;
};

TnFixture build_fixture() {
  TnFixture fx;
  try {
    const auto t0 = Clock::now();
    GammaTuneConfig tune;  // defaults: M=200, 1-D, grid 0.1..10
    Rng tune_rng(2201);
    fx.gamma = tune_gamma(tune, tune_rng).gamma_opt;
    fx.tune_seconds = seconds_since(t0);
    const Rng fit_master(2202);
    const std::vector<std::string> targets = {"x^2", "x^3", "exp", "sin",
                                              "cos"};
    for (std::size_t i = 0; i < targets.size(); ++i) {
      Rng fit = fit_master.child(rng_key("fit"), i);
      fx.ops.push_back(
          build_tn_operator(targets[i], -1.0, 1.0, 200, fx.gamma, 500, fit));
    }
    Rng dx(2301);
    fx.desk_x2 = build_tn_operator("x^2", -1.0, 1.0, 200, kDeskGamma, 500, dx);
    Rng ds(2302);
    fx.desk_sin = build_tn_operator("sin", -1.0, 1.0, 200, kDeskGamma, 500, ds);
    fx.ok = true;
  } catch (const std::exception& ex) {
    fx.error = ex.what();
  }
  return fx;
}

OperatorPool desk_pool(const TnFixture& fx) {
  OperatorPool pool = builtin_pool({"0", "1", "Id"});
  pool.unary.push_back(
      make_tn_op(std::make_shared<const TnOperator>(fx.desk_x2)));
  pool.unary.push_back(
      make_tn_op(std::make_shared<const TnOperator>(fx.desk_sin)));
  return pool;
}

RunConfig desk_config(double gamma) {
  RunConfig cfg;
  cfg.seed = 11;
  cfg.problem.name = "poisson60";
  cfg.problem.d = 5;
  cfg.problem.n_interior = 200;
  cfg.problem.n_boundary = 200;
  cfg.problem.seed = 3;
  cfg.search.depth = 2;
  cfg.search.T = 50;
  cfg.search.N = 10;
  cfg.search.K = 5;
  cfg.search.T1 = 2;
  cfg.search.T2 = 20;
  cfg.search.T3 = 2000;
  cfg.pool.builtins = {"0", "1", "Id"};
  cfg.pool.tn_targets = {"x^2", "sin"};
  cfg.pool.tn.gamma = gamma;
  return cfg;
}

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fex_acceptance" / name;
  fs::remove_all(dir);
  return dir;
}

// 1. Jet derivatives (value gradient and Laplacian) and parameter
// sensitivities on random trees against central finite differences.
Outcome criterion1() {
  const auto t0 = Clock::now();
  Rng master(9001);
  OperatorPool pool = mixed_pool(master);
  double worst_grad = 0.0, worst_lap = 0.0, worst_sens = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng = master.child(rng_key("trial"), static_cast<std::uint64_t>(trial));
    const int depth = 1 + static_cast<int>(rng.uniform_index(3));
    const int d = 2 + static_cast<int>(rng.uniform_index(3));
    const TreeSkeleton skel = build_skeleton(depth, d);
    const OperatorSequence e = random_sequence(skel, pool, rng);
    ParamVector theta = random_init_theta(skel, rng);
    for (double& v : theta.values) v += 0.1 * rng.uniform(-1.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (double& c : x) c = rng.uniform(-0.9, 0.9);

    const Jet jet = evaluate_jet(skel, e, pool, theta, x.data());
    // Laplacian uses the five-point second-difference stencil at a wider
    // step: trained operators carry a roundoff floor of eps times their
    // output-weight norm, and the narrow three-point stencil divides it
    // by too small an h^2.
    const double hg = 1e-4, hl = 1e-3;
    double lap_fd = 0.0;
    for (int i = 0; i < d; ++i) {
      auto at = [&](double dx) {
        std::vector<double> xs = x;
        xs[static_cast<std::size_t>(i)] += dx;
        return evaluate(skel, e, pool, theta, xs.data());
      };
      worst_grad = std::max(
          worst_grad, rel_err(jet.grad[static_cast<std::size_t>(i)],
                              (at(hg) - at(-hg)) / (2 * hg)));
      lap_fd += (-at(2 * hl) + 16 * at(hl) - 30 * jet.value + 16 * at(-hl) -
                 at(-2 * hl)) /
                (12 * hl * hl);
    }
    worst_lap = std::max(worst_lap, rel_err(jet.lap, lap_fd));

    const JetSensitivity sens =
        evaluate_jet_with_sensitivity(skel, e, pool, theta, x.data());
    const double ht = 1e-5;
    for (int p = 0; p < skel.theta_size; ++p) {
      ParamVector tp = theta, tm = theta;
      tp.values[static_cast<std::size_t>(p)] += ht;
      tm.values[static_cast<std::size_t>(p)] -= ht;
      const Jet jp = evaluate_jet(skel, e, pool, tp, x.data());
      const Jet jm = evaluate_jet(skel, e, pool, tm, x.data());
      worst_sens = std::max(
          worst_sens, rel_err(sens.dvalue[static_cast<std::size_t>(p)],
                              (jp.value - jm.value) / (2 * ht)));
      worst_sens = std::max(worst_sens,
                            rel_err(sens.dlap[static_cast<std::size_t>(p)],
                                    (jp.lap - jm.lap) / (2 * ht)));
      for (int i = 0; i < d; ++i) {
        const std::size_t k = static_cast<std::size_t>(p * d + i);
        worst_sens = std::max(
            worst_sens,
            rel_err(sens.dgrad[k], (jp.grad[static_cast<std::size_t>(i)] -
                                    jm.grad[static_cast<std::size_t>(i)]) /
                                       (2 * ht)));
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_grad < 1e-5 && worst_lap < 1e-5 && worst_sens < 1e-5 &&
           secs < 60.0;
  o.detail = fmt("50 trees, worst grad %.1e lap %.1e sens %.1e, %.1fs",
                 worst_grad, worst_lap, worst_sens, secs);
  return o;
}

// 2. Trained-operator fit quality at M=200 with the tuned shape parameter,
// plus least-squares optimality under random coefficient perturbations.
Outcome criterion2(const TnFixture& fx) {
  const auto t0 = Clock::now();
  if (!fx.ok) return {false, "fixture build failed: " + fx.error};
  double worst_sup = 0.0;
  std::string sups;
  for (const auto& op : fx.ops) {
    worst_sup = std::max(worst_sup, op.fit_sup_error);
    sups += fmt(" %s=%.1e", op.target.c_str(), op.fit_sup_error);
  }

  Rng rng(2203);
  const FeatureBasis basis = make_basis(60, 1, fx.gamma, rng);
  const int n = 150;
  std::vector<double> points(n), targets(n);
  for (int j = 0; j < n; ++j) {
    points[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
    targets[static_cast<std::size_t>(j)] =
        std::sin(points[static_cast<std::size_t>(j)]);
  }
  const LsFitResult fit = ls_fit(basis, points, targets);
  const auto objective = [&](const std::vector<double>& alpha) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      double pred = alpha[0];
      for (int m = 0; m < basis.M; ++m)
        pred += alpha[static_cast<std::size_t>(m + 1)] *
                basis.psi(m, &points[static_cast<std::size_t>(j)]);
      const double r = targets[static_cast<std::size_t>(j)] - pred;
      s += r * r;
    }
    return s;
  };
  int non_improving = 0;
  for (int k = 0; k < 50; ++k) {
    std::vector<double> alpha = fit.alpha;
    for (double& a : alpha) a += rng.uniform(-1e-3, 1e-3);
    if (objective(alpha) + 1e-12 >= fit.mse) ++non_improving;
  }
  const double secs = seconds_since(t0) + fx.tune_seconds;
  Outcome o;
  o.pass = worst_sup < 1e-3 && non_improving == 50 && secs < 120.0;
  o.detail = fmt("gamma=%.4g sup:%s, %d/50 perturbations non-improving, %.1fs",
                 fx.gamma, sups.c_str(), non_improving, secs);
  return o;
}

// 3. Shape-parameter tuning returns the argmin of its own curve, honors a
// one-point grid, and draws hyperplane distances uniformly.
Outcome criterion3() {
  GammaTuneConfig cfg;
  cfg.M = 40;
  cfg.J = 60;
  cfg.K_grf = 3;
  cfg.gamma_min = 0.5;
  cfg.gamma_max = 3.0;
  cfg.S_grid = 9;
  Rng rng(3301);
  const GammaTuneResult res = tune_gamma(cfg, rng);
  std::size_t argmin = 0;
  for (std::size_t s = 1; s < res.avg_mse.size(); ++s) {
    if (res.avg_mse[s] < res.avg_mse[argmin]) argmin = s;
  }
  const bool argmin_ok = res.grid.size() == 9 && res.grid.front() == 0.5 &&
                         res.grid.back() == 3.0 &&
                         res.gamma_opt == res.grid[argmin];

  GammaTuneConfig single = cfg;
  single.S_grid = 1;
  single.gamma_min = 0.7;
  single.gamma_max = 5.0;
  Rng rng1(3302);
  const GammaTuneResult one = tune_gamma(single, rng1);
  const bool single_ok = one.grid.size() == 1 && one.gamma_opt == 0.7;

  std::vector<double> a, r;
  Rng rng2(3303);
  sample_locations(10000, 3, rng2, a, r);
  double worst_norm = 0.0;
  for (int m = 0; m < 10000; ++m) {
    double n2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double v = a[static_cast<std::size_t>(m * 3 + k)];
      n2 += v * v;
    }
    worst_norm = std::max(worst_norm, std::fabs(std::sqrt(n2) - 1.0));
  }
  const double ks = ks_uniform(r);
  const double crit = ks_critical_1pct(10000);
  Outcome o;
  o.pass = argmin_ok && single_ok && worst_norm < 1e-12 && ks < crit;
  o.detail = fmt("argmin %s, one-point grid %s, distance KS %.4f (1%% crit %.4f)",
                 argmin_ok ? "ok" : "BAD", single_ok ? "ok" : "BAD", ks, crit);
  return o;
}

// 4. Policy update against the enumerated expectation on a single-node
// policy with three operators and deterministic scores; quantile masking and
// the all-equal-scores zero update hold exactly.
Outcome criterion4() {
  const TreeSkeleton skel = build_skeleton(1, 1);

  // exact masking: baseline 0.3, two surviving samples
  ControllerState cm = make_controller(skel, 3, 1, 0.002, 0.1, 0.5);
  cm.logits[0] = {0.2, -0.1, 0.4};
  ControllerState manual = cm;
  ScoredBatch mb;
  mb.sequences = {{0}, {1}, {2}, {1}};
  mb.scores = {0.1, 0.6, 0.9, 0.3};
  update(cm, mb);
  const auto g1 = log_prob_grad(manual, {1});
  const auto g2 = log_prob_grad(manual, {2});
  for (std::size_t j = 0; j < 3; ++j)
    manual.logits[0][j] += manual.eta_lr / 4.0 *
                           ((0.6 - 0.3) * g1[0][j] + (0.9 - 0.3) * g2[0][j]);
  const bool masking_exact = cm.logits[0] == manual.logits[0];

  // all-equal scores: zero advantage everywhere, logits bit-identical
  ControllerState cz = make_controller(skel, 3, 1, 0.002, 0.1, 0.5);
  cz.logits[0] = {0.25, -0.5, 0.125};
  const std::vector<double> before = cz.logits[0];
  ScoredBatch zb;
  zb.sequences = {{0}, {2}, {1}};
  zb.scores = {0.7, 0.7, 0.7};
  update(cz, zb);
  const bool zero_exact = cz.logits[0] == before;

  // empirical update over 10000 samples vs the enumerated expectation
  const double epsilon = 0.1;
  ControllerState c = make_controller(skel, 3, 1, 0.002, epsilon, 0.5);
  c.logits[0] = {0.3, 0.0, -0.2};
  const std::vector<double> score_by_op = {1.0, 0.5, 0.0};
  const std::vector<double> p_soft = softmax(c.logits[0]);
  std::vector<double> p_mix(3);
  for (int k = 0; k < 3; ++k)
    p_mix[static_cast<std::size_t>(k)] =
        epsilon / 3.0 + (1 - epsilon) * p_soft[static_cast<std::size_t>(k)];

  const int n = 10000;
  Rng rng(4401);
  ScoredBatch batch;
  for (int i = 0; i < n; ++i) {
    OperatorSequence e = sample_sequence(c, rng);
    batch.scores.push_back(score_by_op[static_cast<std::size_t>(e[0])]);
    batch.sequences.push_back(std::move(e));
  }
  const double baseline = empirical_quantile(batch.scores, c.nu_q);
  if (baseline != 0.5)
    return {false, fmt("realized batch quantile %.3f, expected 0.5", baseline)};

  ControllerState updated = c;
  update(updated, batch);
  double worst_sigma = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double empirical = (updated.logits[0][static_cast<std::size_t>(j)] -
                              c.logits[0][static_cast<std::size_t>(j)]) /
                             c.eta_lr;
    double mean = 0.0, second = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double adv = score_by_op[static_cast<std::size_t>(k)] - baseline;
      if (adv <= 0.0) continue;
      const double g =
          adv * ((k == j ? 1.0 : 0.0) - p_soft[static_cast<std::size_t>(j)]);
      mean += p_mix[static_cast<std::size_t>(k)] * g;
      second += p_mix[static_cast<std::size_t>(k)] * g * g;
    }
    const double se = std::sqrt((second - mean * mean) / n);
    worst_sigma = std::max(worst_sigma, std::fabs(empirical - mean) / se);
  }
  Outcome o;
  o.pass = masking_exact && zero_exact && worst_sigma <= 3.0;
  o.detail = fmt("masking %s, all-equal %s, worst deviation %.2f sigma",
                 masking_exact ? "exact" : "BAD", zero_exact ? "exact" : "BAD",
                 worst_sigma);
  return o;
}

struct DeskRun {
  bool ok = false;
  std::string error;
  fs::path dir;
  SearchResult result;
  double seconds = 0.0;
};

DeskRun run_desk(const RunConfig& cfg, const OperatorPool& pool,
                 const std::string& name) {
  DeskRun run;
  run.dir = work_dir(name);
  const auto t0 = Clock::now();
  try {
    run.result = run_search(cfg, pool, run.dir.string());
    run.ok = true;
  } catch (const std::exception& ex) {
    run.error = ex.what();
  }
  run.seconds = seconds_since(t0);
  return run;
}

// 5. Desk-scale end-to-end: 5-D version of the quadratic-solution problem,
// full controller search plus fine-tuning, Monte Carlo relative L2 < 1e-3.
Outcome criterion5(const TnFixture& fx, const DeskRun& run) {
  if (!fx.ok) return {false, "fixture build failed: " + fx.error};
  if (!run.ok) return {false, "search failed: " + run.error};
  const PdeProblem p = make_problem("poisson60", {.d = 5});
  const OperatorPool pool = desk_pool(fx);
  const ErrorReport rep =
      mc_relative_l2(p, run.result.best, pool, 2000, 10, Rng(5501));
  Outcome o;
  o.pass = rep.mean < 1e-3 && run.seconds < 600.0;
  o.detail =
      fmt("rel L2 %.2e +- %.1e, fine loss %.2e, search %.0fs, best %s",
          rep.mean, rep.std_dev, run.result.best_loss, run.seconds,
          run.result.render.c_str());
  return o;
}

// 6. Known-correct structure fixed, long fine-tune alone reaches
// loss < 1e-8 and relative L2 < 1e-4.
Outcome criterion6(const TnFixture& fx) {
  const auto t0 = Clock::now();
  if (!fx.ok) return {false, "fixture build failed: " + fx.error};
  const PdeProblem p = make_problem("poisson60", {.d = 5});
  const TreeSkeleton skel = build_skeleton(2, 5);
  const OperatorPool pool = desk_pool(fx);
  const int tn_sq = pool.find_unary("TN[x^2]");
  const OperatorSequence e = {tn_sq, 0, tn_sq};  // TN[x^2] + TN[x^2]

  Rng sample_rng(6601);
  const SampleSet samples = sample_points(p, 200, 200, sample_rng);
  const LossContext ctx(p, skel, pool, samples);
  Rng theta_rng(6602);
  ParamVector theta0 = random_init_theta(skel, theta_rng);

  Objective obj = [&](const std::vector<double>& th, std::vector<double>& g) {
    ParamVector pv{th};
    LossGradResult lg = ctx.loss_grad(e, pv);
    g = std::move(lg.grad);
    return lg.value;
  };
  const AdamConfig fine{0.01, 0.9, 0.999, 1e-8, 5000, LrSchedule::cosine};
  const OptResult opt = adam_run(obj, theta0.values, fine);

  Expression expr{skel, e, ParamVector{opt.theta}};
  const ErrorReport rep = mc_relative_l2(p, expr, pool, 2000, 10, Rng(6603));
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = opt.value < 1e-8 && rep.mean < 1e-4 && secs < 180.0;
  o.detail = fmt("loss %.2e, rel L2 %.2e +- %.1e, %.1fs", opt.value, rep.mean,
                 rep.std_dev, secs);
  return o;
}

// 7. Loss functional identities: exact solution scores (essentially) zero,
// the zero expression scores exactly d^2 on the interior term, and the loss
// is affine in the boundary weight.
Outcome criterion7() {
  const OperatorPool pool = builtin_pool({"0", "Id", "x^2"});

  // exact solution: residual and boundary mismatch vanish to the last bit
  const PdeProblem p5 = make_problem("poisson60", {.d = 5});
  const TreeSkeleton s5 = build_skeleton(1, 5);
  const OperatorSequence e_sq = {2};
  ParamVector theta_exact;
  theta_exact.values.assign(5, 0.5);
  theta_exact.values.push_back(0.0);
  Rng rng7(7701);
  const SampleSet smp = sample_points(p5, 150, 150, rng7);
  const LossContext ctx(p5, s5, pool, smp);
  const double exact_loss = ctx.loss(e_sq, theta_exact);
  const double exact_ref = loss_reference(p5, s5, pool, e_sq, theta_exact, smp);
  const bool exact_ok = exact_loss < 1e-20 && exact_ref < 1e-20;

  // zero expression, interior points only: mean residual^2 == d^2 exactly
  bool zero_ok = true;
  double zero5 = 0.0, zero60 = 0.0;
  {
    const OperatorSequence e_zero = {0};
    Rng rz(7702);
    const SampleSet interior_only = sample_points(p5, 137, 0, rz);
    const LossContext zctx(p5, s5, pool, interior_only);
    ParamVector zt;
    zt.values.assign(static_cast<std::size_t>(s5.theta_size), 0.0);
    zero5 = zctx.loss(e_zero, zt);
    zero_ok = zero_ok && zero5 == 25.0;

    const PdeProblem p60 = make_problem("poisson60");
    const TreeSkeleton s60 = build_skeleton(1, 60);
    Rng rz60(7703);
    const SampleSet interior60 = sample_points(p60, 91, 0, rz60);
    const LossContext zctx60(p60, s60, pool, interior60);
    ParamVector zt60;
    zt60.values.assign(static_cast<std::size_t>(s60.theta_size), 0.0);
    zero60 = zctx60.loss(e_zero, zt60);
    zero_ok = zero_ok && zero60 == 3600.0;
  }

  // affine boundary weight: loss(w) = interior + w * boundary
  PdeProblem pw = make_problem("poisson60", {.d = 5});
  const TreeSkeleton sw = build_skeleton(1, 5);
  Rng rw(7704);
  const SampleSet wsmp = sample_points(pw, 120, 120, rw);
  ParamVector wt;
  wt.values = {0.3, -0.2, 0.55, 0.1, -0.4, 0.05};
  auto loss_at = [&](double lambda) {
    pw.lambda = lambda;
    const LossContext c(pw, sw, pool, wsmp);
    return c.loss(e_sq, wt);
  };
  const double l1 = loss_at(1.0), l10 = loss_at(10.0), l100 = loss_at(100.0);
  const double boundary = (l10 - l1) / 9.0;
  const double interior = l1 - boundary;
  const double affine_gap = std::fabs(l100 - (interior + 100.0 * boundary)) /
                            std::max(1.0, std::fabs(l100));
  const bool affine_ok = affine_gap <= 1e-12;

  Outcome o;
  o.pass = exact_ok && zero_ok && affine_ok;
  o.detail = fmt("exact loss %.1e/%.1e, zero-expr %g/%g, affine gap %.1e",
                 exact_loss, exact_ref, zero5, zero60, affine_gap);
  return o;
}

// 8. Determinism: the desk run's history is bit-identical across thread
// counts, and an interrupted run resumed from its checkpoint reproduces the
// uninterrupted artifacts.
Outcome criterion8(const TnFixture& fx, const DeskRun& base) {
  if (!fx.ok) return {false, "fixture build failed: " + fx.error};
  if (!base.ok) return {false, "baseline search failed: " + base.error};
  const RunConfig cfg = desk_config(kDeskGamma);
  const OperatorPool pool = desk_pool(fx);

#ifdef _OPENMP
  const int prior = omp_get_max_threads();
  omp_set_num_threads(3);
#endif
  const DeskRun threaded = run_desk(cfg, pool, "desk_threads3");
#ifdef _OPENMP
  omp_set_num_threads(prior);
#endif
  if (!threaded.ok) return {false, "threaded rerun failed: " + threaded.error};
  const bool threads_ok =
      read_text_file((base.dir / "history.csv").string()) ==
          read_text_file((threaded.dir / "history.csv").string()) &&
      read_text_file((base.dir / "best_expression.json").string()) ==
          read_text_file((threaded.dir / "best_expression.json").string());

  const fs::path split = work_dir("desk_split");
  bool resume_ok = false;
  std::string resume_note;
  try {
    const SearchResult part = run_search(cfg, pool, split.string(), false, 25);
    const SearchResult rest = run_search(cfg, pool, split.string(), true);
    resume_ok = part.stopped_at == 25 && rest.stopped_at == 0 &&
                read_text_file((split / "history.csv").string()) ==
                    read_text_file((base.dir / "history.csv").string()) &&
                read_text_file((split / "best_expression.json").string()) ==
                    read_text_file((base.dir / "best_expression.json").string());
  } catch (const std::exception& ex) {
    resume_note = std::string(" (resume error: ") + ex.what() + ")";
  }
  Outcome o;
  o.pass = threads_ok && resume_ok;
  o.detail = fmt("threads rerun %s, interrupt+resume %s%s",
                 threads_ok ? "identical" : "DIFFERS",
                 resume_ok ? "identical" : "DIFFERS", resume_note.c_str());
  return o;
}

// 9. Monte Carlo error estimator: a doubled field scores exactly 1 in every
// repeat; a constant-offset pair matches its closed-form error within four
// standard errors of the mean.
Outcome criterion9() {
  const PdeProblem p = make_problem("poisson60", {.d = 3});
  const PointFn ref = [](const double* x, int) { return x[0]; };
  const auto doubled = [] {
    return PointFn([](const double* x, int) { return 2.0 * x[0]; });
  };
  const ErrorReport unit = mc_relative_l2_core(p, 1000, 50, Rng(9901), ref,
                                               doubled);
  const bool unit_ok = unit.mean == 1.0 && unit.std_dev == 0.0;

  const double c = 0.05;
  const auto offset = [c] {
    return PointFn([c](const double* x, int) { return x[0] + c; });
  };
  const ErrorReport off = mc_relative_l2_core(p, 4000, 50, Rng(9902), ref,
                                              offset);
  const double closed_form = c * std::sqrt(3.0);
  const double sem = off.std_dev / std::sqrt(50.0);
  const double gap = std::fabs(off.mean - closed_form);
  const bool offset_ok = gap <= 4.0 * sem;
  Outcome o;
  o.pass = unit_ok && offset_ok;
  o.detail = fmt("doubled pair mean %.17g sd %.1e, offset gap %.2e vs 4*sem %.2e",
                 unit.mean, unit.std_dev, gap, 4.0 * sem);
  return o;
}

}  // namespace

int main() {
  struct Entry {
    int number;
    const char* label;
    std::function<Outcome()> run;
  };

  const TnFixture fx = build_fixture();
  DeskRun desk;  // shared by criteria 5 and 8
  if (fx.ok) desk = run_desk(desk_config(kDeskGamma), desk_pool(fx), "desk_base");

  const std::vector<Entry> entries = {
      {1, "jet derivatives and parameter sensitivities vs finite differences",
       [] { return criterion1(); }},
      {2, "trained-operator fit quality and least-squares optimality",
       [&] { return criterion2(fx); }},
      {3, "shape tuning argmin identity and hyperplane distance law",
       [] { return criterion3(); }},
      {4, "policy update matches the enumerated expectation",
       [] { return criterion4(); }},
      {5, "desk-scale search solves the 5-D quadratic problem",
       [&] { return criterion5(fx, desk); }},
      {6, "fixed-structure fine-tune reaches the loss and error targets",
       [&] { return criterion6(fx); }},
      {7, "loss functional identities (exact, zero, affine weight)",
       [] { return criterion7(); }},
      {8, "bit-identical reruns across threads and interrupt/resume",
       [&] { return criterion8(fx, desk); }},
      {9, "Monte Carlo error estimator exactness and closed form",
       [] { return criterion9(); }},
  };

  int failures = 0;
  for (const auto& entry : entries) {
    Outcome o;
    try {
      o = entry.run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %d: %s -- %s\n", o.pass ? "PASS" : "FAIL",
                entry.number, entry.label, o.detail.c_str());
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all %zu criteria passed\n", entries.size());
  } else {
    std::printf("%d of %zu criteria FAILED\n", failures, entries.size());
  }
  return failures == 0 ? 0 : 1;
}
