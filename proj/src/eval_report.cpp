#include "fex/eval_report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>

#include "fex/error.hpp"

namespace fex {
namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ErrorReport mc_relative_l2_core(const PdeProblem& p, int n_points, int repeats,
                                const Rng& rng, const PointFn& ref,
                                const std::function<PointFn()>& pred_factory) {
  if (n_points <= 0) throw FexError("mc error: n_points must be positive");
  if (repeats < 1) throw FexError("mc error: repeats must be at least 1");

  std::vector<double> err(static_cast<std::size_t>(repeats), 0.0);
  bool zero_norm = false;

#pragma omp parallel for schedule(static)
  for (int r = 0; r < repeats; ++r) {
    const PointFn pred = pred_factory();
    Rng rep = rng.child(rng_key("repeat"), static_cast<std::uint64_t>(r + 1));
    std::vector<double> x(static_cast<std::size_t>(p.d));
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n_points; ++i) {
      for (int c = 0; c < p.d; ++c) x[static_cast<std::size_t>(c)] = rep.uniform(p.lo, p.hi);
      const double u = ref(x.data(), p.d);
      const double diff = u - pred(x.data(), p.d);
      num += diff * diff;
      den += u * u;
    }
    if (den == 0.0) {
#pragma omp atomic write
      zero_norm = true;
    } else {
      err[static_cast<std::size_t>(r)] = std::sqrt(num / den);
    }
  }
  if (zero_norm)
    throw FexError("mc error: reference norm estimate is zero");

  double mean = 0.0;
  for (double e : err) mean += e;
  mean /= static_cast<double>(repeats);
  double var = 0.0;
  for (double e : err) var += (e - mean) * (e - mean);
  const double sd =
      repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0;

  return {mean, sd, repeats, n_points, rng.seed()};
}

ErrorReport mc_relative_l2(const PdeProblem& p, const Expression& expr,
                           const OperatorPool& pool, int n_points, int repeats,
                           const Rng& rng) {
  if (expr.skel.input_dim != p.d)
    throw FexError("mc error: expression dimension mismatch");
  const TrueSolution solution = p.solution;
  PointFn ref = [solution](const double* x, int d) {
    return solution.value(x, d);
  };
  auto pred_factory = [&expr, &pool]() -> PointFn {
    auto ev = std::make_shared<JetEvaluator>(expr.skel, pool);
    return [ev, &expr, &pool](const double* x, int) {
      DirectLeafSource source(pool, x);
      return ev->value(expr.e, expr.theta, source);
    };
  };
  return mc_relative_l2_core(p, n_points, repeats, rng, ref, pred_factory);
}

SliceGrid slice_grid(const PdeProblem& p, const Expression& expr,
                     const OperatorPool& pool, int dim_i, int dim_j,
                     std::vector<double> fixed_values, int resolution,
                     bool relative_err) {
  if (dim_i < 0 || dim_i >= p.d || dim_j < 0 || dim_j >= p.d || dim_i == dim_j)
    throw FexError("slice: dims must be distinct and inside the domain");
  if (resolution < 2) throw FexError("slice: resolution must be at least 2");
  if (expr.skel.input_dim != p.d)
    throw FexError("slice: expression dimension mismatch");
  if (fixed_values.empty())
    fixed_values.assign(static_cast<std::size_t>(p.d), 0.5 * (p.lo + p.hi));
  if (static_cast<int>(fixed_values.size()) != p.d)
    throw FexError("slice: fixed_values length mismatch");

  SliceGrid g;
  g.dim_i = dim_i;
  g.dim_j = dim_j;
  g.resolution = resolution;
  g.fixed = std::move(fixed_values);
  g.relative_err = relative_err;
  const auto cells = static_cast<std::size_t>(resolution) *
                     static_cast<std::size_t>(resolution);
  g.xi.resize(static_cast<std::size_t>(resolution));
  g.xj.resize(static_cast<std::size_t>(resolution));
  const double step = (p.hi - p.lo) / static_cast<double>(resolution - 1);
  for (int k = 0; k < resolution; ++k)
    g.xi[static_cast<std::size_t>(k)] = g.xj[static_cast<std::size_t>(k)] =
        p.lo + step * static_cast<double>(k);
  g.ref.resize(cells);
  g.pred.resize(cells);
  g.err.resize(cells);

  bool zero_ref = false;
#pragma omp parallel
  {
    JetEvaluator ev(expr.skel, pool);
    std::vector<double> x = g.fixed;
#pragma omp for collapse(2) schedule(static)
    for (int b = 0; b < resolution; ++b) {
      for (int a = 0; a < resolution; ++a) {
        x[static_cast<std::size_t>(dim_i)] = g.xi[static_cast<std::size_t>(a)];
        x[static_cast<std::size_t>(dim_j)] = g.xj[static_cast<std::size_t>(b)];
        const std::size_t idx = static_cast<std::size_t>(b) *
                                    static_cast<std::size_t>(resolution) +
                                static_cast<std::size_t>(a);
        const double u = p.solution.value(x.data(), p.d);
        DirectLeafSource source(pool, x.data());
        const double v = ev.value(expr.e, expr.theta, source);
        g.ref[idx] = u;
        g.pred[idx] = v;
        if (relative_err) {
          if (u == 0.0) {
#pragma omp atomic write
            zero_ref = true;
          } else {
            g.err[idx] = std::fabs(v - u) / std::fabs(u);
          }
        } else {
          g.err[idx] = std::fabs(v - u);
        }
      }
    }
  }
  if (zero_ref)
    throw FexError("slice: relative error undefined where the reference is 0");
  return g;
}

void write_slice_csvs(const SliceGrid& g, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::string fixed_repr;
  for (std::size_t k = 0; k < g.fixed.size(); ++k) {
    if (k > 0) fixed_repr += ',';
    fixed_repr += fmt17(g.fixed[k]);
  }
  char header[128];
  std::snprintf(header, sizeof(header), "# dim_i=%d dim_j=%d fixed=%s\n",
                g.dim_i + 1, g.dim_j + 1, fnv1a_hex(fixed_repr).c_str());

  const auto dump = [&](const std::vector<double>& grid,
                        const std::string& name) {
    std::string out = header;
    for (int b = 0; b < g.resolution; ++b) {
      for (int a = 0; a < g.resolution; ++a) {
        const std::size_t idx = static_cast<std::size_t>(b) *
                                    static_cast<std::size_t>(g.resolution) +
                                static_cast<std::size_t>(a);
        out += fmt17(g.xi[static_cast<std::size_t>(a)]);
        out += ',';
        out += fmt17(g.xj[static_cast<std::size_t>(b)]);
        out += ',';
        out += fmt17(grid[idx]);
        out += '\n';
      }
    }
    write_text_file((fs::path(dir) / name).string(), out);
  };
  dump(g.ref, "ref.csv");
  dump(g.pred, "pred.csv");
  dump(g.err, "err.csv");
}

Json error_report_to_json(const ErrorReport& r) {
  return Json{{"mean", r.mean},
              {"std", r.std_dev},
              {"repeats", r.repeats},
              {"n_points", r.n_points},
              {"seed", r.seed}};
}

}  // namespace fex
