#ifndef FEX_EVAL_REPORT_HPP
#define FEX_EVAL_REPORT_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fex/eval.hpp"
#include "fex/pde.hpp"
#include "fex/rng.hpp"
#include "fex/serialize.hpp"

namespace fex {

struct ErrorReport {
  double mean = 0.0;
  double std_dev = 0.0;  // (n-1)-denominator sample deviation across repeats
  int repeats = 0;
  int n_points = 0;
  std::uint64_t seed = 0;
};

using PointFn = std::function<double(const double* x, int d)>;

// Monte Carlo relative L2 error: per repeat, n_points uniform draws from the
// cube, err = sqrt(sum (ref - pred)^2 / sum ref^2) with both sums accumulated
// in one pass (ratio of sums, so a proportional pair cancels exactly).
// pred_factory is invoked once per repeat; repeats run in parallel, so the
// returned callables and ref must be safe to call concurrently.
ErrorReport mc_relative_l2_core(const PdeProblem& p, int n_points, int repeats,
                                const Rng& rng, const PointFn& ref,
                                const std::function<PointFn()>& pred_factory);

ErrorReport mc_relative_l2(const PdeProblem& p, const Expression& expr,
                           const OperatorPool& pool, int n_points, int repeats,
                           const Rng& rng);

struct SliceGrid {
  int dim_i = 0;  // 0-based, varies fastest in the export
  int dim_j = 0;
  int resolution = 0;
  std::vector<double> xi, xj;    // inclusive axis grids, length resolution
  std::vector<double> fixed;     // length d; entries at dim_i/dim_j unused
  std::vector<double> ref, pred, err;  // resolution^2, index j*res + i
  bool relative_err = false;
};

// Uniform grid over the (dim_i, dim_j) face of the cube with the remaining
// coordinates pinned at fixed_values (empty: cube midpoints). err is
// |pred - ref|, or |pred - ref| / |ref| when relative_err (an exact zero of
// the reference is an error in that mode).
SliceGrid slice_grid(const PdeProblem& p, const Expression& expr,
                     const OperatorPool& pool, int dim_i, int dim_j,
                     std::vector<double> fixed_values, int resolution,
                     bool relative_err = false);

// ref.csv / pred.csv / err.csv under dir: one header line naming the
// 1-based slice dims and a hash of the fixed values, then one
// "x_i,x_j,value" row per grid cell, dim_i fastest.
void write_slice_csvs(const SliceGrid& g, const std::string& dir);

Json error_report_to_json(const ErrorReport& r);

}  // namespace fex

#endif
