#ifndef FEX_TESTS_HELPERS_HPP
#define FEX_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fex/eval.hpp"
#include "fex/rng.hpp"
#include "fex/transnet.hpp"
#include "fex/tree.hpp"
#include "fex/unary_ops.hpp"

namespace fex::testing {

// |a - b| measured against max(1, |a|, |b|): relative for large values,
// absolute near zero where finite differences bottom out in roundoff.
inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

inline double fd_central(const std::function<double(double)>& f, double x,
                         double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double fd_second(const std::function<double(double)>& f, double x,
                        double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// Kolmogorov-Smirnov distance to U[0, 1].
inline double ks_uniform(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f_lo = static_cast<double>(i) / n;
    const double f_hi = static_cast<double>(i + 1) / n;
    d = std::max({d, std::fabs(sample[i] - f_lo), std::fabs(sample[i] - f_hi)});
  }
  return d;
}

// 1% asymptotic critical value for the KS statistic.
inline double ks_critical_1pct(std::size_t n) {
  return 1.628 / std::sqrt(static_cast<double>(n));
}

inline OperatorPool builtin_pool(const std::vector<std::string>& names) {
  OperatorPool pool;
  for (const auto& name : names) pool.unary.push_back(make_builtin_op(name));
  return pool;
}

// Trained operator with small output weights. A draw whose fitted |alpha|_1
// is large injects cancellation noise of order eps*|alpha|_1 into every
// evaluation, and a second-difference oracle divides that by h^2, so
// ill-conditioned draws are rejected. Fit accuracy is irrelevant here.
inline TnOperator conditioned_tn(const std::string& target, Rng& rng,
                                 const char* key) {
  TnOperator best;
  double best_l1 = std::numeric_limits<double>::infinity();
  for (std::uint64_t attempt = 0; attempt < 32; ++attempt) {
    Rng r = rng.child(rng_key(key), attempt);
    TnOperator op = build_tn_operator(target, -1.5, 1.5, 5, 1.2, 80, r);
    double l1 = 0.0;
    for (double c : op.alpha) l1 += std::fabs(c);
    if (l1 <= 30.0) return op;
    if (l1 < best_l1) {
      best_l1 = l1;
      best = std::move(op);
    }
  }
  return best;
}

// Mixed pool used by derivative property tests: smooth builtins plus two
// trained operators, division excluded so finite differences stay clean.
inline OperatorPool mixed_pool(Rng& rng) {
  OperatorPool pool = builtin_pool({"0", "1", "Id", "x^2", "sin", "exp"});
  pool.unary.push_back(make_tn_op(std::make_shared<const TnOperator>(
      conditioned_tn("x^2", rng, "tn-a"))));
  pool.unary.push_back(make_tn_op(std::make_shared<const TnOperator>(
      conditioned_tn("sin", rng, "tn-b"))));
  return pool;
}

inline OperatorSequence random_sequence(const TreeSkeleton& skel,
                                        const OperatorPool& pool, Rng& rng) {
  OperatorSequence e(skel.nodes.size());
  for (std::size_t i = 0; i < skel.nodes.size(); ++i) {
    const bool binary = skel.nodes[i].kind == NodeKind::binary;
    const int n = binary ? pool.binary_count() : pool.unary_count();
    e[i] = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
  }
  return e;
}

}  // namespace fex::testing

#endif
