#include "fex/transnet.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "fex/error.hpp"

namespace fex {

double FeatureBasis::psi(int m, const double* y) const {
  const double* am = a.data() + static_cast<size_t>(m) * dim;
  double z = r[static_cast<size_t>(m)];
  for (int i = 0; i < dim; ++i) z += am[i] * y[i];
  return std::tanh(gamma * z);
}

void sample_locations(int M, int dim, Rng& rng, std::vector<double>& a,
                      std::vector<double>& r) {
  a.assign(static_cast<size_t>(M) * dim, 0.0);
  r.assign(static_cast<size_t>(M), 0.0);
  for (int m = 0; m < M; ++m) {
    double* am = a.data() + static_cast<size_t>(m) * dim;
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        am[i] = rng.normal();
        norm2 += am[i] * am[i];
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < dim; ++i) am[i] *= inv;
    r[static_cast<size_t>(m)] = rng.uniform();
  }
}

FeatureBasis make_basis(int M, int dim, double gamma, Rng& rng) {
  if (M < 1 || dim < 1) throw FexError("make_basis: M and dim must be >= 1");
  if (!(gamma > 0.0)) throw FexError("make_basis: gamma must be positive");
  FeatureBasis basis;
  basis.M = M;
  basis.dim = dim;
  basis.gamma = gamma;
  sample_locations(M, dim, rng, basis.a, basis.r);
  return basis;
}

std::vector<double> sample_unit_ball(int n, int dim, Rng& rng) {
  std::vector<double> pts(static_cast<size_t>(n) * dim);
  for (int j = 0; j < n; ++j) {
    double* y = pts.data() + static_cast<size_t>(j) * dim;
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        y[i] = rng.normal();
        norm2 += y[i] * y[i];
      }
    } while (norm2 == 0.0);
    const double radius =
        std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    const double scale = radius / std::sqrt(norm2);
    for (int i = 0; i < dim; ++i) y[i] *= scale;
  }
  return pts;
}

std::vector<double> grf_realize(const std::vector<double>& points, int dim,
                                double eta_corr, Rng& rng) {
  if (dim < 1 || points.size() % static_cast<size_t>(dim) != 0) {
    throw FexError("grf_realize: points length not a multiple of dim");
  }
  const int n = static_cast<int>(points.size()) / dim;
  Eigen::MatrixXd cov(n, n);
  const double inv_two_eta2 = 1.0 / (2.0 * eta_corr * eta_corr);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double dist2 = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double diff = points[static_cast<size_t>(i) * dim + k] -
                            points[static_cast<size_t>(j) * dim + k];
        dist2 += diff * diff;
      }
      const double c = std::exp(-dist2 * inv_two_eta2);
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  // Draw the white noise before factoring so the values consumed from rng do
  // not depend on how many jitter retries were needed.
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.normal();

  Eigen::LLT<Eigen::MatrixXd> llt;
  const double jitters[] = {0.0, 1e-10, 1e-8, 1e-6};
  for (double jitter : jitters) {
    Eigen::MatrixXd shifted = cov;
    if (jitter > 0.0) shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd values = llt.matrixL() * z;
      return {values.data(), values.data() + n};
    }
  }
  throw FexError("grf_realize: covariance not positive definite after jitter");
}

LsFitResult ls_fit(const FeatureBasis& basis, const std::vector<double>& points,
                   const std::vector<double>& targets) {
  const int J = static_cast<int>(targets.size());
  if (J < 1 || points.size() != static_cast<size_t>(J) * basis.dim) {
    throw FexError("ls_fit: points/targets size mismatch");
  }
  for (double g : targets) {
    if (!std::isfinite(g)) throw FexError("ls_fit: non-finite target value");
  }
  Eigen::MatrixXd design(J, basis.M + 1);
  Eigen::VectorXd rhs(J);
  for (int j = 0; j < J; ++j) {
    const double* y = points.data() + static_cast<size_t>(j) * basis.dim;
    design(j, 0) = 1.0;
    for (int m = 0; m < basis.M; ++m) design(j, m + 1) = basis.psi(m, y);
    rhs(j) = targets[static_cast<size_t>(j)];
  }
  Eigen::VectorXd alpha =
      design.completeOrthogonalDecomposition().solve(rhs);
  LsFitResult result;
  result.alpha.assign(alpha.data(), alpha.data() + basis.M + 1);
  result.mse = (design * alpha - rhs).squaredNorm();
  return result;
}

GammaTuneResult tune_gamma(const GammaTuneConfig& cfg, Rng& rng) {
  if (cfg.M < 1 || cfg.dim < 1 || cfg.K_grf < 1 || cfg.J < 1 || cfg.S_grid < 1) {
    throw FexError("tune_gamma: all counts must be positive");
  }
  if (!(cfg.gamma_min < cfg.gamma_max) && cfg.S_grid > 1) {
    throw FexError("tune_gamma: gamma_min must be below gamma_max");
  }

  std::vector<std::vector<double>> sample_sets(static_cast<size_t>(cfg.K_grf));
  std::vector<std::vector<double>> target_sets(static_cast<size_t>(cfg.K_grf));
  for (int k = 0; k < cfg.K_grf; ++k) {
    Rng stream = rng.child(rng_key("grf"), static_cast<std::uint64_t>(k));
    sample_sets[static_cast<size_t>(k)] =
        sample_unit_ball(cfg.J, cfg.dim, stream);
    target_sets[static_cast<size_t>(k)] = grf_realize(
        sample_sets[static_cast<size_t>(k)], cfg.dim, cfg.eta_corr, stream);
  }

  GammaTuneResult result;
  result.grid.resize(static_cast<size_t>(cfg.S_grid));
  result.avg_mse.resize(static_cast<size_t>(cfg.S_grid));
  for (int s = 0; s < cfg.S_grid; ++s) {
    result.grid[static_cast<size_t>(s)] =
        cfg.S_grid == 1
            ? cfg.gamma_min
            : cfg.gamma_min + (cfg.gamma_max - cfg.gamma_min) * s /
                                  static_cast<double>(cfg.S_grid - 1);
  }

  int best = 0;
  for (int s = 0; s < cfg.S_grid; ++s) {
    const double gamma = result.grid[static_cast<size_t>(s)];
    double total = 0.0;
    for (int k = 0; k < cfg.K_grf; ++k) {
      // Locations are keyed on the gamma value, not the grid index, so the
      // same (gamma, k) pair always sees the same basis draw.
      Rng stream = rng.child(rng_key("locations"),
                             std::bit_cast<std::uint64_t>(gamma),
                             static_cast<std::uint64_t>(k));
      FeatureBasis basis = make_basis(cfg.M, cfg.dim, gamma, stream);
      total += ls_fit(basis, sample_sets[static_cast<size_t>(k)],
                      target_sets[static_cast<size_t>(k)])
                   .mse;
    }
    result.avg_mse[static_cast<size_t>(s)] = total / cfg.K_grf;
    if (result.avg_mse[static_cast<size_t>(s)] <
        result.avg_mse[static_cast<size_t>(best)]) {
      best = s;
    }
  }
  result.gamma_opt = result.grid[static_cast<size_t>(best)];
  return result;
}

double TnOperator::value(double t) const {
  double out = alpha[0];
  for (int m = 0; m < hidden; ++m) {
    out += alpha[static_cast<size_t>(m) + 1] *
           std::tanh(gamma * (a[static_cast<size_t>(m)] * t +
                              r[static_cast<size_t>(m)]));
  }
  return out;
}

Derivs4 TnOperator::derivs(double t) const {
  Derivs4 out{alpha[0], 0.0, 0.0, 0.0};
  for (int m = 0; m < hidden; ++m) {
    const double w = gamma * a[static_cast<size_t>(m)];
    const double s = std::tanh(gamma * (a[static_cast<size_t>(m)] * t +
                                        r[static_cast<size_t>(m)]));
    const double s1 = 1.0 - s * s;
    const double s2 = -2.0 * s * s1;
    const double s3 = -2.0 * (s1 * s1 + s * s2);
    const double c = alpha[static_cast<size_t>(m) + 1];
    out.f += c * s;
    out.d1 += c * s1 * w;
    out.d2 += c * s2 * w * w;
    out.d3 += c * s3 * w * w * w;
  }
  return out;
}

TnOperator build_tn_operator(const std::string& target, double lo, double hi,
                             int M, double gamma, int J, Rng& rng) {
  const ScalarFunction* fn = find_scalar_function(target);
  if (fn == nullptr) {
    throw FexError("build_tn_operator: unknown target function '" + target +
                   "'");
  }
  if (!(lo < hi)) throw FexError("build_tn_operator: empty fit domain");

  FeatureBasis basis = make_basis(M, 1, gamma, rng);
  std::vector<double> points(static_cast<size_t>(J));
  std::vector<double> targets(static_cast<size_t>(J));
  for (int j = 0; j < J; ++j) {
    points[static_cast<size_t>(j)] = rng.uniform(lo, hi);
    targets[static_cast<size_t>(j)] = fn->value(points[static_cast<size_t>(j)]);
  }
  LsFitResult fit = ls_fit(basis, points, targets);

  TnOperator op;
  op.target = target;
  op.lo = lo;
  op.hi = hi;
  op.hidden = M;
  op.gamma = gamma;
  op.a = std::move(basis.a);
  op.r = std::move(basis.r);
  op.alpha = std::move(fit.alpha);

  double sup = 0.0;
  const int grid_n = 1001;
  for (int i = 0; i < grid_n; ++i) {
    const double t = lo + (hi - lo) * i / static_cast<double>(grid_n - 1);
    sup = std::max(sup, std::abs(op.value(t) - fn->value(t)));
  }
  op.fit_sup_error = sup;
  return op;
}

}  // namespace fex
