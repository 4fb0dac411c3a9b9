#ifndef FEX_TRANSNET_HPP
#define FEX_TRANSNET_HPP

#include <string>
#include <vector>

#include "fex/rng.hpp"
#include "fex/scalar_functions.hpp"

namespace fex {

// Single-hidden-layer tanh feature space. Neuron m realizes
// psi_m(y) = tanh(gamma * (a_m . y + r_m)) with a_m on the unit sphere and
// r_m in [0, 1]; all neurons share one shape parameter gamma.
struct FeatureBasis {
  int M = 0;
  int dim = 0;
  double gamma = 1.0;
  std::vector<double> a;  // M x dim, row-major, unit rows
  std::vector<double> r;  // M entries in [0, 1]

  double psi(int m, const double* y) const;
};

// a_m = X_m / |X_m| with X_m standard gaussian; r_m uniform on [0, 1].
void sample_locations(int M, int dim, Rng& rng, std::vector<double>& a,
                      std::vector<double>& r);

FeatureBasis make_basis(int M, int dim, double gamma, Rng& rng);

// n points uniform in the unit ball of R^dim, row-major n x dim.
std::vector<double> sample_unit_ball(int n, int dim, Rng& rng);

// One draw of a zero-mean gaussian field with covariance
// exp(-|y - y'|^2 / (2 eta_corr^2)) at the given points (row-major n x dim).
// Cholesky jitter retries: 1e-10, 1e-8, 1e-6, then error.
std::vector<double> grf_realize(const std::vector<double>& points, int dim,
                                double eta_corr, Rng& rng);

struct LsFitResult {
  std::vector<double> alpha;  // M+1 coefficients, alpha[0] is the intercept
  double mse = 0.0;           // attained minimum of the sum-of-squares objective
};

// Minimizes sum_j [g_j - alpha_0 - sum_m alpha_m psi_m(y_j)]^2 with a
// rank-revealing solver (minimum-norm solution on rank deficiency).
LsFitResult ls_fit(const FeatureBasis& basis, const std::vector<double>& points,
                   const std::vector<double>& targets);

struct GammaTuneConfig {
  int M = 200;
  int dim = 1;  // dimension of the unit-ball sample space
  double eta_corr = 0.5;
  int K_grf = 10;
  int J = 500;
  double gamma_min = 0.1;
  double gamma_max = 10.0;
  int S_grid = 50;
};

struct GammaTuneResult {
  double gamma_opt = 0.0;
  std::vector<double> grid;     // S_grid values, gamma_min..gamma_max inclusive
  std::vector<double> avg_mse;  // same length
};

// Grid search over gamma: K_grf field realizations on per-realization
// unit-ball samples, fresh location parameters per (gamma, realization) pair,
// average fitting error per grid point, argmin returned. Location streams are
// keyed on the gamma value itself, so overlapping grids agree at shared
// gamma points for a fixed rng seed.
GammaTuneResult tune_gamma(const GammaTuneConfig& cfg, Rng& rng);

// Trained 1-D network usable as a unary operator with analytic derivatives.
struct TnOperator {
  std::string target;  // tag of the fitted function, e.g. "x^2"
  double lo = -1.0;
  double hi = 1.0;
  int hidden = 0;  // neuron count M
  double gamma = 1.0;
  std::vector<double> a;      // M entries, each +1 or -1
  std::vector<double> r;      // M entries in [0, 1]
  std::vector<double> alpha;  // M+1, alpha[0] is the intercept
  double fit_sup_error = 0.0; // sup |fit - target| on a 1001-point grid

  double value(double t) const;
  Derivs4 derivs(double t) const;
};

// Samples a 1-D basis, fits the named target on J uniform points of [lo, hi]
// with the given shape parameter, and measures the sup error.
TnOperator build_tn_operator(const std::string& target, double lo, double hi,
                             int M, double gamma, int J, Rng& rng);

}  // namespace fex

#endif
