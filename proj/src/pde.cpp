#include "fex/pde.hpp"

#include <cmath>

#include "fex/error.hpp"
#include "fex/reduce.hpp"

namespace fex {

double TrueSolution::value(const double* x, int d) const {
  switch (kind) {
    case SolutionKind::half_sum_squares: {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += x[i] * x[i];
      return 0.5 * s;
    }
    case SolutionKind::sum_cubes: {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += x[i] * x[i] * x[i];
      return s;
    }
    case SolutionKind::exp_mean_cos: {
      double m = 0.0;
      for (int i = 0; i < d; ++i) m += std::cos(x[i]);
      return std::exp(m / d);
    }
  }
  return 0.0;
}

Jet TrueSolution::jet(const double* x, int d) const {
  Jet out;
  out.grad.assign(static_cast<size_t>(d), 0.0);
  switch (kind) {
    case SolutionKind::half_sum_squares: {
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        s += x[i] * x[i];
        out.grad[static_cast<size_t>(i)] = x[i];
      }
      out.value = 0.5 * s;
      out.lap = static_cast<double>(d);
      break;
    }
    case SolutionKind::sum_cubes: {
      double s = 0.0, lap = 0.0;
      for (int i = 0; i < d; ++i) {
        s += x[i] * x[i] * x[i];
        out.grad[static_cast<size_t>(i)] = 3.0 * x[i] * x[i];
        lap += 6.0 * x[i];
      }
      out.value = s;
      out.lap = lap;
      break;
    }
    case SolutionKind::exp_mean_cos: {
      // u = exp(m), m = (1/d) sum cos x_j: lap u = u (|grad m|^2 + lap m),
      // grad m_i = -sin(x_i)/d, lap m = -m.
      double m = 0.0, grad_m2 = 0.0;
      for (int i = 0; i < d; ++i) m += std::cos(x[i]);
      m /= d;
      const double u = std::exp(m);
      for (int i = 0; i < d; ++i) {
        const double gm = -std::sin(x[i]) / d;
        out.grad[static_cast<size_t>(i)] = u * gm;
        grad_m2 += gm * gm;
      }
      out.value = u;
      out.lap = u * (grad_m2 - m);
      break;
    }
  }
  return out;
}

PdeProblem make_problem(const std::string& name,
                        const ProblemOverrides& overrides) {
  PdeProblem p;
  p.name = name;
  if (name == "poisson60") {
    p.d = 60;
    p.lo = -1.0;
    p.hi = 1.0;
    p.nu = 1.0;
    p.mu = 0.0;  // -lap(u) = f carries no reaction term
    p.nonlinear_u2 = false;
    p.solution.kind = SolutionKind::half_sum_squares;
  } else if (name == "reactdiff60") {
    p.d = 60;
    p.lo = 0.0;
    p.hi = 1.0;
    p.nu = 1.0;
    p.mu = 1.0;
    p.nonlinear_u2 = false;
    p.solution.kind = SolutionKind::sum_cubes;
  } else if (name == "semilinear55") {
    p.d = 55;
    p.lo = -1.0;
    p.hi = 1.0;
    p.nu = 1.0;
    p.mu = 1.0;
    p.nonlinear_u2 = true;
    p.solution.kind = SolutionKind::exp_mean_cos;
  } else {
    throw FexError("make_problem: unknown problem '" + name +
                   "' (known: poisson60, reactdiff60, semilinear55)");
  }
  p.lambda = 100.0;
  if (overrides.d) p.d = *overrides.d;
  if (overrides.nu) p.nu = *overrides.nu;
  if (overrides.mu) p.mu = *overrides.mu;
  if (overrides.lambda) p.lambda = *overrides.lambda;
  if (p.d < 1) throw FexError("make_problem: dimension must be positive");
  if (!(p.lambda > 0.0)) throw FexError("make_problem: lambda must be positive");
  if (p.nu < 0.0) throw FexError("make_problem: nu must be nonnegative");
  return p;
}

double manufactured_rhs(const PdeProblem& p, const double* x) {
  const Jet u = p.solution.jet(x, p.d);
  double f = -p.nu * u.lap + p.mu * u.value;
  if (p.nonlinear_u2) f += u.value * u.value;
  return f;
}

SampleSet sample_points(const PdeProblem& p, int n_interior, int n_boundary,
                        Rng& rng) {
  if (n_interior < 0 || n_boundary < 0) {
    throw FexError("sample_points: negative count");
  }
  SampleSet set;
  set.d = p.d;
  set.seed = rng.seed();
  set.interior.resize(static_cast<size_t>(n_interior) * p.d);
  set.boundary.resize(static_cast<size_t>(n_boundary) * p.d);
  for (int j = 0; j < n_interior; ++j) {
    for (int i = 0; i < p.d; ++i) {
      double v = rng.uniform(p.lo, p.hi);
      while (v <= p.lo || v >= p.hi) v = rng.uniform(p.lo, p.hi);
      set.interior[static_cast<size_t>(j) * p.d + i] = v;
    }
  }
  for (int j = 0; j < n_boundary; ++j) {
    double* pt = set.boundary.data() + static_cast<size_t>(j) * p.d;
    for (int i = 0; i < p.d; ++i) pt[i] = rng.uniform(p.lo, p.hi);
    const int pinned = static_cast<int>(rng.uniform_index(
        static_cast<std::size_t>(p.d)));
    pt[pinned] = rng.uniform() < 0.5 ? p.lo : p.hi;
  }
  return set;
}

namespace {

// LeafSource over the tabulated (u, u', u'') rows of one sample point.
class TableLeafSource final : public LeafSource {
public:
  TableLeafSource(const std::vector<LeafDerivs>& table, int n_points, int d,
                  int point)
      : table_(&table), stride_(static_cast<size_t>(n_points) * d),
        base_(static_cast<size_t>(point) * d) {}
  LeafDerivs leaf(int op, int coord) const override {
    return (*table_)[static_cast<size_t>(op) * stride_ + base_ + coord];
  }
  double leaf_value(int op, int coord) const override {
    return leaf(op, coord).u;
  }

private:
  const std::vector<LeafDerivs>* table_;
  size_t stride_;
  size_t base_;
};

// Values-only source for boundary points.
class ValueTableLeafSource final : public LeafSource {
public:
  ValueTableLeafSource(const std::vector<double>& table, int n_points, int d,
                       int point)
      : table_(&table), stride_(static_cast<size_t>(n_points) * d),
        base_(static_cast<size_t>(point) * d) {}
  LeafDerivs leaf(int, int) const override {
    throw FexError("boundary leaf table holds values only");
  }
  double leaf_value(int op, int coord) const override {
    return (*table_)[static_cast<size_t>(op) * stride_ + base_ + coord];
  }

private:
  const std::vector<double>* table_;
  size_t stride_;
  size_t base_;
};

}  // namespace

LossContext::LossContext(const PdeProblem& p, const TreeSkeleton& skel,
                         const OperatorPool& pool, const SampleSet& samples)
    : p_(&p), skel_(&skel), pool_(&pool), samples_(&samples) {
  if (samples.d != p.d || skel.input_dim != p.d) {
    throw FexError("LossContext: dimension mismatch");
  }
  const int n_int = samples.n_interior();
  const int n_bdy = samples.n_boundary();
  const int n_ops = pool.unary_count();
  const int d = p.d;

  interior_leaf_.resize(static_cast<size_t>(n_ops) * n_int * d);
  boundary_leaf_.resize(static_cast<size_t>(n_ops) * n_bdy * d);
#pragma omp parallel for schedule(static)
  for (int op = 0; op < n_ops; ++op) {
    const UnaryOperator& u = pool.unary[static_cast<size_t>(op)];
    for (int j = 0; j < n_int; ++j) {
      for (int i = 0; i < d; ++i) {
        const Derivs4 f = u.derivs(samples.interior[static_cast<size_t>(j) * d + i]);
        interior_leaf_[(static_cast<size_t>(op) * n_int + j) * d + i] = {
            f.f, f.d1, f.d2};
      }
    }
    for (int j = 0; j < n_bdy; ++j) {
      for (int i = 0; i < d; ++i) {
        boundary_leaf_[(static_cast<size_t>(op) * n_bdy + j) * d + i] =
            u.value(samples.boundary[static_cast<size_t>(j) * d + i]);
      }
    }
  }

  rhs_.resize(static_cast<size_t>(n_int));
  for (int j = 0; j < n_int; ++j) {
    rhs_[static_cast<size_t>(j)] =
        manufactured_rhs(p, samples.interior.data() + static_cast<size_t>(j) * d);
  }
  dirichlet_.resize(static_cast<size_t>(n_bdy));
  for (int j = 0; j < n_bdy; ++j) {
    dirichlet_[static_cast<size_t>(j)] = p.solution.value(
        samples.boundary.data() + static_cast<size_t>(j) * d, d);
  }
}

double LossContext::loss(const OperatorSequence& e,
                         const ParamVector& theta) const {
  const int n_int = samples_->n_interior();
  const int n_bdy = samples_->n_boundary();
  std::vector<double> sq_int(static_cast<size_t>(n_int));
  std::vector<double> sq_bdy(static_cast<size_t>(n_bdy));

#pragma omp parallel
  {
    JetEvaluator ev(*skel_, *pool_);
#pragma omp for schedule(static) nowait
    for (int j = 0; j < n_int; ++j) {
      TableLeafSource source(interior_leaf_, n_int, p_->d, j);
      EvalStatus status;
      const ValueLap vl = ev.jet_forward(e, theta, source, &status);
      if (status.domain_error) {
        sq_int[static_cast<size_t>(j)] = kPenaltyLoss;
      } else {
        double r = -p_->nu * vl.lap + p_->mu * vl.value -
                   rhs_[static_cast<size_t>(j)];
        if (p_->nonlinear_u2) r += vl.value * vl.value;
        sq_int[static_cast<size_t>(j)] = r * r;
      }
    }
#pragma omp for schedule(static)
    for (int j = 0; j < n_bdy; ++j) {
      ValueTableLeafSource source(boundary_leaf_, n_bdy, p_->d, j);
      EvalStatus status;
      const double v = ev.value(e, theta, source, &status);
      if (status.domain_error) {
        sq_bdy[static_cast<size_t>(j)] = kPenaltyLoss;
      } else {
        const double r = v - dirichlet_[static_cast<size_t>(j)];
        sq_bdy[static_cast<size_t>(j)] = r * r;
      }
    }
  }

  double total = 0.0;
  if (n_int > 0) {
    total += pairwise_sum(sq_int.data(), sq_int.size()) / n_int;
  }
  if (n_bdy > 0) {
    total += p_->lambda * pairwise_sum(sq_bdy.data(), sq_bdy.size()) / n_bdy;
  }
  return total;
}

LossGradResult LossContext::loss_grad(const OperatorSequence& e,
                                      const ParamVector& theta) const {
  const int n_int = samples_->n_interior();
  const int n_bdy = samples_->n_boundary();
  const int np = skel_->theta_size;
  std::vector<double> sq_int(static_cast<size_t>(n_int));
  std::vector<double> sq_bdy(static_cast<size_t>(n_bdy));
  // Per-point gradient rows, reduced pairwise after the parallel loops.
  std::vector<double> rows_int(static_cast<size_t>(n_int) * np);
  std::vector<double> rows_bdy(static_cast<size_t>(n_bdy) * np);

#pragma omp parallel
  {
    JetEvaluator ev(*skel_, *pool_);
#pragma omp for schedule(static) nowait
    for (int j = 0; j < n_int; ++j) {
      TableLeafSource source(interior_leaf_, n_int, p_->d, j);
      EvalStatus status;
      const ValueLap vl = ev.jet_forward(e, theta, source, &status);
      double* row = rows_int.data() + static_cast<size_t>(j) * np;
      if (status.domain_error) {
        sq_int[static_cast<size_t>(j)] = kPenaltyLoss;
        std::fill(row, row + np, 0.0);
      } else {
        double r = -p_->nu * vl.lap + p_->mu * vl.value -
                   rhs_[static_cast<size_t>(j)];
        double dres_dv = p_->mu;
        if (p_->nonlinear_u2) {
          r += vl.value * vl.value;
          dres_dv += 2.0 * vl.value;
        }
        sq_int[static_cast<size_t>(j)] = r * r;
        ev.backward(e, theta, 2.0 * r * dres_dv, -2.0 * r * p_->nu, row);
      }
    }
#pragma omp for schedule(static)
    for (int j = 0; j < n_bdy; ++j) {
      ValueTableLeafSource source(boundary_leaf_, n_bdy, p_->d, j);
      EvalStatus status;
      const double v = ev.value(e, theta, source, &status);
      double* row = rows_bdy.data() + static_cast<size_t>(j) * np;
      if (status.domain_error) {
        sq_bdy[static_cast<size_t>(j)] = kPenaltyLoss;
        std::fill(row, row + np, 0.0);
      } else {
        const double r = v - dirichlet_[static_cast<size_t>(j)];
        sq_bdy[static_cast<size_t>(j)] = r * r;
        ev.backward_value(e, theta, 2.0 * r, row);
      }
    }
  }

  LossGradResult out;
  out.grad.assign(static_cast<size_t>(np), 0.0);
  out.value = 0.0;
  std::vector<double> scratch(
      static_cast<size_t>(std::max(n_int, n_bdy)));
  std::vector<double> col(static_cast<size_t>(np));
  if (n_int > 0) {
    out.value += pairwise_sum(sq_int.data(), sq_int.size()) / n_int;
    pairwise_sum_rows(rows_int.data(), static_cast<size_t>(n_int),
                      static_cast<size_t>(np), col.data(), scratch.data());
    for (int p = 0; p < np; ++p) {
      out.grad[static_cast<size_t>(p)] += col[static_cast<size_t>(p)] / n_int;
    }
  }
  if (n_bdy > 0) {
    out.value += p_->lambda * pairwise_sum(sq_bdy.data(), sq_bdy.size()) / n_bdy;
    pairwise_sum_rows(rows_bdy.data(), static_cast<size_t>(n_bdy),
                      static_cast<size_t>(np), col.data(), scratch.data());
    for (int p = 0; p < np; ++p) {
      out.grad[static_cast<size_t>(p)] +=
          p_->lambda * col[static_cast<size_t>(p)] / n_bdy;
    }
  }
  return out;
}

double loss_reference(const PdeProblem& p, const TreeSkeleton& skel,
                      const OperatorPool& pool, const OperatorSequence& e,
                      const ParamVector& theta, const SampleSet& samples) {
  JetEvaluator ev(skel, pool);
  const int d = p.d;
  double interior = 0.0;
  const int n_int = samples.n_interior();
  for (int j = 0; j < n_int; ++j) {
    const double* x = samples.interior.data() + static_cast<size_t>(j) * d;
    DirectLeafSource source(pool, x);
    EvalStatus status;
    const ValueLap vl = ev.jet_forward(e, theta, source, &status);
    if (status.domain_error) {
      interior += kPenaltyLoss;
      continue;
    }
    double r = -p.nu * vl.lap + p.mu * vl.value - manufactured_rhs(p, x);
    if (p.nonlinear_u2) r += vl.value * vl.value;
    interior += r * r;
  }
  double boundary = 0.0;
  const int n_bdy = samples.n_boundary();
  for (int j = 0; j < n_bdy; ++j) {
    const double* x = samples.boundary.data() + static_cast<size_t>(j) * d;
    DirectLeafSource source(pool, x);
    EvalStatus status;
    const double v = ev.value(e, theta, source, &status);
    if (status.domain_error) {
      boundary += kPenaltyLoss;
      continue;
    }
    const double r = v - p.solution.value(x, d);
    boundary += r * r;
  }
  double total = 0.0;
  if (n_int > 0) total += interior / n_int;
  if (n_bdy > 0) total += p.lambda * boundary / n_bdy;
  return total;
}

}  // namespace fex
