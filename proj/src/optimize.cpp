#include "fex/optimize.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "fex/error.hpp"

namespace fex {
namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double scheduled_lr(const AdamConfig& cfg, int step) {
  if (cfg.schedule == LrSchedule::constant || cfg.steps <= 1) return cfg.lr;
  const double lr_end = cfg.lr / 100.0;
  const double progress = static_cast<double>(step - 1) /
                          static_cast<double>(cfg.steps - 1);
  return lr_end +
         0.5 * (cfg.lr - lr_end) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace

OptResult adam_run(const Objective& objective, std::vector<double> theta0,
                   const AdamConfig& cfg) {
  const size_t n = theta0.size();
  OptResult result;
  std::vector<double> grad(n, 0.0);
  double f = objective(theta0, grad);
  result.theta = theta0;
  result.value = f;
  if (!std::isfinite(f) || !all_finite(grad)) {
    result.aborted = true;
    return result;
  }

  std::vector<double> theta = std::move(theta0);
  std::vector<double> m(n, 0.0), v(n, 0.0);
  double b1t = 1.0, b2t = 1.0;
  for (int t = 1; t <= cfg.steps; ++t) {
    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    const double lr = scheduled_lr(cfg, t);
    for (size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / (1.0 - b1t);
      const double vhat = v[i] / (1.0 - b2t);
      theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps_hat);
    }
    f = objective(theta, grad);
    result.steps_taken = t;
    if (!std::isfinite(f) || !all_finite(grad)) {
      result.aborted = true;
      return result;
    }
    if (f < result.value) {
      result.value = f;
      result.theta = theta;
    }
  }
  return result;
}

OptResult bfgs_run(const Objective& objective, std::vector<double> theta0,
                   const BfgsConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(theta0.size());
  OptResult result;
  std::vector<double> grad_buf(theta0.size(), 0.0);
  double f = objective(theta0, grad_buf);
  result.theta = theta0;
  result.value = f;
  if (!std::isfinite(f) || !all_finite(grad_buf)) {
    result.aborted = true;
    return result;
  }

  Eigen::VectorXd theta = Eigen::Map<Eigen::VectorXd>(theta0.data(), n);
  Eigen::VectorXd grad = Eigen::Map<Eigen::VectorXd>(grad_buf.data(), n);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  constexpr double kArmijoC1 = 1e-4;

  for (int k = 0; k < cfg.max_steps; ++k) {
    if (grad.norm() < cfg.grad_tol) break;
    Eigen::VectorXd dir = -hinv * grad;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      // Inverse Hessian no longer descent-producing; restart from steepest
      // descent.
      hinv.setIdentity();
      dir = -grad;
      slope = grad.dot(dir);
      if (!(slope < 0.0)) break;  // gradient numerically zero
    }

    double step = cfg.init_step;
    bool accepted = false;
    Eigen::VectorXd theta_new(n);
    Eigen::VectorXd grad_new(n);
    double f_new = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      theta_new = theta + step * dir;
      std::vector<double> cand(theta_new.data(), theta_new.data() + n);
      std::vector<double> g(theta0.size(), 0.0);
      f_new = objective(cand, g);
      if (std::isfinite(f_new) && all_finite(g) &&
          f_new <= f + kArmijoC1 * step * slope) {
        grad_new = Eigen::Map<Eigen::VectorXd>(g.data(), n);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.aborted = true;
      return result;
    }

    const Eigen::VectorXd s = theta_new - theta;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > cfg.curvature_eps * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      // (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded to avoid
      // forming the rank-one projectors.
      hinv -= rho * (s * hy.transpose() + hy * s.transpose());
      hinv += rho * (rho * y.dot(hy) + 1.0) * (s * s.transpose());
    }
    theta = theta_new;
    grad = grad_new;
    f = f_new;
    result.steps_taken = k + 1;
    if (f < result.value) {
      result.value = f;
      result.theta.assign(theta.data(), theta.data() + n);
    }
  }
  return result;
}

ScoreResult compute_score(const LossContext& ctx, const OperatorSequence& e,
                          ParamVector theta_init, const AdamConfig& t1,
                          const BfgsConfig& t2) {
  if (theta_init.size() != ctx.skeleton().theta_size) {
    throw FexError("compute_score: parameter size mismatch");
  }
  Objective objective = [&ctx, &e](const std::vector<double>& theta,
                                   std::vector<double>& grad) {
    ParamVector pv;
    pv.values = theta;
    LossGradResult r = ctx.loss_grad(e, pv);
    grad = std::move(r.grad);
    return r.value;
  };

  OptResult adam = adam_run(objective, std::move(theta_init.values), t1);
  // BFGS starts from Adam's best iterate and tracks the best value it sees,
  // so its result already contains the two-stage best.
  OptResult bfgs = bfgs_run(objective, std::move(adam.theta), t2);

  ScoreResult out;
  out.final_loss = bfgs.value;
  out.theta.values = std::move(bfgs.theta);
  out.score = std::isfinite(bfgs.value) ? score_from_loss(bfgs.value) : 0.0;
  return out;
}

}  // namespace fex
