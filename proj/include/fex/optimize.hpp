#ifndef FEX_OPTIMIZE_HPP
#define FEX_OPTIMIZE_HPP

#include <functional>
#include <vector>

#include "fex/pde.hpp"
#include "fex/tree.hpp"

namespace fex {

enum class LrSchedule {
  constant,
  cosine,  // decays from lr to lr/100 over the run
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  int steps = 0;
  LrSchedule schedule = LrSchedule::constant;
};

struct BfgsConfig {
  double init_step = 1.0;  // first trial step of the backtracking line search
  int max_steps = 20;
  double grad_tol = 1e-10;
  double curvature_eps = 1e-12;  // skip the inverse-Hessian update below this
};

// Evaluates the objective and fills the gradient (resized by the callee).
using Objective =
    std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct OptResult {
  std::vector<double> theta;  // best iterate visited
  double value = 0.0;         // objective at that iterate
  bool aborted = false;       // non-finite values or failed line search
  int steps_taken = 0;
};

OptResult adam_run(const Objective& objective, std::vector<double> theta0,
                   const AdamConfig& cfg);

OptResult bfgs_run(const Objective& objective, std::vector<double> theta0,
                   const BfgsConfig& cfg);

inline double score_from_loss(double loss) { return 1.0 / (1.0 + loss); }

struct ScoreResult {
  double score = 0.0;
  ParamVector theta;
  double final_loss = 0.0;
};

// Two-stage coarse tuning: Adam for t1.steps, then BFGS for at most
// t2.max_steps, on the penalized PDE loss; score = (1 + loss)^-1.
ScoreResult compute_score(const LossContext& ctx, const OperatorSequence& e,
                          ParamVector theta_init, const AdamConfig& t1,
                          const BfgsConfig& t2);

}  // namespace fex

#endif
