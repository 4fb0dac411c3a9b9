#ifndef FEX_CONTROLLER_HPP
#define FEX_CONTROLLER_HPP

#include <vector>

#include "fex/rng.hpp"
#include "fex/tree.hpp"

namespace fex {

// Per-node categorical policy over the admissible operator set (unary pool
// for unary nodes, binary set for binary nodes), trained by a risk-seeking
// policy gradient.
struct ControllerState {
  std::vector<std::vector<double>> logits;  // one row per tree node
  double eta_lr = 0.002;
  double epsilon = 0.1;
  double nu_q = 0.5;
  int step = 0;
};

ControllerState make_controller(const TreeSkeleton& skel, int unary_count,
                                int binary_count, double eta_lr,
                                double epsilon, double nu_q);

std::vector<double> softmax(const std::vector<double>& logits);

// Per node independently: with probability epsilon uniform over the node's
// operator set, otherwise a draw from softmax(logits). Consumes exactly two
// uniforms per node so the stream layout is stable.
OperatorSequence sample_sequence(const ControllerState& c, Rng& rng);

// Gradient of log p(e) under the learned categorical (exploration mixture
// ignored): per row, onehot(e_i) - softmax(row).
std::vector<std::vector<double>> log_prob_grad(const ControllerState& c,
                                               const OperatorSequence& e);

struct ScoredBatch {
  std::vector<OperatorSequence> sequences;
  std::vector<double> scores;
};

// Lower-interpolation order statistic at rank ceil((1-nu_q)*N), 1-based.
double empirical_quantile(std::vector<double> scores, double nu_q);

// Risk-seeking ascent step: samples at or above the empirical quantile
// baseline contribute (S - q) * grad log p, averaged over the batch.
void update(ControllerState& c, const ScoredBatch& batch);

}  // namespace fex

#endif
