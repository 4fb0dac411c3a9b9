#include "fex/controller.hpp"

#include <algorithm>
#include <cmath>

#include "fex/error.hpp"

namespace fex {

ControllerState make_controller(const TreeSkeleton& skel, int unary_count,
                                int binary_count, double eta_lr,
                                double epsilon, double nu_q) {
  if (unary_count < 1 || binary_count < 1) {
    throw FexError("make_controller: empty operator set");
  }
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw FexError("make_controller: epsilon outside [0, 1]");
  }
  if (!(nu_q > 0.0 && nu_q < 1.0)) {
    throw FexError("make_controller: nu_q outside (0, 1)");
  }
  ControllerState c;
  c.eta_lr = eta_lr;
  c.epsilon = epsilon;
  c.nu_q = nu_q;
  for (const auto& node : skel.nodes) {
    const int n = node.kind == NodeKind::binary ? binary_count : unary_count;
    c.logits.emplace_back(static_cast<size_t>(n), 0.0);
  }
  return c;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

OperatorSequence sample_sequence(const ControllerState& c, Rng& rng) {
  OperatorSequence e(c.logits.size(), 0);
  for (size_t i = 0; i < c.logits.size(); ++i) {
    const size_t n = c.logits[i].size();
    const bool explore = rng.uniform() < c.epsilon;
    const double u = rng.uniform();
    if (explore) {
      size_t pick = static_cast<size_t>(u * static_cast<double>(n));
      e[i] = static_cast<int>(pick < n ? pick : n - 1);
    } else {
      const std::vector<double> p = softmax(c.logits[i]);
      double acc = 0.0;
      size_t pick = n - 1;
      for (size_t k = 0; k < n; ++k) {
        acc += p[k];
        if (u < acc) {
          pick = k;
          break;
        }
      }
      e[i] = static_cast<int>(pick);
    }
  }
  return e;
}

std::vector<std::vector<double>> log_prob_grad(const ControllerState& c,
                                               const OperatorSequence& e) {
  if (e.size() != c.logits.size()) {
    throw FexError("log_prob_grad: sequence length mismatch");
  }
  std::vector<std::vector<double>> grad(c.logits.size());
  for (size_t i = 0; i < c.logits.size(); ++i) {
    std::vector<double> row = softmax(c.logits[i]);
    for (double& v : row) v = -v;
    row[static_cast<size_t>(e[i])] += 1.0;
    grad[i] = std::move(row);
  }
  return grad;
}

double empirical_quantile(std::vector<double> scores, double nu_q) {
  if (scores.empty()) throw FexError("empirical_quantile: empty batch");
  std::sort(scores.begin(), scores.end());
  const auto n = static_cast<double>(scores.size());
  auto rank = static_cast<long>(std::ceil((1.0 - nu_q) * n));
  rank = std::clamp(rank, 1L, static_cast<long>(scores.size()));
  return scores[static_cast<size_t>(rank - 1)];
}

void update(ControllerState& c, const ScoredBatch& batch) {
  const size_t n = batch.sequences.size();
  if (n == 0 || batch.scores.size() != n) {
    throw FexError("update: batch size mismatch");
  }
  const double baseline = empirical_quantile(batch.scores, c.nu_q);
  std::vector<std::vector<double>> total(c.logits.size());
  for (size_t i = 0; i < c.logits.size(); ++i) {
    total[i].assign(c.logits[i].size(), 0.0);
  }
  for (size_t k = 0; k < n; ++k) {
    const double advantage = batch.scores[k] - baseline;
    if (batch.scores[k] < baseline) continue;  // masked out
    if (advantage == 0.0) continue;
    const auto grad = log_prob_grad(c, batch.sequences[k]);
    for (size_t i = 0; i < c.logits.size(); ++i) {
      for (size_t j = 0; j < total[i].size(); ++j) {
        total[i][j] += advantage * grad[i][j];
      }
    }
  }
  const double scale = c.eta_lr / static_cast<double>(n);
  for (size_t i = 0; i < c.logits.size(); ++i) {
    for (size_t j = 0; j < c.logits[i].size(); ++j) {
      c.logits[i][j] += scale * total[i][j];
    }
  }
  c.step += 1;
}

}  // namespace fex
