#ifndef FEX_SEARCH_HPP
#define FEX_SEARCH_HPP

#include <string>
#include <vector>

#include "fex/controller.hpp"
#include "fex/pde.hpp"
#include "fex/run_config.hpp"
#include "fex/tree.hpp"
#include "fex/unary_ops.hpp"

namespace fex {

struct Candidate {
  OperatorSequence e;
  ParamVector theta;
  double score = 0.0;
  int origin_iteration = 0;
};

// Fixed-capacity top-K store keyed by operator sequence: a resampled sequence
// keeps its best-scoring parameters, and the lowest score is evicted when
// full. Entries stay sorted by descending score.
class CandidatePool {
public:
  explicit CandidatePool(int capacity);

  void insert(Candidate c);
  const std::vector<Candidate>& entries() const { return entries_; }
  int capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }

private:
  int capacity_;
  std::vector<Candidate> entries_;
};

struct HistoryRow {
  int iter = 0;
  double best_score = 0.0;  // best over the batch of this iteration
  double mean_score = 0.0;
};

struct FineTuned {
  Candidate candidate;
  double fine_loss = 0.0;
};

struct SearchResult {
  Expression best;
  double best_loss = 0.0;  // fine-tuned penalized PDE loss
  std::string render;
  std::vector<FineTuned> finetuned;  // pool order
  std::vector<HistoryRow> history;
  int stopped_at = 0;  // nonzero: interrupted after this iteration, resumable
};

// Full pipeline: operator-sequence search driven by the controller with
// two-stage scoring, then cosine-decay fine tuning of every pool survivor.
// Writes config.json, history.csv, pool.json, operator_pool.json and
// best_expression.json under run_dir, plus periodic checkpoints when
// cfg.checkpoint_every > 0. With resume=true the latest valid checkpoint
// under run_dir/checkpoints is loaded and iteration continues after it.
// stop_after > 0 ends the loop early after that many iterations (counted in
// this invocation), leaving a resumable state behind.
SearchResult run_search(const RunConfig& cfg, const OperatorPool& pool,
                        const std::string& run_dir, bool resume = false,
                        int stop_after = 0);

// Checkpoint payload helpers, exposed for tests.
Json checkpoint_to_json(const std::string& config_hash, int iter,
                        const ControllerState& controller,
                        const std::vector<Candidate>& pool_entries,
                        const std::vector<HistoryRow>& history);
struct CheckpointData {
  int iter = 0;
  ControllerState controller;
  std::vector<Candidate> pool_entries;
  std::vector<HistoryRow> history;
};
// Validates version, config hash and content checksum before decoding.
CheckpointData checkpoint_from_json(const Json& j,
                                    const std::string& config_hash,
                                    const TreeSkeleton& skel);

std::string history_csv(const std::vector<HistoryRow>& rows);

}  // namespace fex

#endif
