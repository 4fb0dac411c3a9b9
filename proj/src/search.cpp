#include "fex/search.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <utility>

#include "fex/error.hpp"
#include "fex/optimize.hpp"
#include "fex/serialize.hpp"

namespace fex {
namespace fs = std::filesystem;

CandidatePool::CandidatePool(int capacity) : capacity_(capacity) {
  if (capacity <= 0) throw FexError("candidate pool: capacity must be positive");
}

void CandidatePool::insert(Candidate c) {
  for (auto& held : entries_) {
    if (held.e == c.e) {
      if (c.score > held.score) held = std::move(c);
      std::stable_sort(entries_.begin(), entries_.end(),
                       [](const Candidate& a, const Candidate& b) {
                         return a.score > b.score;
                       });
      return;
    }
  }
  if (static_cast<int>(entries_.size()) == capacity_) {
    if (c.score <= entries_.back().score) return;
    entries_.pop_back();
  }
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), c,
                              [](const Candidate& a, const Candidate& b) {
                                return a.score > b.score;
                              });
  entries_.insert(pos, std::move(c));
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json candidate_to_json(const Candidate& c) {
  return Json{{"e", c.e},
              {"theta", c.theta.values},
              {"score", c.score},
              {"origin_iteration", c.origin_iteration}};
}

Candidate candidate_from_json(const Json& j, const TreeSkeleton& skel) {
  reject_unknown_keys(j, {"e", "theta", "score", "origin_iteration"},
                      "candidate");
  Candidate c;
  c.e = j.at("e").get<OperatorSequence>();
  c.theta.values = j.at("theta").get<std::vector<double>>();
  c.score = j.at("score").get<double>();
  c.origin_iteration = j.at("origin_iteration").get<int>();
  if (c.e.size() != skel.nodes.size())
    throw FexError("candidate: operator sequence length mismatch");
  if (c.theta.size() != skel.theta_size)
    throw FexError("candidate: parameter vector length mismatch");
  return c;
}

Json history_to_json(const std::vector<HistoryRow>& rows) {
  Json arr = Json::array();
  for (const auto& row : rows)
    arr.push_back(Json{{"iter", row.iter},
                       {"best_score", row.best_score},
                       {"mean_score", row.mean_score}});
  return arr;
}

std::vector<HistoryRow> history_from_json(const Json& arr) {
  std::vector<HistoryRow> rows;
  for (const auto& j : arr) {
    reject_unknown_keys(j, {"iter", "best_score", "mean_score"}, "history row");
    rows.push_back({j.at("iter").get<int>(), j.at("best_score").get<double>(),
                    j.at("mean_score").get<double>()});
  }
  return rows;
}

std::string checkpoint_path(const std::string& dir, int iter) {
  char name[48];
  std::snprintf(name, sizeof(name), "checkpoint_%06d.json", iter);
  return (fs::path(dir) / name).string();
}

// Highest-numbered checkpoint_NNNNNN.json under dir, or empty string.
std::string latest_checkpoint(const std::string& dir) {
  if (!fs::is_directory(dir)) return {};
  int best = -1;
  std::string best_path;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    int iter = 0;
    if (std::sscanf(name.c_str(), "checkpoint_%d.json", &iter) == 1 &&
        iter > best) {
      best = iter;
      best_path = entry.path().string();
    }
  }
  return best_path;
}

void write_checkpoint(const RunConfig& cfg, const std::string& dir, int iter,
                      const ControllerState& controller,
                      const CandidatePool& pool,
                      const std::vector<HistoryRow>& history) {
  fs::create_directories(dir);
  Json j = checkpoint_to_json(config_hash(cfg), iter, controller,
                              pool.entries(), history);
  write_text_file(checkpoint_path(dir, iter), j.dump(2) + "\n");
}

}  // namespace

Json checkpoint_to_json(const std::string& config_hash, int iter,
                        const ControllerState& controller,
                        const std::vector<Candidate>& pool_entries,
                        const std::vector<HistoryRow>& history) {
  Json pool = Json::array();
  for (const auto& c : pool_entries) pool.push_back(candidate_to_json(c));
  Json j{{"version", 1},
         {"config_hash", config_hash},
         {"iter", iter},
         {"controller", controller_to_json(controller)},
         {"pool", pool},
         {"history", history_to_json(history)}};
  j["checksum"] = fnv1a_hex(j.dump());
  return j;
}

CheckpointData checkpoint_from_json(const Json& j,
                                    const std::string& config_hash,
                                    const TreeSkeleton& skel) {
  reject_unknown_keys(
      j, {"version", "config_hash", "iter", "controller", "pool", "history",
          "checksum"},
      "checkpoint");
  if (j.at("version").get<int>() != 1)
    throw FexError("checkpoint: unsupported version");
  if (j.at("config_hash").get<std::string>() != config_hash)
    throw FexError("checkpoint: config hash mismatch, refusing to resume");
  Json payload = j;
  payload.erase("checksum");
  if (fnv1a_hex(payload.dump()) != j.at("checksum").get<std::string>())
    throw FexError("checkpoint: checksum mismatch, file is corrupt");
  CheckpointData data;
  data.iter = j.at("iter").get<int>();
  data.controller = controller_from_json(j.at("controller"));
  for (const auto& cj : j.at("pool"))
    data.pool_entries.push_back(candidate_from_json(cj, skel));
  data.history = history_from_json(j.at("history"));
  return data;
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::string out = "iter,best_score,mean_score\n";
  for (const auto& row : rows) {
    out += std::to_string(row.iter);
    out += ',';
    out += fmt17(row.best_score);
    out += ',';
    out += fmt17(row.mean_score);
    out += '\n';
  }
  return out;
}

SearchResult run_search(const RunConfig& cfg, const OperatorPool& pool,
                        const std::string& run_dir, bool resume,
                        int stop_after) {
  if (cfg.search.T < 1) throw FexError("search: T must be at least 1");

  ProblemOverrides ov{cfg.problem.d, cfg.problem.nu, cfg.problem.mu,
                      cfg.problem.lambda};
  const PdeProblem problem = make_problem(cfg.problem.name, ov);
  const TreeSkeleton skel = build_skeleton(cfg.search.depth, problem.d);

  Rng sample_rng(cfg.problem.seed);
  const SampleSet samples = sample_points(problem, cfg.problem.n_interior,
                                          cfg.problem.n_boundary, sample_rng);
  const LossContext ctx(problem, skel, pool, samples);

  ControllerState controller =
      make_controller(skel, pool.unary_count(), pool.binary_count(),
                      cfg.controller.eta_lr, cfg.controller.epsilon,
                      cfg.controller.nu_q);
  CandidatePool cpool(cfg.search.K);
  std::vector<HistoryRow> history;

  const std::string ckpt_dir = (fs::path(run_dir) / "checkpoints").string();
  int t0 = 1;
  if (resume) {
    const std::string path = latest_checkpoint(ckpt_dir);
    if (path.empty())
      throw FexError("resume: no checkpoint found under " + ckpt_dir);
    CheckpointData data = checkpoint_from_json(Json::parse(read_text_file(path)),
                                               config_hash(cfg), skel);
    controller = std::move(data.controller);
    for (auto& c : data.pool_entries) cpool.insert(std::move(c));
    history = std::move(data.history);
    t0 = data.iter + 1;
  }

  fs::create_directories(run_dir);
  write_text_file((fs::path(run_dir) / "config.json").string(),
                  run_config_to_json(cfg).dump(2) + "\n");

  const AdamConfig t1{cfg.search.adam_coarse_lr, 0.9, 0.999, 1e-8,
                      cfg.search.T1, LrSchedule::constant};
  BfgsConfig t2;
  t2.init_step = cfg.search.bfgs_step;
  t2.max_steps = cfg.search.T2;

  // Candidate (t, n) draws from streams keyed by iteration and slot, so the
  // trajectory is a pure function of the seed regardless of interruptions.
  const Rng master(cfg.seed);
  int done_here = 0;
  for (int t = t0; t <= cfg.search.T; ++t) {
    ScoredBatch batch;
    std::vector<Candidate> fresh;
    for (int n = 1; n <= cfg.search.N; ++n) {
      Rng pick = master.child(rng_key("pick"), static_cast<std::uint64_t>(t),
                              static_cast<std::uint64_t>(n));
      OperatorSequence e = sample_sequence(controller, pick);
      Rng th = master.child(rng_key("theta"), static_cast<std::uint64_t>(t),
                            static_cast<std::uint64_t>(n));
      ParamVector theta0 = random_init_theta(skel, th);
      double score = 0.0;
      try {
        ScoreResult sr = compute_score(ctx, e, std::move(theta0), t1, t2);
        score = sr.score;
        fresh.push_back({e, std::move(sr.theta), sr.score, t});
      } catch (const FexError&) {
        // Candidate dropped from the pool; still scored 0 for the update.
      }
      batch.sequences.push_back(std::move(e));
      batch.scores.push_back(score);
    }
    for (auto& c : fresh) cpool.insert(std::move(c));
    update(controller, batch);

    double best = batch.scores[0], sum = 0.0;
    for (double s : batch.scores) {
      best = std::max(best, s);
      sum += s;
    }
    history.push_back({t, best, sum / static_cast<double>(cfg.search.N)});

    if (cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0)
      write_checkpoint(cfg, ckpt_dir, t, controller, cpool, history);
    ++done_here;
    if (stop_after > 0 && done_here >= stop_after && t < cfg.search.T) {
      write_checkpoint(cfg, ckpt_dir, t, controller, cpool, history);
      SearchResult partial;
      partial.history = std::move(history);
      partial.stopped_at = t;
      return partial;
    }
  }

  if (cpool.empty()) throw FexError("search: candidate pool is empty");

  // Fine tuning: long cosine-decay Adam run on every survivor.
  const AdamConfig fine{cfg.search.finetune_lr, 0.9, 0.999, 1e-8,
                        cfg.search.T3, LrSchedule::cosine};
  SearchResult result;
  int best_idx = -1;
  for (const auto& entry : cpool.entries()) {
    Objective obj = [&](const std::vector<double>& th,
                        std::vector<double>& grad) {
      ParamVector p{th};
      LossGradResult lg = ctx.loss_grad(entry.e, p);
      grad = std::move(lg.grad);
      return lg.value;
    };
    OptResult fr = adam_run(obj, entry.theta.values, fine);
    FineTuned ft;
    ft.candidate = entry;
    ft.candidate.theta.values = fr.theta;
    ft.fine_loss = fr.value;
    result.finetuned.push_back(std::move(ft));
    if (best_idx < 0 || fr.value < result.finetuned[best_idx].fine_loss)
      best_idx = static_cast<int>(result.finetuned.size()) - 1;
  }

  const FineTuned& win = result.finetuned[best_idx];
  result.best = Expression{skel, win.candidate.e, win.candidate.theta};
  result.best_loss = win.fine_loss;
  result.render = to_expression_string(skel, win.candidate.e, pool,
                                       win.candidate.theta);
  result.history = std::move(history);

  write_text_file((fs::path(run_dir) / "history.csv").string(),
                  history_csv(result.history));
  Json pool_json{{"capacity", cpool.capacity()}, {"entries", Json::array()}};
  for (const auto& ft : result.finetuned) {
    Json cj = candidate_to_json(ft.candidate);
    cj["fine_loss"] = ft.fine_loss;
    pool_json["entries"].push_back(std::move(cj));
  }
  write_text_file((fs::path(run_dir) / "pool.json").string(),
                  pool_json.dump(2) + "\n");
  write_text_file((fs::path(run_dir) / "operator_pool.json").string(),
                  operator_pool_to_json(pool).dump(2) + "\n");
  Json best_json{{"expression", expression_to_json(result.best, pool)},
                 {"fine_loss", result.best_loss}};
  write_text_file((fs::path(run_dir) / "best_expression.json").string(),
                  best_json.dump(2) + "\n");
  return result;
}

}  // namespace fex
