#include "fex/run_config.hpp"

#include <memory>
#include <utility>

#include "fex/error.hpp"
#include "fex/rng.hpp"

namespace fex {
namespace {

void require_object(const Json& j, const std::string& context) {
  if (!j.is_object()) throw FexError(context + ": expected an object");
}

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read_optional(const Json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ProblemConfig problem_from_json(const Json& j) {
  require_object(j, "problem");
  reject_unknown_keys(j,
                      {"name", "d", "nu", "mu", "lambda", "n_interior",
                       "n_boundary", "seed"},
                      "problem");
  ProblemConfig c;
  read_field(j, "name", c.name);
  read_optional(j, "d", c.d);
  read_optional(j, "nu", c.nu);
  read_optional(j, "mu", c.mu);
  read_optional(j, "lambda", c.lambda);
  read_field(j, "n_interior", c.n_interior);
  read_field(j, "n_boundary", c.n_boundary);
  read_field(j, "seed", c.seed);
  if (c.n_interior <= 0 || c.n_boundary <= 0)
    throw FexError("problem: sample counts must be positive");
  return c;
}

Json problem_to_json(const ProblemConfig& c) {
  Json j{{"name", c.name},
         {"n_interior", c.n_interior},
         {"n_boundary", c.n_boundary},
         {"seed", c.seed}};
  if (c.d) j["d"] = *c.d;
  if (c.nu) j["nu"] = *c.nu;
  if (c.mu) j["mu"] = *c.mu;
  if (c.lambda) j["lambda"] = *c.lambda;
  return j;
}

SearchConfig search_from_json(const Json& j) {
  require_object(j, "search");
  reject_unknown_keys(j,
                      {"depth", "T", "N", "K", "T1", "T2", "T3",
                       "adam_coarse_lr", "bfgs_step", "finetune_lr"},
                      "search");
  SearchConfig c;
  read_field(j, "depth", c.depth);
  read_field(j, "T", c.T);
  read_field(j, "N", c.N);
  read_field(j, "K", c.K);
  read_field(j, "T1", c.T1);
  read_field(j, "T2", c.T2);
  read_field(j, "T3", c.T3);
  read_field(j, "adam_coarse_lr", c.adam_coarse_lr);
  read_field(j, "bfgs_step", c.bfgs_step);
  read_field(j, "finetune_lr", c.finetune_lr);
  if (c.T < 0) throw FexError("search: T must be nonnegative");
  if (c.N <= 0) throw FexError("search: N must be positive");
  if (c.K <= 0) throw FexError("search: K must be positive");
  if (c.T1 < 0 || c.T2 < 0 || c.T3 < 0)
    throw FexError("search: optimizer step counts must be nonnegative");
  return c;
}

Json search_to_json(const SearchConfig& c) {
  return Json{{"depth", c.depth},
              {"T", c.T},
              {"N", c.N},
              {"K", c.K},
              {"T1", c.T1},
              {"T2", c.T2},
              {"T3", c.T3},
              {"adam_coarse_lr", c.adam_coarse_lr},
              {"bfgs_step", c.bfgs_step},
              {"finetune_lr", c.finetune_lr}};
}

ControllerConfig controller_cfg_from_json(const Json& j) {
  require_object(j, "controller");
  reject_unknown_keys(j, {"epsilon", "nu_q", "eta_lr"}, "controller");
  ControllerConfig c;
  read_field(j, "epsilon", c.epsilon);
  read_field(j, "nu_q", c.nu_q);
  read_field(j, "eta_lr", c.eta_lr);
  return c;
}

Json controller_to_json_cfg(const ControllerConfig& c) {
  return Json{{"epsilon", c.epsilon}, {"nu_q", c.nu_q}, {"eta_lr", c.eta_lr}};
}

TnBuildConfig tn_build_from_json(const Json& j) {
  require_object(j, "pool.tn");
  reject_unknown_keys(j, {"M", "J", "lo", "hi", "gamma", "tune"}, "pool.tn");
  TnBuildConfig c;
  read_field(j, "M", c.M);
  read_field(j, "J", c.J);
  read_field(j, "lo", c.lo);
  read_field(j, "hi", c.hi);
  read_optional(j, "gamma", c.gamma);
  if (j.contains("tune")) c.tune = gamma_tune_config_from_json(j.at("tune"));
  c.tune.M = c.M;
  c.tune.J = c.J;
  if (c.M <= 0 || c.J <= 0) throw FexError("pool.tn: M and J must be positive");
  if (!(c.lo < c.hi)) throw FexError("pool.tn: need lo < hi");
  return c;
}

Json tn_build_to_json(const TnBuildConfig& c) {
  Json j{{"M", c.M},
         {"J", c.J},
         {"lo", c.lo},
         {"hi", c.hi},
         {"tune", gamma_tune_config_to_json(c.tune)}};
  if (c.gamma) j["gamma"] = *c.gamma;
  return j;
}

PoolConfig pool_from_json(const Json& j) {
  require_object(j, "pool");
  reject_unknown_keys(
      j, {"file", "builtins", "tn_targets", "binary", "tn", "seed"}, "pool");
  PoolConfig c;
  read_field(j, "file", c.file);
  read_field(j, "builtins", c.builtins);
  read_field(j, "tn_targets", c.tn_targets);
  read_field(j, "binary", c.binary);
  if (j.contains("tn")) c.tn = tn_build_from_json(j.at("tn"));
  read_field(j, "seed", c.seed);
  if (c.file.empty() && c.builtins.empty() && c.tn_targets.empty())
    throw FexError("pool: no operators configured");
  if (c.binary.empty()) throw FexError("pool: binary operator list is empty");
  return c;
}

Json pool_to_json_cfg(const PoolConfig& c) {
  return Json{{"file", c.file},
              {"builtins", c.builtins},
              {"tn_targets", c.tn_targets},
              {"binary", c.binary},
              {"tn", tn_build_to_json(c.tn)},
              {"seed", c.seed}};
}

}  // namespace

GammaTuneConfig gamma_tune_config_from_json(const Json& j) {
  require_object(j, "tune");
  reject_unknown_keys(j,
                      {"M", "dim", "eta_corr", "K_grf", "J", "gamma_min",
                       "gamma_max", "S_grid"},
                      "tune");
  GammaTuneConfig c;
  read_field(j, "M", c.M);
  read_field(j, "dim", c.dim);
  read_field(j, "eta_corr", c.eta_corr);
  read_field(j, "K_grf", c.K_grf);
  read_field(j, "J", c.J);
  read_field(j, "gamma_min", c.gamma_min);
  read_field(j, "gamma_max", c.gamma_max);
  read_field(j, "S_grid", c.S_grid);
  return c;
}

Json gamma_tune_config_to_json(const GammaTuneConfig& c) {
  return Json{{"M", c.M},
              {"dim", c.dim},
              {"eta_corr", c.eta_corr},
              {"K_grf", c.K_grf},
              {"J", c.J},
              {"gamma_min", c.gamma_min},
              {"gamma_max", c.gamma_max},
              {"S_grid", c.S_grid}};
}

RunConfig run_config_from_json(const Json& j) {
  require_object(j, "config");
  reject_unknown_keys(j,
                      {"seed", "output_dir", "checkpoint_every", "problem",
                       "search", "controller", "pool"},
                      "config");
  RunConfig c;
  read_field(j, "seed", c.seed);
  read_field(j, "output_dir", c.output_dir);
  read_field(j, "checkpoint_every", c.checkpoint_every);
  if (j.contains("problem")) c.problem = problem_from_json(j.at("problem"));
  if (j.contains("search")) c.search = search_from_json(j.at("search"));
  if (j.contains("controller"))
    c.controller = controller_cfg_from_json(j.at("controller"));
  if (j.contains("pool")) c.pool = pool_from_json(j.at("pool"));
  if (c.checkpoint_every < 0)
    throw FexError("config: checkpoint_every must be nonnegative");
  return c;
}

Json run_config_to_json(const RunConfig& c) {
  return Json{{"seed", c.seed},
              {"output_dir", c.output_dir},
              {"checkpoint_every", c.checkpoint_every},
              {"problem", problem_to_json(c.problem)},
              {"search", search_to_json(c.search)},
              {"controller", controller_to_json_cfg(c.controller)},
              {"pool", pool_to_json_cfg(c.pool)}};
}

std::string config_hash(const RunConfig& c) {
  // Canonical dump of the semantic subset.  nlohmann sorts object keys, so
  // equal configs hash equally regardless of construction order.
  Json j{{"seed", c.seed},
         {"problem", problem_to_json(c.problem)},
         {"search", search_to_json(c.search)},
         {"controller", controller_to_json_cfg(c.controller)},
         {"pool", pool_to_json_cfg(c.pool)}};
  return fnv1a_hex(j.dump());
}

OperatorPool resolve_pool(const PoolConfig& cfg) {
  if (!cfg.file.empty()) {
    Json j = Json::parse(read_text_file(cfg.file));
    return operator_pool_from_json(j);
  }
  OperatorPool pool;
  pool.binary.clear();
  for (const auto& name : cfg.binary)
    pool.binary.push_back(binary_op_from_name(name));
  for (const auto& name : cfg.builtins)
    pool.unary.push_back(make_builtin_op(name));
  if (!cfg.tn_targets.empty()) {
    Rng rng(cfg.seed);
    double gamma;
    if (cfg.tn.gamma) {
      gamma = *cfg.tn.gamma;
    } else {
      GammaTuneConfig tune = cfg.tn.tune;
      tune.M = cfg.tn.M;
      tune.J = cfg.tn.J;
      tune.dim = 1;
      Rng tune_rng = rng.child(rng_key("tune"));
      gamma = tune_gamma(tune, tune_rng).gamma_opt;
    }
    // All TN operators share the tuned gamma; each gets its own fit stream.
    for (std::size_t i = 0; i < cfg.tn_targets.size(); ++i) {
      Rng fit_rng = rng.child(rng_key("fit"), i);
      auto tn = std::make_shared<const TnOperator>(
          build_tn_operator(cfg.tn_targets[i], cfg.tn.lo, cfg.tn.hi, cfg.tn.M,
                            gamma, cfg.tn.J, fit_rng));
      pool.unary.push_back(make_tn_op(std::move(tn)));
    }
  }
  if (pool.unary.empty()) throw FexError("pool: no unary operators resolved");
  return pool;
}

}  // namespace fex
