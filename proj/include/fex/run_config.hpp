#ifndef FEX_RUN_CONFIG_HPP
#define FEX_RUN_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fex/serialize.hpp"
#include "fex/transnet.hpp"
#include "fex/unary_ops.hpp"

namespace fex {

struct ProblemConfig {
  std::string name = "poisson60";
  std::optional<int> d;
  std::optional<double> nu;
  std::optional<double> mu;
  std::optional<double> lambda;
  int n_interior = 500;
  int n_boundary = 1000;
  std::uint64_t seed = 1;
};

struct SearchConfig {
  int depth = 2;
  int T = 50;
  int N = 10;
  int K = 10;
  int T1 = 2;
  int T2 = 20;
  int T3 = 15000;
  double adam_coarse_lr = 0.001;
  double bfgs_step = 1.0;
  double finetune_lr = 0.01;
};

struct ControllerConfig {
  double epsilon = 0.1;
  double nu_q = 0.5;
  double eta_lr = 0.002;
};

// Inline TN build recipe: gamma either given or tuned on the fly.
struct TnBuildConfig {
  int M = 200;
  int J = 500;
  double lo = -1.0;
  double hi = 1.0;
  std::optional<double> gamma;  // absent: run the tuning grid search
  GammaTuneConfig tune;
};

struct PoolConfig {
  std::string file;  // nonempty: load a serialized pool, ignore the rest
  std::vector<std::string> builtins{"0", "1", "Id"};
  std::vector<std::string> tn_targets;
  std::vector<std::string> binary{"+", "-", "*"};
  TnBuildConfig tn;
  std::uint64_t seed = 2024;  // stream for TN location/point draws
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir;
  int checkpoint_every = 0;  // iterations between checkpoints; 0 disables
  ProblemConfig problem;
  SearchConfig search;
  ControllerConfig controller;
  PoolConfig pool;
};

// Strict parse: unknown keys anywhere are an error naming the key.
RunConfig run_config_from_json(const Json& j);

// Full resolved echo: every field explicit, including defaulted ones.
Json run_config_to_json(const RunConfig& cfg);

// Hash over the semantic fields (problem, search, controller, pool, seed);
// operational fields (output_dir, checkpoint_every) do not participate, so a
// resumed run may change them.
std::string config_hash(const RunConfig& cfg);

// Materializes the operator pool: loads pool.file when set, otherwise builds
// builtins plus TN operators (tuning gamma first when not pinned).
OperatorPool resolve_pool(const PoolConfig& cfg);

Json gamma_tune_config_to_json(const GammaTuneConfig& cfg);
GammaTuneConfig gamma_tune_config_from_json(const Json& j);

}  // namespace fex

#endif
