#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "fex/error.hpp"
#include "fex/eval_report.hpp"
#include "fex/run_config.hpp"
#include "fex/search.hpp"
#include "fex/serialize.hpp"
#include "fex/transnet.hpp"

namespace fs = std::filesystem;
using namespace fex;

namespace {

void set_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

// Output root precedence: explicit --out, config output_dir, FEX_OUTPUT_ROOT
// environment variable, then ./runs.
std::string resolve_run_dir(const std::string& out_flag,
                            const std::string& cfg_output_dir,
                            const std::string& cfg_path) {
  if (!out_flag.empty()) return out_flag;
  if (!cfg_output_dir.empty()) return cfg_output_dir;
  const char* root = std::getenv("FEX_OUTPUT_ROOT");
  const fs::path base = (root != nullptr && *root != '\0') ? root : "runs";
  return (base / fs::path(cfg_path).stem()).string();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_tune_gamma(const std::string& cfg_path, const std::string& out_flag) {
  const Json j = Json::parse(read_text_file(cfg_path));
  reject_unknown_keys(j,
                      {"seed", "M", "dim", "eta_corr", "K_grf", "J",
                       "gamma_min", "gamma_max", "S_grid"},
                      "tune-gamma config");
  for (const char* key : {"gamma_min", "gamma_max"})
    if (!j.contains(key))
      throw FexError(std::string("tune-gamma config: missing key '") + key +
                     "'");
  GammaTuneConfig cfg;
  cfg.gamma_min = j.at("gamma_min").get<double>();
  cfg.gamma_max = j.at("gamma_max").get<double>();
  if (j.contains("M")) cfg.M = j.at("M").get<int>();
  if (j.contains("dim")) cfg.dim = j.at("dim").get<int>();
  if (j.contains("eta_corr")) cfg.eta_corr = j.at("eta_corr").get<double>();
  if (j.contains("K_grf")) cfg.K_grf = j.at("K_grf").get<int>();
  if (j.contains("J")) cfg.J = j.at("J").get<int>();
  if (j.contains("S_grid")) cfg.S_grid = j.at("S_grid").get<int>();
  const std::uint64_t seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;

  Rng rng(seed);
  const GammaTuneResult result = tune_gamma(cfg, rng);

  const std::string dir = resolve_run_dir(out_flag, "", cfg_path);
  fs::create_directories(dir);
  std::string csv = "gamma,avg_mse,is_opt\n";
  for (std::size_t s = 0; s < result.grid.size(); ++s) {
    csv += fmt17(result.grid[s]);
    csv += ',';
    csv += fmt17(result.avg_mse[s]);
    csv += result.grid[s] == result.gamma_opt ? ",1\n" : ",0\n";
  }
  write_text_file((fs::path(dir) / "gamma_curve.csv").string(), csv);
  write_text_file((fs::path(dir) / "gamma_opt.json").string(),
                  Json{{"gamma_opt", result.gamma_opt}, {"seed", seed}}.dump(2) + "\n");
  std::printf("gamma_opt = %.17g\n", result.gamma_opt);
  std::printf("curve: %s\n", (fs::path(dir) / "gamma_curve.csv").c_str());
  return 0;
}

int cmd_build_pool(const std::string& cfg_path, const std::string& out_flag) {
  const Json j = Json::parse(read_text_file(cfg_path));
  reject_unknown_keys(j, {"pool"}, "build-pool config");
  if (!j.contains("pool"))
    throw FexError("build-pool config: missing key 'pool'");
  RunConfig probe;  // reuse the strict pool-section parser
  Json wrapped{{"pool", j.at("pool")}};
  probe = run_config_from_json(wrapped);
  const OperatorPool pool = resolve_pool(probe.pool);

  const std::string dir = resolve_run_dir(out_flag, "", cfg_path);
  fs::create_directories(dir);
  const std::string out_file = (fs::path(dir) / "operator_pool.json").string();
  write_text_file(out_file, operator_pool_to_json(pool).dump(2) + "\n");
  for (const auto& op : pool.unary) {
    if (op.tn != nullptr)
      std::printf("%-16s fit_sup_error = %.3e\n", op.name.c_str(),
                  op.tn->fit_sup_error);
    else
      std::printf("%-16s builtin\n", op.name.c_str());
  }
  std::printf("pool: %s\n", out_file.c_str());
  return 0;
}

int cmd_solve(const std::string& cfg_path, const std::string& out_flag,
              bool resume, int threads, int stop_after) {
  set_threads(threads);
  RunConfig cfg = run_config_from_json(Json::parse(read_text_file(cfg_path)));
  const std::string run_dir = resolve_run_dir(out_flag, cfg.output_dir, cfg_path);
  cfg.output_dir = run_dir;

  const OperatorPool pool = resolve_pool(cfg.pool);
  const SearchResult result = run_search(cfg, pool, run_dir, resume, stop_after);
  if (result.stopped_at > 0) {
    std::printf("stopped after iteration %d; resume with --resume\n",
                result.stopped_at);
    return 0;
  }
  std::printf("best expression: %s\n", result.render.c_str());
  std::printf("fine-tuned loss: %.17g\n", result.best_loss);
  std::printf("run dir: %s\n", run_dir.c_str());
  return 0;
}

// Rehydrates problem, pool and best expression from a solve run directory.
struct RunArtifacts {
  PdeProblem problem;
  OperatorPool pool;
  Expression best;
};

RunArtifacts load_run(const std::string& run_dir) {
  const RunConfig cfg = run_config_from_json(
      Json::parse(read_text_file((fs::path(run_dir) / "config.json").string())));
  RunArtifacts art;
  ProblemOverrides ov{cfg.problem.d, cfg.problem.nu, cfg.problem.mu,
                      cfg.problem.lambda};
  art.problem = make_problem(cfg.problem.name, ov);
  art.pool = operator_pool_from_json(Json::parse(read_text_file(
      (fs::path(run_dir) / "operator_pool.json").string())));
  const Json best = Json::parse(read_text_file(
      (fs::path(run_dir) / "best_expression.json").string()));
  art.best = expression_from_json(best.at("expression"), art.pool);
  return art;
}

int cmd_eval(const std::string& run_dir, int n_points, int repeats,
             std::uint64_t seed, int threads) {
  set_threads(threads);
  const RunArtifacts art = load_run(run_dir);
  const Rng rng(seed);
  const ErrorReport report =
      mc_relative_l2(art.problem, art.best, art.pool, n_points, repeats, rng);
  const std::string out = (fs::path(run_dir) / "error_report.json").string();
  write_text_file(out, error_report_to_json(report).dump(2) + "\n");
  std::printf("relative L2 error: %.6e +- %.6e  (%d points x %d repeats)\n",
              report.mean, report.std_dev, report.n_points, report.repeats);
  std::printf("report: %s\n", out.c_str());
  return 0;
}

int cmd_slice(const std::string& run_dir, int dim_i, int dim_j, int resolution,
              bool relative, const std::vector<double>& fixed,
              const std::string& out_flag, int threads) {
  set_threads(threads);
  const RunArtifacts art = load_run(run_dir);
  // User-facing dims are 1-based to match the usual figure labeling.
  const SliceGrid grid = slice_grid(art.problem, art.best, art.pool, dim_i - 1,
                                    dim_j - 1, fixed, resolution, relative);
  const std::string dir = out_flag.empty() ? run_dir : out_flag;
  write_slice_csvs(grid, dir);
  std::printf("slice (%d,%d) at resolution %d: %s/{ref,pred,err}.csv\n", dim_i,
              dim_j, resolution, dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-expression solver for high-dimensional elliptic PDEs"};
  app.require_subcommand(1);

  std::string cfg_path, out_flag, run_dir;
  bool resume = false, relative = false;
  int threads = 0, stop_after = 0;
  int n_points = 2000, repeats = 50, resolution = 200;
  int dim_i = 1, dim_j = 2;
  std::uint64_t seed = 1;
  std::vector<double> fixed;

  auto* tg = app.add_subcommand("tune-gamma", "Grid-search the shared shape parameter");
  tg->add_option("--config", cfg_path, "JSON tuning config")->required();
  tg->add_option("--out", out_flag, "Output directory");

  auto* bp = app.add_subcommand("build-pool", "Train and serialize an operator pool");
  bp->add_option("--config", cfg_path, "JSON config with a 'pool' section")->required();
  bp->add_option("--out", out_flag, "Output directory");

  auto* sv = app.add_subcommand("solve", "Run the expression search end to end");
  sv->add_option("--config", cfg_path, "JSON run config")->required();
  sv->add_option("--out", out_flag, "Run directory (overrides config/env)");
  sv->add_flag("--resume", resume, "Continue from the latest checkpoint");
  sv->add_option("--threads", threads, "Worker thread cap");
  sv->add_option("--stop-after", stop_after,
                 "Stop after this many iterations, leaving a checkpoint");

  auto* ev = app.add_subcommand("eval", "Monte Carlo relative L2 error of a finished run");
  ev->add_option("--run", run_dir, "Solve run directory")->required();
  ev->add_option("--points", n_points, "Interior points per repeat");
  ev->add_option("--repeats", repeats, "Independent repeats");
  ev->add_option("--seed", seed, "Sampling seed");
  ev->add_option("--threads", threads, "Worker thread cap");

  auto* sl = app.add_subcommand("slice", "Export 2-D heatmap grids of a finished run");
  sl->add_option("--run", run_dir, "Solve run directory")->required();
  sl->add_option("--dim-i", dim_i, "First slice dimension (1-based)")->required();
  sl->add_option("--dim-j", dim_j, "Second slice dimension (1-based)")->required();
  sl->add_option("--resolution", resolution, "Grid resolution per axis");
  sl->add_flag("--relative", relative, "Pointwise relative instead of absolute error");
  sl->add_option("--fixed", fixed, "Fixed values for the remaining coordinates");
  sl->add_option("--out", out_flag, "Output directory (default: the run directory)");
  sl->add_option("--threads", threads, "Worker thread cap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (tg->parsed()) return cmd_tune_gamma(cfg_path, out_flag);
    if (bp->parsed()) return cmd_build_pool(cfg_path, out_flag);
    if (sv->parsed())
      return cmd_solve(cfg_path, out_flag, resume, threads, stop_after);
    if (ev->parsed())
      return cmd_eval(run_dir, n_points, repeats, seed, threads);
    if (sl->parsed())
      return cmd_slice(run_dir, dim_i, dim_j, resolution, relative, fixed,
                       out_flag, threads);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 1;
}
