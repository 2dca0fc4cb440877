// pinnmilp: command-line driver for the heat-equation PINN experiments.
//
//   pinnmilp generate  [--seed S] [--out DIR]
//   pinnmilp pretrain  --mode boundary|full --n-hidden N [--seed S]
//   pinnmilp train     --mode vanilla|boundary|full --n-hidden N --epochs E
//   pinnmilp evaluate  --checkpoint FILE
//   pinnmilp compare   --config FILE [--jobs J]
//   pinnmilp export-lp --mode boundary|full --n-hidden N [--seed S]
//
// Exit codes: 0 success, 1 usage error, 2 solver failure, 3 IO error.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pinnmilp/experiment.hpp"

namespace {

using namespace pinnmilp;

enum ExitCode { kOk = 0, kUsage = 1, kSolver = 2, kIo = 3 };

PretrainMode parse_pretrain_mode(const std::string& s) {
  if (s == "boundary") return PretrainMode::Boundary;
  if (s == "full") return PretrainMode::Full;
  throw ConfigError("pretrain mode must be boundary or full, got " + s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PINN heat-equation experiments with MILP pre-training"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "run seed (data seed for generate)");
  app.add_option("--jobs", jobs, "parallel runs for compare");
  app.add_option("--out", out_dir, "output directory");

  std::string scenario_path, reference_path;
  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario_path, "scenario CSV (default <out>/scenario/scenario.csv)");
    sub->add_option("--reference", reference_path, "reference field CSV (default <out>/scenario/reference.csv)");
  };

  auto* gen = app.add_subcommand("generate", "write a synthetic scenario and its reference solution");
  std::optional<double> horizon;
  gen->add_option("--horizon", horizon, "horizon in hours");

  std::string mode;
  std::size_t n_hidden = 32;
  auto* pre = app.add_subcommand("pretrain", "solve the pre-training MILP");
  pre->add_option("--mode", mode, "boundary or full")->required();
  pre->add_option("--n-hidden", n_hidden, "hidden width");
  add_data(pre);

  auto* lp = app.add_subcommand("export-lp", "write the pre-training MILP in CPLEX LP format");
  lp->add_option("--mode", mode, "boundary or full")->required();
  lp->add_option("--n-hidden", n_hidden, "hidden width");
  add_data(lp);

  auto* train = app.add_subcommand("train", "train one network and write its trace");
  std::optional<std::size_t> epochs, lbfgs_iters;
  std::string init_checkpoint;
  train->add_option("--mode", mode, "vanilla, boundary or full")->required();
  train->add_option("--n-hidden", n_hidden, "hidden width");
  train->add_option("--epochs", epochs, "ADAM epochs");
  train->add_option("--lbfgs-iters", lbfgs_iters, "L-BFGS iterations after ADAM");
  train->add_option("--init", init_checkpoint, "pre-trained checkpoint (skips the MILP)");
  add_data(train);

  auto* eval = app.add_subcommand("evaluate", "compare a checkpoint with the reference field");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
  add_data(eval);

  auto* cmp = app.add_subcommand("compare", "repeated runs over modes and widths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (out_dir) cfg.out_dir = *out_dir;
    if (jobs) cfg.jobs = *jobs;
    if (horizon) cfg.horizon_hours = *horizon;
    if (epochs) cfg.adam_epochs = *epochs;
    if (lbfgs_iters) cfg.lbfgs_max_iters = *lbfgs_iters;
    cfg.validate();
    const OutputLayout layout{cfg.out_dir};
    const std::uint64_t run_seed = seed.value_or(cfg.seed);
    auto data = [&] {
      return load_data(scenario_path.empty() ? layout.scenario_csv() : fs::path(scenario_path),
                       reference_path.empty() ? layout.reference_csv() : fs::path(reference_path), cfg);
    };

    if (gen->parsed()) {
      const auto r = cmd_generate(cfg, seed.value_or(cfg.data_seed));
      std::cout << "scenario: " << r.scenario_csv.string() << "\nreference: " << r.reference_csv.string() << '\n';
    } else if (pre->parsed()) {
      const auto r = cmd_pretrain(cfg, data(), parse_pretrain_mode(mode), n_hidden, run_seed);
      std::cout << "status: " << milp::to_string(r.result.status) << "\nobjective: " << r.result.objective
                << "\nnodes: " << r.result.node_count << "\nwall_time_s: " << r.result.wall_time
                << "\ncheckpoint: " << r.checkpoint.string() << "\nlp: " << r.lp_file.string() << '\n';
    } else if (lp->parsed()) {
      std::cout << cmd_export_lp(cfg, data(), parse_pretrain_mode(mode), n_hidden, run_seed).string() << '\n';
    } else if (train->parsed()) {
      std::optional<fs::path> init;
      if (!init_checkpoint.empty()) init = init_checkpoint;
      const auto r = cmd_train(cfg, data(), parse_init_mode(mode), n_hidden, run_seed, init);
      std::cout << "status: " << r.status << "\ntotal: " << r.total << "\nmse_u: " << r.mse_u
                << "\nmse_f: " << r.mse_f << "\neval_mse: " << r.eval_mse << "\ntrain_s: " << r.train_seconds
                << '\n';
    } else if (eval->parsed()) {
      const auto d = data();
      const auto r = cmd_evaluate(cfg, checkpoint, d.scenario, d.reference);
      std::cout << "total_mse: " << r.total_mse << '\n';
      for (const auto& s : r.slices) std::cout << "t=" << s.hours << "h mse: " << s.mse << "  " << s.file.string() << '\n';
    } else if (cmp->parsed()) {
      const auto s = cmd_compare(cfg);
      std::cout << "mode,n_hidden,runs,failures,total_mean,total_std\n";
      for (const auto& a : s.aggregates)
        std::cout << to_string(a.mode) << ',' << a.n_hidden << ',' << a.runs << ',' << a.failures << ','
                  << a.total.mean << ',' << a.total.std << '\n';
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "solver: " << e.what() << '\n';
    return kSolver;
  } catch (const PipelineError& e) {
    std::cerr << "solver: " << e.what() << '\n';
    return kSolver;
  } catch (const milp::MilpError& e) {
    std::cerr << "solver: " << e.what() << '\n';
    return kSolver;
  } catch (const IoError& e) {
    std::cerr << "io: " << e.what() << '\n';
    return kIo;
  } catch (const ScenarioCsvError& e) {
    std::cerr << "io: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "io: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
