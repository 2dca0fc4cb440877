#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pinnmilp/experiment.hpp"

using namespace pinnmilp;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pinnmilp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.horizon_hours = 24.0;
  cfg.eval_nx = 11;
  cfg.eval_nt = 25;
  cfg.n_boundary = 4;
  cfg.n_collocation = 2;
  cfg.n_hidden = {3};
  cfg.repetitions = 1;
  cfg.adam_epochs = 10;
  cfg.pretrain_max_seconds = 30.0;
  cfg.out_dir = out.string();
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PINNMILP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, JsonKeysAndDefaults) {
  const auto j = nlohmann::json::parse(R"({"n_hidden": [8, 16], "repetitions": 2, "modes": ["vanilla", "full"],
                                            "out": "results", "weight_box": 0.5})");
  const ExperimentConfig c = config_from_json(j);
  EXPECT_EQ(c.n_hidden, (std::vector<std::size_t>{8, 16}));
  EXPECT_EQ(c.repetitions, 2u);
  ASSERT_EQ(c.modes.size(), 2u);
  EXPECT_EQ(c.modes[1], InitMode::FullPretrain);
  EXPECT_EQ(c.out_dir, "results");
  EXPECT_EQ(c.weight_box, 0.5);
  EXPECT_EQ(c.adam_epochs, 5000u);
  EXPECT_EQ(c.boundary_count(), c.n_boundary);
}

TEST(Config, Rejections) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"repetitions": 0})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"modes": ["other"]})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"n_hidden": "wide"})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"n_boundary": 10, "train_boundary": 5})")), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Summary, MeanAndSampleStd) {
  const std::vector<double> v{1.0, 2.0, 3.0};
  const MeanStd a = mean_and_sample_std(v);
  EXPECT_DOUBLE_EQ(a.mean, 2.0);
  EXPECT_DOUBLE_EQ(a.std, 1.0);
  const std::vector<double> one{4.5};
  const MeanStd b = mean_and_sample_std(one);
  EXPECT_EQ(b.mean, 4.5);
  EXPECT_EQ(b.std, 0.0);
}

TEST(Summary, AggregatesPerCellAndCountsFailures) {
  std::vector<RunResult> runs;
  for (int i = 0; i < 3; ++i) {
    RunResult r;
    r.mode = InitMode::Vanilla;
    r.n_hidden = 4;
    r.seed = i;
    r.ok = i != 2;
    r.total = 1.0 + i;
    r.mse_u = r.mse_f = r.eval_mse = 0.0;
    runs.push_back(r);
  }
  const RunSummary s = summarize(runs);
  ASSERT_EQ(s.aggregates.size(), 1u);
  EXPECT_EQ(s.aggregates[0].runs, 3u);
  EXPECT_EQ(s.aggregates[0].failures, 1u);
  EXPECT_DOUBLE_EQ(s.aggregates[0].total.mean, 1.5);
}

TEST(Generate, FilesAndBoundaryRows) {
  const fs::path dir = fresh_dir("generate");
  ExperimentConfig cfg = tiny_config(dir);
  cfg.horizon_hours = 100.0;
  const auto r = cmd_generate(cfg, 7);
  EXPECT_EQ(count_lines(r.scenario_csv), 402u);  // header + 401 rows
  const Scenario sc = read_scenario(r.scenario_csv);
  EXPECT_EQ(sc.size(), 401u);
  const TemperatureField f = read_field(r.reference_csv);
  EXPECT_EQ(f.grid.nx, cfg.eval_nx);
  EXPECT_EQ(f.grid.nt, cfg.eval_nt);
  for (std::size_t n = 0; n < f.grid.nt; ++n) {
    const double t = f.grid.t(n);
    EXPECT_NEAR(f.at(0, n), sc.ambient(t), 1e-9);
    EXPECT_NEAR(f.at(f.grid.nx - 1, n), sc.top_oil(t), 1e-9);
  }
  const std::string first = slurp(r.reference_csv);
  cmd_generate(cfg, 7);
  EXPECT_EQ(slurp(r.reference_csv), first);
}

class ExperimentRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fresh_dir("run");
    cfg_ = tiny_config(dir_);
    const auto g = cmd_generate(cfg_, cfg_.data_seed);
    data_ = load_data(g.scenario_csv, g.reference_csv, cfg_);
  }
  static inline fs::path dir_;
  static inline ExperimentConfig cfg_;
  static inline ExperimentData data_;
};

TEST_F(ExperimentRun, TrainWritesTraceCheckpointAndGrid) {
  const RunResult r = cmd_train(cfg_, data_, InitMode::Vanilla, 3, 5);
  ASSERT_TRUE(r.ok);
  const OutputLayout out{dir_};
  const fs::path trace = out.traces() / "vanilla_3n_5.csv";
  EXPECT_EQ(count_lines(trace), 2u + 11u);  // comment, header, 10 epochs + initial row
  const TemperatureField grid = read_field(out.grids() / "vanilla_3n_5.csv");
  EXPECT_EQ(grid.grid.nx, cfg_.eval_nx);
  EXPECT_EQ(grid.grid.nt, cfg_.eval_nt);
  EXPECT_NO_THROW(load_checkpoint((out.checkpoints() / "vanilla_3n_5.json").string()));

  // Loss columns are identical on a re-run; only elapsed time may differ.
  auto losses = [&] {
    std::ifstream in(trace);
    std::string all, line;
    while (std::getline(in, line)) all += line.substr(0, line.rfind(',')) + '\n';
    return all;
  };
  const std::string first = losses();
  cmd_train(cfg_, data_, InitMode::Vanilla, 3, 5);
  EXPECT_EQ(losses(), first);
}

TEST_F(ExperimentRun, PretrainRecordsTimingAndCheckpoint) {
  const PretrainReport r = cmd_pretrain(cfg_, data_, PretrainMode::Boundary, 2, 3);
  EXPECT_NE(r.result.status, milp::MilpStatus::Infeasible);
  EXPECT_GT(r.result.wall_time, 0.0);
  const Checkpoint ck = load_checkpoint(r.checkpoint.string());
  EXPECT_EQ(ck.params.n_hidden(), 2u);
  EXPECT_TRUE(fs::exists(r.lp_file));
  EXPECT_NE(slurp(r.lp_file).find("Binaries"), std::string::npos);
  // Training from the stored checkpoint skips the MILP.
  const RunResult t = cmd_train(cfg_, data_, InitMode::BoundaryPretrain, 2, 3, r.checkpoint);
  EXPECT_TRUE(t.ok);
  EXPECT_EQ(t.pretrain_seconds, 0.0);
}

TEST_F(ExperimentRun, EvaluateAgainstOwnPredictionIsZero) {
  cmd_train(cfg_, data_, InitMode::Vanilla, 3, 8);
  const OutputLayout out{dir_};
  const Checkpoint ck = load_checkpoint((out.checkpoints() / "vanilla_3n_8.json").string());
  const TemperatureField own = read_field(out.grids() / "vanilla_3n_8.csv");
  const EvaluationReport rep =
      evaluate_checkpoint(ck, data_.scenario, own, data_.phys, fresh_dir("slices"), "self");
  EXPECT_NEAR(rep.total_mse, 0.0, 1e-20);
  ASSERT_FALSE(rep.slices.empty());
  for (const auto& s : rep.slices) {
    EXPECT_LE(s.hours, 24.0);
    EXPECT_NEAR(s.mse, 0.0, 1e-20);
    EXPECT_EQ(count_lines(s.file), 1u + cfg_.eval_nx);
  }
}

TEST_F(ExperimentRun, ConstantNetworkAgainstConstantField) {
  NetworkParams p(2);
  p.b2() = 0.3;
  const Scaler& s = data_.training.scaler;
  TemperatureField ref = data_.reference;
  for (double& v : ref.values) v = s.denormalize_output(0.3);
  const EvaluationReport rep = evaluate_checkpoint({p, s}, data_.scenario, ref, data_.phys, fresh_dir("const"), "c");
  EXPECT_NEAR(rep.total_mse, 0.0, 1e-24);
}

TEST_F(ExperimentRun, GridMismatchIsRejected) {
  TemperatureField other = data_.reference;
  other.grid.nx += 1;
  other.values.resize(other.grid.nx * other.grid.nt, 300.0);
  const TemperatureField pred = predict_field(glorot_init(1, 2), data_.training.scaler, data_.scenario, data_.phys,
                                              data_.reference.grid);
  EXPECT_THROW(normalized_mse(pred, other, data_.training.scaler), GridMismatch);
}

TEST_F(ExperimentRun, EvaluateMissingCheckpointIsIoError) {
  EXPECT_THROW(cmd_evaluate(cfg_, dir_ / "missing.json", data_.scenario, data_.reference), IoError);
}

TEST(Compare, SummaryFilesAndZeroStd) {
  const fs::path dir = fresh_dir("compare");
  ExperimentConfig cfg = tiny_config(dir);
  cfg.modes = {InitMode::Vanilla, InitMode::BoundaryPretrain};
  cfg.n_hidden = {2};
  cfg.jobs = 2;
  const RunSummary s = cmd_compare(cfg);
  ASSERT_EQ(s.aggregates.size(), 2u);
  for (const auto& a : s.aggregates) {
    EXPECT_EQ(a.failures, 0u);
    EXPECT_EQ(a.total.std, 0.0);
  }
  const OutputLayout out{dir};
  for (const char* f : {"runs.csv", "aggregate.csv", "timings.csv", "boxplot.csv"})
    EXPECT_TRUE(fs::exists(out.summary() / f)) << f;
  const std::string runs = slurp(out.summary() / "runs.csv");
  cmd_compare(cfg);
  EXPECT_EQ(slurp(out.summary() / "runs.csv"), runs);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("cli");
  const std::string out = " --out " + dir.string();
  EXPECT_EQ(run_cli("generate --horizon 24" + out), 0);
  EXPECT_TRUE(fs::exists(dir / "scenario" / "scenario.csv"));
  EXPECT_EQ(run_cli("pretrain --mode boundary --n-hidden 2" + out), 0);
  EXPECT_EQ(run_cli("train --mode vanilla --n-hidden 2 --epochs 3" + out), 0);
  EXPECT_EQ(run_cli("evaluate --checkpoint " + (dir / "checkpoints" / "vanilla_2n_1.json").string() + out), 0);
  EXPECT_EQ(run_cli("export-lp --mode full --n-hidden 1" + out), 0);

  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("train --n-hidden 2" + out), 1);             // --mode missing
  EXPECT_EQ(run_cli("pretrain --mode sideways" + out), 1);        // bad mode
  EXPECT_EQ(run_cli("evaluate --checkpoint /nonexistent.json" + out), 3);
  EXPECT_EQ(run_cli("train --mode vanilla --scenario /nonexistent.csv" + out), 3);

  // A node budget of zero leaves the MILP without any incumbent.
  const fs::path cfg = dir / "budget.json";
  std::ofstream(cfg) << R"({"pretrain_max_nodes": 0, "eval_nx": 50, "eval_nt": 100})";
  EXPECT_EQ(run_cli("--config " + cfg.string() + " pretrain --mode full --n-hidden 4" + out), 2);
}
