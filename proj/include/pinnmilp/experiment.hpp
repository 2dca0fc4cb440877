#pragma once

// Experiment commands behind the command-line tool: data generation,
// pre-training, training runs, evaluation against the reference field and
// repeated-run sweeps with summary statistics.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "lp_format.hpp"
#include "reference_solver.hpp"
#include "trainer.hpp"

namespace pinnmilp {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::vector<std::size_t> n_hidden{32, 60};
  std::size_t repetitions = 5;
  std::size_t n_boundary = 10;  // pre-training subset
  std::size_t n_collocation = 5;
  std::size_t train_boundary = 0;  // 0: same as the pre-training subset
  std::size_t train_collocation = 0;
  std::size_t eval_nx = 50;
  std::size_t eval_nt = 100;
  std::uint64_t seed = 1;       // run r uses seed + r
  std::uint64_t data_seed = 7;  // scenario and point sampling
  double horizon_hours = 100.0;
  std::vector<InitMode> modes{InitMode::Vanilla, InitMode::BoundaryPretrain, InitMode::FullPretrain};
  std::string out_dir = "out";
  std::size_t adam_epochs = 5000;
  double adam_lr = 1e-2;
  std::size_t lbfgs_max_iters = 0;
  double weight_box = 5.0;
  double lambda_u = 1.0;
  double lambda_f = 1.0;
  double pretrain_max_seconds = 300.0;
  std::size_t pretrain_max_nodes = 200000;
  bool include_density_in_residual = false;
  std::size_t jobs = 1;

  std::size_t boundary_count() const { return train_boundary ? train_boundary : n_boundary; }
  std::size_t collocation_count() const { return train_collocation ? train_collocation : n_collocation; }

  void validate() const {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (n_boundary < 1 || n_collocation < 1) throw ConfigError("point counts must be >= 1");
    if (boundary_count() < n_boundary || collocation_count() < n_collocation)
      throw ConfigError("training sets must be at least as large as the pre-training subsets");
    if (eval_nx < 3 || eval_nt < 2) throw ConfigError("evaluation grid too small");
    if (n_hidden.empty() || modes.empty()) throw ConfigError("need at least one width and one mode");
    for (std::size_t n : n_hidden)
      if (n < 1) throw ConfigError("widths must be >= 1");
    if (!(horizon_hours > 0.0)) throw ConfigError("horizon must be positive");
    if (!(adam_lr > 0.0)) throw ConfigError("adam_lr must be positive");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
  }

  PhysicalParams physics() const {
    PhysicalParams p;
    p.include_density_in_residual = include_density_in_residual;
    return p;
  }

  PretrainSettings pretrain_settings() const {
    PretrainSettings s;
    s.weight_box = weight_box;
    s.lambda_u = lambda_u;
    s.lambda_f = lambda_f;
    s.budget.max_seconds = pretrain_max_seconds;
    s.budget.max_nodes = pretrain_max_nodes;
    return s;
  }

  Grid eval_grid() const { return Grid{eval_nx, eval_nt, Domain{0.0, 1.0, 0.0, hours_to_seconds(horizon_hours)}}; }
};

/// Reads a JSON config; absent keys keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("n_hidden", c.n_hidden);
    get("repetitions", c.repetitions);
    get("n_boundary", c.n_boundary);
    get("n_collocation", c.n_collocation);
    get("train_boundary", c.train_boundary);
    get("train_collocation", c.train_collocation);
    get("eval_nx", c.eval_nx);
    get("eval_nt", c.eval_nt);
    get("seed", c.seed);
    get("data_seed", c.data_seed);
    get("horizon_hours", c.horizon_hours);
    get("out", c.out_dir);
    get("adam_epochs", c.adam_epochs);
    get("adam_lr", c.adam_lr);
    get("lbfgs_max_iters", c.lbfgs_max_iters);
    get("weight_box", c.weight_box);
    get("lambda_u", c.lambda_u);
    get("lambda_f", c.lambda_f);
    get("pretrain_max_seconds", c.pretrain_max_seconds);
    get("pretrain_max_nodes", c.pretrain_max_nodes);
    get("include_density_in_residual", c.include_density_in_residual);
    get("jobs", c.jobs);
    if (j.contains("modes")) {
      c.modes.clear();
      for (const auto& m : j.at("modes")) c.modes.push_back(parse_init_mode(m.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

/// out/{scenario,checkpoints,traces,grids,summary}
struct OutputLayout {
  fs::path root;

  fs::path scenario() const { return root / "scenario"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  fs::path traces() const { return root / "traces"; }
  fs::path grids() const { return root / "grids"; }
  fs::path summary() const { return root / "summary"; }
  fs::path scenario_csv() const { return scenario() / "scenario.csv"; }
  fs::path reference_csv() const { return scenario() / "reference.csv"; }

  void create() const {
    std::error_code ec;
    for (const auto& d : {scenario(), checkpoints(), traces(), grids(), summary()}) {
      fs::create_directories(d, ec);
      if (ec) throw IoError("cannot create directory " + d.string() + ": " + ec.message());
    }
  }
};

inline std::string run_stem(const std::string& mode, std::size_t n_hidden, std::uint64_t seed) {
  return mode + "_" + std::to_string(n_hidden) + "n_" + std::to_string(seed);
}

namespace detail {

inline std::ofstream open_output(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

inline void finish(std::ofstream& out, const fs::path& p) {
  out.flush();
  if (!out) throw IoError("write failed for " + p.string());
}

inline std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

}  // namespace detail

struct ExperimentData {
  Scenario scenario;
  TemperatureField reference;
  PhysicalParams phys;
  TrainingData training;
};

inline Scenario read_scenario(const fs::path& p) {
  auto in = detail::open_input(p);
  return parse_scenario_csv(in);
}

inline TemperatureField read_field(const fs::path& p) {
  auto in = detail::open_input(p);
  return read_field_csv(in);
}

/// Samples the training set from the reference field, takes the
/// pre-training subsets from its front and fits the scaler. Pre-training
/// collocation points must leave room for the forward time shift.
inline ExperimentData prepare_data(Scenario scenario, TemperatureField reference, const ExperimentConfig& cfg) {
  ExperimentData d{std::move(scenario), std::move(reference), cfg.physics(), {}};
  const TrainingPoints pts = sample_training_points(d.reference, d.scenario, d.phys, cfg.boundary_count(),
                                                    cfg.collocation_count(), cfg.data_seed);
  TrainingData& t = d.training;
  t.batch.boundary = pts.boundary;
  t.batch.collocation = pts.collocation;
  t.phys = d.phys;
  t.t_min = d.scenario.t_begin();
  t.t_max = d.scenario.t_last();

  std::vector<InputPoint> inputs;
  for (const auto& b : pts.boundary) inputs.push_back(b.input);
  for (const auto& c : pts.collocation) inputs.push_back(c.input);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < d.scenario.size(); ++k) {
    lo = std::min({lo, d.scenario.T_a[k], d.scenario.T_o[k]});
    hi = std::max({hi, d.scenario.T_a[k], d.scenario.T_o[k]});
  }
  t.scaler = Scaler::fit(inputs, lo, hi);

  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
  for (const auto& p : inputs) {
    tmin = std::min(tmin, p.t);
    tmax = std::max(tmax, p.t);
  }
  const double shift = 0.01 * (tmax - tmin);
  t.pretrain_boundary.assign(pts.boundary.begin(), pts.boundary.begin() + static_cast<long>(cfg.n_boundary));
  for (const auto& c : pts.collocation) {
    if (t.pretrain_collocation.size() == cfg.n_collocation) break;
    if (c.input.t + shift <= t.t_max) t.pretrain_collocation.push_back(c);
  }
  return d;
}

inline ExperimentData load_data(const fs::path& scenario_csv, const fs::path& reference_csv,
                                const ExperimentConfig& cfg) {
  return prepare_data(read_scenario(scenario_csv), read_field(reference_csv), cfg);
}

// ---------------------------------------------------------------- generate

struct GenerateResult {
  fs::path scenario_csv;
  fs::path reference_csv;
};

inline GenerateResult cmd_generate(const ExperimentConfig& cfg, std::uint64_t seed) {
  const OutputLayout out{cfg.out_dir};
  out.create();
  const Scenario sc = generate_scenario(seed, cfg.horizon_hours);
  const Grid grid = cfg.eval_grid();
  const TemperatureField field = solve(cfg.physics(), sc, grid, steady_profile(cfg.physics(), sc, grid, grid.domain.t0));
  GenerateResult r{out.scenario_csv(), out.reference_csv()};
  {
    auto f = detail::open_output(r.scenario_csv);
    write_scenario_csv(f, sc);
    detail::finish(f, r.scenario_csv);
  }
  {
    auto f = detail::open_output(r.reference_csv);
    write_field_csv(f, field);
    detail::finish(f, r.reference_csv);
  }
  return r;
}

// ---------------------------------------------------------------- pretrain

inline milp::MilpModel build_pretrain_model(const TrainingData& data, PretrainMode mode, std::size_t n_hidden,
                                            std::uint64_t seed, const PretrainSettings& settings) {
  const PretrainConfig pc = make_pretrain_config(data, mode, glorot_init(seed, n_hidden), settings);
  return mode == PretrainMode::Boundary
             ? build_boundary_model(data.pretrain_boundary, pc)
             : build_full_model(data.pretrain_boundary, data.pretrain_collocation, data.phys, pc);
}

inline fs::path lp_path(const OutputLayout& out, PretrainMode mode, std::size_t n_hidden, std::uint64_t seed) {
  return out.checkpoints() / (run_stem(std::string("pretrain_") + to_string(mode), n_hidden, seed) + ".lp");
}

inline fs::path cmd_export_lp(const ExperimentConfig& cfg, const ExperimentData& data, PretrainMode mode,
                              std::size_t n_hidden, std::uint64_t seed) {
  const OutputLayout out{cfg.out_dir};
  out.create();
  const auto model = build_pretrain_model(data.training, mode, n_hidden, seed, cfg.pretrain_settings());
  const fs::path p = lp_path(out, mode, n_hidden, seed);
  auto f = detail::open_output(p);
  f << export_lp(model, run_stem(std::string("pretrain_") + to_string(mode), n_hidden, seed));
  detail::finish(f, p);
  return p;
}

struct PretrainReport {
  PretrainResult result;
  fs::path checkpoint;
  fs::path lp_file;
};

/// Solves the pre-training MILP; writes the checkpoint, the LP export and
/// a timing record.
inline PretrainReport cmd_pretrain(const ExperimentConfig& cfg, const ExperimentData& data, PretrainMode mode,
                                   std::size_t n_hidden, std::uint64_t seed) {
  const OutputLayout out{cfg.out_dir};
  out.create();
  PretrainReport rep;
  rep.lp_file = cmd_export_lp(cfg, data, mode, n_hidden, seed);
  try {
    rep.result = run_pretraining(data.training, mode, glorot_init(seed, n_hidden), cfg.pretrain_settings());
  } catch (const PipelineError& e) {
    throw InfeasibleError(e.what());
  } catch (const milp::MilpError& e) {
    throw InfeasibleError(e.what());
  }
  const std::string stem = run_stem(std::string("pretrain_") + to_string(mode), n_hidden, seed);
  rep.checkpoint = out.checkpoints() / (stem + ".json");
  save_checkpoint(rep.checkpoint.string(), rep.result.params, data.training.scaler);

  const nlohmann::json timing = {{"mode", to_string(mode)},
                                 {"n_hidden", n_hidden},
                                 {"seed", seed},
                                 {"status", milp::to_string(rep.result.status)},
                                 {"objective", rep.result.objective},
                                 {"data_term", rep.result.data_term},
                                 {"node_count", rep.result.node_count},
                                 {"wall_time_s", rep.result.wall_time}};
  const fs::path tp = out.summary() / (stem + ".json");
  auto f = detail::open_output(tp);
  f << timing.dump(2) << '\n';
  detail::finish(f, tp);
  return rep;
}

// ---------------------------------------------------------------- evaluate

inline TemperatureField predict_field(const NetworkParams& p, const Scaler& s, const Scenario& sc,
                                      const PhysicalParams& phys, const Grid& grid) {
  TemperatureField f(grid);
  for (std::size_t i = 0; i < grid.nx; ++i)
    for (std::size_t j = 0; j < grid.nt; ++j) f.at(i, j) = forward(p, s, make_input(sc, phys, grid.x(i), grid.t(j)));
  return f;
}

inline void check_compatible(const Grid& a, const Grid& b) {
  auto close = [](double u, double v) { return std::abs(u - v) <= 1e-9 * std::max(1.0, std::abs(u)); };
  if (a.nx != b.nx || a.nt != b.nt || !close(a.domain.x0, b.domain.x0) || !close(a.domain.x_end, b.domain.x_end) ||
      !close(a.domain.t0, b.domain.t0) || !close(a.domain.t_end, b.domain.t_end))
    throw GridMismatch("grids are not compatible");
}

/// Mean squared difference in normalized output units.
inline double normalized_mse(const TemperatureField& a, const TemperatureField& b, const Scaler& s) {
  check_compatible(a.grid, b.grid);
  double acc = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const double d = (a.values[k] - b.values[k]) / s.output_range();
    acc += d * d;
  }
  return acc / static_cast<double>(a.values.size());
}

inline constexpr double kSliceHours[] = {15.0, 30.0, 50.0, 65.0, 80.0};

struct SliceReport {
  double hours = 0.0;
  double mse = 0.0;  // normalized units
  fs::path file;
};

struct EvaluationReport {
  double total_mse = 0.0;  // normalized units
  std::vector<SliceReport> slices;
};

/// Reference value at (i, t), linear in time between grid levels.
inline double field_at_time(const TemperatureField& f, std::size_t i, double t) {
  const Grid& g = f.grid;
  const double pos = (t - g.domain.t0) / (g.domain.t_end - g.domain.t0) * static_cast<double>(g.nt - 1);
  const auto j = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(pos))), g.nt - 2);
  const double w = pos - static_cast<double>(j);
  return (1.0 - w) * f.at(i, j) + w * f.at(i, j + 1);
}

/// Compares a checkpoint with the reference on the reference grid and writes
/// one CSV per time slice inside the reference time range.
inline EvaluationReport evaluate_checkpoint(const Checkpoint& ck, const Scenario& sc, const TemperatureField& ref,
                                            const PhysicalParams& phys, const fs::path& slice_dir,
                                            const std::string& stem) {
  const Grid& g = ref.grid;
  if (g.domain.t0 < sc.t_begin() - 1e-9 || g.domain.t_end > sc.t_last() + 1e-9)
    throw GridMismatch("reference grid extends beyond the scenario time range");
  EvaluationReport rep;
  rep.total_mse = normalized_mse(predict_field(ck.params, ck.scaler, sc, phys, g), ref, ck.scaler);
  for (double h : kSliceHours) {
    const double t = hours_to_seconds(h);
    if (t < g.domain.t0 || t > g.domain.t_end) continue;
    SliceReport s;
    s.hours = h;
    std::ostringstream name;
    name << stem << "_slice_" << h << "h.csv";
    s.file = slice_dir / name.str();
    auto f = detail::open_output(s.file);
    f << "x_m,reference,predicted,abs_error\n" << std::setprecision(17);
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double r = field_at_time(ref, i, t);
      const double p = forward(ck.params, ck.scaler, make_input(sc, phys, g.x(i), t));
      const double d = (p - r) / ck.scaler.output_range();
      s.mse += d * d;
      f << g.x(i) << ',' << r << ',' << p << ',' << std::abs(p - r) << '\n';
    }
    detail::finish(f, s.file);
    s.mse /= static_cast<double>(g.nx);
    rep.slices.push_back(s);
  }
  return rep;
}

inline EvaluationReport cmd_evaluate(const ExperimentConfig& cfg, const fs::path& checkpoint, const Scenario& sc,
                                     const TemperatureField& ref) {
  const OutputLayout out{cfg.out_dir};
  out.create();
  Checkpoint ck;
  try {
    ck = load_checkpoint(checkpoint.string());
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  return evaluate_checkpoint(ck, sc, ref, cfg.physics(), out.grids(), checkpoint.stem().string());
}

// ---------------------------------------------------------------- train

struct RunResult {
  InitMode mode = InitMode::Vanilla;
  std::size_t n_hidden = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string status;
  double pretrain_seconds = 0.0;
  double train_seconds = 0.0;
  double total = std::numeric_limits<double>::quiet_NaN();
  double mse_u = std::numeric_limits<double>::quiet_NaN();
  double mse_f = std::numeric_limits<double>::quiet_NaN();
  double eval_mse = std::numeric_limits<double>::quiet_NaN();
};

inline TrainConfig train_config(const ExperimentConfig& cfg, InitMode mode, std::size_t n_hidden,
                                std::uint64_t seed) {
  TrainConfig tc;
  tc.mode = mode;
  tc.n_hidden = n_hidden;
  tc.seed = seed;
  tc.adam_epochs = cfg.adam_epochs;
  tc.adam_lr = cfg.adam_lr;
  tc.lbfgs_max_iters = cfg.lbfgs_max_iters;
  tc.loss_spec.lambda_u = cfg.lambda_u;
  tc.loss_spec.lambda_f = cfg.lambda_f;
  return tc;
}

/// One training run; writes its trace, checkpoint and predicted grid.
inline RunResult cmd_train(const ExperimentConfig& cfg, const ExperimentData& data, InitMode mode,
                           std::size_t n_hidden, std::uint64_t seed,
                           const std::optional<fs::path>& init_checkpoint = std::nullopt) {
  const OutputLayout out{cfg.out_dir};
  out.create();
  TrainConfig tc = train_config(cfg, mode, n_hidden, seed);
  if (init_checkpoint && mode != InitMode::Vanilla) {
    try {
      tc.initial_params = load_checkpoint(init_checkpoint->string()).params;
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
  }
  const TrainingTrace trace = train_pipeline(data.training, tc, cfg.pretrain_settings());

  const std::string stem = run_stem(to_string(mode), n_hidden, seed);
  const fs::path trace_path = out.traces() / (stem + ".csv");
  {
    auto f = detail::open_output(trace_path);
    write_trace_csv(f, trace);
    detail::finish(f, trace_path);
  }
  save_checkpoint((out.checkpoints() / (stem + ".json")).string(), trace.final_params, data.training.scaler);
  const TemperatureField pred =
      predict_field(trace.final_params, data.training.scaler, data.scenario, data.phys, data.reference.grid);
  const fs::path grid_path = out.grids() / (stem + ".csv");
  {
    auto f = detail::open_output(grid_path);
    write_field_csv(f, pred);
    detail::finish(f, grid_path);
  }

  RunResult r;
  r.mode = mode;
  r.n_hidden = n_hidden;
  r.seed = seed;
  r.ok = true;
  r.status = trace.final_status;
  r.pretrain_seconds = trace.pretrain_seconds;
  r.train_seconds = trace.train_seconds;
  r.total = trace.records.back().total;
  r.mse_u = trace.records.back().data;
  r.mse_f = trace.records.back().residual;
  r.eval_mse = normalized_mse(pred, data.reference, data.training.scaler);
  return r;
}

// ---------------------------------------------------------------- compare

struct MeanStd {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
};

/// Mean and sample (n-1) standard deviation; a single value has std 0.
inline MeanStd mean_and_sample_std(std::span<const double> v) {
  MeanStd r;
  if (v.empty()) return r;
  double s = 0.0;
  for (double x : v) s += x;
  r.mean = s / static_cast<double>(v.size());
  if (v.size() == 1) {
    r.std = 0.0;
    return r;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return r;
}

struct AggregateRow {
  InitMode mode = InitMode::Vanilla;
  std::size_t n_hidden = 0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  MeanStd total, mse_u, mse_f, eval_mse, pretrain_seconds, train_seconds;
};

struct RunSummary {
  std::vector<RunResult> runs;
  std::vector<AggregateRow> aggregates;
};

inline RunSummary summarize(std::vector<RunResult> runs) {
  RunSummary s;
  s.runs = std::move(runs);
  std::vector<std::pair<InitMode, std::size_t>> cells;
  for (const auto& r : s.runs)
    if (std::find(cells.begin(), cells.end(), std::pair{r.mode, r.n_hidden}) == cells.end())
      cells.emplace_back(r.mode, r.n_hidden);
  for (const auto& [mode, n] : cells) {
    AggregateRow a;
    a.mode = mode;
    a.n_hidden = n;
    std::vector<double> total, mu, mf, ev, ps, ts;
    for (const auto& r : s.runs) {
      if (r.mode != mode || r.n_hidden != n) continue;
      ++a.runs;
      if (!r.ok) {
        ++a.failures;
        continue;
      }
      total.push_back(r.total);
      mu.push_back(r.mse_u);
      mf.push_back(r.mse_f);
      ev.push_back(r.eval_mse);
      ps.push_back(r.pretrain_seconds);
      ts.push_back(r.train_seconds);
    }
    a.total = mean_and_sample_std(total);
    a.mse_u = mean_and_sample_std(mu);
    a.mse_f = mean_and_sample_std(mf);
    a.eval_mse = mean_and_sample_std(ev);
    a.pretrain_seconds = mean_and_sample_std(ps);
    a.train_seconds = mean_and_sample_std(ts);
    s.aggregates.push_back(a);
  }
  return s;
}

/// Writes runs.csv and aggregate.csv (deterministic per seed), timings.csv
/// (wall clock) and boxplot.csv (final losses grouped by mode and width).
inline void write_summary(const fs::path& dir, const RunSummary& s) {
  auto write = [&](const std::string& name, auto&& body) {
    const fs::path p = dir / name;
    auto f = detail::open_output(p);
    f << std::setprecision(17);
    body(f);
    detail::finish(f, p);
  };
  write("runs.csv", [&](std::ostream& f) {
    f << "mode,n_hidden,seed,ok,status,total,mse_u,mse_f,eval_mse,error\n";
    for (const auto& r : s.runs) {
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      f << to_string(r.mode) << ',' << r.n_hidden << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << r.status << ','
        << r.total << ',' << r.mse_u << ',' << r.mse_f << ',' << r.eval_mse << ',' << err << '\n';
    }
  });
  write("timings.csv", [&](std::ostream& f) {
    f << "mode,n_hidden,seed,pretrain_s,train_s\n";
    for (const auto& r : s.runs)
      f << to_string(r.mode) << ',' << r.n_hidden << ',' << r.seed << ',' << r.pretrain_seconds << ','
        << r.train_seconds << '\n';
  });
  write("aggregate.csv", [&](std::ostream& f) {
    f << "mode,n_hidden,runs,failures,total_mean,total_std,mse_u_mean,mse_u_std,mse_f_mean,mse_f_std,"
         "eval_mse_mean,eval_mse_std\n";
    for (const auto& a : s.aggregates)
      f << to_string(a.mode) << ',' << a.n_hidden << ',' << a.runs << ',' << a.failures << ',' << a.total.mean << ','
        << a.total.std << ',' << a.mse_u.mean << ',' << a.mse_u.std << ',' << a.mse_f.mean << ',' << a.mse_f.std
        << ',' << a.eval_mse.mean << ',' << a.eval_mse.std << '\n';
  });
  write("boxplot.csv", [&](std::ostream& f) {
    f << "group,mode,n_hidden,seed,final_total\n";
    for (const auto& r : s.runs)
      if (r.ok)
        f << to_string(r.mode) << '_' << r.n_hidden << ',' << to_string(r.mode) << ',' << r.n_hidden << ',' << r.seed
          << ',' << r.total << '\n';
  });
}

/// Full sweep: generates the data, runs every (mode, width, repetition) with
/// up to cfg.jobs runs in flight, then aggregates. A failing run is recorded
/// and the sweep continues.
inline RunSummary cmd_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  const GenerateResult gen = cmd_generate(cfg, cfg.data_seed);
  const ExperimentData data = load_data(gen.scenario_csv, gen.reference_csv, cfg);

  struct Job {
    InitMode mode;
    std::size_t n_hidden;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (InitMode m : cfg.modes)
    for (std::size_t n : cfg.n_hidden)
      for (std::size_t r = 0; r < cfg.repetitions; ++r) jobs.push_back({m, n, cfg.seed + r});

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& j = jobs[k];
      try {
        results[k] = cmd_train(cfg, data, j.mode, j.n_hidden, j.seed);
      } catch (const std::exception& e) {
        RunResult r;
        r.mode = j.mode;
        r.n_hidden = j.n_hidden;
        r.seed = j.seed;
        r.error = e.what();
        r.status = "failed";
        results[k] = r;
      }
    }
  };
  const std::size_t n_threads = std::min(cfg.jobs, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  RunSummary s = summarize(std::move(results));
  write_summary(OutputLayout{cfg.out_dir}.summary(), s);
  return s;
}

}  // namespace pinnmilp
