#pragma once

// Two-stage PINN training (full-batch ADAM, then L-BFGS) with three
// initialization modes: Glorot everywhere, or W1/b1/b2 from one of the
// pre-training MILPs with W2 frozen at its Glorot draw.

#include <chrono>
#include <iomanip>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "branch_and_bound.hpp"
#include "gradients.hpp"
#include "optim.hpp"
#include "pretrain.hpp"

namespace pinnmilp {

enum class InitMode { Vanilla, BoundaryPretrain, FullPretrain };

inline const char* to_string(InitMode m) {
  switch (m) {
    case InitMode::Vanilla: return "vanilla";
    case InitMode::BoundaryPretrain: return "boundary";
    case InitMode::FullPretrain: return "full";
  }
  return "?";
}

inline InitMode parse_init_mode(const std::string& s) {
  if (s == "vanilla") return InitMode::Vanilla;
  if (s == "boundary") return InitMode::BoundaryPretrain;
  if (s == "full") return InitMode::FullPretrain;
  throw std::invalid_argument("unknown mode: " + s);
}

struct TrainConfig {
  InitMode mode = InitMode::Vanilla;
  std::size_t n_hidden = 32;
  std::size_t adam_epochs = 5000;
  double adam_lr = 1e-2;
  std::size_t lbfgs_max_iters = 0;
  std::size_t lbfgs_history = 10;
  double lbfgs_grad_tol = 1e-9;
  std::uint64_t seed = 0;
  LossSpec loss_spec;
  // Pre-trained modes: start from these weights instead of solving the MILP.
  std::optional<NetworkParams> initial_params;

  void validate() const {
    if (!(adam_lr > 0.0)) throw std::invalid_argument("TrainConfig: adam_lr must be > 0");
    if (lbfgs_history < 1) throw std::invalid_argument("TrainConfig: lbfgs_history must be >= 1");
    if (n_hidden < 1) throw std::invalid_argument("TrainConfig: n_hidden must be >= 1");
    loss_spec.validate();
  }
};

struct PretrainSettings {
  double weight_box = 5.0;
  milp::MilpBudget budget;
  double lambda_u = 1.0;
  double lambda_f = 1.0;
};

/// Everything a run needs besides its configuration. The pre-training
/// subsets are typically a handful of the training points.
struct TrainingData {
  Batch batch;
  Scaler scaler;
  PhysicalParams phys;
  std::vector<BoundarySample> pretrain_boundary;
  std::vector<CollocationPoint> pretrain_collocation;
  double t_min = 0.0;  // scenario time range [s]
  double t_max = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double total = 0.0;
  double data = 0.0;
  double residual = 0.0;
  double elapsed_s = 0.0;
};

struct TrainingTrace {
  InitMode mode = InitMode::Vanilla;
  std::uint64_t seed = 0;
  std::size_t n_hidden = 0;
  std::vector<EpochRecord> records;
  NetworkParams initial_params;
  NetworkParams final_params;
  std::string final_status;
  double pretrain_seconds = 0.0;
  double train_seconds = 0.0;
  std::optional<PretrainResult> pretrain;
};

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pre-training configuration sharing the run's frozen W2.
inline PretrainConfig make_pretrain_config(const TrainingData& data, PretrainMode mode, const NetworkParams& glorot,
                                           const PretrainSettings& settings) {
  PretrainConfig cfg;
  cfg.mode = mode;
  cfg.scaler = data.scaler;
  cfg.weight_box = settings.weight_box;
  cfg.lambda_u = settings.lambda_u;
  cfg.lambda_f = settings.lambda_f;
  cfg.t_min = data.t_min;
  cfg.t_max = data.t_max;
  for (std::size_t n = 0; n < glorot.n_hidden(); ++n) cfg.W2_fixed.push_back(glorot.w2(n));
  std::vector<InputPoint> inputs;
  for (const auto& b : data.batch.boundary) inputs.push_back(b.input);
  for (const auto& c : data.batch.collocation) inputs.push_back(c.input);
  set_default_epsilons(cfg, inputs);
  return cfg;
}

/// Builds and solves the pre-training MILP for `mode`.
inline PretrainResult run_pretraining(const TrainingData& data, PretrainMode mode, const NetworkParams& glorot,
                                      const PretrainSettings& settings) {
  const PretrainConfig cfg = make_pretrain_config(data, mode, glorot, settings);
  const milp::MilpModel model = mode == PretrainMode::Boundary
                                    ? build_boundary_model(data.pretrain_boundary, cfg)
                                    : build_full_model(data.pretrain_boundary, data.pretrain_collocation, data.phys, cfg);
  const auto start = std::chrono::steady_clock::now();
  const milp::MilpSolution sol = milp::solve_milp(model, settings.budget);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (sol.status == milp::MilpStatus::Infeasible) throw PipelineError("pre-training MILP is infeasible");
  PretrainResult r = decode_solution(sol, cfg);
  r.wall_time = seconds;
  return r;
}

inline TrainingTrace train_pipeline(const TrainingData& data, const TrainConfig& cfg,
                                    const PretrainSettings& pretrain = {}) {
  cfg.validate();
  TrainingTrace trace;
  trace.mode = cfg.mode;
  trace.seed = cfg.seed;
  trace.n_hidden = cfg.n_hidden;

  NetworkParams params = glorot_init(cfg.seed, cfg.n_hidden);
  if (cfg.mode != InitMode::Vanilla && cfg.initial_params) {
    if (cfg.initial_params->n_hidden() != cfg.n_hidden) throw PipelineError("initial parameters have the wrong width");
    params = *cfg.initial_params;
  } else if (cfg.mode != InitMode::Vanilla) {
    const PretrainMode pm = cfg.mode == InitMode::BoundaryPretrain ? PretrainMode::Boundary : PretrainMode::Full;
    try {
      PretrainResult r = run_pretraining(data, pm, params, pretrain);
      trace.pretrain_seconds = r.wall_time;
      params = r.params;
      trace.pretrain = std::move(r);
    } catch (const milp::MilpError& e) {
      throw PipelineError(std::string("pre-training failed: ") + e.what());
    }
  }
  trace.initial_params = params;

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  auto record = [&](std::size_t epoch, const LossTerms& t) {
    trace.records.push_back({epoch, t.total, t.data, t.residual, elapsed()});
  };

  auto lg = parameter_gradients(params, data.scaler, data.phys, cfg.loss_spec, data.batch);
  record(0, lg.loss);
  AdamState adam;
  for (std::size_t e = 1; e <= cfg.adam_epochs; ++e) {
    adam_step(params.flat(), lg.gradient, adam, cfg.adam_lr);
    lg = parameter_gradients(params, data.scaler, data.phys, cfg.loss_spec, data.batch);
    record(e, lg.loss);
  }
  trace.final_status = "adam";

  if (cfg.lbfgs_max_iters > 0) {
    NetworkParams work = params;
    auto objective = [&](std::span<const double> x, std::span<double> grad) {
      std::copy(x.begin(), x.end(), work.flat().begin());  // accepted point on the last call
      const auto lg = parameter_gradients(work, data.scaler, data.phys, cfg.loss_spec, data.batch);
      std::copy(lg.gradient.begin(), lg.gradient.end(), grad.begin());
      return lg.loss.total;
    };
    LbfgsConfig lc;
    lc.max_iters = cfg.lbfgs_max_iters;
    lc.history = cfg.lbfgs_history;
    lc.grad_tol = cfg.lbfgs_grad_tol;
    const std::size_t offset = cfg.adam_epochs;
    std::vector<double> x0(params.flat().begin(), params.flat().end());
    const auto res = lbfgs_minimize(std::move(x0), objective, lc, [&](std::size_t it, double) {
      record(offset + it, composite_loss(work, data.scaler, data.phys, cfg.loss_spec, data.batch));
    });
    std::copy(res.x.begin(), res.x.end(), params.flat().begin());
    trace.final_status = to_string(res.status);
  }
  trace.train_seconds = elapsed();
  trace.final_params = params;
  return trace;
}

/// Trace CSV with a metadata comment line.
inline void write_trace_csv(std::ostream& out, const TrainingTrace& t) {
  out << "# mode=" << to_string(t.mode) << " seed=" << t.seed << " n_hidden=" << t.n_hidden
      << " status=" << t.final_status << '\n';
  out << "epoch,total,mse_u,mse_f,elapsed_s\n";
  out << std::setprecision(17);
  for (const auto& r : t.records)
    out << r.epoch << ',' << r.total << ',' << r.data << ',' << r.residual << ',' << r.elapsed_s << '\n';
}

}  // namespace pinnmilp
