#pragma once

// MILP encodings of the pre-training problems. The hidden activation is
// replaced by sat(x) written with four convex-combination weights gamma and
// three zone binaries beta; absolute errors are linearized with one
// auxiliary variable each. W2 is frozen, so every network output is affine
// in (W1, b1, b2, sat).

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "branch_and_bound.hpp"
#include "heat_model.hpp"
#include "loss.hpp"
#include "milp_model.hpp"
#include "network.hpp"
#include "points.hpp"

namespace pinnmilp {

enum class PretrainMode { Boundary, Full };

inline const char* to_string(PretrainMode m) { return m == PretrainMode::Boundary ? "boundary" : "full"; }

struct PretrainConfig {
  PretrainMode mode = PretrainMode::Boundary;
  std::vector<double> W2_fixed;
  Scaler scaler;
  double weight_box = 5.0;  // |W1|, |b1|, |b2| <= weight_box (scaled units)
  double big_M = 0.0;       // 0: derived from the data by the builders
  double epsilon_t = 0.0;   // finite-difference steps in standardized units
  double epsilon_x = 0.0;
  double lambda_u = 1.0;
  double lambda_f = 1.0;
  // Admissible physical time range for shifted evaluation points [s].
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();

  std::size_t n_hidden() const { return W2_fixed.size(); }
};

class PretrainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Default steps: 1% of the standardized t- and x-ranges of `inputs`.
inline void set_default_epsilons(PretrainConfig& cfg, std::span<const InputPoint> inputs) {
  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin, xmin = tmin, xmax = -tmin;
  for (const auto& p : inputs) {
    tmin = std::min(tmin, p.t);
    tmax = std::max(tmax, p.t);
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
  }
  cfg.epsilon_t = 0.01 * (tmax - tmin) / cfg.scaler.input_std[InputPoint::kTime];
  cfg.epsilon_x = 0.01 * (xmax - xmin) / cfg.scaler.input_std[InputPoint::kPosition];
}

/// Smallest M satisfying M >= w (1 + sum_j max|X~_j|) + w over the points.
inline double derive_big_M(const Scaler& s, double weight_box, std::span<const InputPoint> points) {
  Features maxabs{0, 0, 0, 0, 0};
  for (const auto& p : points) {
    const Features xs = s.standardize(p);
    for (std::size_t j = 0; j < kInputs; ++j) maxabs[j] = std::max(maxabs[j], std::abs(xs[j]));
  }
  double sum = 0.0;
  for (double v : maxabs) sum += v;
  return std::max(1.0, weight_box * (1.0 + sum) + weight_box);
}

/// Adds sat(x) for the affine pre-activation `x`; returns the sat variable.
inline milp::VarId encode_sat(milp::MilpModel& model, const milp::LinearExpr& x, double M, const std::string& tag) {
  using milp::LinearExpr;
  using milp::Relation;
  if (!(M >= 1.0)) throw PretrainError("encode_sat: big-M must be >= 1");
  milp::VarId g[4], b[3];
  for (int k = 0; k < 4; ++k) g[k] = model.add_variable("g" + std::to_string(k + 1) + "_" + tag, 0.0, 1.0);
  for (int k = 0; k < 3; ++k) b[k] = model.add_binary("beta" + std::to_string(k + 1) + "_" + tag);
  const milp::VarId s = model.add_variable("sat_" + tag, -1.0, 1.0);

  LinearExpr sat_def = LinearExpr::var(s);
  sat_def.add(g[0], 1.0).add(g[1], 1.0).add(g[2], -1.0).add(g[3], -1.0);
  model.add_constraint(sat_def, Relation::Equal, 0.0, "satdef_" + tag);

  LinearExpr x_def = x;
  x_def.add(g[0], M).add(g[1], 1.0).add(g[2], -1.0).add(g[3], -M);
  model.add_constraint(x_def, Relation::Equal, 0.0, "xdef_" + tag);

  model.add_constraint(LinearExpr::var(g[0]).add(b[0], -1.0), Relation::LessEqual, 0.0, "z1_" + tag);
  model.add_constraint(LinearExpr::var(g[1]).add(b[0], -1.0).add(b[1], -1.0), Relation::LessEqual, 0.0, "z2_" + tag);
  model.add_constraint(LinearExpr::var(g[2]).add(b[1], -1.0).add(b[2], -1.0), Relation::LessEqual, 0.0, "z3_" + tag);
  model.add_constraint(LinearExpr::var(g[3]).add(b[2], -1.0), Relation::LessEqual, 0.0, "z4_" + tag);
  model.add_constraint(LinearExpr::var(g[0]).add(g[1], 1.0).add(g[2], 1.0).add(g[3], 1.0), Relation::Equal, 1.0,
                       "gsum_" + tag);
  model.add_constraint(LinearExpr::var(b[0]).add(b[1], 1.0).add(b[2], 1.0), Relation::Equal, 1.0, "bsum_" + tag);
  model.add_zone_triple({{b[0], b[1], b[2]}, x});
  return s;
}

/// Adds e >= |expr|; exact at any optimum that charges e positively.
inline milp::VarId encode_abs(milp::MilpModel& model, const milp::LinearExpr& expr, const std::string& name) {
  using milp::Relation;
  const auto [lo, hi] = model.expression_range(expr);
  const milp::VarId e = model.add_variable(name, 0.0, std::max(std::abs(lo), std::abs(hi)));
  model.add_constraint(milp::LinearExpr::var(e) - expr, Relation::GreaterEqual, 0.0, name + "_pos");
  model.add_constraint(milp::LinearExpr::var(e) + expr, Relation::GreaterEqual, 0.0, name + "_neg");
  return e;
}

namespace detail {

struct WeightVars {
  std::vector<milp::VarId> w1;  // n_hidden x 5, row-major
  std::vector<milp::VarId> b1;
  milp::VarId b2 = 0;
};

inline WeightVars add_weight_vars(milp::MilpModel& m, std::size_t n_hidden, double w) {
  WeightVars v;
  for (std::size_t n = 0; n < n_hidden; ++n)
    for (std::size_t j = 0; j < kInputs; ++j)
      v.w1.push_back(m.add_variable("W1_" + std::to_string(n) + "_" + std::to_string(j), -w, w));
  for (std::size_t n = 0; n < n_hidden; ++n) v.b1.push_back(m.add_variable("b1_" + std::to_string(n), -w, w));
  v.b2 = m.add_variable("b2", -w, w);
  return v;
}

// Normalized sat-network output at standardized input `xs`, as an affine
// expression in the model variables.
inline milp::LinearExpr encode_output(milp::MilpModel& m, const WeightVars& v, const PretrainConfig& cfg,
                                      const Features& xs, double M, const std::string& tag) {
  milp::LinearExpr out = milp::LinearExpr::var(v.b2);
  for (std::size_t n = 0; n < cfg.n_hidden(); ++n) {
    milp::LinearExpr pre = milp::LinearExpr::var(v.b1[n]);
    for (std::size_t j = 0; j < kInputs; ++j) pre.add(v.w1[n * kInputs + j], xs[j]);
    const milp::VarId s = encode_sat(m, pre, M, tag + "_n" + std::to_string(n));
    out.add(s, cfg.W2_fixed[n]);
  }
  return out;
}

inline void check_config(const PretrainConfig& cfg) {
  if (cfg.W2_fixed.empty()) throw PretrainError("pretrain: W2_fixed must have at least one entry");
  if (!(cfg.weight_box > 0.0)) throw PretrainError("pretrain: weight_box must be positive");
  cfg.scaler.validate();
}

struct ShiftedPoints {
  InputPoint base, t_plus, x_minus, x_plus;
  double dt = 0.0, dx = 0.0;  // physical steps
};

inline ShiftedPoints shifted_points(const CollocationPoint& c, const PretrainConfig& cfg, const PhysicalParams& phys) {
  ShiftedPoints s;
  s.dt = cfg.epsilon_t * cfg.scaler.input_std[InputPoint::kTime];
  s.dx = cfg.epsilon_x * cfg.scaler.input_std[InputPoint::kPosition];
  s.base = c.input;
  s.t_plus = c.input;
  s.t_plus.t += s.dt;
  s.x_minus = c.input;
  s.x_minus.x -= s.dx;
  s.x_minus.P_K = load_loss(c.K, s.x_minus.x, phys.nu);
  s.x_plus = c.input;
  s.x_plus.x += s.dx;
  s.x_plus.P_K = load_loss(c.K, s.x_plus.x, phys.nu);
  return s;
}

inline std::vector<InputPoint> boundary_inputs(std::span<const BoundarySample> b) {
  std::vector<InputPoint> out;
  for (const auto& s : b) out.push_back(s.input);
  return out;
}

}  // namespace detail

/// Minimizes (1/N_u) sum |u_hat_i - u_i| over W1, b1, b2 with W2 fixed,
/// targets and outputs in normalized units.
inline milp::MilpModel build_boundary_model(std::span<const BoundarySample> boundary, const PretrainConfig& cfg) {
  detail::check_config(cfg);
  if (boundary.empty()) throw PretrainError("build_boundary_model: empty boundary set");
  const auto inputs = detail::boundary_inputs(boundary);
  const double M = cfg.big_M > 0.0 ? cfg.big_M : derive_big_M(cfg.scaler, cfg.weight_box, inputs);

  milp::MilpModel m;
  const auto vars = detail::add_weight_vars(m, cfg.n_hidden(), cfg.weight_box);
  milp::LinearExpr objective;
  const double weight = 1.0 / static_cast<double>(boundary.size());
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    milp::LinearExpr err = detail::encode_output(m, vars, cfg, cfg.scaler.standardize(boundary[i].input), M,
                                                 "u" + std::to_string(i));
    err.constant -= cfg.scaler.normalize_output(boundary[i].u);
    objective.add(encode_abs(m, err, "eu_" + std::to_string(i)), weight);
  }
  m.set_objective(objective);
  return m;
}

/// Boundary objective weighted by lambda_u plus lambda_f times the mean
/// absolute finite-difference residual / residual_scale at the collocation points.
inline milp::MilpModel build_full_model(std::span<const BoundarySample> boundary,
                                        std::span<const CollocationPoint> collocation, const PhysicalParams& phys,
                                        const PretrainConfig& cfg) {
  detail::check_config(cfg);
  if (boundary.empty()) throw PretrainError("build_full_model: empty boundary set");
  if (collocation.empty()) throw PretrainError("build_full_model: empty collocation set");
  if (!(cfg.epsilon_t > 0.0 && cfg.epsilon_x > 0.0)) throw PretrainError("build_full_model: epsilons must be > 0");

  std::vector<detail::ShiftedPoints> shifted;
  auto inputs = detail::boundary_inputs(boundary);
  for (const auto& c : collocation) {
    auto s = detail::shifted_points(c, cfg, phys);
    if (s.base.t < cfg.t_min || s.t_plus.t > cfg.t_max) {
      throw PretrainError("build_full_model: shifted evaluation time " + std::to_string(s.t_plus.t) +
                          " s lies outside the scenario time range");
    }
    inputs.insert(inputs.end(), {s.base, s.t_plus, s.x_minus, s.x_plus});
    shifted.push_back(s);
  }
  const double M = cfg.big_M > 0.0 ? cfg.big_M : derive_big_M(cfg.scaler, cfg.weight_box, inputs);

  milp::MilpModel m;
  const auto vars = detail::add_weight_vars(m, cfg.n_hidden(), cfg.weight_box);
  milp::LinearExpr objective;
  const double wu = cfg.lambda_u / static_cast<double>(boundary.size());
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    milp::LinearExpr err = detail::encode_output(m, vars, cfg, cfg.scaler.standardize(boundary[i].input), M,
                                                 "u" + std::to_string(i));
    err.constant -= cfg.scaler.normalize_output(boundary[i].u);
    const milp::VarId e = encode_abs(m, err, "eu_" + std::to_string(i));
    if (wu != 0.0) objective.add(e, wu);
  }

  const double range = cfg.scaler.output_range();
  const double heat = residual_scale(phys, cfg.scaler);
  const double wf = cfg.lambda_f / static_cast<double>(collocation.size());
  for (std::size_t j = 0; j < shifted.size(); ++j) {
    const auto& s = shifted[j];
    const std::string tag = "f" + std::to_string(j);
    const auto& sc = cfg.scaler;
    const auto y0 = detail::encode_output(m, vars, cfg, sc.standardize(s.base), M, tag + "c");
    const auto yt = detail::encode_output(m, vars, cfg, sc.standardize(s.t_plus), M, tag + "t");
    const auto ym = detail::encode_output(m, vars, cfg, sc.standardize(s.x_minus), M, tag + "xm");
    const auto yp = detail::encode_output(m, vars, cfg, sc.standardize(s.x_plus), M, tag + "xp");

    // f~ / residual_scale with u = out_min + range * y.
    const double ct = phys.time_coefficient() * range / s.dt / heat;
    const double cx = phys.k * range / (s.dx * s.dx) / heat;
    const double ch = phys.h * range / heat;
    milp::LinearExpr r;
    r.add(yt, ct).add(y0, -ct);
    r.add(yp, -cx).add(y0, 2.0 * cx).add(ym, -cx);
    r.add(y0, ch);
    r.constant += (-phys.P0 - s.base.P_K + phys.h * (sc.output_min - s.base.T_a)) / heat;
    const milp::VarId e = encode_abs(m, r, "ef_" + std::to_string(j));
    if (wf != 0.0) objective.add(e, wf);
  }
  m.set_objective(objective);
  return m;
}

struct PretrainResult {
  NetworkParams params;
  double objective = 0.0;  // solver objective
  double data_term = 0.0;  // (1/N_u) sum of the solved absolute errors
  milp::MilpStatus status = milp::MilpStatus::Infeasible;
  std::size_t node_count = 0;
  double wall_time = 0.0;
};

class MissingVariable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads W1, b1, b2 by name; W2 is taken from the config.
inline PretrainResult decode_solution(const milp::MilpSolution& sol, const PretrainConfig& cfg) {
  if (sol.status == milp::MilpStatus::Infeasible) throw PretrainError("decode_solution: infeasible solution");
  auto get = [&](const std::string& name) {
    const auto v = sol.value(name);
    if (!v) throw MissingVariable("decode_solution: solution lacks variable " + name);
    return *v;
  };
  PretrainResult r;
  r.params = NetworkParams(cfg.n_hidden());
  for (std::size_t n = 0; n < cfg.n_hidden(); ++n) {
    for (std::size_t j = 0; j < kInputs; ++j)
      r.params.w1(n, j) = get("W1_" + std::to_string(n) + "_" + std::to_string(j));
    r.params.b1(n) = get("b1_" + std::to_string(n));
    r.params.w2(n) = cfg.W2_fixed[n];
  }
  r.params.b2() = get("b2");
  r.objective = sol.objective;
  std::size_t count = 0;
  double sum = 0.0;
  for (;; ++count) {
    const auto v = sol.value("eu_" + std::to_string(count));
    if (!v) break;
    sum += *v;
  }
  r.data_term = count ? sum / static_cast<double>(count) : 0.0;
  r.status = sol.status;
  r.node_count = sol.node_count;
  r.wall_time = sol.wall_time;
  return r;
}

/// Mean |sat-network(x) - u| on the given points, normalized units.
inline double sat_network_mae(const NetworkParams& p, const Scaler& s, std::span<const BoundarySample> points) {
  double acc = 0.0;
  for (const auto& b : points) acc += std::abs(forward_sat_raw(p, s.standardize(b.input)) - s.normalize_output(b.u));
  return acc / static_cast<double>(points.size());
}

}  // namespace pinnmilp
