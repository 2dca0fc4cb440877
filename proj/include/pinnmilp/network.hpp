#pragma once

// Single-hidden-layer tanh network u = W2 tanh(W1 X~ + b1) + b2 with input
// standardization and min-max output normalization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "points.hpp"

namespace pinnmilp {

inline constexpr std::size_t kInputs = InputPoint::kSize;
using Features = std::array<double, kInputs>;

/// Parameters of the network stored as one flat vector laid out as
/// [W1 (row-major, n_hidden x 5) | b1 | W2 | b2]. Optimizers work on the
/// flat view directly.
class NetworkParams {
 public:
  NetworkParams() = default;
  explicit NetworkParams(std::size_t n_hidden) : n_hidden_(n_hidden), theta_(size_for(n_hidden), 0.0) {
    if (n_hidden == 0) throw std::invalid_argument("NetworkParams: n_hidden must be >= 1");
  }

  static std::size_t size_for(std::size_t n_hidden) { return n_hidden * (kInputs + 2) + 1; }

  std::size_t n_hidden() const { return n_hidden_; }
  std::size_t size() const { return theta_.size(); }

  std::size_t w1_index(std::size_t n, std::size_t j) const { return n * kInputs + j; }
  std::size_t b1_index(std::size_t n) const { return n_hidden_ * kInputs + n; }
  std::size_t w2_index(std::size_t n) const { return n_hidden_ * (kInputs + 1) + n; }
  std::size_t b2_index() const { return n_hidden_ * (kInputs + 2); }

  double& w1(std::size_t n, std::size_t j) { return theta_[w1_index(n, j)]; }
  double w1(std::size_t n, std::size_t j) const { return theta_[w1_index(n, j)]; }
  double& b1(std::size_t n) { return theta_[b1_index(n)]; }
  double b1(std::size_t n) const { return theta_[b1_index(n)]; }
  double& w2(std::size_t n) { return theta_[w2_index(n)]; }
  double w2(std::size_t n) const { return theta_[w2_index(n)]; }
  double& b2() { return theta_[b2_index()]; }
  double b2() const { return theta_[b2_index()]; }

  std::span<double> flat() { return theta_; }
  std::span<const double> flat() const { return theta_; }

  bool all_finite() const {
    return std::all_of(theta_.begin(), theta_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const NetworkParams&) const = default;

 private:
  std::size_t n_hidden_ = 0;
  std::vector<double> theta_;
};

/// Per-column z-scoring of the inputs and min-max mapping of the output
/// temperature to [0, 1].
struct Scaler {
  Features input_mean{0, 0, 0, 0, 0};
  Features input_std{1, 1, 1, 1, 1};
  double output_min = 0.0;
  double output_max = 1.0;

  static Scaler identity() { return Scaler{}; }

  void validate() const {
    if (!(output_max > output_min)) throw std::invalid_argument("Scaler: output_max must exceed output_min");
    for (double s : input_std) {
      if (!(s > 0.0)) throw std::invalid_argument("Scaler: input_std must be strictly positive");
    }
  }

  double output_range() const { return output_max - output_min; }

  Features standardize(const InputPoint& p) const {
    const Features raw = p.as_array();
    Features out;
    for (std::size_t j = 0; j < kInputs; ++j) out[j] = (raw[j] - input_mean[j]) / input_std[j];
    return out;
  }
  double normalize_output(double u) const { return (u - output_min) / output_range(); }
  double denormalize_output(double y) const { return output_min + output_range() * y; }

  /// Inputs z-scored over `inputs` (population std; constant columns get
  /// std 1); output range [lo, hi].
  static Scaler fit(std::span<const InputPoint> inputs, double lo, double hi) {
    if (inputs.empty()) throw std::invalid_argument("Scaler::fit: no inputs");
    Scaler s;
    const double n = static_cast<double>(inputs.size());
    for (std::size_t j = 0; j < kInputs; ++j) {
      double mean = 0.0;
      for (const auto& p : inputs) mean += p.as_array()[j];
      mean /= n;
      double var = 0.0;
      for (const auto& p : inputs) {
        const double d = p.as_array()[j] - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / n);
      s.input_mean[j] = mean;
      s.input_std[j] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
    }
    s.output_min = lo;
    s.output_max = hi;
    s.validate();
    return s;
  }
};

/// Piecewise-linear clamp to [-1, 1].
inline double sat(double x) { return std::clamp(x, -1.0, 1.0); }

/// Glorot-normal weights (variance 2 / (fan_in + fan_out)), zero biases.
inline NetworkParams glorot_init(std::uint64_t seed, std::size_t n_hidden) {
  NetworkParams p(n_hidden);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> w1(0.0, std::sqrt(2.0 / static_cast<double>(kInputs + n_hidden)));
  std::normal_distribution<double> w2(0.0, std::sqrt(2.0 / static_cast<double>(n_hidden + 1)));
  for (std::size_t n = 0; n < n_hidden; ++n)
    for (std::size_t j = 0; j < kInputs; ++j) p.w1(n, j) = w1(rng);
  for (std::size_t n = 0; n < n_hidden; ++n) p.w2(n) = w2(rng);
  return p;
}

inline double pre_activation(const NetworkParams& p, std::size_t n, const Features& xs) {
  double z = p.b1(n);
  for (std::size_t j = 0; j < kInputs; ++j) z += p.w1(n, j) * xs[j];
  return z;
}

/// Network output in normalized units for already-standardized inputs.
inline double forward_raw(const NetworkParams& p, const Features& xs) {
  double y = p.b2();
  for (std::size_t n = 0; n < p.n_hidden(); ++n) y += p.w2(n) * std::tanh(pre_activation(p, n, xs));
  return y;
}

/// Same as forward_raw with sat in place of tanh.
inline double forward_sat_raw(const NetworkParams& p, const Features& xs) {
  double y = p.b2();
  for (std::size_t n = 0; n < p.n_hidden(); ++n) y += p.w2(n) * sat(pre_activation(p, n, xs));
  return y;
}

/// Predicted temperature [K].
inline double forward(const NetworkParams& p, const Scaler& s, const InputPoint& x) {
  return s.denormalize_output(forward_raw(p, s.standardize(x)));
}

inline double forward_sat(const NetworkParams& p, const Scaler& s, const InputPoint& x) {
  return s.denormalize_output(forward_sat_raw(p, s.standardize(x)));
}

struct InputDerivatives {
  double u_t = 0.0;   // [K/s]
  double u_xx = 0.0;  // [K/m^2]
};

/// Closed-form du/dt and d2u/dx2 of the tanh network in physical units.
/// P_K is treated as an independent input column.
inline InputDerivatives input_derivatives(const NetworkParams& p, const Scaler& s, const InputPoint& x) {
  const Features xs = s.standardize(x);
  const double sigma_t = s.input_std[InputPoint::kTime];
  const double sigma_x = s.input_std[InputPoint::kPosition];
  double dt = 0.0;
  double dxx = 0.0;
  for (std::size_t n = 0; n < p.n_hidden(); ++n) {
    const double a = std::tanh(pre_activation(p, n, xs));
    const double d1 = 1.0 - a * a;
    const double d2 = -2.0 * a * d1;
    const double wx = p.w1(n, InputPoint::kPosition);
    dt += p.w2(n) * d1 * p.w1(n, InputPoint::kTime);
    dxx += p.w2(n) * d2 * wx * wx;
  }
  const double range = s.output_range();
  return {range * dt / sigma_t, range * dxx / (sigma_x * sigma_x)};
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  NetworkParams params;
  Scaler scaler;
};

inline nlohmann::json checkpoint_to_json(const NetworkParams& p, const Scaler& s) {
  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["n_hidden"] = p.n_hidden();
  j["n_inputs"] = kInputs;
  std::vector<double> w1, b1, w2;
  for (std::size_t n = 0; n < p.n_hidden(); ++n) {
    for (std::size_t c = 0; c < kInputs; ++c) w1.push_back(p.w1(n, c));
    b1.push_back(p.b1(n));
    w2.push_back(p.w2(n));
  }
  j["W1"] = w1;
  j["b1"] = b1;
  j["W2"] = w2;
  j["b2"] = p.b2();
  j["scaler"] = {{"input_mean", s.input_mean},
                 {"input_std", s.input_std},
                 {"output_min", s.output_min},
                 {"output_max", s.output_max}};
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format_version");
  }
  if (j.at("n_inputs").get<std::size_t>() != kInputs) throw std::runtime_error("checkpoint: input size mismatch");
  const auto n_hidden = j.at("n_hidden").get<std::size_t>();
  const auto w1 = j.at("W1").get<std::vector<double>>();
  const auto b1 = j.at("b1").get<std::vector<double>>();
  const auto w2 = j.at("W2").get<std::vector<double>>();
  if (w1.size() != n_hidden * kInputs || b1.size() != n_hidden || w2.size() != n_hidden) {
    throw std::runtime_error("checkpoint: array shapes do not match n_hidden");
  }
  Checkpoint c{NetworkParams(n_hidden), {}};
  for (std::size_t n = 0; n < n_hidden; ++n) {
    for (std::size_t k = 0; k < kInputs; ++k) c.params.w1(n, k) = w1[n * kInputs + k];
    c.params.b1(n) = b1[n];
    c.params.w2(n) = w2[n];
  }
  c.params.b2() = j.at("b2").get<double>();
  const auto& sj = j.at("scaler");
  c.scaler.input_mean = sj.at("input_mean").get<Features>();
  c.scaler.input_std = sj.at("input_std").get<Features>();
  c.scaler.output_min = sj.at("output_min").get<double>();
  c.scaler.output_max = sj.at("output_max").get<double>();
  c.scaler.validate();
  if (!c.params.all_finite()) throw std::runtime_error("checkpoint: non-finite parameter");
  return c;
}

inline void save_checkpoint(const std::string& path, const NetworkParams& p, const Scaler& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << checkpoint_to_json(p, s).dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace pinnmilp
