#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "heat_model.hpp"
#include "network.hpp"
#include "points.hpp"

namespace pinnmilp {

class LossError : public std::invalid_argument {
 public:
  enum class Kind { LengthMismatch, EmptyBatch, InvalidSpec };
  LossError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class Metric { MSE, MAE };

struct LossSpec {
  double lambda_u = 1.0;
  double lambda_f = 1.0;
  Metric metric = Metric::MSE;

  void validate() const {
    if (!(lambda_u >= 0.0 && lambda_f >= 0.0) || (lambda_u == 0.0 && lambda_f == 0.0)) {
      throw LossError(LossError::Kind::InvalidSpec, "LossSpec: weights must be >= 0 and not both zero");
    }
  }
};

struct Batch {
  std::vector<BoundarySample> boundary;
  std::vector<CollocationPoint> collocation;
};

namespace detail {
inline void check_lengths(std::span<const double> v, std::span<const double> w) {
  if (v.size() != w.size() || v.empty()) {
    throw LossError(LossError::Kind::LengthMismatch, "metric: vectors must have equal nonzero length");
  }
}
}  // namespace detail

inline double mse(std::span<const double> v, std::span<const double> w) {
  detail::check_lengths(v, w);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += (v[i] - w[i]) * (v[i] - w[i]);
  return acc / static_cast<double>(v.size());
}

inline double mae(std::span<const double> v, std::span<const double> w) {
  detail::check_lengths(v, w);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += std::abs(v[i] - w[i]);
  return acc / static_cast<double>(v.size());
}

inline double apply_metric(Metric m, std::span<const double> v, std::span<const double> w) {
  return m == Metric::MSE ? mse(v, w) : mae(v, w);
}

/// Divisor that makes f dimensionless: the convective loss h across the
/// output temperature range. Shared by training and pre-training.
inline double residual_scale(const PhysicalParams& phys, const Scaler& s) { return phys.h * s.output_range(); }

inline double scaled_residual(const NetworkParams& p, const Scaler& s, const PhysicalParams& phys,
                              const InputPoint& x) {
  const double u = forward(p, s, x);
  const InputDerivatives d = input_derivatives(p, s, x);
  return residual(d.u_t, d.u_xx, u, x.T_a, x.P_K, phys) / residual_scale(phys, s);
}

struct LossTerms {
  double total = 0.0;
  double data = 0.0;      // metric over boundary points, normalized output units
  double residual = 0.0;  // metric of f / (h * output range) at collocation points
};

/// Composite objective lambda_u * metric(u_hat, u) + lambda_f * metric(f[u_hat], 0).
/// A term whose weight is zero is still reported when its points exist.
inline LossTerms composite_loss(const NetworkParams& p, const Scaler& s, const PhysicalParams& phys,
                                const LossSpec& spec, const Batch& batch) {
  spec.validate();
  if (spec.lambda_u > 0.0 && batch.boundary.empty()) {
    throw LossError(LossError::Kind::EmptyBatch, "composite_loss: data term weighted but no boundary points");
  }
  if (spec.lambda_f > 0.0 && batch.collocation.empty()) {
    throw LossError(LossError::Kind::EmptyBatch, "composite_loss: residual term weighted but no collocation points");
  }
  LossTerms t;
  if (!batch.boundary.empty()) {
    std::vector<double> pred, target;
    pred.reserve(batch.boundary.size());
    target.reserve(batch.boundary.size());
    for (const auto& b : batch.boundary) {
      pred.push_back(forward_raw(p, s.standardize(b.input)));
      target.push_back(s.normalize_output(b.u));
    }
    t.data = apply_metric(spec.metric, pred, target);
  }
  if (!batch.collocation.empty()) {
    std::vector<double> res, zero(batch.collocation.size(), 0.0);
    res.reserve(batch.collocation.size());
    for (const auto& c : batch.collocation) res.push_back(scaled_residual(p, s, phys, c.input));
    t.residual = apply_metric(spec.metric, res, zero);
  }
  t.total = spec.lambda_u * t.data + spec.lambda_f * t.residual;
  return t;
}

}  // namespace pinnmilp
