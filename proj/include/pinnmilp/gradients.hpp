#pragma once

// Exact gradient of the composite loss with respect to every network
// parameter, including the paths through u_t and u_xx.

#include <cmath>
#include <vector>

#include "loss.hpp"

namespace pinnmilp {

struct LossAndGradient {
  LossTerms loss;
  std::vector<double> gradient;  // NetworkParams::flat() layout
};

namespace detail {
inline double metric_derivative(Metric m, double e, double n) {
  if (m == Metric::MSE) return 2.0 * e / n;
  return (e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0)) / n;
}
}  // namespace detail

/// Loss terms and their gradient. For MAE the subgradient sign(0) = 0 is used.
inline LossAndGradient parameter_gradients(const NetworkParams& p, const Scaler& s, const PhysicalParams& phys,
                                           const LossSpec& spec, const Batch& batch) {
  LossAndGradient out;
  out.loss = composite_loss(p, s, phys, spec, batch);
  out.gradient.assign(p.size(), 0.0);
  auto& g = out.gradient;
  const std::size_t H = p.n_hidden();
  std::vector<double> z(H), a(H);

  if (spec.lambda_u > 0.0) {
    const double n = static_cast<double>(batch.boundary.size());
    for (const auto& b : batch.boundary) {
      const Features xs = s.standardize(b.input);
      double y = p.b2();
      for (std::size_t k = 0; k < H; ++k) {
        a[k] = std::tanh(pre_activation(p, k, xs));
        y += p.w2(k) * a[k];
      }
      const double dy = spec.lambda_u * detail::metric_derivative(spec.metric, y - s.normalize_output(b.u), n);
      for (std::size_t k = 0; k < H; ++k) {
        const double d1 = 1.0 - a[k] * a[k];
        const double db1 = dy * p.w2(k) * d1;
        g[p.w2_index(k)] += dy * a[k];
        g[p.b1_index(k)] += db1;
        for (std::size_t j = 0; j < kInputs; ++j) g[p.w1_index(k, j)] += db1 * xs[j];
      }
      g[p.b2_index()] += dy;
    }
  }

  if (spec.lambda_f > 0.0) {
    const double n = static_cast<double>(batch.collocation.size());
    const double heat = residual_scale(phys, s);
    const double range = s.output_range();
    const double sigma_t = s.input_std[InputPoint::kTime];
    const double sigma_x = s.input_std[InputPoint::kPosition];
    // r = range/heat * (c_t * T + c_x * X + h * y) + const, where
    // T = sum W2 tanh' W1_t and X = sum W2 tanh'' W1_x^2.
    const double c_t = phys.time_coefficient() / sigma_t;
    const double c_x = -phys.k / (sigma_x * sigma_x);
    const std::size_t jt = InputPoint::kTime;
    const std::size_t jx = InputPoint::kPosition;
    for (const auto& c : batch.collocation) {
      const Features xs = s.standardize(c.input);
      const double r = scaled_residual(p, s, phys, c.input);
      const double dr = spec.lambda_f * detail::metric_derivative(spec.metric, r, n) * range / heat;
      for (std::size_t k = 0; k < H; ++k) {
        const double t = std::tanh(pre_activation(p, k, xs));
        const double d1 = 1.0 - t * t;          // tanh'
        const double d2 = -2.0 * t * d1;        // tanh''
        const double d3 = -2.0 * d1 * d1 + 4.0 * t * t * d1;  // tanh'''
        const double wt = p.w1(k, jt);
        const double wx = p.w1(k, jx);
        const double w2 = p.w2(k);
        // d/dW2
        g[p.w2_index(k)] += dr * (c_t * d1 * wt + c_x * d2 * wx * wx + phys.h * t);
        // d/db1 (also the common factor of d/dW1 via the pre-activation)
        const double dz = c_t * w2 * d2 * wt + c_x * w2 * d3 * wx * wx + phys.h * w2 * d1;
        g[p.b1_index(k)] += dr * dz;
        for (std::size_t j = 0; j < kInputs; ++j) g[p.w1_index(k, j)] += dr * dz * xs[j];
        g[p.w1_index(k, jt)] += dr * c_t * w2 * d1;
        g[p.w1_index(k, jx)] += dr * c_x * w2 * d2 * 2.0 * wx;
      }
      g[p.b2_index()] += dr * phys.h;
    }
  }
  return out;
}

}  // namespace pinnmilp
