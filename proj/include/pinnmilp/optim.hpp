#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace pinnmilp {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected ADAM update of `params` in place.
inline void adam_step(std::span<double> params, std::span<const double> grad, AdamState& st, double lr) {
  if (params.size() != grad.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (st.m.size() != params.size()) throw std::invalid_argument("adam_step: state size mismatch");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    const double mhat = st.m[i] / c1;
    const double vhat = st.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

enum class LbfgsStatus { GradTol, MaxIters, LineSearchFail };

inline const char* to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::GradTol: return "GradTol";
    case LbfgsStatus::MaxIters: return "MaxIters";
    case LbfgsStatus::LineSearchFail: return "LineSearchFail";
  }
  return "?";
}

struct LbfgsConfig {
  std::size_t max_iters = 500;
  std::size_t history = 10;
  double grad_tol = 1e-9;  // on the infinity norm
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_evaluations_per_search = 40;
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t iterations = 0;
  LbfgsStatus status = LbfgsStatus::MaxIters;
};

/// Objective callback: writes the gradient into `grad`, returns f(x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;
/// Called after each accepted iteration with (iteration, f).
using IterationCallback = std::function<void(std::size_t, double)>;

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Minimizer of the cubic interpolating (a, fa, da), (b, fb, db), kept
// inside the bracket away from its ends; bisection as fallback.
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  const double lo = std::min(a, b), hi = std::max(a, b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line search.
inline LbfgsResult lbfgs_minimize(std::vector<double> x, const Objective& objective, const LbfgsConfig& cfg,
                                  const IterationCallback& callback = {}) {
  if (cfg.history < 1) throw std::invalid_argument("lbfgs: history must be >= 1");
  using detail::dot;
  const std::size_t n = x.size();
  std::vector<double> g(n), d(n), x_trial(n), g_trial(n), q(n);
  LbfgsResult res;
  double f = objective(x, g);
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;

  for (std::size_t it = 0;; ++it) {
    if (detail::inf_norm(g) <= cfg.grad_tol) {
      res.status = LbfgsStatus::GradTol;
      break;
    }
    if (it >= cfg.max_iters) {
      res.status = LbfgsStatus::MaxIters;
      break;
    }
    // Two-loop recursion: d = -H g.
    q = g;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * dot(S[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[k] * Y[k][i];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
    for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * dot(Y[k], q);
      for (std::size_t i = 0; i < n; ++i) q[i] += S[k][i] * (alpha[k] - beta);
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];
    double dg0 = dot(d, g);
    if (!(dg0 < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      S.clear();
      Y.clear();
      rho.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      dg0 = dot(d, g);
    }
    double step = S.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;

    // Strong-Wolfe line search (bracketing phase, then zoom).
    const double f0 = f;
    auto eval = [&](double a, double& fa, double& da) {
      for (std::size_t i = 0; i < n; ++i) x_trial[i] = x[i] + a * d[i];
      fa = objective(x_trial, g_trial);
      da = dot(g_trial, d);
    };
    double a_prev = 0.0, f_prev = f0, d_prev = dg0;
    double a_lo = 0, f_lo = 0, d_lo = 0, a_hi = 0, f_hi = 0, d_hi = 0;
    bool found = false, zoom = false;
    std::size_t evals = 0;
    double a = step, fa = 0.0, da = 0.0;
    while (evals < cfg.max_evaluations_per_search) {
      eval(a, fa, da);
      ++evals;
      if (!std::isfinite(fa) || fa > f0 + cfg.c1 * a * dg0 || (evals > 1 && fa >= f_prev)) {
        a_lo = a_prev, f_lo = f_prev, d_lo = d_prev;
        a_hi = a, f_hi = fa, d_hi = da;
        zoom = true;
        break;
      }
      if (std::abs(da) <= -cfg.c2 * dg0) {
        found = true;
        break;
      }
      if (da >= 0.0) {
        a_lo = a, f_lo = fa, d_lo = da;
        a_hi = a_prev, f_hi = f_prev, d_hi = d_prev;
        zoom = true;
        break;
      }
      a_prev = a, f_prev = fa, d_prev = da;
      a *= 2.0;
    }
    while (zoom && !found && evals < cfg.max_evaluations_per_search) {
      if (!std::isfinite(f_hi)) a = 0.5 * (a_lo + a_hi);
      else a = detail::cubic_step(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi);
      eval(a, fa, da);
      ++evals;
      if (!std::isfinite(fa) || fa > f0 + cfg.c1 * a * dg0 || fa >= f_lo) {
        a_hi = a, f_hi = fa, d_hi = da;
      } else {
        if (std::abs(da) <= -cfg.c2 * dg0) {
          found = true;
          break;
        }
        if (da * (a_hi - a_lo) >= 0.0) {
          a_hi = a_lo, f_hi = f_lo, d_hi = d_lo;
        }
        a_lo = a, f_lo = fa, d_lo = da;
      }
      if (std::abs(a_hi - a_lo) < 1e-16 * std::max(1.0, a_lo)) break;
    }
    if (!found) {
      res.status = LbfgsStatus::LineSearchFail;
      break;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_trial[i] - x[i];
      y[i] = g_trial[i] - g[i];
    }
    x = x_trial;
    g = g_trial;
    f = fa;
    ++res.iterations;
    const double sy = dot(s, y);
    if (sy > 1e-300) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (S.size() > cfg.history) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    if (callback) callback(res.iterations, f);
  }
  res.x = std::move(x);
  res.f = f;
  return res;
}

}  // namespace pinnmilp
