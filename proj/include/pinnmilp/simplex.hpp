#pragma once

// Bounded-variable primal simplex on a dense tableau. Dantzig pricing with a
// switch to Bland's rule after a run of degenerate pivots; two phases with
// artificial columns only on rows whose slack cannot start basic.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "milp_model.hpp"

namespace pinnmilp::milp {

enum class LpStatus { Optimal, Infeasible };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> values;  // one entry per model variable
  double objective = 0.0;
  std::size_t iterations = 0;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeLimitReached : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double ratio_pivot_tol = 1e-9;   // entries below this are ignored in the ratio test
  double breakdown_pivot = 1e-11;  // smaller accepted pivots are a numerical breakdown
  std::size_t degenerate_before_bland = 50;
  std::size_t refresh_interval = 100;
  std::optional<Clock::time_point> deadline;
};

namespace detail {

class DenseSimplex {
 public:
  DenseSimplex(const MilpModel& model, const std::vector<double>& lower, const std::vector<double>& upper,
               const LpOptions& opt)
      : model_(model), opt_(opt) {
    build(lower, upper);
  }

  LpResult run() {
    LpResult result;
    if (trivially_infeasible_) return result;
    if (num_artificial_ > 0) {
      for (std::size_t j = 0; j < n_; ++j) cost_[j] = is_artificial(j) ? 1.0 : 0.0;
      iterate(result.iterations);
      recompute_basics();
      double infeasibility = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (is_artificial(basis_[i])) infeasibility += std::max(0.0, xb_[i]);
      if (infeasibility > opt_.feasibility_tol * rhs_scale_) return result;
      for (std::size_t j = art_begin_; j < n_; ++j) upper_[j] = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (is_artificial(basis_[i])) xb_[i] = 0.0;
    }
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = j < num_struct_ ? struct_cost_[j] : 0.0;
    iterate(result.iterations);
    recompute_basics();

    result.status = LpStatus::Optimal;
    result.values.assign(model_.num_variables(), 0.0);
    std::vector<double> col_value(n_);
    for (std::size_t j = 0; j < n_; ++j) col_value[j] = state_[j] == AtUpper ? upper_[j] : lower_[j];
    for (std::size_t i = 0; i < m_; ++i) col_value[basis_[i]] = xb_[i];
    for (VarId v = 0; v < model_.num_variables(); ++v) {
      double val = var_col_[v] < 0 ? fixed_value_[v] : col_value[static_cast<std::size_t>(var_col_[v])];
      // Snap rounding-level bound excursions back into the box.
      val = std::clamp(val, var_lower_[v], var_upper_[v]);
      result.values[v] = val;
    }
    result.objective = model_.objective().evaluate(result.values);
    return result;
  }

 private:
  enum State : unsigned char { Basic, AtLower, AtUpper };

  bool is_artificial(std::size_t j) const { return j >= art_begin_; }
  double& T(std::size_t i, std::size_t j) { return tab_[i * n_ + j]; }
  double T(std::size_t i, std::size_t j) const { return tab_[i * n_ + j]; }
  double nonbasic_value(std::size_t j) const { return state_[j] == AtUpper ? upper_[j] : lower_[j]; }

  void build(const std::vector<double>& lower, const std::vector<double>& upper) {
    const std::size_t nv = model_.num_variables();
    var_lower_ = lower;
    var_upper_ = upper;
    var_col_.assign(nv, -1);
    fixed_value_.assign(nv, 0.0);
    for (VarId v = 0; v < nv; ++v) {
      if (lower[v] > upper[v]) {
        trivially_infeasible_ = true;
        return;
      }
      if (lower[v] == upper[v]) {
        fixed_value_[v] = lower[v];
      } else {
        var_col_[v] = static_cast<long>(num_struct_++);
      }
    }

    struct Row {
      std::vector<std::pair<std::size_t, double>> entries;
      Relation rel;
      double rhs;
    };
    std::vector<Row> rows;
    for (const auto& c : model_.constraints()) {
      const LinearExpr e = c.expr.merged();
      Row row{{}, c.relation, c.rhs - e.constant};
      for (const auto& [v, coef] : e.terms) {
        if (var_col_[v] < 0) row.rhs -= coef * fixed_value_[v];
        else row.entries.emplace_back(static_cast<std::size_t>(var_col_[v]), coef);
      }
      if (row.entries.empty()) {
        const double tol = opt_.feasibility_tol * std::max(1.0, std::abs(c.rhs));
        const bool ok = (row.rel == Relation::LessEqual && 0.0 <= row.rhs + tol) ||
                        (row.rel == Relation::GreaterEqual && 0.0 >= row.rhs - tol) ||
                        (row.rel == Relation::Equal && std::abs(row.rhs) <= tol);
        if (!ok) {
          trivially_infeasible_ = true;
          return;
        }
        continue;
      }
      rows.push_back(std::move(row));
    }
    m_ = rows.size();

    struct_cost_.assign(num_struct_, 0.0);
    for (const auto& [v, coef] : model_.objective().merged().terms)
      if (var_col_[v] >= 0) struct_cost_[static_cast<std::size_t>(var_col_[v])] += coef;

    // Column layout: structurals | slacks | artificials.
    std::size_t num_slack = 0;
    for (const auto& r : rows)
      if (r.rel != Relation::Equal) ++num_slack;

    std::vector<double> start(num_struct_);
    for (VarId v = 0; v < nv; ++v)
      if (var_col_[v] >= 0) start[static_cast<std::size_t>(var_col_[v])] = lower[v];

    init_col_.assign(m_, 0);
    init_sign_.assign(m_, 1.0);
    std::vector<bool> needs_art(m_, false);
    std::vector<double> residual(m_);
    std::vector<long> slack_of(m_, -1);
    std::size_t next_slack = num_struct_;
    rhs_scale_ = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      double r = rows[i].rhs;
      for (const auto& [j, a] : rows[i].entries) r -= a * start[j];
      residual[i] = r;
      rhs_scale_ = std::max(rhs_scale_, std::abs(rows[i].rhs));
      if (rows[i].rel != Relation::Equal) slack_of[i] = static_cast<long>(next_slack++);
      if (rows[i].rel == Relation::LessEqual && r >= 0.0) {
        init_col_[i] = static_cast<std::size_t>(slack_of[i]);
        init_sign_[i] = 1.0;
      } else if (rows[i].rel == Relation::GreaterEqual && r <= 0.0) {
        init_col_[i] = static_cast<std::size_t>(slack_of[i]);
        init_sign_[i] = -1.0;
      } else {
        needs_art[i] = true;
      }
    }
    art_begin_ = num_struct_ + num_slack;
    std::size_t next_art = art_begin_;
    for (std::size_t i = 0; i < m_; ++i) {
      if (!needs_art[i]) continue;
      init_col_[i] = next_art++;
      init_sign_[i] = residual[i] >= 0.0 ? 1.0 : -1.0;
    }
    num_artificial_ = next_art - art_begin_;
    n_ = next_art;

    lower_.assign(n_, 0.0);
    upper_.assign(n_, std::numeric_limits<double>::infinity());
    for (VarId v = 0; v < nv; ++v) {
      if (var_col_[v] < 0) continue;
      lower_[static_cast<std::size_t>(var_col_[v])] = lower[v];
      upper_[static_cast<std::size_t>(var_col_[v])] = upper[v];
    }
    cost_.assign(n_, 0.0);
    state_.assign(n_, AtLower);

    // Original sparse columns and rhs, kept for periodic recomputation.
    columns_.assign(n_, {});
    b_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      b_[i] = rows[i].rhs;
      for (const auto& [j, a] : rows[i].entries) columns_[j].emplace_back(i, a);
      if (slack_of[i] >= 0) {
        columns_[static_cast<std::size_t>(slack_of[i])].emplace_back(
            i, rows[i].rel == Relation::LessEqual ? 1.0 : -1.0);
      }
      if (needs_art[i]) columns_[init_col_[i]].emplace_back(i, init_sign_[i]);
    }
    // Merge duplicate (row, col) entries.
    for (auto& col : columns_) {
      std::sort(col.begin(), col.end());
      std::vector<std::pair<std::size_t, double>> merged;
      for (const auto& e : col) {
        if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
        else merged.push_back(e);
      }
      col = std::move(merged);
    }

    tab_.assign(m_ * n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      for (const auto& [i, a] : columns_[j]) T(i, j) = a * init_sign_[i];
    basis_.assign(m_, 0);
    xb_.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      basis_[i] = init_col_[i];
      state_[init_col_[i]] = Basic;
      xb_[i] = residual[i] * init_sign_[i];
    }
    d_.assign(n_, 0.0);
    row_nz_.reserve(n_);
  }

  void recompute_basics() {
    std::vector<double> rhs = b_;
    for (std::size_t j = 0; j < n_; ++j) {
      if (state_[j] == Basic) continue;
      const double v = nonbasic_value(j);
      if (v == 0.0) continue;
      for (const auto& [i, a] : columns_[j]) rhs[i] -= a * v;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m_; ++k) {
        const double binv = T(i, init_col_[k]);
        if (binv != 0.0) acc += binv * init_sign_[k] * rhs[k];
      }
      xb_[i] = acc;
    }
  }

  void recompute_reduced_costs() {
    d_ = cost_;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &tab_[i * n_];
      for (std::size_t j = 0; j < n_; ++j) d_[j] -= cb * row[j];
    }
    for (std::size_t i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
  }

  // Entering column and direction (+1 increase, -1 decrease); -1 if optimal.
  long price(bool bland, int& dir) const {
    long best = -1;
    double best_score = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (state_[j] == Basic || lower_[j] == upper_[j]) continue;
      double score = 0.0;
      int dj_dir = 0;
      if (state_[j] == AtLower && d_[j] < -opt_.optimality_tol) {
        score = -d_[j];
        dj_dir = 1;
      } else if (state_[j] == AtUpper && d_[j] > opt_.optimality_tol) {
        score = d_[j];
        dj_dir = -1;
      }
      if (dj_dir == 0) continue;
      if (bland) {
        dir = dj_dir;
        return static_cast<long>(j);
      }
      if (score > best_score) {
        best_score = score;
        best = static_cast<long>(j);
        dir = dj_dir;
      }
    }
    return best;
  }

  void pivot(std::size_t r, std::size_t q) {
    double* prow = &tab_[r * n_];
    const double piv = prow[q];
    if (std::abs(piv) < opt_.breakdown_pivot) throw NumericalError("simplex: pivot magnitude below breakdown threshold");
    const double inv = 1.0 / piv;
    row_nz_.clear();
    for (std::size_t j = 0; j < n_; ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        row_nz_.push_back(j);
      }
    }
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &tab_[i * n_];
      const double f = row[q];
      if (f == 0.0) continue;
      for (std::size_t j : row_nz_) {
        double v = row[j] - f * prow[j];
        if (std::abs(v) < 1e-14) v = 0.0;
        row[j] = v;
      }
      row[q] = 0.0;
    }
    const double dq = d_[q];
    if (dq != 0.0)
      for (std::size_t j : row_nz_) d_[j] -= dq * prow[j];
    d_[q] = 0.0;
  }

  void iterate(std::size_t& iterations) {
    recompute_reduced_costs();
    const std::size_t cap = 50 * (m_ + n_) + 1000;
    std::size_t degenerate_run = 0;
    std::size_t local = 0;
    for (;;) {
      if (++local > cap) throw NumericalError("simplex: iteration limit reached");
      if (local % opt_.refresh_interval == 0) {
        recompute_basics();
        recompute_reduced_costs();
      }
      if (opt_.deadline && local % 32 == 0 && Clock::now() > *opt_.deadline) {
        throw TimeLimitReached("simplex: deadline reached");
      }
      const bool bland = degenerate_run >= opt_.degenerate_before_bland;
      int dir = 0;
      const long entering = price(bland, dir);
      if (entering < 0) return;
      const auto q = static_cast<std::size_t>(entering);
      ++iterations;

      // Ratio test. Harris two-pass in Dantzig mode, strict minimum with
      // smallest basic index in Bland mode.
      const double inf = std::numeric_limits<double>::infinity();
      auto limit = [&](std::size_t i, double alpha, double slack) {
        const std::size_t bcol = basis_[i];
        if (alpha > 0.0) return std::max(0.0, (xb_[i] - lower_[bcol] + slack) / alpha);
        if (upper_[bcol] == inf) return inf;
        return std::max(0.0, (upper_[bcol] - xb_[i] + slack) / -alpha);
      };
      long leave = -1;
      double theta = upper_[q] - lower_[q];
      if (bland) {
        double best = inf;
        for (std::size_t i = 0; i < m_; ++i) {
          const double alpha = dir * T(i, q);
          if (std::abs(alpha) > opt_.ratio_pivot_tol) best = std::min(best, limit(i, alpha, 0.0));
        }
        if (best < theta) {
          for (std::size_t i = 0; i < m_; ++i) {
            const double alpha = dir * T(i, q);
            if (std::abs(alpha) <= opt_.ratio_pivot_tol || limit(i, alpha, 0.0) > best + 1e-12) continue;
            if (leave < 0 || basis_[i] < basis_[static_cast<std::size_t>(leave)]) leave = static_cast<long>(i);
          }
          theta = best;
        }
      } else {
        double relaxed = inf;
        for (std::size_t i = 0; i < m_; ++i) {
          const double alpha = dir * T(i, q);
          if (std::abs(alpha) <= opt_.ratio_pivot_tol) continue;
          relaxed = std::min(relaxed, limit(i, alpha, opt_.feasibility_tol));
        }
        if (relaxed < theta) {
          double best_alpha = 0.0;
          for (std::size_t i = 0; i < m_; ++i) {
            const double alpha = dir * T(i, q);
            if (std::abs(alpha) <= opt_.ratio_pivot_tol) continue;
            if (limit(i, alpha, 0.0) <= relaxed && std::abs(alpha) > best_alpha) {
              best_alpha = std::abs(alpha);
              leave = static_cast<long>(i);
            }
          }
          theta = limit(static_cast<std::size_t>(leave), dir * T(static_cast<std::size_t>(leave), q), 0.0);
        }
      }
      if (theta == inf) throw NumericalError("simplex: unbounded direction in a bounded model");

      degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
      if (theta != 0.0)
        for (std::size_t i = 0; i < m_; ++i) xb_[i] -= theta * dir * T(i, q);

      if (leave < 0) {
        state_[q] = dir > 0 ? AtUpper : AtLower;
        continue;
      }
      const auto r = static_cast<std::size_t>(leave);
      const double alpha = dir * T(r, q);
      const std::size_t out = basis_[r];
      state_[out] = alpha > 0.0 ? AtLower : AtUpper;
      const double entering_value = dir > 0 ? lower_[q] + theta : upper_[q] - theta;
      pivot(r, q);
      basis_[r] = q;
      state_[q] = Basic;
      xb_[r] = entering_value;
    }
  }

  const MilpModel& model_;
  LpOptions opt_;
  bool trivially_infeasible_ = false;

  std::vector<double> var_lower_, var_upper_, fixed_value_;
  std::vector<long> var_col_;
  std::size_t num_struct_ = 0, num_artificial_ = 0, art_begin_ = 0;
  std::size_t m_ = 0, n_ = 0;
  double rhs_scale_ = 1.0;

  std::vector<double> tab_, xb_, d_, cost_, struct_cost_, lower_, upper_, b_;
  std::vector<State> state_;
  std::vector<std::size_t> basis_, init_col_, row_nz_;
  std::vector<double> init_sign_;
  std::vector<std::vector<std::pair<std::size_t, double>>> columns_;
};

}  // namespace detail

/// LP over explicit variable boxes; binary flags are ignored.
inline LpResult solve_lp(const MilpModel& model, const std::vector<double>& lower, const std::vector<double>& upper,
                         const LpOptions& options = {}) {
  if (lower.size() != model.num_variables() || upper.size() != model.num_variables()) {
    throw ModelError("solve_lp: bound vectors must match the variable count");
  }
  return detail::DenseSimplex(model, lower, upper, options).run();
}

/// LP relaxation of the model (binaries relaxed to their [0,1] boxes).
inline LpResult solve_lp(const MilpModel& model, const LpOptions& options = {}) {
  std::vector<double> lo, hi;
  lo.reserve(model.num_variables());
  hi.reserve(model.num_variables());
  for (const auto& v : model.variables()) {
    lo.push_back(v.lower);
    hi.push_back(v.upper);
  }
  return solve_lp(model, lo, hi, options);
}

}  // namespace pinnmilp::milp
