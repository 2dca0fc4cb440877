#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pinnmilp::milp {

using VarId = std::size_t;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Affine expression sum(coef * var) + constant. Terms may repeat a
/// variable; consumers merge duplicates.
struct LinearExpr {
  std::vector<std::pair<VarId, double>> terms;
  double constant = 0.0;

  LinearExpr() = default;
  explicit LinearExpr(double c) : constant(c) {}
  static LinearExpr var(VarId v, double coef = 1.0) {
    LinearExpr e;
    e.terms.emplace_back(v, coef);
    return e;
  }

  LinearExpr& add(VarId v, double coef) {
    if (coef != 0.0) terms.emplace_back(v, coef);
    return *this;
  }
  LinearExpr& add(const LinearExpr& other, double scale = 1.0) {
    for (const auto& [v, c] : other.terms) add(v, scale * c);
    constant += scale * other.constant;
    return *this;
  }
  LinearExpr& operator+=(const LinearExpr& o) { return add(o, 1.0); }
  LinearExpr& operator-=(const LinearExpr& o) { return add(o, -1.0); }
  LinearExpr& operator*=(double s) {
    for (auto& t : terms) t.second *= s;
    constant *= s;
    return *this;
  }
  friend LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
  friend LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
  friend LinearExpr operator*(double s, LinearExpr a) { return a *= s; }

  /// Duplicate variables summed, zero coefficients dropped, sorted by id.
  LinearExpr merged() const {
    LinearExpr out;
    out.constant = constant;
    auto sorted = terms;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [v, c] : sorted) {
      if (!out.terms.empty() && out.terms.back().first == v) out.terms.back().second += c;
      else out.terms.emplace_back(v, c);
    }
    std::erase_if(out.terms, [](const auto& t) { return t.second == 0.0; });
    return out;
  }

  double evaluate(const std::vector<double>& values) const {
    double acc = constant;
    for (const auto& [v, c] : terms) acc += c * values[v];
    return acc;
  }
};

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool is_binary = false;
};

struct Constraint {
  LinearExpr expr;  // constant folded into rhs on use
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
  std::string name;
};

/// Three zone binaries of one saturation encoding plus the pre-activation
/// they classify: zone 0 is x <= -1, zone 1 is |x| <= 1, zone 2 is x >= 1.
struct ZoneTriple {
  std::array<VarId, 3> beta{};
  LinearExpr x;
};

inline int zone_of(double x) {
  if (x < -1.0) return 0;
  if (x > 1.0) return 2;
  return 1;
}

/// Bounded mixed-integer linear program; the objective is minimized.
class MilpModel {
 public:
  VarId add_variable(std::string name, double lower, double upper, bool is_binary = false) {
    if (!std::isfinite(lower) || !std::isfinite(upper) || lower > upper) {
      throw ModelError("variable " + name + ": bounds must be finite with lower <= upper");
    }
    if (is_binary && (lower < 0.0 || upper > 1.0)) throw ModelError("binary " + name + ": bounds must lie in [0,1]");
    if (index_.count(name)) throw ModelError("duplicate variable name: " + name);
    const VarId id = variables_.size();
    index_.emplace(name, id);
    variables_.push_back({std::move(name), lower, upper, is_binary});
    return id;
  }
  VarId add_binary(std::string name) { return add_variable(std::move(name), 0.0, 1.0, true); }

  void add_constraint(LinearExpr expr, Relation rel, double rhs, std::string name = {}) {
    check_expr(expr);
    if (name.empty()) name = "c" + std::to_string(constraints_.size());
    constraints_.push_back({std::move(expr), rel, rhs, std::move(name)});
  }

  void set_objective(LinearExpr objective) {
    check_expr(objective);
    objective_ = std::move(objective);
  }
  void add_to_objective(const LinearExpr& e) {
    check_expr(e);
    objective_ += e;
  }

  void add_zone_triple(ZoneTriple t) {
    for (VarId b : t.beta) {
      if (b >= variables_.size() || !variables_[b].is_binary) throw ModelError("zone triple: beta must be binary");
    }
    check_expr(t.x);
    triples_.push_back(std::move(t));
  }

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const LinearExpr& objective() const { return objective_; }
  const std::vector<ZoneTriple>& zone_triples() const { return triples_; }
  std::size_t num_variables() const { return variables_.size(); }

  std::optional<VarId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const Variable& variable(VarId v) const { return variables_.at(v); }
  void set_bounds(VarId v, double lower, double upper) {
    Variable& var = variables_.at(v);
    if (!std::isfinite(lower) || !std::isfinite(upper) || lower > upper) throw ModelError("set_bounds: bad bounds");
    var.lower = lower;
    var.upper = upper;
  }

  std::size_t num_binaries() const {
    return static_cast<std::size_t>(
        std::count_if(variables_.begin(), variables_.end(), [](const Variable& v) { return v.is_binary; }));
  }

  /// Interval of an expression over the variable boxes.
  std::pair<double, double> expression_range(const LinearExpr& e) const {
    double lo = e.constant, hi = e.constant;
    for (const auto& [v, c] : e.terms) {
      const auto& var = variables_.at(v);
      lo += c > 0 ? c * var.lower : c * var.upper;
      hi += c > 0 ? c * var.upper : c * var.lower;
    }
    return {lo, hi};
  }

 private:
  void check_expr(const LinearExpr& e) const {
    for (const auto& [v, c] : e.terms) {
      if (v >= variables_.size()) throw ModelError("expression references undeclared variable");
      if (!std::isfinite(c)) throw ModelError("expression has a non-finite coefficient");
    }
    if (!std::isfinite(e.constant)) throw ModelError("expression has a non-finite constant");
  }

  std::vector<Variable> variables_;
  std::unordered_map<std::string, VarId> index_;
  std::vector<Constraint> constraints_;
  LinearExpr objective_;
  std::vector<ZoneTriple> triples_;
};

/// Largest violation of any constraint or bound at `values`, evaluated
/// directly from the model data.
inline double max_violation(const MilpModel& m, const std::vector<double>& values) {
  double worst = 0.0;
  for (VarId v = 0; v < m.num_variables(); ++v) {
    const auto& var = m.variable(v);
    worst = std::max({worst, var.lower - values[v], values[v] - var.upper});
  }
  for (const auto& c : m.constraints()) {
    const double lhs = c.expr.evaluate(values);
    switch (c.relation) {
      case Relation::LessEqual: worst = std::max(worst, lhs - c.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, c.rhs - lhs); break;
      case Relation::Equal: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
    }
  }
  return worst;
}

/// Largest distance of a binary from {0, 1}.
inline double max_integrality_gap(const MilpModel& m, const std::vector<double>& values) {
  double worst = 0.0;
  for (VarId v = 0; v < m.num_variables(); ++v) {
    if (!m.variable(v).is_binary) continue;
    worst = std::max(worst, std::min(std::abs(values[v]), std::abs(1.0 - values[v])));
  }
  return worst;
}

}  // namespace pinnmilp::milp
