#pragma once

// Best-bound branch-and-bound over the binaries of a MilpModel. Plunges
// depth-first until the first incumbent is found. Binaries that belong to a
// registered zone triple are branched three ways (one child per zone).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "milp_model.hpp"
#include "simplex.hpp"

namespace pinnmilp::milp {

enum class MilpStatus { Optimal, FeasibleBudgetExhausted, Infeasible };

inline const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "Optimal";
    case MilpStatus::FeasibleBudgetExhausted: return "FeasibleBudgetExhausted";
    case MilpStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

struct MilpBudget {
  std::size_t max_nodes = 200000;
  double max_seconds = 300.0;
  double absolute_gap = 1e-6;
};

class MilpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::Infeasible;
  std::vector<std::string> names;
  std::vector<double> values;
  double objective = 0.0;
  double best_bound = 0.0;
  std::size_t node_count = 0;
  double wall_time = 0.0;  // seconds

  std::optional<double> value(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return values[i];
    return std::nullopt;
  }
};

namespace detail {

struct Node {
  std::vector<std::pair<VarId, std::uint8_t>> fixes;  // binary -> 0/1
  double bound = 0.0;
  std::size_t depth = 0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.depth < b.depth;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& model, const MilpBudget& budget) : model_(model), budget_(budget) {
    triple_of_.assign(model.num_variables(), -1);
    for (std::size_t t = 0; t < model.zone_triples().size(); ++t)
      for (VarId b : model.zone_triples()[t].beta) triple_of_[b] = static_cast<long>(t);
    for (const auto& v : model.variables()) {
      root_lower_.push_back(v.lower);
      root_upper_.push_back(v.upper);
    }
  }

  MilpSolution run() {
    const auto start = Clock::now();
    deadline_ = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(budget_.max_seconds));
    MilpSolution sol;
    sol.names.reserve(model_.num_variables());
    for (const auto& v : model_.variables()) sol.names.push_back(v.name);

    bool exhausted = false;
    double best_open_bound = -std::numeric_limits<double>::infinity();
    try {
      exhausted = !search(best_open_bound);
    } catch (const TimeLimitReached&) {
      exhausted = true;
    }
    sol.node_count = nodes_;
    sol.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    if (!have_incumbent_) {
      if (exhausted) throw MilpError("branch-and-bound: budget exhausted before any feasible solution was found");
      sol.status = MilpStatus::Infeasible;
      return sol;
    }
    sol.values = incumbent_;
    sol.objective = incumbent_obj_;
    sol.status = exhausted ? MilpStatus::FeasibleBudgetExhausted : MilpStatus::Optimal;
    sol.best_bound = exhausted ? std::min(best_open_bound, incumbent_obj_) : incumbent_obj_;
    return sol;
  }

 private:
  bool out_of_budget() const { return nodes_ >= budget_.max_nodes || Clock::now() > deadline_; }

  LpOptions lp_options() const {
    LpOptions o;
    o.deadline = deadline_;
    return o;
  }

  void apply(const Node& node, std::vector<double>& lo, std::vector<double>& hi) const {
    lo = root_lower_;
    hi = root_upper_;
    for (const auto& [v, val] : node.fixes) lo[v] = hi[v] = static_cast<double>(val);
  }

  // Re-solves with every binary fixed to its rounded value so reported
  // binaries are exact; accepts the result as incumbent when it improves.
  void try_incumbent(const std::vector<double>& lo_in, const std::vector<double>& hi_in,
                     const std::vector<double>& point) {
    std::vector<double> lo = lo_in, hi = hi_in;
    for (VarId v = 0; v < model_.num_variables(); ++v) {
      if (!model_.variable(v).is_binary) continue;
      const double r = point[v] >= 0.5 ? 1.0 : 0.0;
      if (r < lo[v] || r > hi[v]) return;
      lo[v] = hi[v] = r;
    }
    const LpResult lp = solve_lp(model_, lo, hi, lp_options());
    if (lp.status != LpStatus::Optimal) return;
    if (max_violation(model_, lp.values) > 1e-7) return;
    if (!have_incumbent_ || lp.objective < incumbent_obj_) {
      have_incumbent_ = true;
      incumbent_obj_ = lp.objective;
      incumbent_ = lp.values;
    }
  }

  // Zone rounding: classify every triple by the current pre-activation
  // value, which is always attainable by the current weights.
  void zone_heuristic(const std::vector<double>& lo, const std::vector<double>& hi, const std::vector<double>& point) {
    if (model_.zone_triples().empty()) return;
    std::vector<double> rounded = point;
    for (const auto& t : model_.zone_triples()) {
      const int z = zone_of(t.x.evaluate(point));
      for (int k = 0; k < 3; ++k) rounded[t.beta[static_cast<std::size_t>(k)]] = k == z ? 1.0 : 0.0;
    }
    try_incumbent(lo, hi, rounded);
  }

  // Returns false when the budget ran out before the tree was closed.
  bool search(double& best_open_bound) {
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::vector<Node> dive;  // LIFO stack used while no incumbent exists
    dive.push_back(Node{{}, -std::numeric_limits<double>::infinity(), 0});
    std::vector<double> lo, hi;

    auto prunable = [&](double bound) { return have_incumbent_ && bound >= incumbent_obj_ - budget_.absolute_gap; };

    while (!dive.empty() || !open.empty()) {
      if (out_of_budget()) {
        best_open_bound = std::numeric_limits<double>::infinity();
        for (const auto& n : dive) best_open_bound = std::min(best_open_bound, n.bound);
        if (!open.empty()) best_open_bound = std::min(best_open_bound, open.top().bound);
        return false;
      }
      Node node;
      bool from_open = false;
      if (!dive.empty() && !have_incumbent_) {
        node = std::move(dive.back());
        dive.pop_back();
      } else {
        for (auto& n : dive) open.push(std::move(n));
        dive.clear();
        node = open.top();
        open.pop();
        from_open = true;
      }
      if (prunable(node.bound)) {
        // Best-bound order: everything still open is prunable as well.
        if (from_open) return true;
        continue;
      }
      ++nodes_;
      apply(node, lo, hi);
      const LpResult lp = solve_lp(model_, lo, hi, lp_options());
      if (lp.status != LpStatus::Optimal || prunable(lp.objective)) continue;

      // Most fractional binary.
      long branch_var = -1;
      double best_frac = 1e-9;
      for (VarId v = 0; v < model_.num_variables(); ++v) {
        if (!model_.variable(v).is_binary || lo[v] == hi[v]) continue;
        const double frac = std::min(lp.values[v], 1.0 - lp.values[v]);
        if (frac > best_frac) {
          best_frac = frac;
          branch_var = static_cast<long>(v);
        }
      }
      if (branch_var < 0) {
        try_incumbent(lo, hi, lp.values);
        continue;
      }
      if (nodes_ == 1 || !have_incumbent_ || nodes_ % 8 == 0) zone_heuristic(lo, hi, lp.values);
      if (prunable(lp.objective)) continue;

      std::vector<Node> children;
      const auto bv = static_cast<VarId>(branch_var);
      if (triple_of_[bv] >= 0) {
        const ZoneTriple& t = model_.zone_triples()[static_cast<std::size_t>(triple_of_[bv])];
        const int preferred = zone_of(t.x.evaluate(lp.values));
        // Children pushed so the preferred zone is explored first.
        for (int k = 0; k < 3; ++k) {
          const int zone = (preferred + 1 + k) % 3;
          bool allowed = true;
          Node child{node.fixes, lp.objective, node.depth + 1};
          for (int z = 0; z < 3; ++z) {
            const VarId b = t.beta[static_cast<std::size_t>(z)];
            const double want = z == zone ? 1.0 : 0.0;
            if (want < lo[b] || want > hi[b]) allowed = false;
            if (lo[b] != hi[b]) child.fixes.emplace_back(b, static_cast<std::uint8_t>(want));
          }
          if (allowed) children.push_back(std::move(child));
        }
      } else {
        const int preferred = lp.values[bv] >= 0.5 ? 1 : 0;
        for (int k = 0; k < 2; ++k) {
          Node child{node.fixes, lp.objective, node.depth + 1};
          child.fixes.emplace_back(bv, static_cast<std::uint8_t>((preferred + 1 + k) % 2));
          children.push_back(std::move(child));
        }
      }
      if (!have_incumbent_) {
        for (auto& c : children) dive.push_back(std::move(c));
      } else {
        for (auto& c : children) open.push(std::move(c));
      }
    }
    return true;
  }

  const MilpModel& model_;
  MilpBudget budget_;
  Clock::time_point deadline_;
  std::vector<long> triple_of_;
  std::vector<double> root_lower_, root_upper_;
  std::size_t nodes_ = 0;
  bool have_incumbent_ = false;
  double incumbent_obj_ = std::numeric_limits<double>::infinity();
  std::vector<double> incumbent_;
};

}  // namespace detail

/// Solves the MILP within `budget`. Optimal means the tree was closed or
/// the best open bound is within the absolute gap of the incumbent.
inline MilpSolution solve_milp(const MilpModel& model, const MilpBudget& budget = {}) {
  return detail::BranchAndBound(model, budget).run();
}

}  // namespace pinnmilp::milp
