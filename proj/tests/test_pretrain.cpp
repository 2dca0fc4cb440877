#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "pinnmilp/pretrain.hpp"

using namespace pinnmilp;
using milp::LinearExpr;
using milp::MilpModel;
using milp::MilpStatus;
using milp::Relation;
using milp::VarId;

namespace {

std::vector<BoundarySample> random_samples(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BoundarySample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const InputPoint p{285.0 + 10.0 * u(rng), u(rng) < 0.5 ? 0.0 : 1.0, 3600.0 * 50.0 * u(rng),
                       310.0 + 20.0 * u(rng), 0.0};
    out.push_back({p, 290.0 + 30.0 * u(rng)});
  }
  return out;
}

Scaler fitted_scaler(const std::vector<BoundarySample>& b) {
  std::vector<InputPoint> in;
  for (const auto& s : b) in.push_back(s.input);
  return Scaler::fit(in, 280.0, 340.0);
}

PretrainConfig make_config(const Scaler& s, std::vector<double> w2, double box = 2.0) {
  PretrainConfig cfg;
  cfg.scaler = s;
  cfg.W2_fixed = std::move(w2);
  cfg.weight_box = box;
  return cfg;
}

// Fix-the-zones oracle: every zone triple is pinned to one zone and the
// remaining LP is solved; the minimum over all combinations is returned.
std::optional<double> zone_enumeration(const MilpModel& m) {
  const auto& triples = m.zone_triples();
  std::size_t combos = 1;
  for (std::size_t i = 0; i < triples.size(); ++i) combos *= 3;
  std::vector<double> lo0, hi0;
  for (const auto& v : m.variables()) {
    lo0.push_back(v.lower);
    hi0.push_back(v.upper);
  }
  std::optional<double> best;
  for (std::size_t c = 0; c < combos; ++c) {
    auto lo = lo0, hi = hi0;
    std::size_t code = c;
    for (const auto& t : triples) {
      const std::size_t z = code % 3;
      code /= 3;
      for (std::size_t k = 0; k < 3; ++k) lo[t.beta[k]] = hi[t.beta[k]] = (k == z) ? 1.0 : 0.0;
    }
    const auto r = milp::solve_lp(m, lo, hi);
    if (r.status == milp::LpStatus::Optimal && (!best || r.objective < *best)) best = r.objective;
  }
  return best;
}

// Independent oracle for the boundary problem with one neuron: for each
// zone pattern, sat is -1, the pre-activation, or +1, and the problem is an
// LP written directly from the data.
double boundary_oracle_one_neuron(const std::vector<BoundarySample>& data, const PretrainConfig& cfg) {
  const std::size_t N = data.size();
  std::size_t combos = 1;
  for (std::size_t i = 0; i < N; ++i) combos *= 3;
  const double w = cfg.weight_box, w2 = cfg.W2_fixed[0];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < combos; ++c) {
    MilpModel lp;
    std::vector<VarId> W;
    for (std::size_t j = 0; j < kInputs; ++j) W.push_back(lp.add_variable("w" + std::to_string(j), -w, w));
    const VarId b1 = lp.add_variable("b1", -w, w);
    const VarId b2 = lp.add_variable("b2", -w, w);
    LinearExpr obj;
    std::size_t code = c;
    for (std::size_t i = 0; i < N; ++i) {
      const int z = static_cast<int>(code % 3);
      code /= 3;
      const Features xs = cfg.scaler.standardize(data[i].input);
      LinearExpr pre = LinearExpr::var(b1);
      for (std::size_t j = 0; j < kInputs; ++j) pre.add(W[j], xs[j]);
      LinearExpr out = LinearExpr::var(b2);
      if (z == 0) {
        lp.add_constraint(pre, Relation::LessEqual, -1.0);
        out.constant -= w2;
      } else if (z == 2) {
        lp.add_constraint(pre, Relation::GreaterEqual, 1.0);
        out.constant += w2;
      } else {
        lp.add_constraint(pre, Relation::GreaterEqual, -1.0);
        lp.add_constraint(pre, Relation::LessEqual, 1.0);
        out.add(pre, w2);
      }
      out.constant -= cfg.scaler.normalize_output(data[i].u);
      const VarId e = lp.add_variable("e" + std::to_string(i), 0.0, 100.0);
      lp.add_constraint(LinearExpr::var(e) - out, Relation::GreaterEqual, 0.0);
      lp.add_constraint(LinearExpr::var(e) + out, Relation::GreaterEqual, 0.0);
      obj.add(e, 1.0 / static_cast<double>(N));
    }
    lp.set_objective(obj);
    const auto r = milp::solve_lp(lp);
    if (r.status == milp::LpStatus::Optimal) best = std::min(best, r.objective);
  }
  return best;
}

MilpModel fixed_input_sat(double x, double M, VarId& sat) {
  MilpModel m;
  sat = encode_sat(m, LinearExpr(x), M, "t");
  return m;
}

}  // namespace

TEST(EncodeSat, FixedInputExamples) {
  VarId s = 0;
  {
    const MilpModel m = fixed_input_sat(2.0, 10.0, s);
    const auto sol = milp::solve_milp(m);
    ASSERT_EQ(sol.status, MilpStatus::Optimal);
    EXPECT_NEAR(*sol.value("beta3_t"), 1.0, 1e-9);
    EXPECT_NEAR(*sol.value("g3_t"), 8.0 / 9.0, 1e-9);
    EXPECT_NEAR(*sol.value("g4_t"), 1.0 / 9.0, 1e-9);
    EXPECT_NEAR(sol.values[s], 1.0, 1e-9);
  }
  {
    const MilpModel m = fixed_input_sat(0.5, 10.0, s);
    const auto sol = milp::solve_milp(m);
    ASSERT_EQ(sol.status, MilpStatus::Optimal);
    EXPECT_NEAR(*sol.value("beta2_t"), 1.0, 1e-9);
    EXPECT_NEAR(*sol.value("g2_t"), 0.25, 1e-9);
    EXPECT_NEAR(*sol.value("g3_t"), 0.75, 1e-9);
    EXPECT_NEAR(sol.values[s], 0.5, 1e-9);
  }
  {
    const MilpModel m = fixed_input_sat(-10.0, 10.0, s);
    const auto sol = milp::solve_milp(m);
    ASSERT_EQ(sol.status, MilpStatus::Optimal);
    EXPECT_NEAR(*sol.value("beta1_t"), 1.0, 1e-9);
    EXPECT_NEAR(*sol.value("g1_t"), 1.0, 1e-9);
    EXPECT_NEAR(sol.values[s], -1.0, 1e-9);
  }
  MilpModel bad;
  EXPECT_THROW(encode_sat(bad, LinearExpr(0.0), 0.5, "x"), PretrainError);
}

TEST(EncodeSat, MatchesSatOverAGrid) {
  for (double x = -4.0; x <= 4.0; x += 0.37) {
    VarId s = 0;
    const MilpModel m = fixed_input_sat(x, 5.0, s);
    const auto sol = milp::solve_milp(m);
    ASSERT_EQ(sol.status, MilpStatus::Optimal) << x;
    EXPECT_NEAR(sol.values[s], sat(x), 1e-9) << x;
  }
}

TEST(EncodeAbs, Examples) {
  for (double c : {-3.0, 0.0}) {
    MilpModel m;
    const VarId e = encode_abs(m, LinearExpr(c), "e");
    m.set_objective(LinearExpr::var(e));
    const auto sol = milp::solve_milp(m);
    ASSERT_EQ(sol.status, MilpStatus::Optimal);
    EXPECT_NEAR(sol.objective, std::abs(c), 1e-12);
  }
  MilpModel m;
  const VarId y = m.add_variable("y", 0.0, 10.0);
  LinearExpr expr = LinearExpr::var(y);
  expr.constant = -2.0;
  const VarId e = encode_abs(m, expr, "e");
  m.set_objective(LinearExpr::var(e));
  const auto sol = milp::solve_milp(m);
  ASSERT_EQ(sol.status, MilpStatus::Optimal);
  EXPECT_NEAR(sol.objective, 0.0, 1e-12);
  EXPECT_NEAR(sol.values[y], 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(m.variable(e).upper, 8.0);
}

TEST(BoundaryModel, OneAndTwoPointsReachZero) {
  std::mt19937_64 rng(3);
  auto data = random_samples(rng, 2);
  data[1].u = data[0].u;
  const Scaler s = fitted_scaler(data);
  for (std::size_t width : {1u, 3u}) {
    const PretrainConfig cfg = make_config(s, std::vector<double>(width, 0.7));
    for (std::size_t n : {1u, 2u}) {
      const std::vector<BoundarySample> sub(data.begin(), data.begin() + n);
      const auto sol = milp::solve_milp(build_boundary_model(sub, cfg));
      ASSERT_EQ(sol.status, MilpStatus::Optimal);
      EXPECT_NEAR(sol.objective, 0.0, 1e-9);
      const PretrainResult r = decode_solution(sol, cfg);
      EXPECT_NEAR(sat_network_mae(r.params, s, sub), 0.0, 1e-7);
    }
  }
}

TEST(BoundaryModel, MatchesIndependentZoneOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    const auto data = random_samples(rng, 3);
    const Scaler s = fitted_scaler(data);
    std::normal_distribution<double> g(0.0, 0.6);
    const PretrainConfig cfg = make_config(s, {g(rng)}, 0.8);
    const MilpModel m = build_boundary_model(data, cfg);
    const auto sol = milp::solve_milp(m);
    ASSERT_EQ(sol.status, MilpStatus::Optimal);
    const double oracle = boundary_oracle_one_neuron(data, cfg);
    EXPECT_NEAR(sol.objective, oracle, 1e-6) << trial;
    EXPECT_NEAR(sol.objective, *zone_enumeration(m), 1e-6) << trial;
  }
}

TEST(BoundaryModel, SolvedSatValuesFollowZones) {
  std::mt19937_64 rng(5);
  const auto data = random_samples(rng, 4);
  const Scaler s = fitted_scaler(data);
  const PretrainConfig cfg = make_config(s, {0.5, -0.9}, 1.5);
  const MilpModel m = build_boundary_model(data, cfg);
  const auto sol = milp::solve_milp(m);
  ASSERT_EQ(sol.status, MilpStatus::Optimal);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t n = 0; n < 2; ++n) {
      const std::string tag = "u" + std::to_string(i) + "_n" + std::to_string(n);
      const auto& t = m.zone_triples()[i * 2 + n];
      const double pre = t.x.evaluate(sol.values);
      const double sv = *sol.value("sat_" + tag);
      if (*sol.value("beta2_" + tag) > 0.5) {
        EXPECT_NEAR(sv, pre, 1e-7);
      }
      if (*sol.value("beta1_" + tag) > 0.5) {
        EXPECT_NEAR(sv, -1.0, 1e-7);
      }
      if (*sol.value("beta3_" + tag) > 0.5) {
        EXPECT_NEAR(sv, 1.0, 1e-7);
      }
    }
  }
}

TEST(BoundaryModel, DecodeConsistencyAndBox) {
  std::mt19937_64 rng(17);
  const auto data = random_samples(rng, 5);
  const Scaler s = fitted_scaler(data);
  const PretrainConfig cfg = make_config(s, {0.4, -0.3, 0.8}, 1.0);
  const auto sol = milp::solve_milp(build_boundary_model(data, cfg));
  ASSERT_EQ(sol.status, MilpStatus::Optimal);
  const PretrainResult r = decode_solution(sol, cfg);
  EXPECT_NEAR(r.data_term, sol.objective, 1e-9);
  EXPECT_NEAR(sat_network_mae(r.params, s, data), sol.objective, 1e-6);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_EQ(r.params.w2(n), cfg.W2_fixed[n]);
    EXPECT_LE(std::abs(r.params.b1(n)), 1.0 + 1e-9);
    for (std::size_t j = 0; j < kInputs; ++j) EXPECT_LE(std::abs(r.params.w1(n, j)), 1.0 + 1e-9);
  }
  EXPECT_LE(std::abs(r.params.b2()), 1.0 + 1e-9);
}

TEST(BoundaryModel, NonincreasingInWidth) {
  std::mt19937_64 rng(23);
  const auto data = random_samples(rng, 4);
  const Scaler s = fitted_scaler(data);
  const std::vector<double> w2_all{0.6, -0.4, 0.3, 0.5};
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= 4; ++n) {
    const PretrainConfig cfg = make_config(s, std::vector<double>(w2_all.begin(), w2_all.begin() + n), 1.0);
    const auto sol = milp::solve_milp(build_boundary_model(data, cfg));
    ASSERT_EQ(sol.status, MilpStatus::Optimal);
    EXPECT_LE(sol.objective, previous + 1e-6) << n;
    previous = sol.objective;
  }
}

TEST(BoundaryModel, RejectsBadConfig) {
  std::mt19937_64 rng(1);
  const auto data = random_samples(rng, 2);
  const Scaler s = fitted_scaler(data);
  EXPECT_THROW(build_boundary_model(data, make_config(s, {})), PretrainError);
  EXPECT_THROW(build_boundary_model(data, make_config(s, {1.0}, 0.0)), PretrainError);
  EXPECT_THROW(build_boundary_model({}, make_config(s, {1.0})), PretrainError);
}

namespace {

struct FullFixture {
  std::vector<BoundarySample> boundary;
  std::vector<CollocationPoint> collocation;
  PretrainConfig cfg;
};

FullFixture full_fixture(std::uint64_t seed, std::size_t nb, std::size_t nc, std::vector<double> w2) {
  std::mt19937_64 rng(seed);
  FullFixture f;
  f.boundary = random_samples(rng, nb);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PhysicalParams phys;
  for (std::size_t i = 0; i < nc; ++i) {
    const double K = 0.5 + u(rng), x = 0.1 + 0.8 * u(rng);
    f.collocation.push_back({InputPoint{290.0, x, 3600.0 * 40.0 * u(rng), 320.0, load_loss(K, x, phys.nu)}, K});
  }
  std::vector<InputPoint> in;
  for (const auto& b : f.boundary) in.push_back(b.input);
  for (const auto& c : f.collocation) in.push_back(c.input);
  f.cfg = make_config(Scaler::fit(in, 280.0, 340.0), std::move(w2), 1.0);
  set_default_epsilons(f.cfg, in);
  return f;
}

}  // namespace

TEST(FullModel, ZeroResidualWeightReducesToBoundaryModel) {
  FullFixture f = full_fixture(31, 3, 2, {0.5, -0.7});
  f.cfg.lambda_f = 0.0;
  const PhysicalParams phys;
  const auto full = milp::solve_milp(build_full_model(f.boundary, f.collocation, phys, f.cfg));
  const auto bnd = milp::solve_milp(build_boundary_model(f.boundary, f.cfg));
  ASSERT_EQ(full.status, MilpStatus::Optimal);
  ASSERT_EQ(bnd.status, MilpStatus::Optimal);
  EXPECT_NEAR(full.objective, bnd.objective, 1e-6);
}

TEST(FullModel, ConstantTargetsAtAmbientGiveZero) {
  PhysicalParams phys;
  phys.P0 = 0.0;
  phys.nu = 0.0;
  std::vector<BoundarySample> boundary;
  for (double x : {0.0, 1.0}) boundary.push_back({InputPoint{300.0, x, 1000.0 * (1.0 + x), 320.0, 0.0}, 300.0});
  std::vector<CollocationPoint> colloc{{InputPoint{300.0, 0.5, 2000.0, 320.0, 0.0}, 0.8}};
  std::vector<InputPoint> in{boundary[0].input, boundary[1].input, colloc[0].input};
  PretrainConfig cfg = make_config(Scaler::fit(in, 280.0, 340.0), {0.9}, 1.0);
  set_default_epsilons(cfg, in);
  const auto sol = milp::solve_milp(build_full_model(boundary, colloc, phys, cfg));
  ASSERT_EQ(sol.status, MilpStatus::Optimal);
  EXPECT_NEAR(sol.objective, 0.0, 1e-9);
}

TEST(FullModel, MatchesZoneEnumeration) {
  FullFixture f = full_fixture(37, 2, 1, {0.8});
  const MilpModel m = build_full_model(f.boundary, f.collocation, PhysicalParams{}, f.cfg);
  ASSERT_EQ(m.zone_triples().size(), 6u);
  const auto sol = milp::solve_milp(m);
  ASSERT_EQ(sol.status, MilpStatus::Optimal);
  EXPECT_NEAR(sol.objective, *zone_enumeration(m), 1e-6);
}

TEST(FullModel, BoundaryOptimumBoundsFullDataTerm) {
  FullFixture f = full_fixture(41, 3, 2, {0.6, 0.4});
  const PhysicalParams phys;
  const auto full = milp::solve_milp(build_full_model(f.boundary, f.collocation, phys, f.cfg));
  const auto bnd = milp::solve_milp(build_boundary_model(f.boundary, f.cfg));
  ASSERT_EQ(full.status, MilpStatus::Optimal);
  ASSERT_EQ(bnd.status, MilpStatus::Optimal);
  EXPECT_LE(bnd.objective, decode_solution(full, f.cfg).data_term + 1e-6);
}

TEST(FullModel, RefusesShiftedTimesOutsideScenario) {
  FullFixture f = full_fixture(43, 2, 1, {0.5});
  f.cfg.t_min = 0.0;
  f.cfg.t_max = f.collocation[0].input.t;  // t + eps_t lies beyond the end
  EXPECT_THROW(build_full_model(f.boundary, f.collocation, PhysicalParams{}, f.cfg), PretrainError);
  f.cfg.epsilon_t = 0.0;
  f.cfg.t_max = std::numeric_limits<double>::infinity();
  EXPECT_THROW(build_full_model(f.boundary, f.collocation, PhysicalParams{}, f.cfg), PretrainError);
  EXPECT_THROW(build_full_model(f.boundary, {}, PhysicalParams{}, f.cfg), PretrainError);
}

TEST(FullModel, ShiftedPointsRecomputeLoadLoss) {
  FullFixture f = full_fixture(47, 1, 1, {0.5});
  const PhysicalParams phys;
  const auto s = detail::shifted_points(f.collocation[0], f.cfg, phys);
  EXPECT_GT(s.dt, 0.0);
  EXPECT_GT(s.dx, 0.0);
  EXPECT_EQ(s.t_plus.T_a, s.base.T_a);
  EXPECT_EQ(s.t_plus.P_K, s.base.P_K);
  EXPECT_DOUBLE_EQ(s.x_plus.P_K, load_loss(f.collocation[0].K, s.base.x + s.dx, phys.nu));
  EXPECT_DOUBLE_EQ(s.x_minus.P_K, load_loss(f.collocation[0].K, s.base.x - s.dx, phys.nu));
}

TEST(Decode, RejectsInfeasibleAndMissingVariables) {
  milp::MilpSolution sol;
  const PretrainConfig cfg = make_config(Scaler::identity(), {1.0});
  EXPECT_THROW(decode_solution(sol, cfg), PretrainError);
  sol.status = MilpStatus::Optimal;
  sol.names = {"b2"};
  sol.values = {0.0};
  EXPECT_THROW(decode_solution(sol, cfg), MissingVariable);
}
