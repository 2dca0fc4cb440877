#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pinnmilp/reference_solver.hpp"

using namespace pinnmilp;

namespace {

Scenario constant_scenario(double T, double t_end, double K = 0.0) {
  Scenario sc;
  sc.times = {0.0, t_end};
  sc.T_a = {T, T};
  sc.T_o = {T, T};
  sc.K = {K, K};
  return sc;
}

// u*(x, t) = T + sin(pi x) exp(-lambda t) with the forcing that makes it
// an exact solution; returns the max nodal error over all output levels.
double manufactured_error(std::size_t nx) {
  PhysicalParams p;
  const double T = 300.0;
  const double lambda = 1.0 / 3600.0;
  const double t_end = 3600.0;
  const Scenario sc = constant_scenario(T, t_end);
  const Grid g{nx, 5, Domain{0.0, 1.0, 0.0, t_end}};
  SolverOptions opts;
  opts.max_dt = 1.0;
  const double pi = std::numbers::pi;
  opts.extra_source = [&](double x, double t) {
    return (-p.rho * p.c_p * lambda + p.k * pi * pi + p.h) * std::sin(pi * x) * std::exp(-lambda * t) - p.P0;
  };
  std::vector<double> init(nx);
  for (std::size_t i = 0; i < nx; ++i) init[i] = T + std::sin(pi * g.x(i));
  const TemperatureField f = solve(p, sc, g, init, opts);
  double err = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < g.nt; ++j) {
      const double exact = T + std::sin(pi * g.x(i)) * std::exp(-lambda * g.t(j));
      err = std::max(err, std::abs(f.at(i, j) - exact));
    }
  return err;
}

}  // namespace

TEST(Scenario, ValidateRejectsBadSeries) {
  Scenario sc = constant_scenario(300.0, 10.0);
  EXPECT_NO_THROW(sc.validate());
  Scenario short_sc = sc;
  short_sc.times.pop_back();
  EXPECT_THROW(short_sc.validate(), std::invalid_argument);
  Scenario unordered = sc;
  unordered.times = {5.0, 5.0};
  EXPECT_THROW(unordered.validate(), std::invalid_argument);
  Scenario negative = sc;
  negative.K[0] = -0.1;
  EXPECT_THROW(negative.validate(), std::invalid_argument);
}

TEST(Scenario, InterpolationRules) {
  Scenario sc;
  sc.times = {0.0, 10.0, 20.0};
  sc.T_a = {280.0, 290.0, 270.0};
  sc.T_o = {300.0, 310.0, 320.0};
  sc.K = {0.2, 0.8, 1.0};
  EXPECT_DOUBLE_EQ(sc.ambient(5.0), 285.0);
  EXPECT_DOUBLE_EQ(sc.ambient(15.0), 280.0);
  EXPECT_DOUBLE_EQ(sc.top_oil(12.5), 312.5);
  EXPECT_DOUBLE_EQ(sc.load(9.999), 0.2);
  EXPECT_DOUBLE_EQ(sc.load(10.0), 0.8);
  EXPECT_DOUBLE_EQ(sc.load(25.0), 1.0);
  EXPECT_DOUBLE_EQ(sc.ambient(-1.0), 280.0);
}

TEST(Solve, ConstantScenarioIsStationary) {
  PhysicalParams p;
  p.P0 = 0.0;
  p.nu = 0.0;
  p.h = 0.0;
  const Scenario sc = constant_scenario(310.0, 7200.0);
  const Grid g{11, 9, Domain{0.0, 1.0, 0.0, 7200.0}};
  const TemperatureField f = solve(p, sc, g, std::vector<double>(11, 310.0));
  for (double v : f.values) EXPECT_NEAR(v, 310.0, 1e-9);
}

TEST(Solve, BoundaryRowsFollowScenario) {
  const Scenario sc = generate_scenario(5, 12.0);
  const Grid g{15, 30, Domain{0.0, 1.0, 0.0, hours_to_seconds(12.0)}};
  const TemperatureField f = solve(PhysicalParams{}, sc, g);
  for (std::size_t j = 0; j < g.nt; ++j) {
    EXPECT_DOUBLE_EQ(f.at(0, j), sc.ambient(g.t(j)));
    EXPECT_DOUBLE_EQ(f.at(g.nx - 1, j), sc.top_oil(g.t(j)));
  }
  for (double v : f.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Solve, RejectsGridBeyondScenario) {
  const Scenario sc = constant_scenario(300.0, 100.0);
  const Grid g{5, 3, Domain{0.0, 1.0, 0.0, 200.0}};
  EXPECT_THROW(solve(PhysicalParams{}, sc, g), std::invalid_argument);
}

TEST(Solve, ManufacturedSolutionSecondOrderInSpace) {
  const double e1 = manufactured_error(11);
  const double e2 = manufactured_error(21);
  const double e3 = manufactured_error(41);
  EXPECT_LT(e2, e1);
  EXPECT_LT(e3, e2);
  const double rate12 = std::log2(e1 / e2);
  const double rate23 = std::log2(e2 / e3);
  EXPECT_GE(rate12, 1.8);
  EXPECT_LE(rate12, 2.2);
  EXPECT_GE(rate23, 1.8);
  EXPECT_LE(rate23, 2.2);
  EXPECT_NEAR(e2 / e3, 4.0, 0.6);
}

TEST(Solve, MaximumPrincipleWithoutSource) {
  PhysicalParams p;
  p.P0 = 0.0;
  p.nu = 0.0;
  p.h = 0.0;
  const Scenario sc = constant_scenario(300.0, 20000.0);
  const Grid g{21, 50, Domain{0.0, 1.0, 0.0, 20000.0}};
  std::vector<double> init(21);
  for (std::size_t i = 0; i < 21; ++i) init[i] = 300.0 + 20.0 * std::sin(std::numbers::pi * g.x(i));
  const TemperatureField f = solve(p, sc, g, init);
  double prev_mean = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g.nt; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < g.nx; ++i) {
      EXPECT_GE(f.at(i, j), 300.0 - 1e-9);
      EXPECT_LE(f.at(i, j), 320.0 + 1e-9);
      mean += f.at(i, j);
    }
    mean /= static_cast<double>(g.nx);
    EXPECT_LE(mean, prev_mean + 1e-12);
    prev_mean = mean;
  }
}

TEST(Solve, MaxPrincipleGuardValue) {
  const PhysicalParams p;
  const double dx = 0.1;
  EXPECT_DOUBLE_EQ(max_principle_dt(p, dx), 900.0 * 2000.0 / (50.0 / 0.01 + 500.0));
}

TEST(Solve, SteadyProfileStaysSteady) {
  const PhysicalParams p;
  const Scenario sc = constant_scenario(290.0, 36000.0, 0.7);
  const Grid g{31, 11, Domain{0.0, 1.0, 0.0, 36000.0}};
  const auto u0 = steady_profile(p, sc, g, 0.0);
  const TemperatureField f = solve(p, sc, g, u0);
  for (std::size_t i = 0; i < g.nx; ++i) EXPECT_NEAR(f.at(i, g.nt - 1), u0[i], 1e-8);
  // Interior is heated above ambient by the losses.
  EXPECT_GT(u0[g.nx / 2], 290.0 + p.P0 / p.h * 0.5);
}

TEST(GenerateScenario, DeterministicPerSeed) {
  const Scenario a = generate_scenario(7, 100.0, 15.0);
  const Scenario b = generate_scenario(7, 100.0, 15.0);
  std::ostringstream sa, sb;
  write_scenario_csv(sa, a);
  write_scenario_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  const Scenario c = generate_scenario(8, 100.0, 15.0);
  EXPECT_NE(a.T_a, c.T_a);
}

TEST(GenerateScenario, RangesAndLength) {
  for (std::uint64_t seed : {1u, 7u, 99u}) {
    const Scenario sc = generate_scenario(seed, 100.0, 15.0);
    EXPECT_EQ(sc.size(), 401u);
    EXPECT_NO_THROW(sc.validate());
    EXPECT_GE(*std::min_element(sc.T_a.begin(), sc.T_a.end()), 275.0);
    EXPECT_LE(*std::max_element(sc.T_a.begin(), sc.T_a.end()), 310.0);
    EXPECT_LE(*std::max_element(sc.K.begin(), sc.K.end()), 1.2);
    EXPECT_GE(*std::min_element(sc.K.begin(), sc.K.end()), 0.2);
    EXPECT_DOUBLE_EQ(sc.t_last(), hours_to_seconds(100.0));
    // Top oil runs hotter than ambient.
    for (std::size_t i = 0; i < sc.size(); ++i) EXPECT_GT(sc.T_o[i], sc.T_a[i]);
  }
  EXPECT_THROW(generate_scenario(1, 0.0), std::invalid_argument);
}

TEST(ScenarioCsv, RoundTrip) {
  const Scenario sc = generate_scenario(3, 6.0);
  std::stringstream ss;
  write_scenario_csv(ss, sc);
  const Scenario back = parse_scenario_csv(ss);
  ASSERT_EQ(back.size(), sc.size());
  for (std::size_t i = 0; i < sc.size(); ++i) {
    EXPECT_NEAR(back.times[i], sc.times[i], 1e-9);
    EXPECT_EQ(back.T_a[i], sc.T_a[i]);
    EXPECT_EQ(back.T_o[i], sc.T_o[i]);
    EXPECT_EQ(back.K[i], sc.K[i]);
  }
}

TEST(ScenarioCsv, ConvertsHoursAndAcceptsColumnOrder) {
  std::istringstream in("K,T_o,time_h,T_a\n0.5,320,0,290\n0.6,321,1.5,291\n");
  const Scenario sc = parse_scenario_csv(in);
  ASSERT_EQ(sc.size(), 2u);
  EXPECT_DOUBLE_EQ(sc.times[1], 5400.0);
  EXPECT_DOUBLE_EQ(sc.T_a[1], 291.0);
  EXPECT_DOUBLE_EQ(sc.K[0], 0.5);
}

TEST(ScenarioCsv, ReportsMissingColumn) {
  std::istringstream in("time_h,T_a,K\n0,290,0.5\n");
  try {
    parse_scenario_csv(in);
    FAIL() << "expected ScenarioCsvError";
  } catch (const ScenarioCsvError& e) {
    EXPECT_EQ(e.kind(), ScenarioCsvError::Kind::MissingColumn);
    EXPECT_EQ(e.column(), "T_o");
  }
}

TEST(ScenarioCsv, ReportsNonMonotoneTimeRow) {
  std::istringstream in("time_h,T_a,T_o,K\n0,290,300,0.5\n1,290,300,0.5\n1,290,300,0.5\n");
  try {
    parse_scenario_csv(in);
    FAIL() << "expected ScenarioCsvError";
  } catch (const ScenarioCsvError& e) {
    EXPECT_EQ(e.kind(), ScenarioCsvError::Kind::NonMonotoneTime);
    EXPECT_EQ(e.row(), 4u);
  }
}

TEST(ScenarioCsv, ReportsNonNumericCell) {
  std::istringstream in("time_h,T_a,T_o,K\n0,290,300,0.5\n1,warm,300,0.5\n");
  try {
    parse_scenario_csv(in);
    FAIL() << "expected ScenarioCsvError";
  } catch (const ScenarioCsvError& e) {
    EXPECT_EQ(e.kind(), ScenarioCsvError::Kind::NonNumericCell);
    EXPECT_EQ(e.column(), "T_a");
    EXPECT_EQ(e.row(), 3u);
  }
}

TEST(ScenarioCsv, MissingFileIsIoError) {
  try {
    load_scenario_csv("/nonexistent/dir/scenario.csv");
    FAIL() << "expected ScenarioCsvError";
  } catch (const ScenarioCsvError& e) {
    EXPECT_EQ(e.kind(), ScenarioCsvError::Kind::Io);
  }
}

TEST(FieldCsv, RoundTripAndLayout) {
  const Scenario sc = generate_scenario(4, 10.0);
  const Grid g{7, 5, Domain{0.0, 1.0, 0.0, hours_to_seconds(10.0)}};
  const TemperatureField f = solve(PhysicalParams{}, sc, g);
  std::stringstream ss;
  write_field_csv(ss, f);
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find(',')), "x_m\\time_h");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 8);
  const TemperatureField back = read_field_csv(ss);
  EXPECT_EQ(back.grid.nx, g.nx);
  EXPECT_EQ(back.grid.nt, g.nt);
  EXPECT_NEAR(back.grid.domain.t_end, g.domain.t_end, 1e-9);
  for (std::size_t k = 0; k < f.values.size(); ++k) EXPECT_EQ(back.values[k], f.values[k]);
}

TEST(SampleTrainingPoints, SizesAndDeterminism) {
  const Scenario sc = generate_scenario(2, 24.0);
  const Grid g{11, 25, Domain{0.0, 1.0, 0.0, hours_to_seconds(24.0)}};
  const TemperatureField f = solve(PhysicalParams{}, sc, g);
  const PhysicalParams p;
  const auto a = sample_training_points(f, sc, p, 10, 5, 42);
  EXPECT_EQ(a.boundary.size(), 10u);
  EXPECT_EQ(a.collocation.size(), 5u);
  const auto b = sample_training_points(f, sc, p, 10, 5, 42);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(a.boundary[i].u, b.boundary[i].u);
    EXPECT_EQ(a.boundary[i].input.t, b.boundary[i].input.t);
  }
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a.collocation[i].input.x, b.collocation[i].input.x);
  EXPECT_TRUE(sample_training_points(f, sc, p, 3, 0, 1).collocation.empty());
  EXPECT_THROW(sample_training_points(f, sc, p, 0, 3, 1), std::invalid_argument);
}

TEST(SampleTrainingPoints, PointsAreConsistentWithScenario) {
  const Scenario sc = generate_scenario(2, 24.0);
  const Grid g{11, 25, Domain{0.0, 1.0, 0.0, hours_to_seconds(24.0)}};
  const TemperatureField f = solve(PhysicalParams{}, sc, g);
  const PhysicalParams p;
  const auto pts = sample_training_points(f, sc, p, 50, 50, 9);
  for (const auto& b : pts.boundary) {
    EXPECT_TRUE(b.input.x == 0.0 || b.input.x == 1.0);
    const double expected = b.input.x == 0.0 ? sc.ambient(b.input.t) : sc.top_oil(b.input.t);
    EXPECT_NEAR(b.u, expected, 1e-9);
    EXPECT_DOUBLE_EQ(b.input.T_a, sc.ambient(b.input.t));
  }
  for (const auto& c : pts.collocation) {
    EXPECT_GT(c.input.x, 0.0);
    EXPECT_LT(c.input.x, 1.0);
    EXPECT_GT(c.input.t, 0.0);
    EXPECT_LE(c.input.t, g.domain.t_end);
    EXPECT_DOUBLE_EQ(c.K, sc.load(c.input.t));
    EXPECT_DOUBLE_EQ(c.input.P_K, load_loss(c.K, c.input.x, p.nu));
  }
}
