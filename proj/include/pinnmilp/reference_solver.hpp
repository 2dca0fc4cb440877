#pragma once

// Crank-Nicolson reference solver for rho c_p u_t = k u_xx + q, synthetic
// scenario generation, and CSV ingestion/export of scenarios and fields.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "heat_model.hpp"
#include "points.hpp"

namespace pinnmilp {

/// Exogenous time series driving the PDE. Times in seconds.
struct Scenario {
  std::vector<double> times;
  std::vector<double> T_a;
  std::vector<double> T_o;
  std::vector<double> K;

  std::size_t size() const { return times.size(); }
  double t_begin() const { return times.front(); }
  double t_last() const { return times.back(); }

  void validate() const {
    const std::size_t n = times.size();
    if (n < 2 || T_a.size() != n || T_o.size() != n || K.size() != n) {
      throw std::invalid_argument("Scenario: all series must have the same length >= 2");
    }
    for (std::size_t i = 1; i < n; ++i) {
      if (!(times[i] > times[i - 1])) throw std::invalid_argument("Scenario: times must be strictly increasing");
    }
    for (double k : K) {
      if (!(k >= 0.0)) throw std::invalid_argument("Scenario: load factor must be >= 0");
    }
  }

  // Index of the last sample with times[i] <= t (clamped to the series).
  std::size_t segment(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0;
    return std::min<std::size_t>(static_cast<std::size_t>(it - times.begin()) - 1, times.size() - 1);
  }

  double interpolate(const std::vector<double>& series, double t) const {
    if (t <= times.front()) return series.front();
    if (t >= times.back()) return series.back();
    const std::size_t i = segment(t);
    const double w = (t - times[i]) / (times[i + 1] - times[i]);
    return (1.0 - w) * series[i] + w * series[i + 1];
  }

  /// Ambient temperature, piecewise-linear in time.
  double ambient(double t) const { return interpolate(T_a, t); }
  /// Top-oil temperature, piecewise-linear in time.
  double top_oil(double t) const { return interpolate(T_o, t); }
  /// Load factor, piecewise-constant holding the previous sample.
  double load(double t) const { return K[segment(t)]; }
};

/// Rectangular space-time grid with nx positions and nt time levels.
struct Grid {
  std::size_t nx = 50;
  std::size_t nt = 100;
  Domain domain;

  void validate() const {
    if (nx < 3) throw std::invalid_argument("Grid: nx must be >= 3");
    if (nt < 2) throw std::invalid_argument("Grid: nt must be >= 2");
    domain.validate();
  }
  double dx() const { return (domain.x_end - domain.x0) / static_cast<double>(nx - 1); }
  double x(std::size_t i) const {
    return i + 1 == nx ? domain.x_end : domain.x0 + static_cast<double>(i) * dx();
  }
  double t(std::size_t j) const {
    if (j + 1 == nt) return domain.t_end;
    return domain.t0 + static_cast<double>(j) * (domain.t_end - domain.t0) / static_cast<double>(nt - 1);
  }
};

/// Temperatures u(x_i, t_j) stored x-major: values[i * nt + j].
struct TemperatureField {
  Grid grid;
  std::vector<double> values;

  TemperatureField() = default;
  explicit TemperatureField(Grid g) : grid(g), values(g.nx * g.nt, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return values[i * grid.nt + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * grid.nt + j]; }
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  // Upper bound on the internal time step [s]; 0 leaves only the
  // maximum-principle guard in charge.
  double max_dt = 0.0;
  // Additional volumetric forcing S(x, t) added to q. Used by manufactured
  // solution checks.
  std::function<double(double, double)> extra_source;
};

namespace detail {

// Thomas algorithm; `lower`, `diag`, `upper` have the same length, with
// lower[0] and upper[n-1] ignored. Solves in place into `rhs`.
inline void solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                              std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double m = lower[i] / diag[i - 1];
      diag[i] -= m * upper[i - 1];
      rhs[i] -= m * rhs[i - 1];
    }
    if (diag[i] == 0.0 || !std::isfinite(diag[i])) throw SolverError("tridiagonal solve: zero pivot");
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace detail

/// Largest step for which the Crank-Nicolson update keeps a nonnegative
/// explicit-half coefficient (discrete maximum principle).
inline double max_principle_dt(const PhysicalParams& params, double dx) {
  const double r = params.k / (dx * dx);
  return params.rho * params.c_p / (r + 0.5 * params.h);
}

/// Integrates rho c_p u_t = k u_xx + q(u) with Dirichlet boundaries
/// u(x0,t) = T_a(t), u(x_end,t) = T_o(t). The -h u part of q is implicit;
/// the remaining source is averaged over the two time levels.
inline TemperatureField solve(const PhysicalParams& params, const Scenario& scenario, const Grid& grid,
                              const std::optional<std::vector<double>>& u_init = std::nullopt,
                              const SolverOptions& options = {}) {
  grid.validate();
  scenario.validate();
  const double slack = 1e-9 * std::max(1.0, std::abs(scenario.t_last()));
  if (grid.domain.t0 < scenario.t_begin() - slack || grid.domain.t_end > scenario.t_last() + slack) {
    throw std::invalid_argument("solve: grid time range exceeds scenario time range");
  }
  const std::size_t nx = grid.nx;
  const double dx = grid.dx();
  const double heat_capacity = params.rho * params.c_p;
  const double r = params.k / (dx * dx);

  TemperatureField field(grid);
  std::vector<double> u(nx);
  if (u_init) {
    if (u_init->size() != nx) throw std::invalid_argument("solve: initial profile must have nx entries");
    u = *u_init;
  } else {
    const double left = scenario.ambient(grid.domain.t0);
    const double right = scenario.top_oil(grid.domain.t0);
    for (std::size_t i = 0; i < nx; ++i) {
      const double w = static_cast<double>(i) / static_cast<double>(nx - 1);
      u[i] = (1.0 - w) * left + w * right;
    }
  }
  u.front() = scenario.ambient(grid.domain.t0);
  u.back() = scenario.top_oil(grid.domain.t0);
  for (std::size_t i = 0; i < nx; ++i) field.at(i, 0) = u[i];

  // Explicit part of the source (everything in q except -h u).
  auto explicit_source = [&](double t, std::vector<double>& out) {
    const double T_a = scenario.ambient(t);
    const double K = scenario.load(t);
    for (std::size_t i = 0; i < nx; ++i) {
      const double x = grid.x(i);
      out[i] = params.P0 + load_loss(K, x, params.nu) + params.h * T_a;
      if (options.extra_source) out[i] += options.extra_source(x, t);
    }
  };

  double dt_limit = max_principle_dt(params, dx);
  if (options.max_dt > 0.0) dt_limit = std::min(dt_limit, options.max_dt);

  std::vector<double> s_old(nx), s_new(nx);
  std::vector<double> lower(nx - 2), diag(nx - 2), upper(nx - 2), rhs(nx - 2);
  for (std::size_t j = 1; j < grid.nt; ++j) {
    const double t_from = grid.t(j - 1);
    const double t_to = grid.t(j);
    const auto substeps = static_cast<std::size_t>(std::max(1.0, std::ceil((t_to - t_from) / dt_limit - 1e-12)));
    const double dt = (t_to - t_from) / static_cast<double>(substeps);
    const double a = heat_capacity / dt;
    for (std::size_t s = 0; s < substeps; ++s) {
      const double t0 = t_from + dt * static_cast<double>(s);
      const double t1 = s + 1 == substeps ? t_to : t0 + dt;
      explicit_source(t0, s_old);
      explicit_source(t1, s_new);
      const double left = scenario.ambient(t1);
      const double right = scenario.top_oil(t1);
      for (std::size_t i = 1; i + 1 < nx; ++i) {
        const std::size_t row = i - 1;
        lower[row] = -0.5 * r;
        upper[row] = -0.5 * r;
        diag[row] = a + r + 0.5 * params.h;
        rhs[row] = (a - r - 0.5 * params.h) * u[i] + 0.5 * r * (u[i - 1] + u[i + 1]) + 0.5 * (s_old[i] + s_new[i]);
      }
      rhs.front() += 0.5 * r * left;
      rhs.back() += 0.5 * r * right;
      detail::solve_tridiagonal(lower, diag, upper, rhs);
      u.front() = left;
      u.back() = right;
      for (std::size_t i = 1; i + 1 < nx; ++i) u[i] = rhs[i - 1];
    }
    for (std::size_t i = 0; i < nx; ++i) field.at(i, j) = u[i];
  }
  return field;
}

/// Steady profile k u_xx + q(u) = 0 at time t with the scenario's boundary
/// values; a start without the linear-profile transient.
inline std::vector<double> steady_profile(const PhysicalParams& params, const Scenario& scenario, const Grid& grid,
                                          double t) {
  grid.validate();
  const std::size_t nx = grid.nx;
  const double r = params.k / (grid.dx() * grid.dx());
  const double T_a = scenario.ambient(t);
  const double K = scenario.load(t);
  std::vector<double> lower(nx - 2, -r), diag(nx - 2, 2.0 * r + params.h), upper(nx - 2, -r), rhs(nx - 2);
  for (std::size_t i = 1; i + 1 < nx; ++i) rhs[i - 1] = params.P0 + load_loss(K, grid.x(i), params.nu) + params.h * T_a;
  rhs.front() += r * T_a;
  rhs.back() += r * scenario.top_oil(t);
  detail::solve_tridiagonal(lower, diag, upper, rhs);
  std::vector<double> u(nx);
  u.front() = T_a;
  u.back() = scenario.top_oil(t);
  for (std::size_t i = 1; i + 1 < nx; ++i) u[i] = rhs[i - 1];
  return u;
}

/// Deterministic synthetic measurements: daily ambient cycle with smoothed
/// noise, stepwise daily load pattern, and a top-oil series read from a
/// coarse solve next to the x_end boundary.
inline Scenario generate_scenario(std::uint64_t seed, double horizon_hours, double step_minutes = 15.0) {
  if (!(horizon_hours > 0.0)) throw std::invalid_argument("generate_scenario: horizon must be positive");
  if (!(step_minutes > 0.0)) throw std::invalid_argument("generate_scenario: step must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto steps = static_cast<std::size_t>(std::llround(horizon_hours * 60.0 / step_minutes));
  const std::size_t n = std::max<std::size_t>(steps, 1) + 1;
  const double dt = step_minutes * 60.0;

  Scenario sc;
  sc.times.resize(n);
  sc.T_a.resize(n);
  sc.T_o.resize(n);
  sc.K.resize(n);

  const double mean_ambient = 288.0 + 6.0 * unit(rng);
  const double amplitude = 4.0 + 4.0 * unit(rng);
  const double phase_h = 13.0 + 3.0 * unit(rng);  // hour of the daily maximum
  // Per-day load multipliers; one extra day covers a partial last day.
  const auto days = static_cast<std::size_t>(std::ceil(horizon_hours / 24.0)) + 1;
  std::vector<double> day_scale(days);
  for (double& d : day_scale) d = 0.85 + 0.3 * unit(rng);

  double smoothed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = dt * static_cast<double>(i);
    const double hour = std::fmod(t / kSecondsPerHour, 24.0);
    sc.times[i] = t;
    smoothed = 0.9 * smoothed + 0.1 * 2.5 * noise(rng);
    const double ambient =
        mean_ambient + amplitude * std::cos(2.0 * std::numbers::pi * (hour - phase_h) / 24.0) + smoothed;
    sc.T_a[i] = std::clamp(ambient, 275.0, 310.0);

    double base;
    if (hour < 6.0) base = 0.35;
    else if (hour < 9.0) base = 0.7;
    else if (hour < 17.0) base = 0.95;
    else if (hour < 22.0) base = 1.05;
    else base = 0.5;
    const auto day = static_cast<std::size_t>(t / (24.0 * kSecondsPerHour));
    sc.K[i] = std::clamp(base * day_scale[std::min(day, days - 1)], 0.2, 1.2);
  }

  // Provisional top-oil boundary at the local steady-state rise; the
  // published series is the temperature one cell inside that boundary.
  const PhysicalParams params;
  for (std::size_t i = 0; i < n; ++i) {
    sc.T_o[i] = sc.T_a[i] + (params.P0 + 0.5 * params.nu * sc.K[i] * sc.K[i]) / params.h;
  }
  Grid coarse{21, n, Domain{0.0, 1.0, sc.times.front(), sc.times.back()}};
  // Sample times coincide with the coarse grid's time levels.
  const TemperatureField field = solve(params, sc, coarse);
  for (std::size_t j = 0; j < n; ++j) sc.T_o[j] = field.at(coarse.nx - 2, j);
  return sc;
}

/// Failure while reading a scenario CSV. `row` is 1-based counting the
/// header as row 1; 0 when not applicable.
class ScenarioCsvError : public std::runtime_error {
 public:
  enum class Kind { MissingColumn, NonMonotoneTime, NonNumericCell, Io };

  ScenarioCsvError(Kind kind, std::string column, std::size_t row, const std::string& what)
      : std::runtime_error(what), kind_(kind), column_(std::move(column)), row_(row) {}

  Kind kind() const { return kind_; }
  const std::string& column() const { return column_; }
  std::size_t row() const { return row_; }

 private:
  Kind kind_;
  std::string column_;
  std::size_t row_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

/// Parses `time_h,T_a,T_o,K` (any column order, header required).
inline Scenario parse_scenario_csv(std::istream& in) {
  using Kind = ScenarioCsvError::Kind;
  std::string line;
  if (!std::getline(in, line)) throw ScenarioCsvError(Kind::MissingColumn, "time_h", 1, "scenario CSV: empty input");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = detail::split_csv_line(line);
  const std::vector<std::string> required = {"time_h", "T_a", "T_o", "K"};
  std::vector<std::size_t> index;
  for (const auto& name : required) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ScenarioCsvError(Kind::MissingColumn, name, 1, "scenario CSV: missing column \"" + name + "\"");
    }
    index.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  Scenario sc;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    double values[4];
    for (std::size_t c = 0; c < 4; ++c) {
      const std::string cell = index[c] < cells.size() ? cells[index[c]] : std::string();
      const auto parsed = detail::parse_double(cell);
      if (!parsed) {
        throw ScenarioCsvError(Kind::NonNumericCell, required[c], row,
                               "scenario CSV: non-numeric cell \"" + cell + "\" at row " + std::to_string(row) +
                                   ", column " + required[c]);
      }
      values[c] = *parsed;
    }
    const double t = hours_to_seconds(values[0]);
    if (!sc.times.empty() && !(t > sc.times.back())) {
      throw ScenarioCsvError(Kind::NonMonotoneTime, "time_h", row,
                             "scenario CSV: time_h not strictly increasing at row " + std::to_string(row));
    }
    sc.times.push_back(t);
    sc.T_a.push_back(values[1]);
    sc.T_o.push_back(values[2]);
    sc.K.push_back(values[3]);
  }
  return sc;
}

inline Scenario load_scenario_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioCsvError(ScenarioCsvError::Kind::Io, "", 0, "cannot open scenario file: " + path);
  return parse_scenario_csv(in);
}

inline void write_scenario_csv(std::ostream& out, const Scenario& sc) {
  out << "time_h,T_a,T_o,K\n";
  for (std::size_t i = 0; i < sc.size(); ++i) {
    out << detail::format_double(seconds_to_hours(sc.times[i])) << ',' << detail::format_double(sc.T_a[i]) << ','
        << detail::format_double(sc.T_o[i]) << ',' << detail::format_double(sc.K[i]) << '\n';
  }
}

/// Field CSV: first row holds the time coordinates in hours (after a corner
/// cell), first column the x coordinates in meters.
inline void write_field_csv(std::ostream& out, const TemperatureField& field) {
  const Grid& g = field.grid;
  out << "x_m\\time_h";
  for (std::size_t j = 0; j < g.nt; ++j) out << ',' << detail::format_double(seconds_to_hours(g.t(j)));
  out << '\n';
  for (std::size_t i = 0; i < g.nx; ++i) {
    out << detail::format_double(g.x(i));
    for (std::size_t j = 0; j < g.nt; ++j) out << ',' << detail::format_double(field.at(i, j));
    out << '\n';
  }
}

/// Reads a field written by write_field_csv. Coordinates are assumed to be
/// uniformly spaced; the grid is rebuilt from the first/last entries.
inline TemperatureField read_field_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("field CSV: empty input");
  auto header = detail::split_csv_line(line);
  if (header.size() < 3) throw std::runtime_error("field CSV: need at least two time columns");
  std::vector<double> times;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto v = detail::parse_double(header[c]);
    if (!v) throw std::runtime_error("field CSV: bad time header cell " + header[c]);
    times.push_back(hours_to_seconds(*v));
  }
  std::vector<double> xs;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) throw std::runtime_error("field CSV: ragged row");
    const auto x = detail::parse_double(cells[0]);
    if (!x) throw std::runtime_error("field CSV: bad x cell " + cells[0]);
    xs.push_back(*x);
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto v = detail::parse_double(cells[c]);
      if (!v) throw std::runtime_error("field CSV: bad value cell " + cells[c]);
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  Grid g{xs.size(), times.size(), Domain{xs.empty() ? 0.0 : xs.front(), xs.empty() ? 1.0 : xs.back(), times.front(),
                                          times.back()}};
  g.validate();
  TemperatureField field(g);
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.nt; ++j) field.at(i, j) = rows[i][j];
  return field;
}

/// Training inputs at (x, t) built from the scenario's exogenous signals.
inline InputPoint make_input(const Scenario& sc, const PhysicalParams& params, double x, double t) {
  return InputPoint{sc.ambient(t), x, t, sc.top_oil(t), load_loss(sc.load(t), x, params.nu)};
}

struct TrainingPoints {
  std::vector<BoundarySample> boundary;
  std::vector<CollocationPoint> collocation;
};

/// Boundary samples are drawn uniformly from the two boundary rows of the
/// field (with their temperatures); collocation points uniformly from the
/// open interior of the space-time rectangle.
inline TrainingPoints sample_training_points(const TemperatureField& field, const Scenario& scenario,
                                             const PhysicalParams& params, std::size_t n_boundary,
                                             std::size_t n_collocation, std::uint64_t seed) {
  if (n_boundary < 1) throw std::invalid_argument("sample_training_points: n_boundary must be >= 1");
  const Grid& g = field.grid;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> side(0, 1);
  std::uniform_int_distribution<std::size_t> level(0, g.nt - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  TrainingPoints pts;
  pts.boundary.reserve(n_boundary);
  for (std::size_t s = 0; s < n_boundary; ++s) {
    const std::size_t i = side(rng) == 0 ? 0 : g.nx - 1;
    const std::size_t j = level(rng);
    pts.boundary.push_back({make_input(scenario, params, g.x(i), g.t(j)), field.at(i, j)});
  }
  pts.collocation.reserve(n_collocation);
  for (std::size_t s = 0; s < n_collocation; ++s) {
    double ux = unit(rng);
    double ut = unit(rng);
    // Open interval: redraw the (measure-zero) endpoints.
    while (ux == 0.0) ux = unit(rng);
    while (ut == 0.0) ut = unit(rng);
    const double x = g.domain.x0 + ux * (g.domain.x_end - g.domain.x0);
    const double t = g.domain.t0 + ut * (g.domain.t_end - g.domain.t0);
    pts.collocation.push_back({make_input(scenario, params, x, t), scenario.load(t)});
  }
  return pts;
}

}  // namespace pinnmilp
