#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pinnmilp {

/// Constants of the 1-D transformer heat diffusion model.
///
/// P0, nu and h are used with their raw numeric values as volumetric
/// coefficients; no geometry-dependent conversion is applied.
struct PhysicalParams {
  double k = 50.0;      // thermal conductivity [W/(m K)]
  double rho = 900.0;   // density [kg/m^3]
  double c_p = 2000.0;  // specific heat capacity [J/(kg K)]
  double h = 1000.0;    // convective coefficient [W/(m^2 K)]
  double P0 = 15000.0;  // no-load loss [W]
  double nu = 83000.0;  // rated load loss [W]
  // When set, the residual uses rho*c_p*u_t (the conservation form the
  // reference solver integrates). Off by default: residual uses c_p*u_t.
  bool include_density_in_residual = false;

  /// Coefficient multiplying u_t in the residual operator.
  double time_coefficient() const { return include_density_in_residual ? rho * c_p : c_p; }

  /// Throws std::invalid_argument unless every constant is strictly positive.
  void validate() const {
    if (!(k > 0 && rho > 0 && c_p > 0 && h > 0 && P0 > 0 && nu > 0)) {
      throw std::invalid_argument("PhysicalParams: all physical constants must be strictly positive");
    }
  }
};

/// Space-time rectangle. Positions in meters, times in seconds.
struct Domain {
  double x0 = 0.0;
  double x_end = 1.0;
  double t0 = 0.0;
  double t_end = 100.0 * 3600.0;

  void validate() const {
    if (!(x0 < x_end)) throw std::invalid_argument("Domain: x0 must be < x_end");
    if (!(t0 < t_end)) throw std::invalid_argument("Domain: t0 must be < t_end");
  }
};

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double hours_to_seconds(double h) { return h * kSecondsPerHour; }
inline constexpr double seconds_to_hours(double s) { return s / kSecondsPerHour; }

/// Load loss profile nu * K^2 * (0.5 sin(3 pi x) + 0.5).
inline double load_loss(double K, double x, double nu) {
  return nu * K * K * (0.5 * std::sin(3.0 * std::numbers::pi * x) + 0.5);
}

/// Heat source q = P0 + P_K - h (u - T_a).
inline double source(double u, double x, double /*t*/, double T_a, double K, const PhysicalParams& params) {
  return params.P0 + load_loss(K, x, params.nu) - params.h * (u - T_a);
}

/// Residual operator f[u] = c u_t - k u_xx - (P0 + P_K - h (u - T_a)),
/// with c = c_p, or rho*c_p when include_density_in_residual is set.
inline double residual(double u_t, double u_xx, double u, double T_a, double P_K, const PhysicalParams& params) {
  return params.time_coefficient() * u_t - params.k * u_xx - (params.P0 + P_K - params.h * (u - T_a));
}

}  // namespace pinnmilp
