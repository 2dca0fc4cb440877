#pragma once

#include <array>
#include <cstddef>

namespace pinnmilp {

/// Network input vector. Column order (T_a, x, t, T_o, P_K) is normative:
/// checkpoints and scalers index features by this order.
struct InputPoint {
  double T_a = 0.0;  // ambient temperature [K]
  double x = 0.0;    // position [m]
  double t = 0.0;    // time [s]
  double T_o = 0.0;  // top-oil temperature [K]
  double P_K = 0.0;  // load loss [W]

  static constexpr std::size_t kSize = 5;
  static constexpr std::size_t kAmbient = 0;
  static constexpr std::size_t kPosition = 1;
  static constexpr std::size_t kTime = 2;
  static constexpr std::size_t kTopOil = 3;
  static constexpr std::size_t kLoadLoss = 4;

  std::array<double, kSize> as_array() const { return {T_a, x, t, T_o, P_K}; }
};

/// Boundary measurement: inputs plus the measured temperature [K].
struct BoundarySample {
  InputPoint input;
  double u = 0.0;
};

/// Interior point where only the PDE residual is penalized. The load factor
/// is carried so shifted evaluation points can recompute P_K(x).
struct CollocationPoint {
  InputPoint input;
  double K = 0.0;
};

}  // namespace pinnmilp
