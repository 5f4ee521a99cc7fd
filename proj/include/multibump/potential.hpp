#pragma once

#include <cmath>
#include <string>

#include "multibump/numerics.hpp"

namespace multibump {

/// Radial trapping potential with V0 = 1 and algebraic far-field excess
/// a/s^m. The default rational form 1 + a/(1+s²)^{m/2} is smooth at the
/// origin and matches the required decay with correction order s^{-m-2}.
struct PotentialModel {
  double a = 0.0;
  double m = 2.0;
  std::string form = "rational";

  double operator()(double s) const {
    return 1.0 + a * std::pow(1.0 + s * s, -0.5 * m);
  }
  double V0() const { return 1.0; }

  static PotentialModel make(double a, double m) {
    require(a >= 0.0, "PotentialModel: a must be >= 0");
    require(m > 1.0, "PotentialModel: m must be > 1");
    return PotentialModel{a, m};
  }
};

}  // namespace multibump
