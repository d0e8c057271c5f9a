#pragma once

#include <cmath>
#include <stdexcept>

namespace memsim {

/// Storage-node leakage law i(v) = g0*v + g1*v*|v|. Odd in v so that the
/// current always flows toward ground.
struct LeakModel {
  double g0 = 0.0;  // S
  double g1 = 0.0;  // S/V

  double current(double v) const { return g0 * v + g1 * v * std::abs(v); }
  double conductance(double v) const { return g0 + 2.0 * g1 * std::abs(v); }

  void validate() const {
    if (!(g0 >= 0.0) || !(g1 >= 0.0)) {
      throw std::invalid_argument("leak: g0 and g1 must be non-negative");
    }
  }

  friend bool operator==(const LeakModel&, const LeakModel&) = default;
};

}  // namespace memsim
