#pragma once

#include <initializer_list>
#include <span>
#include <vector>

namespace memsim::circuit {

struct Breakpoint {
  double time;   // s
  double value;  // V
};

/// Piecewise-linear source. Clamped outside its breakpoint range.
class PwlWaveform {
 public:
  PwlWaveform() : points_{{0.0, 0.0}} {}
  explicit PwlWaveform(std::vector<Breakpoint> points);
  PwlWaveform(std::initializer_list<Breakpoint> points)
      : PwlWaveform(std::vector<Breakpoint>(points)) {}

  static PwlWaveform constant(double value) { return PwlWaveform({{0.0, value}}); }

  double operator()(double t) const;

  /// True when the waveform changes value anywhere inside (t0, t1).
  bool transitioning(double t0, double t1) const;

  std::span<const Breakpoint> breakpoints() const { return points_; }

 private:
  std::vector<Breakpoint> points_;
};

inline double pwl_eval(const PwlWaveform& w, double t) { return w(t); }

}  // namespace memsim::circuit
