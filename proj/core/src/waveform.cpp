#include "memsim/waveform.hpp"

#include <algorithm>
#include <stdexcept>

namespace memsim::circuit {

PwlWaveform::PwlWaveform(std::vector<Breakpoint> points)
    : points_(std::move(points)) {
  if (points_.empty()) {
    throw std::invalid_argument("pwl: at least one breakpoint required");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i].time > points_[i - 1].time)) {
      throw std::invalid_argument("pwl: breakpoint times must strictly increase");
    }
  }
}

double PwlWaveform::operator()(double t) const {
  if (t <= points_.front().time) return points_.front().value;
  if (t >= points_.back().time) return points_.back().value;
  auto hi = std::upper_bound(
      points_.begin(), points_.end(), t,
      [](double x, const Breakpoint& b) { return x < b.time; });
  auto lo = hi - 1;
  const double frac = (t - lo->time) / (hi->time - lo->time);
  return lo->value + frac * (hi->value - lo->value);
}

bool PwlWaveform::transitioning(double t0, double t1) const {
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const Breakpoint& a = points_[i - 1];
    const Breakpoint& b = points_[i];
    if (a.value != b.value && a.time < t1 && b.time > t0) return true;
  }
  return false;
}

}  // namespace memsim::circuit
