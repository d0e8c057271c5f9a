#include "memsim/calib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "memsim/csv.hpp"

namespace memsim::calib {

namespace {

struct Decay {
  double a;  // g0 / C
  double b;  // g1 / C
};

// retention(v, dt) / 2 together with its partials in a and b.
struct Prediction {
  double value;
  double d_a;
  double d_b;
};

Prediction predict(const Decay& p, double v, double dt) {
  const double e = std::exp(-p.a * dt);
  const double lost = -std::expm1(-p.a * dt);
  if (p.a == 0.0) {
    const double den = 1.0 + p.b * v * dt;
    // d/da at a = 0 from the series expansion of the general form.
    const double d_a = v / den * (-dt + p.b * v * dt * dt / (2.0 * den));
    return {0.5 * v / den, 0.5 * d_a, -0.5 * v * v * dt / (den * den)};
  }
  const double den = p.a + p.b * v * lost;
  const double value = p.a * v * e / den;
  const double dden_da = 1.0 + p.b * v * dt * e;
  const double d_a = v * ((e - p.a * dt * e) * den - p.a * e * dden_da) / (den * den);
  const double d_b = -p.a * v * e * v * lost / (den * den);
  return {0.5 * value, 0.5 * d_a, 0.5 * d_b};
}

class Objective {
 public:
  Objective(std::span<const GainRow> rows, double dt, double exponent)
      : rows_(rows), dt_(dt) {
    for (const auto& r : rows) weights_.push_back(std::pow(r.v_secondary, -exponent));
  }

  double cost(const Decay& p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const double r =
          weights_[i] * (predict(p, rows_[i].v_target, dt_).value - rows_[i].v_secondary);
      s += r * r;
    }
    return s;
  }

  // Gauss-Newton step from the 2x2 normal equations.
  Decay step(const Decay& p) const {
    double jaa = 0.0, jab = 0.0, jbb = 0.0, ga = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const Prediction f = predict(p, rows_[i].v_target, dt_);
      const double w = weights_[i];
      const double r = w * (f.value - rows_[i].v_secondary);
      const double ja = w * f.d_a;
      const double jb = w * f.d_b;
      jaa += ja * ja;
      jab += ja * jb;
      jbb += jb * jb;
      ga += ja * r;
      gb += jb * r;
    }
    const double det = jaa * jbb - jab * jab;
    if (!(std::abs(det) > 0.0)) throw FitError("fit: singular normal equations");
    return {-(jbb * ga - jab * gb) / det, -(jaa * gb - jab * ga) / det};
  }

 private:
  std::span<const GainRow> rows_;
  double dt_;
  std::vector<double> weights_;
};

}  // namespace

FitReport fit_retention(std::span<const GainRow> rows, double c, double dt,
                        const FitOptions& opts) {
  if (rows.size() < 2) throw FitError("fit: at least two rows are required");
  if (!(c > 0.0) || !(dt > 0.0)) throw FitError("fit: c and dt must be positive");
  for (const auto& r : rows) {
    if (!(r.v_target > 0.0) || !(r.v_secondary > 0.0)) {
      throw FitError("fit: voltages must be positive");
    }
  }
  const bool one_level = std::all_of(rows.begin(), rows.end(), [&](const GainRow& r) {
    return r.v_target == rows.front().v_target;
  });
  if (one_level) throw FitError("fit: degenerate, all rows share one v_target");

  const Objective obj(rows, dt, opts.weight_exponent);

  Decay best{opts.a_min, opts.b_min};
  double best_cost = std::numeric_limits<double>::infinity();
  const int n = std::max(opts.grid_points, 2);
  const double la = std::log(opts.a_min), ua = std::log(opts.a_max);
  const double lb = std::log(opts.b_min), ub = std::log(opts.b_max);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Decay p{std::exp(la + (ua - la) * i / (n - 1)),
                    std::exp(lb + (ub - lb) * j / (n - 1))};
      const double cst = obj.cost(p);
      if (cst < best_cost) {
        best_cost = cst;
        best = p;
      }
    }
  }

  FitReport report;
  bool converged = false;
  int iter = 0;
  for (; iter < opts.max_iterations && !converged; ++iter) {
    const Decay delta = obj.step(best);
    const double rel = std::max(std::abs(delta.a) / std::max(best.a, 1e-300),
                                std::abs(delta.b) / std::max(best.b, 1e-300));
    double scale = 1.0;
    bool improved = false;
    for (int k = 0; k < 60; ++k, scale *= 0.5) {
      const Decay trial{std::max(best.a + scale * delta.a, 0.0),
                        std::max(best.b + scale * delta.b, 0.0)};
      const double cst = obj.cost(trial);
      if (cst <= best_cost) {
        best = trial;
        best_cost = cst;
        improved = true;
        break;
      }
    }
    if (rel < opts.rel_tol) {
      converged = true;
    } else if (!improved) {
      if (rel < 1e-6) {
        converged = true;
      } else {
        throw FitError("fit: Gauss-Newton stalled");
      }
    }
  }
  if (!converged) throw FitError("fit: no convergence within the iteration cap");

  report.leak = {best.a * c, best.b * c};
  report.capacitance = c;
  report.dt = dt;
  report.weight_exponent = opts.weight_exponent;
  report.iterations = iter;
  for (const auto& r : rows) {
    const double pred = 0.5 * memcell::retention(report.leak, c, r.v_target, dt);
    report.residuals.push_back(pred - r.v_secondary);
    report.max_abs_residual =
        std::max(report.max_abs_residual, std::abs(report.residuals.back()));
  }
  return report;
}

std::vector<GainRow> gain_table(const LeakModel& leak, const memcell::CellConfig& cfg,
                                std::span<const double> v_targets) {
  std::vector<GainRow> out;
  out.reserve(v_targets.size());
  for (double v : v_targets) {
    if (!(v > 0.0)) throw std::invalid_argument("gain_table: targets must be positive");
    const double held = memcell::retention(leak, cfg.c_primary, v, cfg.refresh_period);
    const double vs = held * cfg.share_ratio();
    const double gain = v / vs;
    out.push_back({v, vs, gain, (gain - 1.0) * cfg.r0});
  }
  return out;
}

std::vector<ErrorRow> error_table(const LeakModel& leak, const memcell::CellConfig& cfg,
                                  std::span<const double> v_ins) {
  memcell::CellConfig c = cfg;
  c.leak = leak;
  std::vector<ErrorRow> out;
  out.reserve(v_ins.size());
  for (double v : v_ins) {
    if (!(v > 0.0) || v > 2.0) {
      throw std::invalid_argument("error_table: v_in must lie in (0, 2] V");
    }
    const double later = memcell::behavioral_store(c, v, c.cycles());
    out.push_back({v, later, 100.0 * std::abs(later - v) / v});
  }
  return out;
}

std::vector<GainRow> read_gain_csv(std::istream& is) {
  std::vector<GainRow> rows;
  for (const auto& r :
       csv::read_numeric(is, {"v_target", "v_secondary", "gain", "r1_kohm"})) {
    rows.push_back({r[0], r[1], r[2], r[3] * 1e3});
  }
  return rows;
}

void write_gain_csv(std::ostream& os, std::span<const GainRow> rows) {
  csv::write_row(os, std::vector<std::string>{"v_target", "v_secondary", "gain", "r1_kohm"});
  for (const auto& r : rows) {
    csv::write_row(os, std::vector<double>{r.v_target, r.v_secondary, r.gain,
                                           r.r1_required / 1e3});
  }
}

std::vector<ErrorRow> read_error_csv(std::istream& is) {
  std::vector<ErrorRow> rows;
  for (const auto& r : csv::read_numeric(is, {"v_in", "v_later", "error_pct"})) {
    rows.push_back({r[0], r[1], r[2]});
  }
  return rows;
}

void write_error_csv(std::ostream& os, std::span<const ErrorRow> rows) {
  csv::write_row(os, std::vector<std::string>{"v_in", "v_later", "error_pct"});
  for (const auto& r : rows) {
    csv::write_row(os, std::vector<double>{r.v_in, r.v_later, r.error_pct});
  }
}

}  // namespace memsim::calib
