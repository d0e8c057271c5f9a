#pragma once

// Leakage-model calibration against measured 40 ms decay data, and the
// gain-determination / storage-accuracy tables derived from a model.

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "memsim/leak_model.hpp"
#include "memsim/memcell.hpp"

namespace memsim::calib {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One row of the gain-determination table. r1_required is in ohms.
struct GainRow {
  double v_target;
  double v_secondary;
  double gain;
  double r1_required;
};

struct ErrorRow {
  double v_in;
  double v_later;
  double error_pct;
};

struct FitOptions {
  /// Residual i is weighted by v_secondary_i^-weight_exponent: 0 gives plain
  /// volts, 1 gives relative error.
  double weight_exponent = 0.4;
  int grid_points = 100;
  double a_min = 1e-2;  // g0/C bounds of the seed grid, 1/s
  double a_max = 1e3;
  double b_min = 1e-3;  // g1/C bounds of the seed grid, 1/(s V)
  double b_max = 1e3;
  double rel_tol = 1e-9;
  int max_iterations = 200;
};

struct FitReport {
  LeakModel leak;
  double capacitance = 0.0;
  double dt = 0.0;
  double weight_exponent = 0.0;
  int iterations = 0;
  std::vector<double> residuals;  // predicted - measured v_secondary, V
  double max_abs_residual = 0.0;
};

/// Least-squares fit of (g0, g1) to rows of (v_target, v_secondary), where
/// the model predicts v_secondary = retention(v_target, dt) / 2. A log grid
/// over (g0/C, g1/C) seeds a Gauss-Newton refinement.
FitReport fit_retention(std::span<const GainRow> rows, double c, double dt = 40e-3,
                        const FitOptions& opts = {});

std::vector<GainRow> gain_table(const LeakModel& leak, const memcell::CellConfig& cfg,
                                std::span<const double> v_targets);

/// Readout after the configured number of refresh cycles, compared to v_in.
std::vector<ErrorRow> error_table(const LeakModel& leak, const memcell::CellConfig& cfg,
                                  std::span<const double> v_ins);

/// `v_target,v_secondary,gain,r1_kohm`
std::vector<GainRow> read_gain_csv(std::istream& is);
void write_gain_csv(std::ostream& os, std::span<const GainRow> rows);

/// `v_in,v_later,error_pct`
std::vector<ErrorRow> read_error_csv(std::istream& is);
void write_error_csv(std::ostream& os, std::span<const ErrorRow> rows);

}  // namespace memsim::calib
